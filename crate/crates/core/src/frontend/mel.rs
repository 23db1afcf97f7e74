use super::FrontendError;
use crate::Matrix;

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// The `n_mels + 2` filter edge frequencies, equally spaced in mel.
fn mel_points(n_mels: usize, f_min: f64, f_max: f64) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let step = (hi - lo) / (n_mels + 1) as f64;
    (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + step * i as f64))
        .collect()
}

/// Peak frequency of each triangular filter.
pub fn mel_centers_hz(n_mels: usize, f_min: f64, f_max: f64) -> Vec<f64> {
    let pts = mel_points(n_mels, f_min, f_max);
    pts[1..=n_mels].to_vec()
}

/// Triangular filterbank `[n_mels x n_fft/2 + 1]` with unit peak.
///
/// At low frequencies a filter can be narrower than the FFT bin spacing and
/// miss every bin; such a row gets weight 1 on the bin nearest its center so
/// that every channel observes some energy.
pub fn mel_filterbank(
    n_mels: usize,
    f_min: f64,
    f_max: f64,
    n_fft: usize,
    sample_rate: f64,
) -> Result<Matrix, FrontendError> {
    let nyquist = sample_rate / 2.0;
    if n_mels < 2 {
        return Err(FrontendError::Config("n_mels must be at least 2".into()));
    }
    if !(f_min >= 0.0 && f_min < f_max) {
        return Err(FrontendError::Config(format!(
            "invalid mel range [{f_min}, {f_max}]"
        )));
    }
    if f_max > nyquist {
        return Err(FrontendError::AboveNyquist { f_max, nyquist });
    }
    let bins = n_fft / 2 + 1;
    let bin_hz = sample_rate / n_fft as f64;
    let pts = mel_points(n_mels, f_min, f_max);

    let mut fb = Matrix::zeros(n_mels, bins);
    for m in 0..n_mels {
        let (lo, mid, hi) = (pts[m], pts[m + 1], pts[m + 2]);
        let row = fb.row_mut(m);
        for (b, w) in row.iter_mut().enumerate() {
            let f = b as f64 * bin_hz;
            let rise = (f - lo) / (mid - lo);
            let fall = (hi - f) / (hi - mid);
            *w = rise.min(fall).max(0.0);
        }
        if row.iter().all(|&w| w == 0.0) {
            let nearest = ((mid / bin_hz).round() as usize).min(bins - 1);
            row[nearest] = 1.0;
        }
    }
    Ok(fb)
}
