use super::{channel_threshold, check_signal, CodecConfig, CodecError, SideInfo};

// Mean of the `min(t, window)` samples before `t`; `xs[0]` for t = 0.
fn window_mean(xs: &[f64], t: usize, window: usize) -> f64 {
    if t == 0 {
        return xs[0];
    }
    let k = t.min(window);
    xs[t - k..t].iter().sum::<f64>() / k as f64
}

/// Moving-window encoding: the baseline at `t` is the mean of the previous
/// `window` input samples.
pub fn mw_encode_into(x: &[f64], threshold: f64, window: usize, out: &mut [i8]) -> SideInfo {
    debug_assert_eq!(x.len(), out.len());
    for (t, s) in out.iter_mut().enumerate() {
        let base = window_mean(x, t, window);
        *s = if x[t] > base + threshold {
            1
        } else if x[t] < base - threshold {
            -1
        } else {
            0
        };
    }
    SideInfo {
        initial: x[0],
        threshold,
    }
}

/// Replays the encoder's baseline on the reconstruction itself.
pub fn mw_decode_into(spikes: &[i8], side: SideInfo, window: usize, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = side.initial;
    for t in 1..out.len() {
        out[t] = window_mean(out, t, window) + f64::from(spikes[t]) * side.threshold;
    }
}

pub fn encode_mw(x: &[f64], cfg: &CodecConfig) -> Result<(Vec<i8>, SideInfo), CodecError> {
    check_signal(x)?;
    cfg.validate()?;
    let mut out = vec![0; x.len()];
    let side = mw_encode_into(x, channel_threshold(x, cfg.threshold_rel), cfg.window, &mut out);
    Ok((out, side))
}

pub fn decode_mw(spikes: &[i8], side: SideInfo, window: usize) -> Vec<f64> {
    let mut out = vec![0.0; spikes.len()];
    mw_decode_into(spikes, side, window, &mut out);
    out
}
