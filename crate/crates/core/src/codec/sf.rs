use super::{channel_threshold, check_signal, CodecConfig, CodecError, SideInfo};

/// Step-forward encoding with absolute `threshold`. `out.len()` must equal
/// `x.len()`.
pub fn sf_encode_into(x: &[f64], threshold: f64, out: &mut [i8]) -> SideInfo {
    debug_assert_eq!(x.len(), out.len());
    let mut baseline = x[0];
    out[0] = 0;
    for (s, &v) in out[1..].iter_mut().zip(&x[1..]) {
        *s = if v > baseline + threshold {
            baseline += threshold;
            1
        } else if v < baseline - threshold {
            baseline -= threshold;
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

pub fn sf_decode_into(spikes: &[i8], side: SideInfo, out: &mut [f64]) {
    let mut level = side.initial;
    for (i, (o, &s)) in out.iter_mut().zip(spikes).enumerate() {
        if i > 0 {
            level += f64::from(s) * side.threshold;
        }
        *o = level;
    }
}

pub fn encode_sf(x: &[f64], cfg: &CodecConfig) -> Result<(Vec<i8>, SideInfo), CodecError> {
    check_signal(x)?;
    cfg.validate()?;
    let mut out = vec![0; x.len()];
    let side = sf_encode_into(x, channel_threshold(x, cfg.threshold_rel), &mut out);
    Ok((out, side))
}

pub fn decode_sf(spikes: &[i8], side: SideInfo) -> Vec<f64> {
    let mut out = vec![0.0; spikes.len()];
    sf_decode_into(spikes, side, &mut out);
    out
}
