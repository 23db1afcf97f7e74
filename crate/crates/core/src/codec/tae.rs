//! Threshold-adaptive encoding.
//!
//! Same baseline law as step forward, but the step size adapts: it is
//! multiplied by `gamma` after every spike and divided by `gamma` after every
//! silent frame, clamped to `[t_min, t_max]`. The adaptation is driven by the
//! emitted spikes alone, so the decoder replays it exactly.

use super::{channel_threshold, check_signal, CodecConfig, CodecError, SideInfo};

/// Adaptive threshold state shared by encoder and decoder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaeThreshold {
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub gamma: f64,
}

impl TaeThreshold {
    /// Bounds scale with the channel: `t_min = t0 * tmin_rel / threshold_rel`
    /// and likewise for `t_max`.
    pub fn new(t0: f64, cfg: &CodecConfig) -> Self {
        Self {
            value: t0,
            min: t0 * cfg.tae_tmin_rel / cfg.threshold_rel,
            max: t0 * cfg.tae_tmax_rel / cfg.threshold_rel,
            gamma: cfg.tae_gamma,
        }
    }

    pub fn after_spike(&mut self) {
        self.value = (self.value * self.gamma).min(self.max);
    }

    pub fn after_silence(&mut self) {
        self.value = (self.value / self.gamma).max(self.min);
    }
}

fn encode_with(x: &[f64], mut th: TaeThreshold, out: &mut [i8], mut trace: Option<&mut Vec<f64>>) {
    debug_assert_eq!(x.len(), out.len());
    let mut baseline = x[0];
    out[0] = 0;
    if let Some(tr) = trace.as_deref_mut() {
        tr.push(th.value);
    }
    for (s, &v) in out[1..].iter_mut().zip(&x[1..]) {
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(th.value);
        }
        let d = v - baseline;
        *s = if d > th.value {
            baseline += th.value;
            th.after_spike();
            1
        } else if d < -th.value {
            baseline -= th.value;
            th.after_spike();
            -1
        } else {
            th.after_silence();
            0
        };
    }
}

fn decode_with(spikes: &[i8], initial: f64, mut th: TaeThreshold, out: &mut [f64], mut trace: Option<&mut Vec<f64>>) {
    if out.is_empty() {
        return;
    }
    let mut level = initial;
    out[0] = level;
    if let Some(tr) = trace.as_deref_mut() {
        tr.push(th.value);
    }
    for (o, &s) in out[1..].iter_mut().zip(&spikes[1..]) {
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(th.value);
        }
        if s != 0 {
            level += f64::from(s) * th.value;
            th.after_spike();
        } else {
            th.after_silence();
        }
        *o = level;
    }
}

/// Encodes with initial absolute threshold `t0`; bounds follow `cfg`.
pub fn tae_encode_into(x: &[f64], t0: f64, cfg: &CodecConfig, out: &mut [i8]) -> SideInfo {
    encode_with(x, TaeThreshold::new(t0, cfg), out, None);
    SideInfo {
        initial: x[0],
        threshold: t0,
    }
}

pub fn tae_decode_into(spikes: &[i8], side: SideInfo, cfg: &CodecConfig, out: &mut [f64]) {
    decode_with(spikes, side.initial, TaeThreshold::new(side.threshold, cfg), out, None);
}

pub fn encode_tae(x: &[f64], cfg: &CodecConfig) -> Result<(Vec<i8>, SideInfo), CodecError> {
    encode_tae_traced(x, cfg).map(|(s, side, _)| (s, side))
}

pub fn decode_tae(spikes: &[i8], side: SideInfo, cfg: &CodecConfig) -> Vec<f64> {
    let mut out = vec![0.0; spikes.len()];
    tae_decode_into(spikes, side, cfg, &mut out);
    out
}

/// Like [`encode_tae`], also returning the threshold in force at each frame.
pub fn encode_tae_traced(
    x: &[f64],
    cfg: &CodecConfig,
) -> Result<(Vec<i8>, SideInfo, Vec<f64>), CodecError> {
    check_signal(x)?;
    cfg.validate()?;
    let t0 = channel_threshold(x, cfg.threshold_rel);
    let mut out = vec![0; x.len()];
    let mut trace = Vec::with_capacity(x.len());
    encode_with(x, TaeThreshold::new(t0, cfg), &mut out, Some(&mut trace));
    Ok((out, SideInfo { initial: x[0], threshold: t0 }, trace))
}

/// Like [`decode_tae`], also returning the replayed threshold sequence.
pub fn decode_tae_traced(spikes: &[i8], side: SideInfo, cfg: &CodecConfig) -> (Vec<f64>, Vec<f64>) {
    let mut out = vec![0.0; spikes.len()];
    let mut trace = Vec::with_capacity(spikes.len());
    decode_with(
        spikes,
        side.initial,
        TaeThreshold::new(side.threshold, cfg),
        &mut out,
        Some(&mut trace),
    );
    (out, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_threshold() -> TaeThreshold {
        TaeThreshold {
            value: 0.1,
            min: 0.025,
            max: 0.4,
            gamma: 2.0,
        }
    }

    #[test]
    fn hand_trace() {
        let x = [0.0, 0.3, 0.6, 0.6];
        let mut s = vec![0; 4];
        let mut enc_trace = Vec::new();
        encode_with(&x, hand_threshold(), &mut s, Some(&mut enc_trace));
        assert_eq!(s, vec![0, 1, 1, 0]);
        // Thresholds in force at frames 1..3: 0.1, 0.2, 0.4; then 0.4 / 2 after the silent frame.
        assert_eq!(enc_trace, vec![0.1, 0.1, 0.2, 0.4]);
        let mut th = hand_threshold();
        th.after_spike();
        th.after_spike();
        th.after_silence();
        assert_eq!(th.value, 0.2);

        let mut rec = vec![0.0; 4];
        let mut dec_trace = Vec::new();
        decode_with(&s, 0.0, hand_threshold(), &mut rec, Some(&mut dec_trace));
        assert_eq!(rec[..2], [0.0, 0.1]);
        assert!((rec[2] - 0.3).abs() < 1e-15);
        assert_eq!(rec[3], rec[2]);
        assert_eq!(dec_trace, enc_trace);
    }

    #[test]
    fn constant_signal_decays_to_min() {
        let cfg = CodecConfig::default();
        let (s, side, trace) = encode_tae_traced(&[0.5; 12], &cfg).unwrap();
        assert!(s.iter().all(|&v| v == 0));
        let t_min = TaeThreshold::new(side.threshold, &cfg).min;
        assert_eq!(*trace.last().unwrap(), t_min);
        assert_eq!(decode_tae(&s, side, &cfg), vec![0.5; 12]);
    }

    #[test]
    fn clamps_hold() {
        let mut th = hand_threshold();
        for _ in 0..10 {
            th.after_spike();
        }
        assert_eq!(th.value, 0.4);
        for _ in 0..10 {
            th.after_silence();
        }
        assert_eq!(th.value, 0.025);
    }
}
