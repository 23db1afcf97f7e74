use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SnnConfig, SnnError};
use crate::codec::SpikeTrain;

/// Spike nonlinearity used in the forward pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpikeFn {
    /// Binary spikes; the backward pass uses the surrogate derivative.
    Heaviside,
    /// Spikes replaced by the surrogate's primitive `x / (1 + k|x|)`, so the
    /// surrogate derivative is the exact derivative. Used to check gradients.
    Smooth,
}

impl SpikeFn {
    fn apply(self, x: f64, slope: f64) -> f64 {
        match self {
            SpikeFn::Heaviside => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpikeFn::Smooth => x / (1.0 + slope * x.abs()),
        }
    }
}

fn surrogate_grad(x: f64, slope: f64) -> f64 {
    let d = 1.0 + slope * x.abs();
    1.0 / (d * d)
}

/// Sparse per-frame input: nonzero `(channel, value)` pairs for each frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeInput {
    pub channels: usize,
    pub frames: Vec<Vec<(usize, f64)>>,
}

impl SpikeInput {
    pub fn from_dense(channels: usize, frames: &[Vec<f64>]) -> Self {
        Self {
            channels,
            frames: frames
                .iter()
                .map(|f| {
                    f.iter()
                        .copied()
                        .enumerate()
                        .filter(|(_, v)| *v != 0.0)
                        .collect()
                })
                .collect(),
        }
    }

    /// Signed codec spikes become input currents of -1, 0 or +1.
    pub fn from_spike_train(st: &SpikeTrain) -> Self {
        let frames = (0..st.frames())
            .map(|t| {
                st.frame(t)
                    .enumerate()
                    .filter(|(_, s)| *s != 0)
                    .map(|(c, s)| (c, f64::from(s)))
                    .collect()
            })
            .collect();
        Self {
            channels: st.channels(),
            frames,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Result of a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    /// Output spike counts per class (the logits).
    pub counts: Vec<f64>,
    /// Total spikes emitted by each LIF layer.
    pub layer_spikes: Vec<f64>,
}

/// Weight gradients, same layout as the network's weights.
pub type Gradients = Vec<Vec<f64>>;

/// Layer `l` maps `widths[l]` inputs to `widths[l + 1]` outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub config: SnnConfig,
    widths: Vec<usize>,
    /// Per layer, `[input][output]` row-major: row `j` holds the fan-out of
    /// input `j`, which keeps sparse spike propagation contiguous.
    weights: Vec<Vec<f64>>,
}

// Forward record of one layer over all frames, `[frame][neuron]`.
struct LayerRecord {
    membrane: Vec<f64>,
    spikes: Vec<f64>,
}

impl Network {
    /// Weights uniform in `±sqrt(1/fan_in)` from the config seed.
    pub fn new(config: &SnnConfig) -> Result<Self, SnnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let widths = config.widths();
        let weights = widths
            .windows(2)
            .map(|w| {
                let bound = (1.0 / w[0] as f64).sqrt();
                (0..w[0] * w[1])
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect()
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            widths,
            weights,
        })
    }

    pub fn zeros(config: &SnnConfig) -> Result<Self, SnnError> {
        config.validate()?;
        let widths = config.widths();
        let weights = widths.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        Ok(Self {
            config: config.clone(),
            widths,
            weights,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Weight from input `input` of layer `layer` to its output `output`.
    pub fn weight(&self, layer: usize, output: usize, input: usize) -> f64 {
        self.weights[layer][input * self.widths[layer + 1] + output]
    }

    pub fn set_weight(&mut self, layer: usize, output: usize, input: usize, v: f64) {
        let n_out = self.widths[layer + 1];
        self.weights[layer][input * n_out + output] = v;
    }

    pub fn layer_weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn layer_weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    fn check_input(&self, input: &SpikeInput) -> Result<(), SnnError> {
        let expected = self.widths[0];
        if input.channels != expected {
            return Err(SnnError::Dimension {
                expected,
                got: input.channels,
            });
        }
        for frame in &input.frames {
            if let Some(&(c, _)) = frame.iter().find(|(c, _)| *c >= expected) {
                return Err(SnnError::Dimension { expected, got: c + 1 });
            }
        }
        Ok(())
    }

    fn run(&self, input: &SpikeInput, mode: SpikeFn) -> Vec<LayerRecord> {
        let cfg = &self.config;
        let steps = input.len();
        let mut records: Vec<LayerRecord> = self.widths[1..]
            .iter()
            .map(|&n| LayerRecord {
                membrane: vec![0.0; steps * n],
                spikes: vec![0.0; steps * n],
            })
            .collect();
        let mut state: Vec<Vec<f64>> = self.widths[1..].iter().map(|&n| vec![0.0; n]).collect();
        let mut current: Vec<Vec<f64>> = state.clone();
        let mut active: Vec<(usize, f64)> = Vec::new();

        for (t, frame) in input.frames.iter().enumerate() {
            active.clear();
            active.extend_from_slice(frame);
            for (l, w) in self.weights.iter().enumerate() {
                let n_out = self.widths[l + 1];
                let cur = &mut current[l];
                cur.iter_mut().for_each(|v| *v = 0.0);
                for &(j, a) in &active {
                    for (c, wj) in cur.iter_mut().zip(&w[j * n_out..(j + 1) * n_out]) {
                        *c += a * wj;
                    }
                }
                let rec = &mut records[l];
                let mem = &mut rec.membrane[t * n_out..(t + 1) * n_out];
                let spk = &mut rec.spikes[t * n_out..(t + 1) * n_out];
                active.clear();
                for i in 0..n_out {
                    let u = cfg.beta * state[l][i] + cur[i];
                    let s = mode.apply(u - cfg.theta, cfg.surrogate_slope);
                    mem[i] = u;
                    spk[i] = s;
                    state[l][i] = u - cfg.theta * s;
                    if s != 0.0 {
                        active.push((i, s));
                    }
                }
            }
        }
        records
    }

    fn counts(&self, records: &[LayerRecord], steps: usize) -> Vec<f64> {
        let n = self.n_classes();
        let out = &records.last().unwrap().spikes;
        let mut counts = vec![0.0; n];
        for t in 0..steps {
            for (c, s) in counts.iter_mut().zip(&out[t * n..(t + 1) * n]) {
                *c += s;
            }
        }
        counts
    }

    pub fn forward(&self, input: &SpikeInput) -> Result<ForwardOutput, SnnError> {
        self.forward_with(input, SpikeFn::Heaviside)
    }

    pub fn forward_with(&self, input: &SpikeInput, mode: SpikeFn) -> Result<ForwardOutput, SnnError> {
        self.check_input(input)?;
        let records = self.run(input, mode);
        Ok(ForwardOutput {
            counts: self.counts(&records, input.len()),
            layer_spikes: records.iter().map(|r| r.spikes.iter().sum()).collect(),
        })
    }

    /// Per-layer `[frame][neuron]` spike records of the binary forward pass.
    pub fn spike_record(&self, input: &SpikeInput) -> Result<Vec<Vec<Vec<f64>>>, SnnError> {
        self.check_input(input)?;
        let records = self.run(input, SpikeFn::Heaviside);
        Ok(records
            .iter()
            .zip(&self.widths[1..])
            .map(|(r, &n)| r.spikes.chunks(n).map(<[f64]>::to_vec).collect())
            .collect())
    }

    /// Cross-entropy of the spike-count logits for `label`.
    pub fn loss(&self, input: &SpikeInput, label: usize, mode: SpikeFn) -> Result<f64, SnnError> {
        let out = self.forward_with(input, mode)?;
        Ok(cross_entropy(&out.counts, label).0)
    }

    /// Loss, gradients and logits for one sample by backpropagation through
    /// time.
    pub fn loss_and_grad(
        &self,
        input: &SpikeInput,
        label: usize,
        mode: SpikeFn,
    ) -> Result<(f64, Gradients, Vec<f64>), SnnError> {
        self.check_input(input)?;
        if label >= self.n_classes() {
            return Err(SnnError::BadLabel {
                label,
                classes: self.n_classes(),
            });
        }
        let cfg = &self.config;
        let steps = input.len();
        let records = self.run(input, mode);
        let counts = self.counts(&records, steps);
        let (loss, dlogits) = cross_entropy(&counts, label);

        let n_layers = self.n_layers();
        let mut grads: Gradients = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        // dL/dU~ carried backwards in time, per layer.
        let mut carry: Vec<Vec<f64>> = self.widths[1..].iter().map(|&n| vec![0.0; n]).collect();
        let mut g_u: Vec<Vec<f64>> = carry.clone();
        let mut direct: Vec<f64> = Vec::new();

        for t in (0..steps).rev() {
            for l in (0..n_layers).rev() {
                let n_out = self.widths[l + 1];
                // dL/dS_l[t] not passing through this layer's own reset.
                direct.clear();
                if l + 1 == n_layers {
                    direct.extend_from_slice(&dlogits);
                } else {
                    let w_next = &self.weights[l + 1];
                    let n_next = self.widths[l + 2];
                    let g_next = &g_u[l + 1];
                    direct.extend((0..n_out).map(|j| {
                        w_next[j * n_next..(j + 1) * n_next]
                            .iter()
                            .zip(g_next)
                            .map(|(w, g)| w * g)
                            .sum::<f64>()
                    }));
                }
                let mem = &records[l].membrane[t * n_out..(t + 1) * n_out];
                for i in 0..n_out {
                    let sg = surrogate_grad(mem[i] - cfg.theta, cfg.surrogate_slope);
                    g_u[l][i] = carry[l][i] * (1.0 - cfg.theta * sg) + sg * direct[i];
                    carry[l][i] = cfg.beta * g_u[l][i];
                }
                let grad = &mut grads[l];
                let gl = &g_u[l];
                let mut accumulate = |j: usize, a: f64| {
                    for (g, gi) in grad[j * n_out..(j + 1) * n_out].iter_mut().zip(gl) {
                        *g += a * gi;
                    }
                };
                if l == 0 {
                    for &(j, a) in &input.frames[t] {
                        accumulate(j, a);
                    }
                } else {
                    let n_in = self.widths[l];
                    let prev = &records[l - 1].spikes[t * n_in..(t + 1) * n_in];
                    for (j, &a) in prev.iter().enumerate() {
                        if a != 0.0 {
                            accumulate(j, a);
                        }
                    }
                }
            }
        }
        Ok((loss, grads, counts))
    }

    /// Predicted class: argmax of output spike counts, ties to the lowest index.
    pub fn predict(&self, input: &SpikeInput) -> Result<usize, SnnError> {
        Ok(argmax(&self.forward(input)?.counts))
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Softmax cross-entropy and its gradient with respect to the logits.
pub(crate) fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + max - logits[label];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[label] -= 1.0;
    (loss, grad)
}
