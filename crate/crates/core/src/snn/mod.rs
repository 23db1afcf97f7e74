//! Fully connected LIF spiking classifier.
//!
//! Four bias-free linear layers, each followed by a population of leaky
//! integrate-and-fire neurons with reset by subtraction:
//!
//! ```text
//! U[t]  = beta * U~[t-1] + W a[t]
//! S[t]  = H(U[t] - theta)
//! U~[t] = U[t] - theta * S[t]
//! ```
//!
//! Class scores are the output-layer spike counts summed over all frames;
//! training minimizes their softmax cross-entropy by backpropagation through
//! time, with the Heaviside derivative replaced by the fast-sigmoid surrogate
//! `1 / (1 + k |U - theta|)^2`.

mod checkpoint;
mod network;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use network::{ForwardOutput, Gradients, Network, SpikeFn, SpikeInput};
pub use train::{
    evaluate_macro, macro_from_predictions, run_protocol, train, train_network, write_training_log, EpochLog,
    FoldResult, LabeledClip, MacroResult, Protocol, ProtocolResult, TrainOutcome,
};

#[derive(Debug, Error)]
pub enum SnnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite {what} (epoch {epoch})")]
    NonFinite { what: &'static str, epoch: usize },
    #[error("class {class} has no training samples")]
    EmptyClass { class: usize },
    #[error("label {label} outside 0..{classes}")]
    BadLabel { label: usize, classes: usize },
    #[error("empty {0} set")]
    EmptySet(&'static str),
    #[error("protocol does not match the dataset: {0}")]
    Protocol(String),
    #[error("invalid SNN configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnnConfig {
    pub input_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
    pub beta: f64,
    pub theta: f64,
    pub surrogate_slope: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SnnConfig {
    fn default() -> Self {
        Self {
            input_size: 128,
            hidden_sizes: vec![128, 128, 128],
            output_size: 2,
            beta: 0.9,
            theta: 1.0,
            surrogate_slope: 25.0,
            lr: 0.01,
            batch_size: 32,
            epochs: 100,
            seed: 0,
        }
    }
}

impl SnnConfig {
    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_size];
        w.extend(&self.hidden_sizes);
        w.push(self.output_size);
        w
    }

    pub fn validate(&self) -> Result<(), SnnError> {
        let err = |m: String| Err(SnnError::Config(m));
        if self.widths().contains(&0) {
            return err(format!("layer sizes must be positive: {:?}", self.widths()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return err(format!("beta {} not in (0, 1)", self.beta));
        }
        if !(self.theta > 0.0) {
            return err(format!("theta {} must be positive", self.theta));
        }
        if !(self.surrogate_slope > 0.0) {
            return err("surrogate_slope must be positive".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return err(format!("invalid learning rate {}", self.lr));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return err("batch_size and epochs must be at least 1".into());
        }
        Ok(())
    }
}

/// Membrane state of one LIF population.
#[derive(Clone, Debug, PartialEq)]
pub struct LifState {
    pub membrane: Vec<f64>,
    pub beta: f64,
    pub theta: f64,
}

impl LifState {
    pub fn new(n: usize, beta: f64, theta: f64) -> Self {
        Self {
            membrane: vec![0.0; n],
            beta,
            theta,
        }
    }
}

/// One LIF update. Fires where the integrated potential reaches `theta`
/// (inclusive) and subtracts `theta` from the firing neurons.
pub fn lif_step(state: &mut LifState, input_current: &[f64]) -> Result<Vec<bool>, SnnError> {
    if input_current.len() != state.membrane.len() {
        return Err(SnnError::Dimension {
            expected: state.membrane.len(),
            got: input_current.len(),
        });
    }
    if input_current.iter().any(|v| !v.is_finite()) {
        return Err(SnnError::NonFinite {
            what: "input current",
            epoch: 0,
        });
    }
    Ok(state
        .membrane
        .iter_mut()
        .zip(input_current)
        .map(|(u, &i)| {
            *u = state.beta * *u + i;
            let fire = *u >= state.theta;
            if fire {
                *u -= state.theta;
            }
            fire
        })
        .collect())
}
