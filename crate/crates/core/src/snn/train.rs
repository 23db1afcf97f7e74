use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::network::argmax;
use super::{Network, SnnConfig, SnnError, SpikeFn, SpikeInput};
use crate::ingest::Split;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        let zeros: Vec<Vec<f64>> = (0..net.n_layers())
            .map(|l| vec![0.0; net.layer_weights(l).len()])
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, net: &mut Network, grads: &[Vec<f64>], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        for (l, g) in grads.iter().enumerate() {
            let (m, v) = (&mut self.m[l], &mut self.v[l]);
            for (i, w) in net.layer_weights_mut(l).iter_mut().enumerate() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                *w -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// One training or evaluation sample.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledClip {
    pub input: SpikeInput,
    pub label: usize,
    pub fold: Option<u32>,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    pub macro_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub network: Network,
    pub log: Vec<EpochLog>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacroResult {
    pub macro_acc: f64,
    /// `None` for classes absent from the evaluated set.
    pub per_class_recall: Vec<Option<f64>>,
}

/// Macro accuracy from `(true, predicted)` pairs over `n_classes` classes.
pub fn macro_from_predictions(
    pairs: &[(usize, usize)],
    n_classes: usize,
) -> Result<MacroResult, SnnError> {
    if pairs.is_empty() {
        return Err(SnnError::EmptySet("evaluation"));
    }
    let mut total = vec![0usize; n_classes];
    let mut hit = vec![0usize; n_classes];
    for &(truth, pred) in pairs {
        if truth >= n_classes {
            return Err(SnnError::BadLabel {
                label: truth,
                classes: n_classes,
            });
        }
        total[truth] += 1;
        if truth == pred {
            hit[truth] += 1;
        }
    }
    let per_class_recall: Vec<Option<f64>> = total
        .iter()
        .zip(&hit)
        .map(|(&n, &h)| (n > 0).then(|| h as f64 / n as f64))
        .collect();
    let present: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
    Ok(MacroResult {
        macro_acc: present.iter().sum::<f64>() / present.len() as f64,
        per_class_recall,
    })
}

/// Mean per-class recall of `net` on `set`.
pub fn evaluate_macro(net: &Network, set: &[LabeledClip]) -> Result<MacroResult, SnnError> {
    let mut pairs = Vec::with_capacity(set.len());
    for clip in set {
        pairs.push((clip.label, net.predict(&clip.input)?));
    }
    macro_from_predictions(&pairs, net.n_classes())
}

/// Trains a fresh network from `cfg.seed`. Batches are drawn from a seeded
/// shuffle each epoch; per-sample gradients are summed in batch order, so
/// results do not depend on the machine.
pub fn train(
    train_set: &[LabeledClip],
    validation: Option<&[LabeledClip]>,
    cfg: &SnnConfig,
) -> Result<TrainOutcome, SnnError> {
    let net = Network::new(cfg)?;
    train_network(net, train_set, validation, cfg)
}

/// Continues training `net` with the schedule in `cfg`.
pub fn train_network(
    mut net: Network,
    train_set: &[LabeledClip],
    validation: Option<&[LabeledClip]>,
    cfg: &SnnConfig,
) -> Result<TrainOutcome, SnnError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(SnnError::EmptySet("training"));
    }
    let present: BTreeSet<usize> = train_set.iter().map(|c| c.label).collect();
    for class in 0..net.n_classes() {
        if !present.contains(&class) {
            return Err(SnnError::EmptyClass { class });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x05ee_d0fb_a7c4);
    let mut adam = Adam::new(&net);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs * 2);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut pairs = Vec::with_capacity(train_set.len());
        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Option<Vec<Vec<f64>>> = None;
            for &i in batch {
                let clip = &train_set[i];
                let (loss, grads, counts) = net.loss_and_grad(&clip.input, clip.label, SpikeFn::Heaviside)?;
                if !loss.is_finite() {
                    return Err(SnnError::NonFinite { what: "loss", epoch });
                }
                loss_sum += loss;
                pairs.push((clip.label, argmax(&counts)));
                match acc.as_mut() {
                    None => acc = Some(grads),
                    Some(total) => {
                        for (t, g) in total.iter_mut().zip(&grads) {
                            for (a, b) in t.iter_mut().zip(g) {
                                *a += b;
                            }
                        }
                    }
                }
            }
            let mut grads = acc.expect("non-empty batch");
            let scale = 1.0 / batch.len() as f64;
            for g in grads.iter_mut().flatten() {
                *g *= scale;
                if !g.is_finite() {
                    return Err(SnnError::NonFinite { what: "gradient", epoch });
                }
            }
            adam.update(&mut net, &grads, cfg.lr);
        }
        log.push(EpochLog {
            epoch,
            split: Split::Train,
            loss: loss_sum / train_set.len() as f64,
            macro_acc: macro_from_predictions(&pairs, net.n_classes())?.macro_acc,
        });
        if let Some(val) = validation.filter(|v| !v.is_empty()) {
            let mut loss_sum = 0.0;
            let mut pairs = Vec::with_capacity(val.len());
            for clip in val {
                let out = net.forward(&clip.input)?;
                loss_sum += super::network::cross_entropy(&out.counts, clip.label).0;
                pairs.push((clip.label, argmax(&out.counts)));
            }
            log.push(EpochLog {
                epoch,
                split: Split::Test,
                loss: loss_sum / val.len() as f64,
                macro_acc: macro_from_predictions(&pairs, net.n_classes())?.macro_acc,
            });
        }
    }
    Ok(TrainOutcome { network: net, log })
}

/// `epoch,split,loss,macro_acc` CSV.
pub fn write_training_log(path: &Path, log: &[EpochLog]) -> Result<(), SnnError> {
    let err = |e: csv::Error| SnnError::Checkpoint(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(err)?;
    for row in log {
        w.serialize(row).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    /// Train on all folds but one, test on the held-out fold, for every fold.
    CrossValidation,
    /// One run on the train/test split.
    Holdout,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldResult {
    /// Held-out fold; `None` for a holdout run.
    pub fold: Option<u32>,
    pub macro_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolResult {
    pub folds: Vec<FoldResult>,
    pub mean_macro_acc: f64,
}

/// Runs the evaluation protocol and averages macro accuracy over runs.
pub fn run_protocol(
    data: &[LabeledClip],
    protocol: Protocol,
    cfg: &SnnConfig,
) -> Result<ProtocolResult, SnnError> {
    if data.is_empty() {
        return Err(SnnError::EmptySet("dataset"));
    }
    let mut folds = Vec::new();
    match protocol {
        Protocol::CrossValidation => {
            if data.iter().any(|c| c.fold.is_none()) {
                return Err(SnnError::Protocol(
                    "cross-validation needs a fold on every clip".into(),
                ));
            }
            let ids: BTreeSet<u32> = data.iter().filter_map(|c| c.fold).collect();
            if ids.len() < 2 {
                return Err(SnnError::Protocol(format!(
                    "cross-validation needs at least 2 folds, found {}",
                    ids.len()
                )));
            }
            for &held in &ids {
                let (test, train_set): (Vec<_>, Vec<_>) =
                    data.iter().cloned().partition(|c| c.fold == Some(held));
                let fold_cfg = SnnConfig {
                    seed: cfg.seed.wrapping_add(held as u64),
                    ..cfg.clone()
                };
                let outcome = train(&train_set, None, &fold_cfg)?;
                folds.push(FoldResult {
                    fold: Some(held),
                    macro_acc: evaluate_macro(&outcome.network, &test)?.macro_acc,
                });
            }
        }
        Protocol::Holdout => {
            let (test, train_set): (Vec<_>, Vec<_>) =
                data.iter().cloned().partition(|c| c.split == Split::Test);
            if test.is_empty() || train_set.is_empty() {
                return Err(SnnError::Protocol(
                    "holdout needs both train and test clips".into(),
                ));
            }
            let outcome = train(&train_set, None, cfg)?;
            folds.push(FoldResult {
                fold: None,
                macro_acc: evaluate_macro(&outcome.network, &test)?.macro_acc,
            });
        }
    }
    let mean_macro_acc = folds.iter().map(|f| f.macro_acc).sum::<f64>() / folds.len() as f64;
    Ok(ProtocolResult {
        folds,
        mean_macro_acc,
    })
}
