//! Mini-batch gradient descent on mask phases, with optional weight-noise
//! injection for robustness.
//!
//! The robust variant perturbs every phase with fresh Gaussian noise for the
//! forward/backward pass of each step, then applies the resulting gradient
//! to the *clean* weights. Training therefore minimises the expected loss
//! over the hardware error distribution rather than the loss at the nominal
//! weights, which flattens the minimum and buys tolerance to fabrication
//! error at a small cost in clean accuracy. With `noise_std = 0` the whole
//! machinery reduces to plain stochastic gradient descent.

use std::io::Write as _;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::config::OpticalConfig;
use crate::detector::{loss, one_hot, DetectorLayout};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grad::{backward, BackwardPass, Gradient};
use crate::input::{prepare_input, Illumination};
use crate::mask::PhaseMask;
use crate::mnist::LabeledImage;
use crate::model::Model;
use crate::seeds::derive_seed;

/// Which rule turns a batch-mean gradient into a weight update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// Plain gradient descent: `phi -= lr * g`.
    Sgd,
    /// Adam: exponential first/second moment estimates with bias correction,
    /// `phi -= lr * m_hat / (sqrt(v_hat) + epsilon)`. Converges much deeper
    /// than SGD in the same epoch budget; the resulting minima are sharper,
    /// which matters when the trained masks face hardware errors.
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Sgd
    }
}

impl OptimizerKind {
    /// Adam with the customary moment constants (0.9, 0.999, 1e-8).
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    fn validate(&self) -> Result<()> {
        if let OptimizerKind::Adam {
            beta1,
            beta2,
            epsilon,
        } = *self
        {
            for (name, beta) in [("beta1", beta1), ("beta2", beta2)] {
                if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
                    return Err(Error::Config(format!(
                        "Adam {name} must lie in [0, 1), got {beta}"
                    )));
                }
            }
            if !(epsilon.is_finite() && epsilon > 0.0) {
                return Err(Error::Config(format!(
                    "Adam epsilon must be positive, got {epsilon}"
                )));
            }
        }
        Ok(())
    }
}

/// Hyper-parameters for [`train`] and [`train_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Gradient-descent step size (for the first epoch, when decay is on).
    pub learning_rate: f64,
    /// Multiplies the learning rate once per epoch: epoch `e` trains at
    /// `learning_rate * lr_decay^(e-1)`. 1 keeps the step size constant;
    /// values below 1 anneal the optimiser so late epochs fine-tune instead
    /// of bouncing around the minimum.
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Standard deviation (radians) of the phase noise injected during
    /// training steps; 0 disables injection entirely.
    pub noise_std: f64,
    /// Master seed; shuffling and noise use independent streams derived
    /// from it (see [`crate::seeds::derive_seed`]).
    pub seed: u64,
    /// Reshuffle the training set every epoch.
    pub shuffle: bool,
    /// Evaluate on the test set every this many epochs (and always after the
    /// final epoch); 0 disables evaluation during training.
    pub eval_every: usize,
    /// Draw one noise realisation per sample instead of one per step.
    /// Slower, occasionally useful for ablations.
    pub noise_per_sample: bool,
    /// Beam profile used to prepare inputs (training and evaluation alike).
    pub illumination: Illumination,
    /// Update rule; see [`OptimizerKind`].
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            lr_decay: 1.0,
            epochs: 20,
            batch_size: 32,
            noise_std: 0.0,
            seed: 42,
            shuffle: true,
            eval_every: 1,
            noise_per_sample: false,
            illumination: Illumination::default(),
            optimizer: OptimizerKind::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.lr_decay.is_finite() && self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!(
                "lr_decay must be in (0, 1], got {}",
                self.lr_decay
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config(format!(
                "noise_std must be finite and non-negative, got {}",
                self.noise_std
            )));
        }
        self.optimizer.validate()
    }
}

/// Optimiser working state: Adam's per-phase moment estimates and step count.
/// SGD carries no state. One instance must live across all steps of a
/// training run; [`train`] manages this internally.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    /// First-moment estimate per layer (Adam only).
    m: Vec<Array2<f64>>,
    /// Second-moment estimate per layer (Adam only).
    v: Vec<Array2<f64>>,
    /// Completed update count, for bias correction.
    t: u32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, model: &Model) -> Optimizer {
        let n = model.cfg().grid_n;
        let layers = model.cfg().layer_count;
        let (m, v) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (
                vec![Array2::zeros((n, n)); layers],
                vec![Array2::zeros((n, n)); layers],
            ),
        };
        Optimizer { kind, m, v, t: 0 }
    }

    /// Apply one batch-mean gradient to the model's (clean) phases.
    fn apply(&mut self, model: &Model, gradient: &Gradient, lr: f64) -> Result<Model> {
        let masks = match self.kind {
            OptimizerKind::Sgd => model
                .masks()
                .iter()
                .zip(&gradient.layers)
                .map(|(mask, g)| {
                    let mut phases = mask.phases().clone();
                    phases.zip_mut_with(g, |p, gi| *p -= lr * gi);
                    PhaseMask::new(phases)
                })
                .collect::<Result<Vec<_>>>()?,
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                self.t += 1;
                let bias1 = 1.0 - beta1.powi(self.t as i32);
                let bias2 = 1.0 - beta2.powi(self.t as i32);
                model
                    .masks()
                    .iter()
                    .zip(&gradient.layers)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                    .map(|((mask, g), (m, v))| {
                        m.zip_mut_with(g, |mi, gi| *mi = beta1 * *mi + (1.0 - beta1) * gi);
                        v.zip_mut_with(g, |vi, gi| *vi = beta2 * *vi + (1.0 - beta2) * gi * gi);
                        let mut phases = mask.phases().clone();
                        ndarray::azip!((p in &mut phases, mi in &*m, vi in &*v) {
                            let m_hat = mi / bias1;
                            let v_hat = vi / bias2;
                            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
                        });
                        PhaseMask::new(phases)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        model.with_masks(masks)
    }
}

/// One prepared training example: an input field and its class.
#[derive(Debug, Clone)]
pub struct Sample {
    pub input: ComplexField,
    pub label: usize,
}

/// Result of a single optimisation step.
#[derive(Debug)]
pub struct StepResult {
    /// Model with updated (clean) weights.
    pub model: Model,
    /// Mean loss over the batch, measured at the noisy weights the step used.
    pub mean_loss: f64,
    /// How many batch samples the (noisy) forward pass classified correctly.
    pub correct: usize,
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample loss over the epoch, at the injected-noise weights
    /// each step actually used.
    pub train_loss: f64,
    /// Fraction of training samples the training passes got right.
    pub train_accuracy: f64,
    /// Clean-weight accuracy on the test set, when evaluated this epoch.
    pub test_accuracy: Option<f64>,
    /// Wall-clock seconds spent on the epoch (not part of the CSV output,
    /// which must be byte-identical across runs).
    pub wall_secs: f64,
}

/// The full training curve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    /// Render as CSV: `epoch,train_loss,train_accuracy,test_accuracy`, with
    /// an empty last column on epochs without evaluation. Deterministic
    /// byte-for-byte for identical histories.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_accuracy,test_accuracy\n");
        for r in &self.epochs {
            let test = r
                .test_accuracy
                .map(|a| a.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.epoch, r.train_loss, r.train_accuracy, test
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Accuracy, mean loss, and confusion matrix from one evaluation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub accuracy: f64,
    pub mean_loss: f64,
    /// `confusion[true_label][predicted]` counts.
    pub confusion: [[u32; 10]; 10],
}

/// Build a fresh model with every phase drawn uniformly from `[0, 2pi)` and
/// the standard detector layout for the grid.
pub fn init_model(cfg: &OpticalConfig, seed: u64) -> Result<Model> {
    cfg.validate()?;
    let layout = DetectorLayout::default_for_grid(cfg.grid_n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.grid_n;
    let masks = (0..cfg.layer_count)
        .map(|_| {
            PhaseMask::new(Array2::from_shape_fn((n, n), |_| {
                rng.gen::<f64>() * std::f64::consts::TAU
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Model::new(cfg.clone(), masks, layout)
}

/// Draw one grid of i.i.d. `N(0, std^2)` phase perturbations per layer.
/// `std = 0` returns all-zero grids without touching the generator.
pub fn sample_weight_noise<R: Rng>(
    model: &Model,
    std: f64,
    rng: &mut R,
) -> Result<Vec<Array2<f64>>> {
    let n = model.cfg().grid_n;
    let layer_count = model.cfg().layer_count;
    if std == 0.0 {
        return Ok(vec![Array2::zeros((n, n)); layer_count]);
    }
    if !(std.is_finite() && std > 0.0) {
        return Err(Error::Config(format!(
            "noise std must be finite and non-negative, got {std}"
        )));
    }
    let normal = Normal::new(0.0, std).expect("validated std");
    Ok((0..layer_count)
        .map(|_| Array2::from_shape_fn((n, n), |_| normal.sample(rng)))
        .collect())
}

fn perturbed(model: &Model, noise: &[Array2<f64>]) -> Result<Model> {
    let masks = model
        .masks()
        .iter()
        .zip(noise)
        .map(|(mask, eta)| PhaseMask::new(mask.phases() + eta))
        .collect::<Result<Vec<_>>>()?;
    model.with_masks(masks)
}

/// One mini-batch step with throwaway optimiser state.
///
/// Equivalent to [`train_step_with`] on a fresh [`Optimizer`]; exact for
/// SGD, which is stateless, but Adam's moments restart from zero every call,
/// so multi-step training should go through [`train`] (or carry an
/// [`Optimizer`] explicitly).
pub fn train_step<R: Rng>(
    model: &Model,
    batch: &[Sample],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<StepResult> {
    let mut opt = Optimizer::new(cfg.optimizer, model);
    train_step_with(model, batch, cfg, rng, &mut opt)
}

/// One mini-batch step of (noise-injected) gradient descent.
///
/// Gradients are evaluated at noise-perturbed weights but applied to the
/// clean weights, so the noise itself never accumulates into the model. The
/// batch-mean gradient and loss are reduced in batch order regardless of
/// how many worker threads run the backward passes.
pub fn train_step_with<R: Rng>(
    model: &Model,
    batch: &[Sample],
    cfg: &TrainConfig,
    rng: &mut R,
    opt: &mut Optimizer,
) -> Result<StepResult> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::Config("train_step requires a non-empty batch".into()));
    }

    // Draw noise up front (sequentially, for reproducibility), then run the
    // backward passes in parallel.
    enum StepModels<'a> {
        Clean(&'a Model),
        Shared(Model),
        PerSample(Vec<Model>),
    }
    impl StepModels<'_> {
        fn get(&self, i: usize) -> &Model {
            match self {
                StepModels::Clean(m) => m,
                StepModels::Shared(m) => m,
                StepModels::PerSample(v) => &v[i],
            }
        }
    }
    let step_models = if cfg.noise_std == 0.0 {
        StepModels::Clean(model)
    } else if cfg.noise_per_sample {
        StepModels::PerSample(
            batch
                .iter()
                .map(|_| {
                    let noise = sample_weight_noise(model, cfg.noise_std, rng)?;
                    perturbed(model, &noise)
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        let noise = sample_weight_noise(model, cfg.noise_std, rng)?;
        StepModels::Shared(perturbed(model, &noise)?)
    };

    let passes: Vec<BackwardPass> = batch
        .par_iter()
        .enumerate()
        .map(|(i, sample)| backward(step_models.get(i), &sample.input, &one_hot(sample.label)?))
        .collect::<Result<Vec<_>>>()?;

    let scale = 1.0 / batch.len() as f64;
    let mut gradient = Gradient::zeros_like(model);
    let mut loss_sum = 0.0;
    let mut correct = 0;
    for (pass, sample) in passes.iter().zip(batch) {
        gradient.add_scaled(&pass.gradient, scale);
        loss_sum += pass.loss;
        if pass.prediction.class == sample.label {
            correct += 1;
        }
    }

    Ok(StepResult {
        model: opt.apply(model, &gradient, cfg.learning_rate)?,
        mean_loss: loss_sum * scale,
        correct,
    })
}

/// Full training loop over a labelled image set.
///
/// Runs `cfg.epochs` passes of `ceil(len / batch_size)` steps each, with
/// per-epoch reshuffling and optional test-set evaluation (always at clean
/// weights). Aborts with [`Error::NonFiniteLoss`] if the loss diverges.
pub fn train(
    model: Model,
    train_set: &[LabeledImage],
    test_set: &[LabeledImage],
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    train_with_progress(model, train_set, test_set, cfg, |_| {})
}

/// As [`train`], invoking `on_epoch` with each epoch's record as soon as it
/// completes (for live logging; the callback does not affect the result).
pub fn train_with_progress(
    model: Model,
    train_set: &[LabeledImage],
    test_set: &[LabeledImage],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1, 0, 0));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2, 0, 0));

    let mut model = model;
    let mut opt = Optimizer::new(cfg.optimizer, &model);
    let mut history = TrainHistory::default();
    let mut indices: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        if cfg.shuffle {
            indices.shuffle(&mut shuffle_rng);
        }
        let step_cfg = TrainConfig {
            learning_rate: cfg.learning_rate * cfg.lr_decay.powi(epoch as i32 - 1),
            ..cfg.clone()
        };

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (step, chunk) in indices.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<Sample> = chunk
                .par_iter()
                .map(|&i| {
                    let img = &train_set[i];
                    Ok(Sample {
                        input: prepare_input(img, model.cfg(), cfg.illumination)?,
                        label: img.label as usize,
                    })
                })
                .collect::<Result<Vec<_>>>()?;

            let result = train_step_with(&model, &batch, &step_cfg, &mut noise_rng, &mut opt)?;
            if !result.mean_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    value: result.mean_loss,
                });
            }
            model = result.model;
            loss_sum += result.mean_loss * batch.len() as f64;
            correct += result.correct;
        }

        let evaluate_now = cfg.eval_every > 0
            && !test_set.is_empty()
            && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
        let test_accuracy = if evaluate_now {
            Some(evaluate(&model, test_set, cfg.illumination)?.accuracy)
        } else {
            None
        };

        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            test_accuracy,
            wall_secs: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.epochs.push(record);
    }

    Ok((model, history))
}

/// Classify every image at the model's nominal weights.
pub fn evaluate(
    model: &Model,
    set: &[LabeledImage],
    illumination: Illumination,
) -> Result<EvalResult> {
    if set.is_empty() {
        return Err(Error::Config("evaluation set is empty".into()));
    }
    let outcomes: Vec<(f64, usize, u8)> = set
        .par_iter()
        .map(|img| {
            let input = prepare_input(img, model.cfg(), illumination)?;
            let prediction = model.forward(&input)?;
            let l = loss(&one_hot(img.label as usize)?, &prediction.q)?;
            Ok((l, prediction.class, img.label))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let mut confusion = [[0u32; 10]; 10];
    for &(l, predicted, label) in &outcomes {
        loss_sum += l;
        if predicted == label as usize {
            correct += 1;
        }
        confusion[label as usize][predicted] += 1;
    }
    Ok(EvalResult {
        accuracy: correct as f64 / set.len() as f64,
        mean_loss: loss_sum / set.len() as f64,
        confusion,
    })
}
