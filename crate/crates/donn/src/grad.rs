//! Analytic gradients of the training loss with respect to every mask phase,
//! computed by one adjoint (reverse) pass through the optics.
//!
//! The pipeline is linear in the field between masks, so the reverse pass
//! applies the adjoint of each step to the loss cogradient
//! `g = dL/d(conj u)`: the adjoint of angular-spectrum propagation is the
//! same filter with a conjugated spectrum, and the adjoint of a phase mask
//! is its inverse `exp(-j*phase)`. At each layer the phase gradient falls
//! out elementwise as `dL/dphase = 2 Im(g * conj(u_after_mask))`. One
//! backward pass therefore costs about as much as one forward pass, versus
//! two forward passes per parameter for finite differences - the check
//! [`fd_check`] keeps the two in agreement.

use ndarray::Array2;
use num_complex::Complex64;

use crate::detector::{loss_and_dq, Prediction, ReadoutMode, CLASS_COUNT};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::mask::PhaseMask;
use crate::model::Model;
use crate::propagate::propagate_adjoint;

/// Loss gradient with respect to each layer's phases, same shapes as the
/// model's masks.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub layers: Vec<Array2<f64>>,
}

impl Gradient {
    pub fn zeros_like(model: &Model) -> Gradient {
        let n = model.cfg().grid_n;
        Gradient {
            layers: vec![Array2::zeros((n, n)); model.cfg().layer_count],
        }
    }

    /// `self += other * scale`, used for averaging over a batch.
    pub fn add_scaled(&mut self, other: &Gradient, scale: f64) {
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            mine.zip_mut_with(theirs, |a, b| *a += b * scale);
        }
    }

    /// Largest absolute entry across all layers.
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.iter())
            .fold(0.0f64, |m, g| m.max(g.abs()))
    }
}

/// Everything one reverse pass produces.
#[derive(Debug, Clone)]
pub struct BackwardPass {
    pub loss: f64,
    pub prediction: Prediction,
    pub gradient: Gradient,
}

/// Forward pass plus adjoint pass: the loss for `target` (a one-hot vector)
/// and its exact gradient with respect to every mask phase.
///
/// The returned loss is bitwise identical to composing [`Model::forward`]
/// with [`crate::detector::loss`]; both run the same code.
pub fn backward(
    model: &Model,
    input: &ComplexField,
    target: &[f64; CLASS_COUNT],
) -> Result<BackwardPass> {
    let (prediction, trace) = model.forward_trace(input)?;
    let (loss, dq) = loss_and_dq(target, &prediction.q)?;

    // Chain rule through the readout: dL/dI for each detector region.
    let dldi = readout_backward(&prediction, &dq, model.layout().readout);

    // Seed the cogradient on the detector plane: dI/d(conj u) = u inside a
    // region, zero outside every region.
    let n = model.cfg().grid_n;
    let mut g = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    let detector = trace.detector_plane.values();
    for (rect, &dldi_c) in model.layout().regions.iter().zip(&dldi) {
        for r in rect.row..rect.row + rect.height {
            for c in rect.col..rect.col + rect.width {
                g[[r, c]] = dldi_c * detector[[r, c]];
            }
        }
    }
    let mut g = ComplexField::new_unchecked(g, input.pitch());

    // Walk the stack backwards, peeling one propagation per layer.
    let layer_count = model.cfg().layer_count;
    let mut layers = vec![Array2::zeros((0, 0)); layer_count];
    for l in (0..layer_count).rev() {
        g = propagate_adjoint(&g, &model.transfer_functions()[l + 1])?;

        let after = trace.after_mask[l].values();
        let mut grad_l = Array2::zeros((n, n));
        ndarray::Zip::from(&mut grad_l)
            .and(g.values())
            .and(after)
            .for_each(|out, gv, uv| {
                *out = 2.0 * (gv * uv.conj()).im;
            });
        layers[l] = grad_l;

        if l > 0 {
            // Undo the mask (adjoint of exp(j*phase) is exp(-j*phase)) so the
            // cogradient refers to the field entering the mask.
            let mut values = g.values().clone();
            values.zip_mut_with(&model.modulations()[l], |v, m| *v *= m.conj());
            g = ComplexField::new_unchecked(values, input.pitch());
        }
    }

    Ok(BackwardPass {
        loss,
        prediction,
        gradient: Gradient { layers },
    })
}

/// dL/dI from dL/dq for the given readout rule.
fn readout_backward(
    prediction: &Prediction,
    dq: &[f64; CLASS_COUNT],
    mode: ReadoutMode,
) -> [f64; CLASS_COUNT] {
    let q = &prediction.q;
    let mut dldi = [0.0; CLASS_COUNT];
    match mode {
        ReadoutMode::Intensity => {
            let total: f64 = prediction
                .intensities
                .iter()
                .map(|i| i + crate::detector::READOUT_EPSILON)
                .sum();
            let dot: f64 = (0..CLASS_COUNT).map(|c| dq[c] * q[c]).sum();
            for d in 0..CLASS_COUNT {
                dldi[d] = (dq[d] - dot) / total;
            }
        }
        ReadoutMode::Softmax { temperature } => {
            let dot: f64 = (0..CLASS_COUNT).map(|c| dq[c] * q[c]).sum();
            for d in 0..CLASS_COUNT {
                dldi[d] = q[d] * (dq[d] - dot) / temperature;
            }
        }
    }
    dldi
}

/// Compare the analytic gradient against central finite differences at the
/// given mask entries (`(layer, row, col)` triples), returning the largest
/// relative error. An empty entry list returns 0.
pub fn fd_check(
    model: &Model,
    input: &ComplexField,
    target: &[f64; CLASS_COUNT],
    entries: &[(usize, usize, usize)],
    step: f64,
) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let n = model.cfg().grid_n;
    for &(l, r, c) in entries {
        if l >= model.cfg().layer_count || r >= n || c >= n {
            return Err(Error::Config(format!(
                "entry ({l}, {r}, {c}) outside a {} layer {n}x{n} model",
                model.cfg().layer_count
            )));
        }
    }

    let analytic = backward(model, input, target)?.gradient;

    let loss_with_nudge = |l: usize, r: usize, c: usize, delta: f64| -> Result<f64> {
        let mut masks: Vec<PhaseMask> = model.masks().to_vec();
        let mut phases = masks[l].phases().clone();
        phases[[r, c]] += delta;
        masks[l] = PhaseMask::new(phases)?;
        let nudged = model.with_masks(masks)?;
        let prediction = nudged.forward(input)?;
        crate::detector::loss(target, &prediction.q)
    };

    let mut worst = 0.0f64;
    for &(l, r, c) in entries {
        let plus = loss_with_nudge(l, r, c, step)?;
        let minus = loss_with_nudge(l, r, c, -step)?;
        let numeric = (plus - minus) / (2.0 * step);
        let exact = analytic.layers[l][[r, c]];
        let rel = (numeric - exact).abs() / exact.abs().max(numeric.abs()).max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}
