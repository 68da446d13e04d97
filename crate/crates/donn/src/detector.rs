//! Detector-plane bookkeeping: class regions, intensity readout, and the
//! cross-entropy training loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;

/// Number of classes, and therefore detector regions.
pub const CLASS_COUNT: usize = 10;

/// Floor added to each region intensity before normalising, so a dark
/// detector plane still yields a valid distribution.
pub const READOUT_EPSILON: f64 = 1e-12;

/// Probabilities are clipped to `[CLIP, 1 - CLIP]` inside the loss, keeping
/// the logarithms finite for arbitrarily confident outputs.
pub const LOSS_CLIP: f64 = 1e-9;

/// An axis-aligned rectangle of grid samples, `height x width` starting at
/// `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.height * self.width
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.row < other.row + other.height
            && other.row < self.row + self.height
            && self.col < other.col + other.width
            && other.col < self.col + self.width
    }
}

/// How region intensities become class probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReadoutMode {
    /// `q_c = (I_c + eps) / sum_j (I_j + eps)`: the physical readout, linear
    /// in detected power. The default.
    Intensity,
    /// `q = softmax(I / temperature)`: sharper, but introduces a scale that
    /// the optics does not have.
    Softmax { temperature: f64 },
}

/// Ten detector regions on the output plane, one per digit class, plus the
/// readout rule that turns their powers into probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorLayout {
    pub regions: Vec<Rect>,
    pub readout: ReadoutMode,
}

impl DetectorLayout {
    /// The standard layout: two rows of five square regions, each
    /// `grid_n / 8` on a side. Rows are separated by one region width;
    /// columns are spaced as widely as the grid allows (five regions plus
    /// four one-region gaps would overflow the grid, so the horizontal gaps
    /// and margins shrink to fit).
    pub fn default_for_grid(grid_n: usize) -> Result<DetectorLayout> {
        let side = grid_n / 8;
        if side == 0 {
            return Err(Error::Config(format!(
                "grid_n {grid_n} too small for detector regions"
            )));
        }
        let gap_h = (grid_n - 5 * side) / 6;
        let span_h = 5 * side + 4 * gap_h;
        let margin_h = (grid_n - span_h) / 2;
        let span_v = 3 * side; // two rows separated by one region width
        let margin_v = (grid_n - span_v) / 2;

        let mut regions = Vec::with_capacity(CLASS_COUNT);
        for row in 0..2 {
            for col in 0..5 {
                regions.push(Rect {
                    row: margin_v + row * 2 * side,
                    col: margin_h + col * (side + gap_h),
                    height: side,
                    width: side,
                });
            }
        }
        let layout = DetectorLayout {
            regions,
            readout: ReadoutMode::Intensity,
        };
        layout.validate(grid_n)?;
        Ok(layout)
    }

    /// Check the layout against a grid size: exactly ten non-empty regions,
    /// all inside the grid, pairwise disjoint, and a sane readout.
    pub fn validate(&self, grid_n: usize) -> Result<()> {
        if self.regions.len() != CLASS_COUNT {
            return Err(Error::Config(format!(
                "expected {CLASS_COUNT} detector regions, got {}",
                self.regions.len()
            )));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if r.area() == 0 {
                return Err(Error::Config(format!("detector region {i} is empty")));
            }
            if r.row + r.height > grid_n || r.col + r.width > grid_n {
                return Err(Error::Config(format!(
                    "detector region {i} exceeds the {grid_n}x{grid_n} grid"
                )));
            }
        }
        for i in 0..self.regions.len() {
            for j in i + 1..self.regions.len() {
                if self.regions[i].overlaps(&self.regions[j]) {
                    return Err(Error::Config(format!(
                        "detector regions {i} and {j} overlap"
                    )));
                }
            }
        }
        if let ReadoutMode::Softmax { temperature } = self.readout {
            if !(temperature.is_finite() && temperature > 0.0) {
                return Err(Error::Config(format!(
                    "softmax temperature must be positive, got {temperature}"
                )));
            }
        }
        Ok(())
    }
}

/// The network's answer for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Power collected by each detector region.
    pub intensities: [f64; CLASS_COUNT],
    /// Class probabilities after readout; positive, summing to one.
    pub q: [f64; CLASS_COUNT],
    /// Argmax of `q` (lowest index wins ties).
    pub class: usize,
}

/// Sum `|u|^2` over each detector region.
pub fn detect(field: &ComplexField, layout: &DetectorLayout) -> Result<[f64; CLASS_COUNT]> {
    layout.validate(field.n())?;
    let values = field.values();
    let mut intensities = [0.0; CLASS_COUNT];
    for (out, rect) in intensities.iter_mut().zip(&layout.regions) {
        let mut acc = 0.0;
        for r in rect.row..rect.row + rect.height {
            for c in rect.col..rect.col + rect.width {
                acc += values[[r, c]].norm_sqr();
            }
        }
        *out = acc;
    }
    Ok(intensities)
}

/// Normalise region intensities into class probabilities.
pub fn readout(intensities: &[f64; CLASS_COUNT], mode: ReadoutMode) -> [f64; CLASS_COUNT] {
    let mut q = [0.0; CLASS_COUNT];
    match mode {
        ReadoutMode::Intensity => {
            let total: f64 = intensities.iter().map(|i| i + READOUT_EPSILON).sum();
            for (qi, i) in q.iter_mut().zip(intensities) {
                *qi = (i + READOUT_EPSILON) / total;
            }
        }
        ReadoutMode::Softmax { temperature } => {
            let peak = intensities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (qi, i) in q.iter_mut().zip(intensities) {
                *qi = ((i - peak) / temperature).exp();
                total += *qi;
            }
            for qi in q.iter_mut() {
                *qi /= total;
            }
        }
    }
    q
}

/// Combine detection and readout into a [`Prediction`].
pub fn predict(field: &ComplexField, layout: &DetectorLayout) -> Result<Prediction> {
    let intensities = detect(field, layout)?;
    let q = readout(&intensities, layout.readout);
    Ok(Prediction {
        intensities,
        q,
        class: argmax(&q),
    })
}

pub(crate) fn argmax(q: &[f64; CLASS_COUNT]) -> usize {
    let mut best = 0;
    for (i, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = i;
        }
    }
    best
}

/// One-hot target vector for a digit class.
pub fn one_hot(class: usize) -> Result<[f64; CLASS_COUNT]> {
    if class >= CLASS_COUNT {
        return Err(Error::Config(format!(
            "class index {class} out of range 0..{CLASS_COUNT}"
        )));
    }
    let mut p = [0.0; CLASS_COUNT];
    p[class] = 1.0;
    Ok(p)
}

fn check_one_hot(p: &[f64; CLASS_COUNT]) -> Result<()> {
    let ones = p.iter().filter(|v| **v == 1.0).count();
    let zeros = p.iter().filter(|v| **v == 0.0).count();
    if ones != 1 || zeros != CLASS_COUNT - 1 {
        return Err(Error::Config(format!(
            "target must be one-hot over {CLASS_COUNT} classes, got {p:?}"
        )));
    }
    Ok(())
}

/// Cross-entropy over all ten classes,
/// `L = -sum_c p_c ln(q_c) + (1 - p_c) ln(1 - q_c)`,
/// with `q` clipped to `[LOSS_CLIP, 1 - LOSS_CLIP]` first.
pub fn loss(p: &[f64; CLASS_COUNT], q: &[f64; CLASS_COUNT]) -> Result<f64> {
    Ok(loss_and_dq(p, q)?.0)
}

/// Loss plus its derivative with respect to each (unclipped) `q_c`. Where
/// the clip saturates, the derivative is exactly zero.
pub(crate) fn loss_and_dq(
    p: &[f64; CLASS_COUNT],
    q: &[f64; CLASS_COUNT],
) -> Result<(f64, [f64; CLASS_COUNT])> {
    check_one_hot(p)?;
    let lo = LOSS_CLIP;
    let hi = 1.0 - LOSS_CLIP;
    let mut total = 0.0;
    let mut dq = [0.0; CLASS_COUNT];
    for c in 0..CLASS_COUNT {
        let clipped = q[c].clamp(lo, hi);
        total -= p[c] * clipped.ln() + (1.0 - p[c]) * (1.0 - clipped).ln();
        if q[c] >= lo && q[c] <= hi {
            dq[c] = -p[c] / clipped + (1.0 - p[c]) / (1.0 - clipped);
        }
    }
    Ok((total, dq))
}
