//! Hardware error models: what fabrication and deployment do to a trained
//! network.
//!
//! Four families, all producing a new [`Model`] and leaving the original
//! untouched:
//!
//! * additive Gaussian phase noise (surface error on every layer sample),
//! * height quantisation (3-D printers deposit material in discrete steps),
//! * layer-spacing perturbation (assembly misalignment along the axis),
//! * source-frequency drift (printed heights serve a wavelength they were
//!   not designed for).
//!
//! The bridge between phase and geometry is the height map: a phase delay
//! `phi` (wrapped into `[0, 2pi)`) is realised as material thickness
//! `h = wrap(phi) * lambda / (2 pi (n - 1))`, so one full turn corresponds
//! to `lambda / (n - 1)` of material (about 1.07 mm at 400 GHz for n = 1.7).

use std::f64::consts::TAU;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::mask::PhaseMask;
use crate::model::Model;

/// One concrete hardware error to apply to a model.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorSpec {
    /// Add i.i.d. `N(0, std^2)` radians to every phase sample.
    PhaseGaussian { std: f64, seed: u64 },
    /// Re-express phases as heights and round them to multiples of `step_m`.
    ZQuantize { step_m: f64 },
    /// Replace the inter-plane spacings.
    Spacing(SpacingSpec),
    /// Move the source to a new frequency, keeping the printed heights.
    Frequency { new_frequency: f64 },
}

/// How to choose new spacings.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacingSpec {
    /// Explicit distances, one per gap.
    Fixed(Vec<f64>),
    /// Each gap drawn independently and uniformly from `[lo, hi]`.
    UniformRange { lo: f64, hi: f64, seed: u64 },
}

impl ErrorSpec {
    /// Apply this error to a model, returning the perturbed copy.
    pub fn apply(&self, model: &Model) -> Result<Model> {
        match self {
            ErrorSpec::PhaseGaussian { std, seed } => {
                perturb_phase_gaussian(model, *std, *seed)
            }
            ErrorSpec::ZQuantize { step_m } => quantize_height(model, *step_m),
            ErrorSpec::Spacing(spec) => {
                let cfg = perturb_spacing(model.cfg(), spec)?;
                Model::new(cfg, model.masks().to_vec(), model.layout().clone())
            }
            ErrorSpec::Frequency { new_frequency } => shift_frequency(model, *new_frequency),
        }
    }
}

/// Material thickness per mask sample, in metres, together with the optical
/// context that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    pub heights: Array2<f64>,
    pub wavelength: f64,
    pub material_index: f64,
}

impl HeightMap {
    /// Convert back to a phase mask: `phi = 2 pi (n - 1) h / lambda`.
    pub fn to_phase(&self) -> Result<PhaseMask> {
        let scale = TAU * (self.material_index - 1.0) / self.wavelength;
        PhaseMask::new(self.heights.mapv(|h| h * scale))
    }

    /// Write as CSV (one row per grid row, heights in millimetres).
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        for row in self.heights.rows() {
            let line = row
                .iter()
                .map(|h| format!("{:.6}", h * 1e3))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Add independent Gaussian noise to every phase of every layer. The draw
/// order (layer-major, row-major) is fixed, so a seed fully determines the
/// perturbation. `std = 0` returns an identical model.
pub fn perturb_phase_gaussian(model: &Model, std: f64, seed: u64) -> Result<Model> {
    if !(std.is_finite() && std >= 0.0) {
        return Err(Error::Config(format!(
            "phase noise std must be finite and non-negative, got {std}"
        )));
    }
    if std == 0.0 {
        return model.with_masks(model.masks().to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).expect("validated std");
    let masks = model
        .masks()
        .iter()
        .map(|mask| {
            PhaseMask::new(mask.phases().mapv(|p| p + normal.sample(&mut rng)))
        })
        .collect::<Result<Vec<_>>>()?;
    model.with_masks(masks)
}

/// Wrap phases into `[0, 2pi)` and convert them to material heights for the
/// given wavelength and refractive index.
pub fn phase_to_height(mask: &PhaseMask, wavelength: f64, material_index: f64) -> Result<HeightMap> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::Config(format!(
            "wavelength must be positive and finite, got {wavelength}"
        )));
    }
    if !(material_index.is_finite() && material_index > 1.0) {
        return Err(Error::Config(format!(
            "material_index must exceed 1, got {material_index}"
        )));
    }
    let scale = wavelength / (TAU * (material_index - 1.0));
    let heights = mask.phases().mapv(|p| p.rem_euclid(TAU) * scale);
    Ok(HeightMap {
        heights,
        wavelength,
        material_index,
    })
}

/// Simulate a printer with finite Z resolution: every layer's heights are
/// rounded (half away from zero) to the nearest multiple of `step_m`, then
/// mapped back to phases. Wrapped phases are already quantised by a second
/// application, so the operation is idempotent.
pub fn quantize_height(model: &Model, step_m: f64) -> Result<Model> {
    if !(step_m.is_finite() && step_m > 0.0) {
        return Err(Error::Config(format!(
            "height quantisation step must be positive and finite, got {step_m}"
        )));
    }
    let wavelength = model.cfg().wavelength();
    let material_index = model.cfg().material_index;
    let masks = model
        .masks()
        .iter()
        .map(|mask| {
            let mut map = phase_to_height(mask, wavelength, material_index)?;
            map.heights.mapv_inplace(|h| (h / step_m).round() * step_m);
            map.to_phase()
        })
        .collect::<Result<Vec<_>>>()?;
    model.with_masks(masks)
}

/// New configuration with perturbed spacings (the mask phases are untouched;
/// rebuild the model to refresh its transfer functions).
pub fn perturb_spacing(cfg: &OpticalConfig, spec: &SpacingSpec) -> Result<OpticalConfig> {
    let spacings = match spec {
        SpacingSpec::Fixed(values) => {
            if values.len() != cfg.spacings.len() {
                return Err(Error::Config(format!(
                    "expected {} spacings, got {}",
                    cfg.spacings.len(),
                    values.len()
                )));
            }
            values.clone()
        }
        SpacingSpec::UniformRange { lo, hi, seed } => {
            if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && hi >= lo) {
                return Err(Error::Config(format!(
                    "invalid spacing range [{lo}, {hi}]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            cfg.spacings
                .iter()
                .map(|_| lo + (hi - lo) * rng.gen::<f64>())
                .collect()
        }
    };
    let mut out = cfg.clone();
    out.spacings = spacings;
    out.validate()?;
    Ok(out)
}

/// Operate the printed network at a different source frequency.
///
/// The heights are fixed hardware, so each phase rescales by the frequency
/// ratio (`phi' = wrap(phi) * f_new / f`), and all transfer functions are
/// rebuilt for the new wavelength.
pub fn shift_frequency(model: &Model, new_frequency: f64) -> Result<Model> {
    if !(new_frequency.is_finite() && new_frequency > 0.0) {
        return Err(Error::Config(format!(
            "frequency must be positive and finite, got {new_frequency}"
        )));
    }
    let ratio = new_frequency / model.cfg().frequency;
    let masks = model
        .masks()
        .iter()
        .map(|mask| PhaseMask::new(mask.phases().mapv(|p| p.rem_euclid(TAU) * ratio)))
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = model.cfg().clone();
    cfg.frequency = new_frequency;
    Model::new(cfg, masks, model.layout().clone())
}

/// Phase distance on the circle: `min(|a - b| mod 2pi, 2pi - |a - b| mod 2pi)`.
/// This is the right way to compare wrapped phases; the plain difference
/// jumps by 2 pi when quantisation rounds a height across the wrap seam.
pub fn circular_phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
