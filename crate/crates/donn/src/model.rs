//! The diffractive network itself: an optical configuration, one phase mask
//! per layer, and a detector layout, with the forward pass that links them.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::config::OpticalConfig;
use crate::detector::{predict, DetectorLayout, Prediction};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::mask::PhaseMask;
use crate::propagate::{make_transfer_function, propagate, TransferFunction};

/// A fully specified diffractive classifier.
///
/// Models are immutable: training and error models build new models from old
/// ones via [`Model::with_masks`] or [`Model::new`]. Construction eagerly
/// builds one transfer function per gap (identical distances share one) and
/// caches each mask's modulation `exp(j*phase)`, so the forward pass does no
/// planning work.
#[derive(Debug, Clone)]
pub struct Model {
    cfg: OpticalConfig,
    masks: Vec<PhaseMask>,
    layout: DetectorLayout,
    /// Transfer function for gap `l`, entries shared when spacings repeat.
    tfs: Vec<Arc<TransferFunction>>,
    /// `exp(j*phase)` per layer, precomputed from `masks`.
    modulations: Vec<Array2<Complex64>>,
}

/// Per-plane fields recorded during a forward pass, for inspection and for
/// the backward pass: the field just after each mask, then the field at the
/// detector plane.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub after_mask: Vec<ComplexField>,
    pub detector_plane: ComplexField,
}

impl Model {
    pub fn new(cfg: OpticalConfig, masks: Vec<PhaseMask>, layout: DetectorLayout) -> Result<Self> {
        cfg.validate()?;
        layout.validate(cfg.grid_n)?;
        if masks.len() != cfg.layer_count {
            return Err(Error::Config(format!(
                "expected {} masks for {} layers, got {}",
                cfg.layer_count,
                cfg.layer_count,
                masks.len()
            )));
        }
        for (l, mask) in masks.iter().enumerate() {
            if mask.n() != cfg.grid_n {
                return Err(Error::Shape(format!(
                    "mask {l} is {}x{}, expected {}x{}",
                    mask.n(),
                    mask.n(),
                    cfg.grid_n,
                    cfg.grid_n
                )));
            }
        }

        let wavelength = cfg.wavelength();
        let mut by_distance: HashMap<u64, Arc<TransferFunction>> = HashMap::new();
        let mut tfs = Vec::with_capacity(cfg.spacings.len());
        for &d in &cfg.spacings {
            let tf = match by_distance.get(&d.to_bits()) {
                Some(tf) => Arc::clone(tf),
                None => {
                    let tf = Arc::new(make_transfer_function(&cfg, d, wavelength)?);
                    by_distance.insert(d.to_bits(), Arc::clone(&tf));
                    tf
                }
            };
            tfs.push(tf);
        }

        let modulations = masks.iter().map(modulation).collect();
        Ok(Model {
            cfg,
            masks,
            layout,
            tfs,
            modulations,
        })
    }

    /// A copy of this model with different mask phases on the same optics.
    /// Transfer functions are reused; only the modulations are recomputed.
    pub fn with_masks(&self, masks: Vec<PhaseMask>) -> Result<Self> {
        if masks.len() != self.cfg.layer_count {
            return Err(Error::Config(format!(
                "expected {} masks, got {}",
                self.cfg.layer_count,
                masks.len()
            )));
        }
        for (l, mask) in masks.iter().enumerate() {
            if mask.n() != self.cfg.grid_n {
                return Err(Error::Shape(format!(
                    "mask {l} is {}x{}, expected {}x{}",
                    mask.n(),
                    mask.n(),
                    self.cfg.grid_n,
                    self.cfg.grid_n
                )));
            }
        }
        let modulations = masks.iter().map(modulation).collect();
        Ok(Model {
            cfg: self.cfg.clone(),
            masks,
            layout: self.layout.clone(),
            tfs: self.tfs.clone(),
            modulations,
        })
    }

    pub fn cfg(&self) -> &OpticalConfig {
        &self.cfg
    }

    pub fn masks(&self) -> &[PhaseMask] {
        &self.masks
    }

    pub fn layout(&self) -> &DetectorLayout {
        &self.layout
    }

    pub(crate) fn transfer_functions(&self) -> &[Arc<TransferFunction>] {
        &self.tfs
    }

    pub(crate) fn modulations(&self) -> &[Array2<Complex64>] {
        &self.modulations
    }

    /// Run the optics end to end: propagate to each layer, modulate, and
    /// read the detector plane.
    pub fn forward(&self, input: &ComplexField) -> Result<Prediction> {
        input.check_same_grid(self.cfg.grid_n, self.cfg.pixel_pitch)?;
        let mut field = propagate(input, &self.tfs[0])?;
        for l in 0..self.cfg.layer_count {
            field = modulate(&field, &self.modulations[l]);
            field = propagate(&field, &self.tfs[l + 1])?;
        }
        predict(&field, &self.layout)
    }

    /// As [`Model::forward`], but also returns the intermediate fields the
    /// backward pass needs.
    pub fn forward_trace(&self, input: &ComplexField) -> Result<(Prediction, ForwardTrace)> {
        input.check_same_grid(self.cfg.grid_n, self.cfg.pixel_pitch)?;
        let mut after_mask = Vec::with_capacity(self.cfg.layer_count);
        let mut field = propagate(input, &self.tfs[0])?;
        for l in 0..self.cfg.layer_count {
            field = modulate(&field, &self.modulations[l]);
            after_mask.push(field.clone());
            field = propagate(&field, &self.tfs[l + 1])?;
        }
        let prediction = predict(&field, &self.layout)?;
        Ok((
            prediction,
            ForwardTrace {
                after_mask,
                detector_plane: field,
            },
        ))
    }
}

fn modulation(mask: &PhaseMask) -> Array2<Complex64> {
    mask.phases().mapv(|p| Complex64::from_polar(1.0, p))
}

pub(crate) fn modulate(field: &ComplexField, modulation: &Array2<Complex64>) -> ComplexField {
    let mut values = field.values().clone();
    values.zip_mut_with(modulation, |v, m| *v *= m);
    ComplexField::new_unchecked(values, field.pitch())
}
