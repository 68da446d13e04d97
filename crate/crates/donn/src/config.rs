//! Optical system description shared by every stage of the simulator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Geometry and illumination parameters of a stack of diffractive layers.
///
/// Lengths are in metres and frequencies in hertz throughout. The free-space
/// wavelength is always derived from `frequency` via [`OpticalConfig::wavelength`]
/// rather than stored, so the two can never drift apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    /// Source frequency in Hz.
    pub frequency: f64,
    /// Samples per side of the square simulation grid.
    pub grid_n: usize,
    /// Centre-to-centre sample spacing in metres.
    pub pixel_pitch: f64,
    /// Number of phase-modulating layers.
    pub layer_count: usize,
    /// Propagation distances in metres: input plane to layer 1, between
    /// successive layers, and last layer to the detector plane. Always
    /// `layer_count + 1` entries.
    pub spacings: Vec<f64>,
    /// Refractive index of the layer material (used by the height map).
    pub material_index: f64,
    /// Zero-padding factor applied around the grid during propagation
    /// (1 = none, 2 = double the side length).
    pub pad_factor: usize,
}

impl OpticalConfig {
    /// Uniform-spacing constructor: every gap in the stack is `spacing` metres.
    pub fn new(
        frequency: f64,
        grid_n: usize,
        pixel_pitch: f64,
        layer_count: usize,
        spacing: f64,
    ) -> Result<Self> {
        Self::with_spacings(
            frequency,
            grid_n,
            pixel_pitch,
            vec![spacing; layer_count + 1],
        )
    }

    /// General constructor with one explicit distance per gap
    /// (`layer_count` is implied by `spacings.len() - 1`).
    pub fn with_spacings(
        frequency: f64,
        grid_n: usize,
        pixel_pitch: f64,
        spacings: Vec<f64>,
    ) -> Result<Self> {
        if spacings.is_empty() {
            return Err(Error::Config(
                "spacings must contain at least one distance".into(),
            ));
        }
        let cfg = OpticalConfig {
            frequency,
            grid_n,
            pixel_pitch,
            layer_count: spacings.len() - 1,
            spacings,
            material_index: 1.7,
            pad_factor: 2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Free-space wavelength in metres, `c / frequency`.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    /// Side length of the padded grid used during propagation.
    pub fn padded_n(&self) -> usize {
        self.grid_n * self.pad_factor
    }

    /// Physical side length of the (unpadded) grid in metres.
    pub fn aperture(&self) -> f64 {
        self.grid_n as f64 * self.pixel_pitch
    }

    /// Check every invariant, returning the first violation found.
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::Config(format!(
                "frequency must be positive and finite, got {}",
                self.frequency
            )));
        }
        if self.grid_n < 8 || self.grid_n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid_n must be even and at least 8, got {}",
                self.grid_n
            )));
        }
        if !(self.pixel_pitch.is_finite() && self.pixel_pitch > 0.0) {
            return Err(Error::Config(format!(
                "pixel_pitch must be positive and finite, got {}",
                self.pixel_pitch
            )));
        }
        if self.spacings.len() != self.layer_count + 1 {
            return Err(Error::Config(format!(
                "expected {} spacings for {} layers, got {}",
                self.layer_count + 1,
                self.layer_count,
                self.spacings.len()
            )));
        }
        if let Some(d) = self
            .spacings
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return Err(Error::Config(format!(
                "every spacing must be positive and finite, got {d}"
            )));
        }
        if !(self.material_index.is_finite() && self.material_index > 1.0) {
            return Err(Error::Config(format!(
                "material_index must exceed 1, got {}",
                self.material_index
            )));
        }
        if self.pad_factor != 1 && self.pad_factor != 2 {
            return Err(Error::Config(format!(
                "pad_factor must be 1 or 2, got {}",
                self.pad_factor
            )));
        }
        Ok(())
    }
}

impl Default for OpticalConfig {
    /// The terahertz bench this crate is tuned around: a 400 GHz source,
    /// five layers of 200 x 200 phase samples at 0.4 mm pitch, 3 cm gaps,
    /// refractive index 1.7 and double zero-padding.
    fn default() -> Self {
        OpticalConfig {
            frequency: 400e9,
            grid_n: 200,
            pixel_pitch: 0.4e-3,
            layer_count: 5,
            spacings: vec![0.03; 6],
            material_index: 1.7,
            pad_factor: 2,
        }
    }
}
