//! Sampled scalar optical fields and elementwise operations on them.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mask::PhaseMask;

/// A monochromatic scalar field sampled on a square grid.
///
/// `values[[r, c]]` is the complex amplitude at the sample centred on
/// `((r - (n-1)/2) * pitch, (c - (n-1)/2) * pitch)` metres, so the grid is
/// centred on the optical axis. Total power is the plain sum of `|u|^2`
/// (the `pitch^2` area element is left out, consistently, everywhere).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    values: Array2<Complex64>,
    pitch: f64,
}

impl ComplexField {
    /// Wrap a square grid of samples. Rejects non-square grids, non-finite
    /// values, and non-positive pitches.
    pub fn new(values: Array2<Complex64>, pitch: f64) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows != cols || rows == 0 {
            return Err(Error::Shape(format!(
                "field must be square and non-empty, got {rows}x{cols}"
            )));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::Config(format!(
                "pixel pitch must be positive and finite, got {pitch}"
            )));
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Config("field contains non-finite values".into()));
        }
        Ok(ComplexField { values, pitch })
    }

    /// Internal constructor for values already known to be finite
    /// (e.g. outputs of arithmetic on validated fields).
    pub(crate) fn new_unchecked(values: Array2<Complex64>, pitch: f64) -> Self {
        debug_assert_eq!(values.nrows(), values.ncols());
        ComplexField { values, pitch }
    }

    /// The dark field: all samples zero.
    pub fn zeros(n: usize, pitch: f64) -> Result<Self> {
        Self::new(Array2::zeros((n, n)), pitch)
    }

    /// A field with the given real amplitude pattern and zero phase.
    pub fn from_amplitude(amplitude: &Array2<f64>, pitch: f64) -> Result<Self> {
        Self::new(amplitude.mapv(|a| Complex64::new(a, 0.0)), pitch)
    }

    /// A unit-amplitude Gaussian beam `exp(-rho^2 / waist^2)` centred on the
    /// grid, with `rho` the distance from the optical axis in metres.
    pub fn gaussian_beam(n: usize, pitch: f64, waist: f64) -> Result<Self> {
        if !(waist.is_finite() && waist > 0.0) {
            return Err(Error::Config(format!(
                "beam waist must be positive and finite, got {waist}"
            )));
        }
        let centre = (n as f64 - 1.0) / 2.0;
        let values = Array2::from_shape_fn((n, n), |(r, c)| {
            let y = (r as f64 - centre) * pitch;
            let x = (c as f64 - centre) * pitch;
            Complex64::new((-(x * x + y * y) / (waist * waist)).exp(), 0.0)
        });
        Self::new(values, pitch)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    /// Total power: the sum of `|u|^2` over all samples.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Elementwise complex scaling.
    pub fn scaled(&self, factor: Complex64) -> ComplexField {
        ComplexField {
            values: self.values.mapv(|v| v * factor),
            pitch: self.pitch,
        }
    }

    /// Elementwise sum of two fields on the same grid.
    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.check_same_grid(other.n(), other.pitch())?;
        Ok(ComplexField {
            values: &self.values + &other.values,
            pitch: self.pitch,
        })
    }

    pub(crate) fn check_same_grid(&self, n: usize, pitch: f64) -> Result<()> {
        if self.n() != n {
            return Err(Error::Shape(format!(
                "grid size mismatch: {} vs {n}",
                self.n()
            )));
        }
        if self.pitch != pitch {
            return Err(Error::Shape(format!(
                "pixel pitch mismatch: {} vs {pitch}",
                self.pitch
            )));
        }
        Ok(())
    }
}

/// Pass a field through a phase mask: `out = in * exp(j * phase)` at every
/// sample. Being a pure phase factor this preserves total power.
pub fn apply_phase(field: &ComplexField, mask: &PhaseMask) -> Result<ComplexField> {
    field.check_same_grid(mask.n(), field.pitch())?;
    let mut values = field.values().clone();
    values.zip_mut_with(mask.phases(), |v, &p| {
        *v *= Complex64::from_polar(1.0, p);
    });
    Ok(ComplexField::new_unchecked(values, field.pitch()))
}
