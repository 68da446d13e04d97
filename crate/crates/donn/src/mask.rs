//! Trainable phase masks: the free parameters of a diffractive network.

use ndarray::Array2;

use crate::error::{Error, Result};

/// A square grid of phase delays in radians, one per layer sample.
///
/// Values are unconstrained reals; the optics only ever sees `exp(j*phase)`,
/// so the network is 2-pi periodic in every entry. Fabrication-oriented code
/// ([`crate::error_models::phase_to_height`]) wraps values into `[0, 2pi)`
/// before converting them to material thickness.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    phases: Array2<f64>,
}

impl PhaseMask {
    /// Wrap an `n x n` grid of phases. Rejects non-square or non-finite data.
    pub fn new(phases: Array2<f64>) -> Result<Self> {
        let (rows, cols) = phases.dim();
        if rows != cols {
            return Err(Error::Shape(format!(
                "phase mask must be square, got {rows}x{cols}"
            )));
        }
        if rows == 0 {
            return Err(Error::Shape("phase mask must be non-empty".into()));
        }
        if !phases.iter().all(|p| p.is_finite()) {
            return Err(Error::Config("phase mask contains non-finite values".into()));
        }
        Ok(PhaseMask { phases })
    }

    /// An all-zero (optically transparent) mask.
    pub fn zeros(n: usize) -> Self {
        PhaseMask {
            phases: Array2::zeros((n, n)),
        }
    }

    pub fn n(&self) -> usize {
        self.phases.nrows()
    }

    pub fn phases(&self) -> &Array2<f64> {
        &self.phases
    }

    pub fn into_phases(self) -> Array2<f64> {
        self.phases
    }
}
