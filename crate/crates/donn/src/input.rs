//! Turning 28x28 digit images into input fields for the optics.
//!
//! The image becomes an amplitude pattern on the simulation grid: resampled
//! up from 28x28, multiplied by the illuminating beam profile, and
//! normalised to unit total power so every sample enters the network with
//! the same energy.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::OpticalConfig;
use crate::error::Result;
use crate::field::ComplexField;
use crate::mnist::{LabeledImage, IMAGE_SIDE};

/// The beam profile multiplied into the resampled image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Illumination {
    /// Flat wavefront across the whole aperture.
    Uniform,
    /// Gaussian beam `exp(-rho^2 / waist^2)`; `None` means half the aperture.
    Gaussian { waist: Option<f64> },
}

impl Default for Illumination {
    fn default() -> Self {
        Illumination::Gaussian { waist: None }
    }
}

impl Illumination {
    fn waist_for(&self, cfg: &OpticalConfig) -> Option<f64> {
        match self {
            Illumination::Uniform => None,
            Illumination::Gaussian { waist } => Some(waist.unwrap_or(cfg.aperture() / 2.0)),
        }
    }
}

/// How image pixels map onto grid samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resampling {
    /// Bilinear interpolation between the four nearest pixels.
    #[default]
    Bilinear,
    /// Nearest pixel wins; blockier but exactly preserves pixel values.
    Nearest,
}

/// Build the input field for one digit: resample, illuminate, normalise.
///
/// The output always has total power 1, even for an all-black image (which
/// falls back to plain illumination of the full aperture, i.e. the network
/// sees the beam with no image printed on it).
pub fn prepare_input(
    img: &LabeledImage,
    cfg: &OpticalConfig,
    illumination: Illumination,
) -> Result<ComplexField> {
    prepare_input_with(img, cfg, illumination, Resampling::default())
}

/// As [`prepare_input`] with an explicit resampling rule.
pub fn prepare_input_with(
    img: &LabeledImage,
    cfg: &OpticalConfig,
    illumination: Illumination,
    resampling: Resampling,
) -> Result<ComplexField> {
    cfg.validate()?;
    let n = cfg.grid_n;
    let scale = IMAGE_SIDE as f64 / n as f64;
    let mut amplitude = Array2::from_shape_fn((n, n), |(r, c)| {
        let y = ((r as f64 + 0.5) * scale - 0.5).clamp(0.0, (IMAGE_SIDE - 1) as f64);
        let x = ((c as f64 + 0.5) * scale - 0.5).clamp(0.0, (IMAGE_SIDE - 1) as f64);
        match resampling {
            Resampling::Bilinear => bilinear(img, y, x),
            Resampling::Nearest => img.get(y.round() as usize, x.round() as usize) as f64,
        }
    });

    if let Some(waist) = illumination.waist_for(cfg) {
        let centre = (n as f64 - 1.0) / 2.0;
        for ((r, c), a) in amplitude.indexed_iter_mut() {
            let y = (r as f64 - centre) * cfg.pixel_pitch;
            let x = (c as f64 - centre) * cfg.pixel_pitch;
            *a *= (-(x * x + y * y) / (waist * waist)).exp();
        }
    }

    let power: f64 = amplitude.iter().map(|a| a * a).sum();
    if power > 0.0 {
        let scale = 1.0 / power.sqrt();
        amplitude.mapv_inplace(|a| a * scale);
        ComplexField::from_amplitude(&amplitude, cfg.pixel_pitch)
    } else {
        // Dark image: illuminate the aperture uniformly at unit power.
        let uniform = Array2::from_elem((n, n), 1.0 / n as f64);
        ComplexField::from_amplitude(&uniform, cfg.pixel_pitch)
    }
}

fn bilinear(img: &LabeledImage, y: f64, x: f64) -> f64 {
    let y0 = y.floor() as usize;
    let x0 = x.floor() as usize;
    let y1 = (y0 + 1).min(IMAGE_SIDE - 1);
    let x1 = (x0 + 1).min(IMAGE_SIDE - 1);
    let fy = y - y0 as f64;
    let fx = x - x0 as f64;
    let top = img.get(y0, x0) as f64 * (1.0 - fx) + img.get(y0, x1) as f64 * fx;
    let bottom = img.get(y1, x0) as f64 * (1.0 - fx) + img.get(y1, x1) as f64 * fx;
    top * (1.0 - fy) + bottom * fy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnist::IMAGE_PIXELS;

    fn image(fill: impl Fn(usize) -> u8) -> LabeledImage {
        let mut pixels = [0u8; IMAGE_PIXELS];
        for (i, p) in pixels.iter_mut().enumerate() {
            *p = fill(i);
        }
        LabeledImage { pixels, label: 0 }
    }

    fn cfg(n: usize) -> OpticalConfig {
        OpticalConfig::new(400e9, n, 0.4e-3, 1, 0.03).unwrap()
    }

    #[test]
    fn output_power_is_one() {
        let cfg = cfg(64);
        for img in [
            image(|i| (i % 256) as u8),
            image(|_| 255),
            image(|i| u8::from(i == 400) * 9),
        ] {
            for illum in [
                Illumination::Uniform,
                Illumination::Gaussian { waist: None },
                Illumination::Gaussian { waist: Some(5e-3) },
            ] {
                let field = prepare_input(&img, &cfg, illum).unwrap();
                assert!((field.power() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dark_image_falls_back_to_uniform_power() {
        let field = prepare_input(&image(|_| 0), &cfg(32), Illumination::default()).unwrap();
        assert!((field.power() - 1.0).abs() <= 1e-12);
        // Uniform fallback: every sample identical.
        let first = field.values()[[0, 0]];
        assert!(field.values().iter().all(|v| *v == first));
    }

    #[test]
    fn uniform_illumination_of_flat_image_is_constant() {
        let field = prepare_input(&image(|_| 200), &cfg(32), Illumination::Uniform).unwrap();
        let first = field.values()[[0, 0]];
        for v in field.values().iter() {
            assert!((v - first).norm() < 1e-15);
        }
    }

    #[test]
    fn pixel_scale_cancels_in_normalisation() {
        // Doubling every pixel value must produce the identical field.
        let dim = image(|i| ((i % 100) + 1) as u8);
        let bright = image(|i| (((i % 100) + 1) * 2) as u8);
        let cfg = cfg(64);
        let a = prepare_input(&dim, &cfg, Illumination::default()).unwrap();
        let b = prepare_input(&bright, &cfg, Illumination::default()).unwrap();
        for (x, y) in a.values().iter().zip(b.values().iter()) {
            assert!((x - y).norm() <= 1e-15);
        }
    }

    #[test]
    fn gaussian_illumination_dims_the_edges() {
        let cfg = cfg(64);
        let flat = image(|_| 255);
        let uniform = prepare_input(&flat, &cfg, Illumination::Uniform).unwrap();
        let gaussian = prepare_input(&flat, &cfg, Illumination::default()).unwrap();
        let ratio_centre = gaussian.values()[[32, 32]].re / uniform.values()[[32, 32]].re;
        let ratio_corner = gaussian.values()[[0, 0]].re / uniform.values()[[0, 0]].re;
        assert!(ratio_corner < ratio_centre);
    }

    #[test]
    fn bilinear_preserves_flat_regions_nearest_preserves_values() {
        let img = image(|i| if (i / IMAGE_SIDE) < 14 { 40 } else { 200 });
        let cfg = cfg(56); // 2x upsampling
        let bil = prepare_input_with(&img, &cfg, Illumination::Uniform, Resampling::Bilinear)
            .unwrap();
        let near = prepare_input_with(&img, &cfg, Illumination::Uniform, Resampling::Nearest)
            .unwrap();
        // Away from the step edge both agree and are flat.
        let a = bil.values()[[10, 10]];
        let b = bil.values()[[10, 40]];
        assert!((a - b).norm() < 1e-15);
        // Nearest keeps the two-level structure exactly: the set of distinct
        // magnitudes is {40, 200} up to normalisation.
        let lo = near.values()[[10, 10]].re;
        let hi = near.values()[[45, 10]].re;
        assert!((hi / lo - 5.0).abs() < 1e-12);
    }
}
