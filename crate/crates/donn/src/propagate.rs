//! Free-space propagation between parallel planes.
//!
//! The workhorse is the band-limited angular-spectrum method: fields are
//! zero-padded, transformed with an FFT, multiplied by the transfer function
//! of free space, and transformed back. The much slower [`rs_direct`]
//! summation of the first Rayleigh-Sommerfeld integral is kept as an
//! independent oracle; the two must agree wherever sampling is adequate, and
//! the test suite holds them to that.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::fft::with_workspace;
use crate::field::ComplexField;

/// Precomputed frequency-domain transfer function for one propagation step.
///
/// The spectrum lives on the padded grid in unshifted FFT order. Entry
/// `(0, 0)` is the DC term `exp(j 2 pi d / lambda)`; spatial frequencies with
/// `fx^2 + fy^2 > 1/lambda^2` are evanescent and set to zero, as are
/// frequencies beyond the anti-aliasing band limit
/// `f_lim = 1 / (lambda * sqrt((2d / L)^2 + 1))` (applied per axis, with `L`
/// the padded side length in metres). Every surviving entry has unit modulus,
/// so propagation through the passband conserves power.
#[derive(Debug, Clone)]
pub struct TransferFunction {
    spectrum: Array2<Complex64>,
    distance: f64,
    wavelength: f64,
    pitch: f64,
    grid_n: usize,
    padded_n: usize,
}

impl TransferFunction {
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn padded_n(&self) -> usize {
        self.padded_n
    }

    /// The transfer spectrum in unshifted FFT order (padded grid).
    pub fn spectrum(&self) -> &Array2<Complex64> {
        &self.spectrum
    }

    /// The elementwise complex conjugate, i.e. propagation by `-distance`.
    /// Applying a transfer function and then its conjugate returns the
    /// band-limited part of the original field.
    pub fn conjugated(&self) -> TransferFunction {
        TransferFunction {
            spectrum: self.spectrum.mapv(|h| h.conj()),
            ..self.clone()
        }
    }

    /// The `distance -> 0` limit: an all-ones spectrum that reproduces the
    /// input field exactly (up to DFT round-trip error). Mainly useful for
    /// testing pipelines.
    pub fn identity(grid_n: usize, pad_factor: usize, pitch: f64, wavelength: f64) -> Self {
        let padded_n = grid_n * pad_factor;
        TransferFunction {
            spectrum: Array2::from_elem((padded_n, padded_n), Complex64::new(1.0, 0.0)),
            distance: 0.0,
            wavelength,
            pitch,
            grid_n,
            padded_n,
        }
    }
}

/// Build the transfer function for propagating `distance` metres at
/// `wavelength` on the grid described by `cfg`.
pub fn make_transfer_function(
    cfg: &OpticalConfig,
    distance: f64,
    wavelength: f64,
) -> Result<TransferFunction> {
    cfg.validate()?;
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::Config(format!(
            "propagation distance must be positive and finite, got {distance}"
        )));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::Config(format!(
            "wavelength must be positive and finite, got {wavelength}"
        )));
    }

    let n = cfg.padded_n();
    let side = n as f64 * cfg.pixel_pitch;
    let df = 1.0 / side;
    let inv_lambda_sq = 1.0 / (wavelength * wavelength);
    // Band limit of Matsushima & Shimobaba, applied separately per axis:
    // spectral components steeper than the padded window can carry alias.
    let f_limit = 1.0 / (wavelength * ((2.0 * distance / side).powi(2) + 1.0).sqrt());

    // Frequency of FFT bin i (unshifted order): 0, 1, ..., n/2, -(n/2-1), ..., -1.
    let freq = |i: usize| -> f64 {
        let k = if i <= n / 2 { i as isize } else { i as isize - n as isize };
        k as f64 * df
    };

    let spectrum = Array2::from_shape_fn((n, n), |(r, c)| {
        let fy = freq(r);
        let fx = freq(c);
        if fx.abs() > f_limit || fy.abs() > f_limit {
            return Complex64::new(0.0, 0.0);
        }
        let kz_sq = inv_lambda_sq - fx * fx - fy * fy;
        if kz_sq < 0.0 {
            // Evanescent: decays over sub-wavelength distances, carries no
            // power to the next plane.
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * distance * kz_sq.sqrt())
    });

    Ok(TransferFunction {
        spectrum,
        distance,
        wavelength,
        pitch: cfg.pixel_pitch,
        grid_n: cfg.grid_n,
        padded_n: n,
    })
}

/// Propagate a field via the angular-spectrum method, returning a field on
/// the same (unpadded) grid.
pub fn propagate(field: &ComplexField, tf: &TransferFunction) -> Result<ComplexField> {
    filtered(field, tf, false, true)
}

/// As [`propagate`], but returns the full padded grid instead of cropping
/// back to the input size, exposing the energy that diffracts past the
/// original window.
pub fn propagate_uncropped(field: &ComplexField, tf: &TransferFunction) -> Result<ComplexField> {
    filtered(field, tf, false, false)
}

/// Apply the adjoint (conjugate-spectrum) propagator. Used by the
/// backward pass; equals propagation by `-distance` through the passband.
pub(crate) fn propagate_adjoint(field: &ComplexField, tf: &TransferFunction) -> Result<ComplexField> {
    filtered(field, tf, true, true)
}

fn filtered(
    field: &ComplexField,
    tf: &TransferFunction,
    conjugate: bool,
    crop: bool,
) -> Result<ComplexField> {
    field.check_same_grid(tf.grid_n, tf.pitch)?;
    let n = tf.grid_n;
    let np = tf.padded_n;
    let offset = (np - n) / 2;
    let scale = 1.0 / (np * np) as f64; // FFTW leaves both passes unnormalised

    let values = with_workspace(np, |ws| {
        ws.a.fill(Complex64::new(0.0, 0.0));
        for (r, row) in field.values().rows().into_iter().enumerate() {
            let start = (r + offset) * np + offset;
            ws.a[start..start + n].copy_from_slice(row.as_slice().expect("row-major field"));
        }
        ws.forward();
        let spectrum = tf.spectrum.as_slice().expect("row-major spectrum");
        if conjugate {
            for (v, h) in ws.b.iter_mut().zip(spectrum) {
                *v *= h.conj();
            }
        } else {
            for (v, h) in ws.b.iter_mut().zip(spectrum) {
                *v *= h;
            }
        }
        ws.inverse();
        if crop {
            Array2::from_shape_fn((n, n), |(r, c)| {
                ws.a[(r + offset) * np + (c + offset)] * scale
            })
        } else {
            Array2::from_shape_fn((np, np), |(r, c)| ws.a[r * np + c] * scale)
        }
    });

    Ok(ComplexField::new_unchecked(values, tf.pitch))
}

/// Largest grid the direct-sum oracle accepts; the O(n^4) cost explodes
/// beyond this.
pub const RS_DIRECT_MAX_N: usize = 128;

/// Direct summation of the first Rayleigh-Sommerfeld diffraction integral:
///
/// `u'(i) = sum_k u(k) * (d / r^2) * (1/(2 pi r) + 1/(j lambda)) * exp(j 2 pi r / lambda) * pitch^2`
///
/// with `r` the distance from source sample `k` to destination sample `i`.
/// No padding, no FFT, no band limit: an independent oracle for
/// [`propagate`], quartic in grid size and therefore capped at
/// [`RS_DIRECT_MAX_N`].
pub fn rs_direct(field: &ComplexField, distance: f64, wavelength: f64) -> Result<ComplexField> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::Config(format!(
            "propagation distance must be positive and finite, got {distance}"
        )));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::Config(format!(
            "wavelength must be positive and finite, got {wavelength}"
        )));
    }
    let n = field.n();
    if n > RS_DIRECT_MAX_N {
        return Err(Error::Config(format!(
            "rs_direct is O(n^4); grids above {RS_DIRECT_MAX_N} are refused, got {n}"
        )));
    }
    let pitch = field.pitch();

    // The kernel depends only on the index offset, so tabulate it once over
    // (2n-1)^2 offsets instead of evaluating exp() for all n^4 pairs.
    let table_side = 2 * n - 1;
    let mut kernel = Array2::from_elem((table_side, table_side), Complex64::new(0.0, 0.0));
    for dr in 0..table_side {
        for dc in 0..table_side {
            let dy = (dr as f64 - (n - 1) as f64) * pitch;
            let dx = (dc as f64 - (n - 1) as f64) * pitch;
            let r = (dx * dx + dy * dy + distance * distance).sqrt();
            let obliquity = distance / (r * r);
            let amplitude = Complex64::new(
                1.0 / (2.0 * std::f64::consts::PI * r),
                -1.0 / wavelength, // 1/(j lambda)
            );
            let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r / wavelength);
            kernel[[dr, dc]] = obliquity * amplitude * phase * pitch * pitch;
        }
    }

    let src = field.values();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            (0..n)
                .map(|c| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for sr in 0..n {
                        for sc in 0..n {
                            acc += src[[sr, sc]] * kernel[[r + n - 1 - sr, c + n - 1 - sc]];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let values = Array2::from_shape_fn((n, n), |(r, c)| rows[r][c]);
    Ok(ComplexField::new_unchecked(values, pitch))
}

/// Relative L2 distance `||a - b|| / ||b||`, the agreement measure used when
/// cross-checking propagators.
pub fn relative_l2_error(a: &ComplexField, b: &ComplexField) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (x, y) in a.values().iter().zip(b.values().iter()) {
        diff += (x - y).norm_sqr();
        norm += y.norm_sqr();
    }
    (diff / norm).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SPEED_OF_LIGHT;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(grid_n: usize, pitch: f64, pad_factor: usize) -> OpticalConfig {
        let mut cfg = OpticalConfig::new(400e9, grid_n, pitch, 1, 0.03).unwrap();
        cfg.pad_factor = pad_factor;
        cfg
    }

    fn random_field(n: usize, pitch: f64, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = Array2::from_shape_fn((n, n), |_| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        ComplexField::new(values, pitch).unwrap()
    }

    #[test]
    fn on_axis_term_is_plane_wave_phase() {
        let cfg = cfg(64, 0.4e-3, 2);
        let lambda = cfg.wavelength();
        let d = 0.03;
        let tf = make_transfer_function(&cfg, d, lambda).unwrap();
        let expected = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * d / lambda);
        assert!((tf.spectrum()[[0, 0]] - expected).norm() < 1e-12);
    }

    #[test]
    fn passband_has_unit_modulus() {
        let cfg = cfg(64, 0.4e-3, 2);
        let tf = make_transfer_function(&cfg, 0.03, cfg.wavelength()).unwrap();
        let mut passband = 0usize;
        for h in tf.spectrum().iter() {
            let m = h.norm();
            assert!(m == 0.0 || (m - 1.0).abs() <= 1e-12);
            if m > 0.0 {
                passband += 1;
            }
        }
        // Sanity: a healthy passband remains.
        assert!(passband > 100);
    }

    #[test]
    fn evanescent_corner_is_zeroed() {
        // pitch 0.4 mm at 400 GHz: per-axis Nyquist (1250 /m) is below
        // 1/lambda (~1334 /m), but the grid corner at sqrt(2)*1250 /m is
        // evanescent. A tiny distance keeps the band limit out of the way so
        // the corner zero can only come from the evanescent cut.
        let cfg = cfg(64, 0.4e-3, 2);
        let lambda = cfg.wavelength();
        let tf = make_transfer_function(&cfg, 1e-4, lambda).unwrap();
        let np = tf.padded_n();
        // Bin np/2 is the (positive) Nyquist frequency on each axis.
        let f_nyq = 1.0 / (2.0 * 0.4e-3);
        let f_limit = 1.0
            / (lambda * ((2.0 * 1e-4 / (np as f64 * 0.4e-3)).powi(2) + 1.0).sqrt());
        assert!(f_nyq < f_limit, "test premise: corner survives band limit");
        assert!(2.0 * f_nyq * f_nyq > 1.0 / (lambda * lambda));
        assert_eq!(tf.spectrum()[[np / 2, np / 2]], Complex64::new(0.0, 0.0));
        // On-axis bins at the same |f| are still propagating.
        assert!(tf.spectrum()[[np / 2, 0]].norm() > 0.9);
    }

    #[test]
    fn identity_transfer_reproduces_input() {
        let field = random_field(48, 0.4e-3, 3);
        let tf = TransferFunction::identity(48, 2, 0.4e-3, 1.0);
        let out = propagate(&field, &tf).unwrap();
        assert!(relative_l2_error(&out, &field) <= 1e-12);
    }

    #[test]
    fn fully_propagating_step_conserves_padded_power() {
        // pitch ~ lambda puts the whole grid spectrum inside the propagating
        // region, and a short hop keeps the band limit above grid Nyquist:
        // the transfer function is then pure phase on every bin.
        let lambda = SPEED_OF_LIGHT / 400e9;
        let cfg = cfg(64, 7.5e-4, 2);
        let tf = make_transfer_function(&cfg, 5e-4, lambda).unwrap();
        for h in tf.spectrum().iter() {
            assert!((h.norm() - 1.0).abs() <= 1e-12, "bin should be pure phase");
        }
        let field = ComplexField::gaussian_beam(64, 7.5e-4, 6e-3).unwrap();
        let out = propagate_uncropped(&field, &tf).unwrap();
        assert_eq!(out.n(), 128);
        let rel = (out.power() - field.power()).abs() / field.power();
        assert!(rel <= 1e-9, "padded-grid power drifted by {rel:e}");
    }

    #[test]
    fn propagation_is_linear() {
        let cfg = cfg(32, 0.4e-3, 2);
        let tf = make_transfer_function(&cfg, 0.02, cfg.wavelength()).unwrap();
        let u = random_field(32, 0.4e-3, 7);
        let v = random_field(32, 0.4e-3, 8);
        let a = Complex64::new(0.7, -1.3);
        let b = Complex64::new(-0.2, 0.4);

        let combined = propagate(&u.scaled(a).add(&v.scaled(b)).unwrap(), &tf).unwrap();
        let separate = propagate(&u, &tf)
            .unwrap()
            .scaled(a)
            .add(&propagate(&v, &tf).unwrap().scaled(b))
            .unwrap();
        assert!(relative_l2_error(&combined, &separate) <= 1e-12);
    }

    #[test]
    fn conjugate_spectrum_inverts_propagation() {
        // With every bin propagating and inside the band limit, H * conj(H)
        // is exactly one, so a forward/backward pair must return the input.
        let lambda = SPEED_OF_LIGHT / 400e9;
        let cfg = cfg(64, 7.5e-4, 1);
        let tf = make_transfer_function(&cfg, 5e-3, lambda).unwrap();
        let field = random_field(64, 7.5e-4, 21);
        let there = propagate(&field, &tf).unwrap();
        let back = propagate(&there, &tf.conjugated()).unwrap();
        assert!(relative_l2_error(&back, &field) <= 1e-9);
    }

    #[test]
    fn propagate_rejects_mismatched_fields() {
        let cfg = cfg(32, 0.4e-3, 2);
        let tf = make_transfer_function(&cfg, 0.03, cfg.wavelength()).unwrap();
        let wrong_size = random_field(16, 0.4e-3, 1);
        assert!(propagate(&wrong_size, &tf).is_err());
        let wrong_pitch = random_field(32, 0.5e-3, 1);
        assert!(propagate(&wrong_pitch, &tf).is_err());
    }

    #[test]
    fn rs_direct_single_source_matches_kernel() {
        let n = 16;
        let pitch = 0.4e-3;
        let lambda = SPEED_OF_LIGHT / 400e9;
        let d = 0.01;
        let mut values = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
        values[[5, 9]] = Complex64::new(1.0, 0.0);
        let field = ComplexField::new(values, pitch).unwrap();
        let out = rs_direct(&field, d, lambda).unwrap();

        // On top of the source the kernel reduces to its on-axis value.
        let expected = (d / (d * d))
            * Complex64::new(1.0 / (2.0 * std::f64::consts::PI * d), -1.0 / lambda)
            * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * d / lambda)
            * pitch
            * pitch;
        assert!((out.values()[[5, 9]] - expected).norm() < 1e-12 * expected.norm());

        // One sample sideways, r grows accordingly.
        let r = (pitch * pitch + d * d).sqrt();
        let expected_side = (d / (r * r))
            * Complex64::new(1.0 / (2.0 * std::f64::consts::PI * r), -1.0 / lambda)
            * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r / lambda)
            * pitch
            * pitch;
        assert!((out.values()[[5, 10]] - expected_side).norm() < 1e-12 * expected_side.norm());
    }

    #[test]
    fn rs_direct_of_dark_field_is_dark() {
        let field = ComplexField::zeros(16, 0.4e-3).unwrap();
        let out = rs_direct(&field, 0.01, 7.5e-4).unwrap();
        assert_eq!(out.power(), 0.0);
    }

    #[test]
    fn rs_direct_refuses_large_grids() {
        let field = ComplexField::zeros(130, 0.4e-3).unwrap();
        assert!(rs_direct(&field, 0.01, 7.5e-4).is_err());
    }

    #[test]
    fn asm_matches_rayleigh_sommerfeld_oracle() {
        // Small version of the acceptance cross-check: a Gaussian beam a few
        // wavelengths across, propagated a couple of centimetres.
        let grid_n = 32;
        let pitch = 0.4e-3;
        let cfg = cfg(grid_n, pitch, 2);
        let lambda = cfg.wavelength();
        let d = 0.01;
        let beam = ComplexField::gaussian_beam(grid_n, pitch, 3.2e-3).unwrap();

        let tf = make_transfer_function(&cfg, d, lambda).unwrap();
        let fast = propagate(&beam, &tf).unwrap();
        let slow = rs_direct(&beam, d, lambda).unwrap();
        let err = relative_l2_error(&fast, &slow);
        assert!(err <= 0.05, "ASM vs direct sum disagree: {err:.4}");
    }
}
