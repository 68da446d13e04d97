//! Thin wrapper around FFTW for the square 2-D transforms used in
//! angular-spectrum propagation.
//!
//! Each thread keeps one [`Workspace`] per grid size: a forward/backward plan
//! pair plus two FFTW-aligned scratch buffers. Plans are created with
//! `FFTW_ESTIMATE`, which picks the algorithm deterministically from the
//! transform size alone, so results are bit-identical across runs and across
//! worker threads. Transforms are unnormalised in both directions; callers
//! fold the `1/n^2` factor into whichever pass suits them.

use std::cell::RefCell;
use std::collections::HashMap;

use fftw::array::AlignedVec;
use fftw::plan::{C2CPlan, C2CPlan64};
use fftw::types::{c64, Flag, Sign};

pub(crate) struct Workspace {
    fwd: C2CPlan64,
    inv: C2CPlan64,
    /// Spatial-domain buffer, `n * n` entries in row-major order.
    pub a: AlignedVec<c64>,
    /// Frequency-domain buffer, same layout.
    pub b: AlignedVec<c64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let shape = [n, n];
        let fwd = C2CPlan64::aligned(&shape, Sign::Forward, Flag::ESTIMATE)
            .expect("FFTW forward plan");
        let inv = C2CPlan64::aligned(&shape, Sign::Backward, Flag::ESTIMATE)
            .expect("FFTW backward plan");
        Workspace {
            fwd,
            inv,
            a: AlignedVec::new(n * n),
            b: AlignedVec::new(n * n),
        }
    }

    /// Unnormalised 2-D DFT of `a` into `b`.
    pub fn forward(&mut self) {
        self.fwd.c2c(&mut self.a, &mut self.b).expect("FFTW c2c");
    }

    /// Unnormalised inverse 2-D DFT of `b` into `a`.
    pub fn inverse(&mut self) {
        self.inv.c2c(&mut self.b, &mut self.a).expect("FFTW c2c");
    }
}

thread_local! {
    static WORKSPACES: RefCell<HashMap<usize, Workspace>> = RefCell::new(HashMap::new());
}

/// Run `f` with this thread's workspace for side length `n`, creating the
/// plans on first use.
pub(crate) fn with_workspace<R>(n: usize, f: impl FnOnce(&mut Workspace) -> R) -> R {
    WORKSPACES.with(|cell| {
        let mut map = cell.borrow_mut();
        let ws = map.entry(n).or_insert_with(|| Workspace::new(n));
        f(ws)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_recovers_input() {
        let n = 96;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let input: Vec<Complex64> = (0..n * n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();

        let output = with_workspace(n, |ws| {
            ws.a.copy_from_slice(&input);
            ws.forward();
            ws.inverse();
            let scale = 1.0 / (n * n) as f64;
            ws.a.iter().map(|v| v * scale).collect::<Vec<_>>()
        });

        for (x, y) in input.iter().zip(&output) {
            assert!((x - y).norm() < 1e-12, "{x} != {y}");
        }
    }

    #[test]
    fn dc_bin_is_plain_sum() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let input: Vec<Complex64> = (0..n * n)
            .map(|_| Complex64::new(rng.gen(), rng.gen()))
            .collect();
        let sum: Complex64 = input.iter().sum();

        let dc = with_workspace(n, |ws| {
            ws.a.copy_from_slice(&input);
            ws.forward();
            ws.b[0]
        });
        assert!((dc - sum).norm() < 1e-10);
    }

    #[test]
    fn workspaces_are_reused_per_size() {
        // Two calls at the same size must see the same buffers (the second
        // call observes data left behind by the first).
        with_workspace(8, |ws| ws.a[0] = c64::new(42.0, 0.0));
        let seen = with_workspace(8, |ws| ws.a[0]);
        assert_eq!(seen, c64::new(42.0, 0.0));
    }
}
