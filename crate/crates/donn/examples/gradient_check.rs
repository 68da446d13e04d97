//! Verify the analytic mask gradient against central finite differences on
//! a small random network.
//!
//!     cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use donn::detector::one_hot;
use donn::grad::{backward, fd_check};
use donn::input::{prepare_input, Illumination};
use donn::mnist::{LabeledImage, IMAGE_PIXELS};
use donn::{init_model, OpticalConfig};

fn main() -> donn::Result<()> {
    let cfg = OpticalConfig::new(400e9, 32, 4e-4, 3, 0.02)?;
    let model = init_model(&cfg, 7)?;

    // A deterministic pseudo-random probe image, classified as "3".
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut img = LabeledImage {
        pixels: [0u8; IMAGE_PIXELS],
        label: 3,
    };
    for p in img.pixels.iter_mut() {
        *p = rng.gen();
    }
    let input = prepare_input(&img, &cfg, Illumination::Gaussian { waist: None })?;
    let target = one_hot(img.label as usize)?;

    let pass = backward(&model, &input, &target)?;
    println!(
        "loss {:.6}, predicted class {}, largest gradient entry {:.3e}",
        pass.loss,
        pass.prediction.class,
        pass.gradient.max_abs()
    );

    // Probe 60 random mask entries with a two-sided finite difference.
    let mut entries = Vec::new();
    for _ in 0..60 {
        entries.push((
            rng.gen_range(0..cfg.layer_count),
            rng.gen_range(0..cfg.grid_n),
            rng.gen_range(0..cfg.grid_n),
        ));
    }
    let worst = fd_check(&model, &input, &target, &entries, 1e-6)?;
    println!(
        "max relative error over {} probed entries: {:.3e}",
        entries.len(),
        worst
    );
    assert!(worst < 1e-5, "analytic gradient disagrees with finite differences");
    println!("gradient check passed");
    Ok(())
}
