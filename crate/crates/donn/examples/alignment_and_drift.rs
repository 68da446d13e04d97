//! Hardware errors that don't touch the masks at all: layer-spacing
//! perturbation and source-frequency drift. Both reuse the printed heights
//! and only change the optics around them.
//!
//!     cargo run --release --example alignment_and_drift

use donn::error_models::{perturb_spacing, shift_frequency, SpacingSpec};
use donn::{evaluate, init_model, Model, OpticalConfig};
use donn::input::Illumination;
use donn::mnist::{LabeledImage, IMAGE_PIXELS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic_set(count: usize, seed: u64) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let label = (i % 10) as u8;
            let mut pixels = [0u8; IMAGE_PIXELS];
            let cx = 4 + (label as usize % 5) * 5;
            let cy = 7 + (label as usize / 5) * 12;
            for r in 0..28 {
                for c in 0..28 {
                    let d2 = (r as i32 - cy as i32).pow(2) + (c as i32 - cx as i32).pow(2);
                    if d2 < 16 {
                        pixels[r * 28 + c] = 255 - rng.gen_range(0..40);
                    }
                }
            }
            LabeledImage { pixels, label }
        })
        .collect()
}

fn main() -> donn::Result<()> {
    let cfg = OpticalConfig::new(400e9, 48, 4e-4, 3, 0.03)?;
    let test_set = synthetic_set(200, 2);
    let model = {
        // A quickly trained model is enough to show the effects.
        let train_set = synthetic_set(600, 1);
        let tc = donn::TrainConfig {
            learning_rate: 0.1,
            epochs: 4,
            batch_size: 32,
            eval_every: 0,
            ..Default::default()
        };
        donn::train(init_model(&cfg, 42)?, &train_set, &[], &tc)?.0
    };
    let illum = Illumination::default();
    let baseline = evaluate(&model, &test_set, illum)?.accuracy;
    println!("nominal accuracy: {baseline:.3}");

    // Spacing misalignment: every gap redrawn uniformly within +/- 1 mm.
    println!("\nlayer spacing drawn from [29, 31] mm (nominal 30):");
    for seed in 0..4 {
        let spec = SpacingSpec::UniformRange {
            lo: 0.029,
            hi: 0.031,
            seed,
        };
        let perturbed_cfg = perturb_spacing(model.cfg(), &spec)?;
        let perturbed = Model::new(
            perturbed_cfg,
            model.masks().to_vec(),
            model.layout().clone(),
        )?;
        let acc = evaluate(&perturbed, &test_set, illum)?.accuracy;
        println!("  draw {seed}: accuracy {acc:.3}");
    }

    // Source drift: the masks were printed for 400 GHz; the source moved.
    println!("\nsource frequency drift (heights fixed):");
    for &ghz in &[392.0, 396.0, 400.0, 404.0, 408.0] {
        let shifted = shift_frequency(&model, ghz * 1e9)?;
        let acc = evaluate(&shifted, &test_set, illum)?.accuracy;
        println!("  {ghz:.0} GHz: accuracy {acc:.3}");
    }
    Ok(())
}
