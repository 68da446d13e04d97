//! The core robustness story in miniature: train one network cleanly and a
//! second with weight-noise injection, then sweep phase noise over both and
//! chart how differently they degrade.
//!
//!     cargo run --release --example noise_injection_sweep
//!
//! Uses synthetic blob digits so it runs in seconds; swap in MNIST for the
//! real curves (see the `train` and `sweep` subcommands of the `donn` binary).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use donn::chart::render_svg;
use donn::input::Illumination;
use donn::mnist::{LabeledImage, IMAGE_PIXELS};
use donn::sweep::{from_csv, run_sweep, to_csv, SweepConfig, SweepKind, SweepValue};
use donn::{init_model, train, OpticalConfig, TrainConfig};

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
    let train_set = synthetic_set(600, 1);
    let test_set = synthetic_set(200, 2);
    let cfg = OpticalConfig::new(400e9, 48, 4e-4, 3, 0.03)?;

    let base = TrainConfig {
        learning_rate: 0.1,
        epochs: 5,
        batch_size: 32,
        eval_every: 0,
        seed: 42,
        ..TrainConfig::default()
    };

    println!("training the clean model...");
    let (clean, _) = train(init_model(&cfg, base.seed)?, &train_set, &[], &base)?;

    println!("training the noise-injected model (std 0.3 rad)...");
    let noisy_cfg = TrainConfig {
        noise_std: 0.3,
        ..base
    };
    let (robust, _) = train(init_model(&cfg, base.seed)?, &train_set, &[], &noisy_cfg)?;

    let sweep_cfg = SweepConfig {
        kind: SweepKind::PhaseNoise,
        values: [0.0, 0.15, 0.3, 0.45, 0.6]
            .iter()
            .map(|&v| SweepValue::Scalar(v))
            .collect(),
        repeats: 6,
        master_seed: 7,
        illumination: Illumination::default(),
    };
    let models = vec![("clean".to_string(), clean), ("noise-trained".to_string(), robust)];
    println!("sweeping phase noise over both models...");
    let report = run_sweep(&models, &test_set, &sweep_cfg)?;

    for agg in &report.aggregates {
        println!(
            "  {:13} @ std {:>4}: accuracy {:.3} +/- {:.3}",
            agg.model, agg.param, agg.mean_accuracy, agg.std_accuracy
        );
    }

    let out = std::env::temp_dir().join("donn_noise_injection");
    std::fs::create_dir_all(&out).expect("create output dir");
    let csv = to_csv(&report);
    std::fs::write(out.join("report.csv"), &csv).expect("write CSV");
    let svg = render_svg(&from_csv(&csv)?)?;
    std::fs::write(out.join("report.svg"), svg).expect("write SVG");
    println!("report and chart written to {}", out.display());
    Ok(())
}
