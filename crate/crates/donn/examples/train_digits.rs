//! Train a small diffractive classifier end to end and save a checkpoint.
//!
//! Uses MNIST from `data/mnist/` when present (see `scripts/fetch_mnist.sh`);
//! otherwise falls back to a synthetic ten-class blob set so the example
//! always runs.
//!
//!     cargo run --release --example train_digits

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use donn::checkpoint::{save_checkpoint, CheckpointMeta};
use donn::mnist::{load_mnist, LabeledImage, IMAGE_PIXELS};
use donn::train::train_with_progress;
use donn::{init_model, OpticalConfig, TrainConfig};

/// Blobby synthetic digits: class k lights up a kth patch of the image.
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
    let (train_set, test_set, source) = match (
        load_mnist(
            "data/mnist/train-images-idx3-ubyte",
            "data/mnist/train-labels-idx1-ubyte",
        ),
        load_mnist(
            "data/mnist/t10k-images-idx3-ubyte",
            "data/mnist/t10k-labels-idx1-ubyte",
        ),
    ) {
        (Ok(mut tr), Ok(mut te)) => {
            tr.truncate(2000);
            te.truncate(500);
            (tr, te, "MNIST")
        }
        _ => (synthetic_set(400, 1), synthetic_set(100, 2), "synthetic blobs"),
    };
    println!(
        "training on {} {} images, testing on {}",
        train_set.len(),
        source,
        test_set.len()
    );

    let cfg = OpticalConfig::new(400e9, 64, 4e-4, 3, 0.03)?;
    let train_cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 4,
        batch_size: 32,
        seed: 42,
        ..TrainConfig::default()
    };
    let model = init_model(&cfg, train_cfg.seed)?;
    let (model, history) = train_with_progress(model, &train_set, &test_set, &train_cfg, |rec| {
        println!(
            "epoch {}  train loss {:.4}  train acc {:.4}  test acc {:.4}",
            rec.epoch,
            rec.train_loss,
            rec.train_accuracy,
            rec.test_accuracy.unwrap_or(f64::NAN)
        );
    })?;

    let out = std::env::temp_dir().join("donn_train_digits");
    std::fs::create_dir_all(&out).expect("create output dir");
    let ckpt = out.join("checkpoint.donn");
    save_checkpoint(
        &model,
        &CheckpointMeta {
            seed: train_cfg.seed,
            noise_std: train_cfg.noise_std,
            epochs_completed: train_cfg.epochs,
        },
        &ckpt,
    )?;
    history.write_csv(out.join("history.csv"))?;
    println!("checkpoint and history written to {}", out.display());
    Ok(())
}
