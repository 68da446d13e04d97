//! Checkpoint anatomy: save a model, read the self-describing JSON header
//! back out of the file, and confirm the reload is bit-exact.
//!
//!     cargo run --release --example inspect_checkpoint

use donn::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use donn::{init_model, OpticalConfig};

fn main() -> donn::Result<()> {
    let cfg = OpticalConfig::new(400e9, 40, 4e-4, 3, 0.03)?;
    let model = init_model(&cfg, 11)?;
    let path = std::env::temp_dir().join("donn_inspect.donn");

    save_checkpoint(
        &model,
        &CheckpointMeta {
            seed: 11,
            noise_std: 0.3,
            epochs_completed: 0,
        },
        &path,
    )?;

    // The first line of the file is plain JSON; everything after it is the
    // little-endian f64 phase payload, layer-major.
    let bytes = std::fs::read(&path).expect("read checkpoint");
    let header_end = bytes.iter().position(|&b| b == b'\n').expect("header line");
    let header = String::from_utf8_lossy(&bytes[..header_end]);
    println!("header: {header}");
    println!(
        "payload: {} bytes ({} layers x {}x{} x 8)",
        bytes.len() - header_end - 1,
        cfg.layer_count,
        cfg.grid_n,
        cfg.grid_n
    );

    let (reloaded, meta) = load_checkpoint(&path)?;
    assert_eq!(meta.seed, 11);
    for (a, b) in model.masks().iter().zip(reloaded.masks()) {
        assert_eq!(a.phases(), b.phases(), "reload must be bit-exact");
    }
    println!("reload verified bit-exact ({} masks)", reloaded.masks().len());
    Ok(())
}
