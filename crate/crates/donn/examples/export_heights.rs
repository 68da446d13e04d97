//! From phases to printable plastic: convert a mask stack to height maps,
//! quantise them to a fabrication step, and measure what the rounding does
//! to the phases.
//!
//!     cargo run --release --example export_heights

use donn::error_models::{circular_phase_distance, phase_to_height, quantize_height};
use donn::{init_model, OpticalConfig};

fn main() -> donn::Result<()> {
    let cfg = OpticalConfig::new(400e9, 48, 4e-4, 3, 0.03)?;
    let wavelength = cfg.wavelength();
    let full_range = wavelength / (cfg.material_index - 1.0);
    println!(
        "wavelength {:.4} mm, refractive index {}, full height range {:.4} mm",
        wavelength * 1e3,
        cfg.material_index,
        full_range * 1e3
    );

    let model = init_model(&cfg, 5)?;
    let out = std::env::temp_dir().join("donn_export_heights");
    std::fs::create_dir_all(&out).expect("create output dir");

    for (i, mask) in model.masks().iter().enumerate() {
        let map = phase_to_height(mask, wavelength, cfg.material_index)?;
        let path = out.join(format!("layer_{i:02}_height_mm.csv"));
        let file = std::fs::File::create(&path).expect("create CSV");
        map.write_csv(std::io::BufWriter::new(file)).expect("write CSV");
    }
    println!("wrote {} height maps to {}", model.masks().len(), out.display());

    // Quantise to a few fabrication steps and report the worst phase error.
    for &step_mm in &[0.05, 0.1, 0.2, 0.4] {
        let step = step_mm * 1e-3;
        let quantised = quantize_height(&model, step)?;
        let mut worst = 0.0f64;
        for (a, b) in model.masks().iter().zip(quantised.masks()) {
            for (pa, pb) in a.phases().iter().zip(b.phases().iter()) {
                worst = worst.max(circular_phase_distance(*pa, *pb));
            }
        }
        let bound = std::f64::consts::PI * (cfg.material_index - 1.0) * step / wavelength;
        println!(
            "step {:.2} mm: worst phase error {:.4} rad (bound {:.4} rad)",
            step_mm, worst, bound
        );
    }
    Ok(())
}
