//! Render a sweep report CSV as an SVG chart.
//!
//!     cargo run --release --example plot_report [report.csv [out.svg]]
//!
//! Without arguments, renders a small built-in demo report.

use donn::chart::render_svg;
use donn::sweep::from_csv;

const DEMO: &str = "\
kind,param,model,repeat,seed,accuracy,mean_loss
phase-noise,0,clean,0,1,0.916,0.61
phase-noise,0,clean,1,2,0.914,0.62
phase-noise,0.2,clean,0,3,0.77,0.98
phase-noise,0.2,clean,1,4,0.79,0.95
phase-noise,0.4,clean,0,5,0.42,1.9
phase-noise,0.4,clean,1,6,0.47,1.8
phase-noise,0,noise-trained,0,7,0.905,0.66
phase-noise,0,noise-trained,1,8,0.903,0.67
phase-noise,0.2,noise-trained,0,9,0.88,0.72
phase-noise,0.2,noise-trained,1,10,0.89,0.71
phase-noise,0.4,noise-trained,0,11,0.83,0.84
phase-noise,0.4,noise-trained,1,12,0.85,0.81
phase-noise,0,clean,AGG,,0.915,0.0014142135623730963
phase-noise,0.2,clean,AGG,,0.78,0.014142135623730963
phase-noise,0.4,clean,AGG,,0.445,0.035355339059327376
phase-noise,0,noise-trained,AGG,,0.904,0.0014142135623730963
phase-noise,0.2,noise-trained,AGG,,0.885,0.0070710678118654745
phase-noise,0.4,noise-trained,AGG,,0.84,0.014142135623730963
";

fn main() -> donn::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let (csv, label) = match args.get(1) {
        Some(path) => (
            std::fs::read_to_string(path).map_err(|e| donn::Error::Io {
                path: path.into(),
                source: e,
            })?,
            path.clone(),
        ),
        None => (DEMO.to_string(), "built-in demo report".to_string()),
    };
    let report = from_csv(&csv)?;
    println!(
        "{}: {} rows, {} aggregates, kind {}",
        label,
        report.rows.len(),
        report.aggregates.len(),
        report.kind
    );

    let out = args
        .get(2)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("donn_report.svg"));
    let svg = render_svg(&report)?;
    std::fs::write(&out, svg).expect("write SVG");
    println!("chart written to {}", out.display());
    Ok(())
}
