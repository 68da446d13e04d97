//! Deterministic SVG rendering of sweep reports.
//!
//! The chart is a pure function of the parsed CSV: one series per model,
//! aggregate mean accuracy on the y axis, the swept parameter on the x axis,
//! and ±1 sample-std error bars. All coordinates are formatted with fixed
//! precision so rendering the same report twice yields identical bytes.

use crate::error::{Error, Result};
use crate::sweep::{Aggregate, SweepKind, SweepReport};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 65.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn x_axis_label(kind: SweepKind) -> &'static str {
    match kind {
        SweepKind::PhaseNoise => "phase noise std (rad)",
        SweepKind::ZQuantize => "height step (m)",
        SweepKind::Frequency => "source frequency (Hz)",
        SweepKind::Spacing => "layer spacing (m)",
    }
}

/// Short numeric label for axis ticks.
fn format_tick(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && (a >= 1e5 || a < 1e-2) {
        format!("{v:.3e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s.is_empty() { "0".into() } else { s.into() }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Parameter values in first-seen aggregate order, and the model names in
/// first-seen order.
fn axes(aggs: &[Aggregate]) -> (Vec<String>, Vec<String>) {
    let mut params: Vec<String> = Vec::new();
    let mut models: Vec<String> = Vec::new();
    for a in aggs {
        if !params.contains(&a.param) {
            params.push(a.param.clone());
        }
        if !models.contains(&a.model) {
            models.push(a.model.clone());
        }
    }
    (params, models)
}

/// Render the report as a standalone SVG string.
pub fn render_svg(report: &SweepReport) -> Result<String> {
    // Reports written by the sweep runner carry AGG rows; for a hand-trimmed
    // CSV with only per-repeat rows, derive the aggregates from those.
    let computed;
    let aggregates: &[Aggregate] = if report.aggregates.is_empty() {
        computed = crate::sweep::compute_aggregates(&report.rows);
        &computed
    } else {
        &report.aggregates
    };
    if aggregates.is_empty() {
        return Err(Error::Format {
            what: "sweep report",
            detail: "nothing to plot".into(),
        });
    }
    let (params, models) = axes(aggregates);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    // X scale: linear when every parameter is a plain number, otherwise
    // categorical with even spacing (covers random:lo:hi spacing sweeps).
    let numeric: Option<Vec<f64>> = params
        .iter()
        .map(|p| p.parse::<f64>().ok())
        .collect();
    let x_of: Vec<f64> = match &numeric {
        Some(vals) => {
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            vals.iter()
                .map(|v| MARGIN_LEFT + (v - lo) / span * plot_w)
                .collect()
        }
        None => params
            .iter()
            .enumerate()
            .map(|(i, _)| {
                MARGIN_LEFT + (i as f64 + 0.5) / params.len() as f64 * plot_w
            })
            .collect(),
    };

    // Y scale: cover every mean ± std with 5% headroom, clipped to [0, 1].
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for a in aggregates {
        y_lo = y_lo.min(a.mean_accuracy - a.std_accuracy);
        y_hi = y_hi.max(a.mean_accuracy + a.std_accuracy);
    }
    let pad = ((y_hi - y_lo) * 0.08).max(0.02);
    let y_lo = (y_lo - pad).max(0.0);
    let y_hi = (y_hi + pad).min(1.0);
    let y_span = if y_hi > y_lo { y_hi - y_lo } else { 1.0 };
    let y_of = |acc: f64| MARGIN_TOP + (y_hi - acc) / y_span * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"17\">{} sweep</text>\n",
        fmt(MARGIN_LEFT + plot_w / 2.0),
        report.kind
    ));

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = MARGIN_LEFT + plot_w;
    let y0 = MARGIN_TOP + plot_h;
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(x0), fmt(y0), fmt(x1), fmt(y0)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(x0), fmt(MARGIN_TOP), fmt(x0), fmt(y0)
    ));

    // Y ticks and horizontal grid.
    for i in 0..=4 {
        let acc = y_lo + y_span * i as f64 / 4.0;
        let y = y_of(acc);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(x0), fmt(y), fmt(x1), fmt(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            fmt(x0 - 8.0),
            fmt(y + 4.0),
            format_tick(acc)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"22\" y=\"{}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 22 {})\">test accuracy</text>\n",
        fmt(MARGIN_TOP + plot_h / 2.0),
        fmt(MARGIN_TOP + plot_h / 2.0)
    ));

    // X ticks.
    for (p, x) in params.iter().zip(&x_of) {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt(*x), fmt(y0), fmt(*x), fmt(y0 + 5.0)
        ));
        let label = match p.parse::<f64>() {
            Ok(v) => format_tick(v),
            Err(_) => p.clone(),
        };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt(*x),
            fmt(y0 + 20.0),
            label
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        fmt(MARGIN_LEFT + plot_w / 2.0),
        fmt(HEIGHT - 18.0),
        x_axis_label(report.kind)
    ));

    // One series per model.
    for (m, model) in models.iter().enumerate() {
        let colour = PALETTE[m % PALETTE.len()];
        let series: Vec<(&f64, &Aggregate)> = params
            .iter()
            .zip(&x_of)
            .filter_map(|(p, x)| {
                aggregates
                    .iter()
                    .find(|a| &a.model == model && &a.param == p)
                    .map(|a| (x, a))
            })
            .collect();
        let points: Vec<String> = series
            .iter()
            .map(|(x, a)| format!("{},{}", fmt(**x), fmt(y_of(a.mean_accuracy))))
            .collect();
        if points.len() > 1 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                points.join(" "),
                colour
            ));
        }
        for (x, a) in &series {
            if a.std_accuracy > 0.0 {
                let top = y_of(a.mean_accuracy + a.std_accuracy);
                let bot = y_of(a.mean_accuracy - a.std_accuracy);
                svg.push_str(&format!(
                    "<line x1=\"{x}\" y1=\"{top}\" x2=\"{x}\" y2=\"{bot}\" stroke=\"{c}\"/>\n\
                     <line x1=\"{xl}\" y1=\"{top}\" x2=\"{xr}\" y2=\"{top}\" stroke=\"{c}\"/>\n\
                     <line x1=\"{xl}\" y1=\"{bot}\" x2=\"{xr}\" y2=\"{bot}\" stroke=\"{c}\"/>\n",
                    x = fmt(**x),
                    xl = fmt(**x - 4.0),
                    xr = fmt(**x + 4.0),
                    top = fmt(top),
                    bot = fmt(bot),
                    c = colour
                ));
            }
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{}\"/>\n",
                fmt(**x),
                fmt(y_of(a.mean_accuracy)),
                colour
            ));
        }
        // Legend entry.
        let ly = MARGIN_TOP + 10.0 + m as f64 * 22.0;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            fmt(x1 + 16.0),
            fmt(ly),
            fmt(x1 + 44.0),
            fmt(ly),
            colour
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            fmt(x1 + 50.0),
            fmt(ly + 4.0),
            model
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
