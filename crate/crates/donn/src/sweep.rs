//! Robustness sweeps: evaluate models across a grid of hardware error
//! settings, with repeats, and serialise the results as CSV.
//!
//! Every cell (model, value, repeat) derives its own seed from the master
//! seed via [`derive_seed`], so any single cell can be reproduced in
//! isolation and the full table is byte-identical across runs and across
//! worker counts.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::error_models::{ErrorSpec, SpacingSpec};
use crate::input::Illumination;
use crate::mnist::LabeledImage;
use crate::model::Model;
use crate::seeds::derive_seed;
use crate::train::evaluate;

/// Which hardware error the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    PhaseNoise,
    ZQuantize,
    Frequency,
    Spacing,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::PhaseNoise => "phase-noise",
            SweepKind::ZQuantize => "zquant",
            SweepKind::Frequency => "frequency",
            SweepKind::Spacing => "spacing",
        })
    }
}

impl FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase-noise" => Ok(SweepKind::PhaseNoise),
            "zquant" => Ok(SweepKind::ZQuantize),
            "frequency" => Ok(SweepKind::Frequency),
            "spacing" => Ok(SweepKind::Spacing),
            other => Err(Error::Format {
                what: "sweep kind",
                detail: format!(
                    "unknown kind {other:?} (expected phase-noise, zquant, frequency or spacing)"
                ),
            }),
        }
    }
}

/// One setting of the swept parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    /// Plain scalar: noise std in radians, height step in metres, frequency
    /// in hertz, or a uniform layer spacing in metres.
    Scalar(f64),
    /// Spacing sweeps only: every gap drawn uniformly from `[lo, hi]`,
    /// freshly per repeat.
    RandomSpacing { lo: f64, hi: f64 },
}

impl SweepValue {
    /// The `param` column label. Contains no commas, so it is CSV-safe.
    pub fn label(&self) -> String {
        match self {
            SweepValue::Scalar(v) => v.to_string(),
            SweepValue::RandomSpacing { lo, hi } => format!("random:{lo}:{hi}"),
        }
    }

    /// Parse a CLI/CSV value token: either a float or `random:lo:hi`.
    pub fn parse(token: &str) -> Result<SweepValue> {
        if let Some(rest) = token.strip_prefix("random:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 2 {
                return Err(Error::Format {
                    what: "sweep value",
                    detail: format!("expected random:LO:HI, got {token:?}"),
                });
            }
            let lo = parse_float(parts[0])?;
            let hi = parse_float(parts[1])?;
            Ok(SweepValue::RandomSpacing { lo, hi })
        } else {
            Ok(SweepValue::Scalar(parse_float(token)?))
        }
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Format {
        what: "sweep value",
        detail: format!("not a number: {s:?}"),
    })
}

/// Sweep specification.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub values: Vec<SweepValue>,
    /// Independent repeats per (model, value) cell.
    pub repeats: usize,
    pub master_seed: u64,
    pub illumination: Illumination,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("sweep needs at least one repeat".into()));
        }
        for v in &self.values {
            match (self.kind, v) {
                (SweepKind::PhaseNoise, SweepValue::Scalar(s)) if *s >= 0.0 => {}
                (SweepKind::ZQuantize, SweepValue::Scalar(s)) if *s > 0.0 => {}
                (SweepKind::Frequency, SweepValue::Scalar(s)) if *s > 0.0 => {}
                (SweepKind::Spacing, SweepValue::Scalar(s)) if *s > 0.0 => {}
                (SweepKind::Spacing, SweepValue::RandomSpacing { lo, hi })
                    if *lo > 0.0 && hi >= lo => {}
                (kind, v) => {
                    return Err(Error::Config(format!(
                        "value {} is not valid for a {kind} sweep",
                        v.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One evaluated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: String,
    pub param: String,
    pub repeat: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub mean_loss: f64,
}

/// Mean and sample standard deviation of accuracy over one cell's repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub model: String,
    pub param: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Full sweep output: per-repeat rows plus per-value aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Evaluate every (model, value, repeat) cell. Models are `(name, model)`
/// pairs; names label CSV rows and must therefore avoid commas.
pub fn run_sweep(
    models: &[(String, Model)],
    test_set: &[LabeledImage],
    cfg: &SweepConfig,
) -> Result<SweepReport> {
    cfg.validate()?;
    if models.is_empty() {
        return Err(Error::Config("sweep needs at least one model".into()));
    }
    for (name, _) in models {
        if name.is_empty() || name.contains(',') || name.contains('\n') {
            return Err(Error::Config(format!(
                "model name {name:?} cannot be used in CSV output"
            )));
        }
    }
    if test_set.is_empty() {
        return Err(Error::Config("sweep needs a non-empty test set".into()));
    }

    let mut rows = Vec::with_capacity(models.len() * cfg.values.len() * cfg.repeats);
    for (m, (name, model)) in models.iter().enumerate() {
        for (v, value) in cfg.values.iter().enumerate() {
            for repeat in 0..cfg.repeats {
                let seed = derive_seed(cfg.master_seed, m as u64, v as u64, repeat as u64);
                let spec = error_spec(cfg.kind, *value, seed, model)?;
                let perturbed = spec.apply(model)?;
                let result = evaluate(&perturbed, test_set, cfg.illumination)?;
                rows.push(SweepRow {
                    model: name.clone(),
                    param: value.label(),
                    repeat,
                    seed,
                    accuracy: result.accuracy,
                    mean_loss: result.mean_loss,
                });
            }
        }
    }
    let aggregates = compute_aggregates(&rows);
    Ok(SweepReport {
        kind: cfg.kind,
        rows,
        aggregates,
    })
}

fn error_spec(kind: SweepKind, value: SweepValue, seed: u64, model: &Model) -> Result<ErrorSpec> {
    Ok(match (kind, value) {
        (SweepKind::PhaseNoise, SweepValue::Scalar(std)) => ErrorSpec::PhaseGaussian { std, seed },
        (SweepKind::ZQuantize, SweepValue::Scalar(step_m)) => ErrorSpec::ZQuantize { step_m },
        (SweepKind::Frequency, SweepValue::Scalar(f)) => ErrorSpec::Frequency { new_frequency: f },
        (SweepKind::Spacing, SweepValue::Scalar(d)) => ErrorSpec::Spacing(SpacingSpec::Fixed(
            vec![d; model.cfg().spacings.len()],
        )),
        (SweepKind::Spacing, SweepValue::RandomSpacing { lo, hi }) => {
            ErrorSpec::Spacing(SpacingSpec::UniformRange { lo, hi, seed })
        }
        (kind, value) => {
            return Err(Error::Config(format!(
                "value {} is not valid for a {kind} sweep",
                value.label()
            )))
        }
    })
}

/// Group rows by (model, param) in first-seen order and compute the mean and
/// sample standard deviation of accuracy.
pub fn compute_aggregates(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut order: Vec<(String, String)> = Vec::new();
    for row in rows {
        let key = (row.model.clone(), row.param.clone());
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|(model, param)| {
            let accs: Vec<f64> = rows
                .iter()
                .filter(|r| r.model == model && r.param == param)
                .map(|r| r.accuracy)
                .collect();
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let std = if accs.len() > 1 {
                (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            Aggregate {
                model,
                param,
                mean_accuracy: mean,
                std_accuracy: std,
            }
        })
        .collect()
}

const CSV_HEADER: &str = "kind,param,model,repeat,seed,accuracy,mean_loss";

/// Render the report as CSV: a header line, one line per repeat, then one
/// `AGG` line per (model, param) cell carrying mean and std accuracy.
pub fn to_csv(report: &SweepReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            report.kind, r.param, r.model, r.repeat, r.seed, r.accuracy, r.mean_loss
        ));
    }
    for a in &report.aggregates {
        out.push_str(&format!(
            "{},{},{},AGG,,{},{}\n",
            report.kind, a.param, a.model, a.mean_accuracy, a.std_accuracy
        ));
    }
    out
}

/// Parse CSV produced by [`to_csv`] back into a report.
pub fn from_csv(text: &str) -> Result<SweepReport> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format {
        what: "sweep CSV",
        detail: "empty file".into(),
    })?;
    if header != CSV_HEADER {
        return Err(Error::Format {
            what: "sweep CSV",
            detail: format!("unexpected header {header:?}"),
        });
    }

    let mut kind: Option<SweepKind> = None;
    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Format {
                what: "sweep CSV",
                detail: format!("line {}: expected 7 fields, got {}", lineno + 2, fields.len()),
            });
        }
        let line_kind: SweepKind = fields[0].parse()?;
        match kind {
            None => kind = Some(line_kind),
            Some(k) if k == line_kind => {}
            Some(k) => {
                return Err(Error::Format {
                    what: "sweep CSV",
                    detail: format!("mixed sweep kinds {k} and {line_kind}"),
                })
            }
        }
        let field_f64 = |i: usize| -> Result<f64> {
            fields[i].parse::<f64>().map_err(|_| Error::Format {
                what: "sweep CSV",
                detail: format!("line {}: bad number {:?}", lineno + 2, fields[i]),
            })
        };
        if fields[3] == "AGG" {
            aggregates.push(Aggregate {
                model: fields[2].to_string(),
                param: fields[1].to_string(),
                mean_accuracy: field_f64(5)?,
                std_accuracy: field_f64(6)?,
            });
        } else {
            rows.push(SweepRow {
                model: fields[2].to_string(),
                param: fields[1].to_string(),
                repeat: fields[3].parse().map_err(|_| Error::Format {
                    what: "sweep CSV",
                    detail: format!("line {}: bad repeat {:?}", lineno + 2, fields[3]),
                })?,
                seed: fields[4].parse().map_err(|_| Error::Format {
                    what: "sweep CSV",
                    detail: format!("line {}: bad seed {:?}", lineno + 2, fields[4]),
                })?,
                accuracy: field_f64(5)?,
                mean_loss: field_f64(6)?,
            });
        }
    }
    let kind = kind.ok_or_else(|| Error::Format {
        what: "sweep CSV",
        detail: "no data rows".into(),
    })?;
    Ok(SweepReport {
        kind,
        rows,
        aggregates,
    })
}
