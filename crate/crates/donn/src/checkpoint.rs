//! Model checkpoints: a one-line JSON header followed by raw mask data.
//!
//! The header (UTF-8 JSON, terminated by `\n`) carries the version, the
//! optical configuration, the detector layout, training metadata, and the
//! payload size. The payload is every mask's phases as little-endian `f64`,
//! layer-major then row-major. `f64 -> bytes` is exact in both directions
//! and the JSON floats use shortest-round-trip formatting, so
//! save -> load -> save reproduces the file byte for byte.

use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::OpticalConfig;
use crate::detector::DetectorLayout;
use crate::error::{Error, Result};
use crate::mask::PhaseMask;
use crate::model::Model;

/// Format version this build writes and reads.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Provenance recorded alongside the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    /// Master training seed.
    pub seed: u64,
    /// Weight-noise std the model was trained with (0 = plain training).
    pub noise_std: f64,
    /// Number of completed training epochs.
    pub epochs_completed: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: OpticalConfig,
    layout: DetectorLayout,
    metadata: CheckpointMeta,
    payload_bytes: usize,
}

/// Write a model (and its training metadata) to `path`.
pub fn save_checkpoint(model: &Model, meta: &CheckpointMeta, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let n = model.cfg().grid_n;
    let payload_bytes = model.cfg().layer_count * n * n * 8;
    let header = Header {
        version: CHECKPOINT_VERSION,
        config: model.cfg().clone(),
        layout: model.layout().clone(),
        metadata: meta.clone(),
        payload_bytes,
    };
    let mut out = serde_json::to_vec(&header).map_err(|e| Error::Format {
        what: "checkpoint header",
        detail: e.to_string(),
    })?;
    out.push(b'\n');
    out.reserve(payload_bytes);
    for mask in model.masks() {
        for phase in mask.phases().iter() {
            out.extend_from_slice(&phase.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Read a checkpoint back into a validated model.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Model, CheckpointMeta)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let newline = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Format {
            what: "checkpoint",
            detail: "no newline-terminated header found".into(),
        })?;
    let header: Header = serde_json::from_slice(&bytes[..newline]).map_err(|e| Error::Format {
        what: "checkpoint header",
        detail: e.to_string(),
    })?;
    if header.version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            expected: CHECKPOINT_VERSION,
            found: header.version,
        });
    }
    header.config.validate()?;

    let payload = &bytes[newline + 1..];
    let n = header.config.grid_n;
    let expected = header.config.layer_count * n * n * 8;
    if header.payload_bytes != expected || payload.len() != expected {
        return Err(Error::PayloadLength {
            expected,
            found: payload.len(),
        });
    }

    let mut masks = Vec::with_capacity(header.config.layer_count);
    for layer in 0..header.config.layer_count {
        let offset = layer * n * n * 8;
        let mut phases = Array2::zeros((n, n));
        for (i, p) in phases.iter_mut().enumerate() {
            let at = offset + i * 8;
            *p = f64::from_le_bytes(payload[at..at + 8].try_into().unwrap());
        }
        masks.push(PhaseMask::new(phases)?);
    }
    let model = Model::new(header.config, masks, header.layout)?;
    Ok((model, header.metadata))
}
