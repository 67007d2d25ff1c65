//! Model persistence.
//!
//! A checkpoint is a directory holding `meta.json` (architecture and format
//! version) and `weights.bin` (every persistent value as row-major 64-bit
//! little-endian floats, in the order [`GnnModel::state_slices`] yields
//! them). Batch normalization running statistics travel with the weights, so
//! a reloaded model evaluates exactly like the saved one.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::agg::AggKind;
use super::model::{GnnModel, GnnModelConfig, TaskKind};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointMeta {
    version: u32,
    kind: String,
    task: String,
    in_dim: usize,
    hidden_dim: usize,
    out_dim: usize,
    num_layers: usize,
    dropout: f64,
    batch_norm: bool,
    num_values: usize,
}

fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

pub fn save_checkpoint<S: Scalar>(model: &GnnModel<S>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let slices = model.state_slices();
    let num_values: usize = slices.iter().map(|s| s.len()).sum();
    let meta = CheckpointMeta {
        version: CHECKPOINT_VERSION,
        kind: model.config.kind.as_str().to_string(),
        task: model.config.task.as_str().to_string(),
        in_dim: model.config.in_dim,
        hidden_dim: model.config.hidden_dim,
        out_dim: model.config.out_dim,
        num_layers: model.config.num_layers,
        dropout: model.config.dropout,
        batch_norm: model.config.batch_norm,
        num_values,
    };
    let meta_path = dir.join("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("weights.bin"))?);
    for slice in slices {
        for &v in slice {
            w.write_all(&v.to_f64_exact().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<S: Scalar>(dir: &Path) -> Result<GnnModel<S>> {
    let meta_path = dir.join("meta.json");
    let meta: CheckpointMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)
        .map_err(|e| format_err(&meta_path, e.to_string()))?;
    if meta.version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: meta_path.display().to_string(),
            found: meta.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let config = GnnModelConfig {
        kind: AggKind::parse(&meta.kind)?,
        task: TaskKind::parse(&meta.task)?,
        in_dim: meta.in_dim,
        hidden_dim: meta.hidden_dim,
        out_dim: meta.out_dim,
        num_layers: meta.num_layers,
        dropout: meta.dropout,
        batch_norm: meta.batch_norm,
    };
    // The initializer draws are overwritten below; any seed works.
    let mut model: GnnModel<S> = GnnModel::new(config, &mut Rng::new(0))?;

    let bin_path = dir.join("weights.bin");
    let bytes = fs::read(&bin_path)?;
    let mut slices = model.state_slices_mut();
    let num_values: usize = slices.iter().map(|s| s.len()).sum();
    if num_values != meta.num_values {
        return Err(format_err(
            &meta_path,
            format!(
                "architecture holds {num_values} values but metadata declares {}",
                meta.num_values
            ),
        ));
    }
    if bytes.len() != num_values * 8 {
        return Err(format_err(
            &bin_path,
            format!(
                "expected {} bytes for {num_values} floats, found {}",
                num_values * 8,
                bytes.len()
            ),
        ));
    }
    let mut chunks = bytes.chunks_exact(8);
    for slice in &mut slices {
        for v in slice.iter_mut() {
            let chunk = chunks.next().expect("length checked above");
            *v = S::from_f64_lossy(f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")));
        }
    }
    Ok(model)
}
