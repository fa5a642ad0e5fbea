//! Versioned text checkpoints for the Q-network and its optimiser.
//!
//! ```text
//! coverbot-ckpt v1
//! dims 82 64 3
//! <5507 parameters, one per line: W1 row-major, b1, W2 row-major, b2>
//! <5507 Adam first moments, same order>
//! <5507 Adam second moments, same order>
//! t <adam step count>
//! ```
//!
//! Floats are written in the shortest scientific form that parses back to
//! the same bits, so saving and loading is lossless.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::nn::{AdamState, DenseNet, HIDDEN, INPUT, OUTPUT, PARAM_COUNT};

pub const MAGIC: &str = "coverbot-ckpt v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unsupported checkpoint header {0:?}, expected {MAGIC:?}")]
    Version(String),
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("line {line}: malformed value {text:?}")]
    Malformed { line: usize, text: String },
}

pub fn to_string(net: &DenseNet, adam: &AdamState) -> String {
    let mut s = String::with_capacity(PARAM_COUNT * 3 * 24);
    s.push_str(MAGIC);
    s.push('\n');
    let _ = writeln!(s, "dims {INPUT} {HIDDEN} {OUTPUT}");
    for block in [net.params(), adam.first_moment(), adam.second_moment()] {
        for v in block {
            let _ = writeln!(s, "{v:e}");
        }
    }
    let _ = writeln!(s, "t {}", adam.t());
    s
}

/// Parses a checkpoint. The optimiser comes back with the default learning
/// rate; callers that train further set `learning_rate` themselves.
pub fn from_str(text: &str) -> Result<(DenseNet, AdamState), CheckpointError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((_, other)) => return Err(CheckpointError::Version(other.to_string())),
        None => return Err(CheckpointError::Version(String::new())),
    }
    let expected_dims = format!("dims {INPUT} {HIDDEN} {OUTPUT}");
    match lines.next() {
        Some((_, d)) if d == expected_dims => {}
        Some((_, d)) => {
            return Err(CheckpointError::Dimensions(format!(
                "header {d:?}, this build supports {expected_dims:?}"
            )))
        }
        None => return Err(CheckpointError::Dimensions("missing dims line".into())),
    }

    let mut values = Vec::with_capacity(3 * PARAM_COUNT);
    let mut t = None;
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        if t.is_some() {
            return Err(CheckpointError::Malformed {
                line,
                text: text.to_string(),
            });
        }
        if let Some(rest) = text.strip_prefix("t ") {
            t = Some(
                rest.trim()
                    .parse::<u64>()
                    .map_err(|_| CheckpointError::Malformed {
                        line,
                        text: text.to_string(),
                    })?,
            );
            continue;
        }
        let v: f64 = text.parse().map_err(|_| CheckpointError::Malformed {
            line,
            text: text.to_string(),
        })?;
        if !v.is_finite() {
            return Err(CheckpointError::Malformed {
                line,
                text: text.to_string(),
            });
        }
        values.push(v);
    }
    if values.len() != 3 * PARAM_COUNT {
        return Err(CheckpointError::Dimensions(format!(
            "expected {} values, found {}",
            3 * PARAM_COUNT,
            values.len()
        )));
    }
    let t = t.ok_or_else(|| CheckpointError::Dimensions("missing step count line".into()))?;
    let v = values.split_off(2 * PARAM_COUNT);
    let m = values.split_off(PARAM_COUNT);
    let net = DenseNet::from_params(values).expect("length checked");
    let adam =
        AdamState::from_parts(AdamState::DEFAULT_LEARNING_RATE, m, v, t).expect("length checked");
    Ok((net, adam))
}

pub fn save_checkpoint(
    path: &Path,
    net: &DenseNet,
    adam: &AdamState,
) -> Result<(), CheckpointError> {
    std::fs::write(path, to_string(net, adam)).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<(DenseNet, AdamState), CheckpointError> {
    let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_str(&text)
}
