//! Plain-text model files.
//!
//! ```text
//! fdxsic-mlp 1
//! layers 20 2 2
//! hidden sigmoid_sym
//! <one parameter per line, in MlpParams layout order>
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{Activation, MlpParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "fdxsic-mlp";

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
}

fn format_err(line: usize, reason: impl Into<String>) -> ModelFileError {
    ModelFileError::Format {
        line,
        reason: reason.into(),
    }
}

pub fn model_to_string(params: &MlpParams) -> String {
    let mut out = format!("{MAGIC} {MODEL_FORMAT_VERSION}\nlayers");
    for s in params.layer_sizes() {
        out.push_str(&format!(" {s}"));
    }
    out.push_str(&format!("\nhidden {}\n", params.hidden_activation()));
    for v in params.values() {
        // Display for f64 prints the shortest string that round-trips.
        out.push_str(&format!("{v}\n"));
    }
    out
}

pub fn model_from_str(text: &str) -> Result<MlpParams, ModelFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| lines.next().ok_or_else(|| format_err(0, format!("missing {what}")));

    let (n, header) = next("header")?;
    match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        [m, v] if *m == MAGIC => {
            let v: u32 = v.parse().map_err(|_| format_err(n, "bad version"))?;
            if v != MODEL_FORMAT_VERSION {
                return Err(format_err(n, format!("unsupported version {v}")));
            }
        }
        _ => return Err(format_err(n, format!("expected '{MAGIC} <version>'"))),
    }

    let (n, layers) = next("layers line")?;
    let mut words = layers.split_whitespace();
    if words.next() != Some("layers") {
        return Err(format_err(n, "expected 'layers ...'"));
    }
    let sizes = words
        .map(|w| w.parse::<usize>().map_err(|_| format_err(n, format!("bad layer size '{w}'"))))
        .collect::<Result<Vec<_>, _>>()?;

    let (n, hidden) = next("hidden line")?;
    let hidden: Activation = hidden
        .strip_prefix("hidden ")
        .ok_or_else(|| format_err(n, "expected 'hidden <activation>'"))?
        .trim()
        .parse()
        .map_err(|e: String| format_err(n, e))?;

    let mut values = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| format_err(n, format!("bad parameter '{line}'")))?;
        if !v.is_finite() {
            return Err(format_err(n, "non-finite parameter"));
        }
        values.push(v);
    }
    MlpParams::from_values(&sizes, hidden, values).map_err(|e| format_err(0, e.to_string()))
}

pub fn write_model(path: &Path, params: &MlpParams) -> Result<(), ModelFileError> {
    fs::write(path, model_to_string(params)).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_model(path: &Path) -> Result<MlpParams, ModelFileError> {
    let text = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_str(&text)
}
