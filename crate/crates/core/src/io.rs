//! JSON file formats.
//!
//! - matrix: `{"n": 4, "entries": [[0, 1, 0.5], ...]}` with strictly upper
//!   triangle triples, or `{"rows": [[...], ...]}` with a full symmetric array.
//! - model: a matrix object with an optional `"h": [..]` field.
//! - basis: a JSON array whose items are matrix objects or paths (relative to
//!   the basis file) of matrix files.
//! - spins: a JSON array of `+1` / `-1`.
//! - vector: a JSON array of numbers.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::{validate_interaction, InteractionMatrix, MatrixFile, SquareMatrix};
use crate::model::{ExternalField, IsingSpec, SpinConfiguration};

/// Tolerance applied when a dense `rows` matrix is checked for symmetry.
pub const DENSE_SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Sparse { n: usize, entries: Vec<(usize, usize, f64)> },
    Dense { rows: Vec<Vec<f64>> },
}

impl MatrixRepr {
    fn into_matrix(self) -> Result<InteractionMatrix> {
        match self {
            MatrixRepr::Sparse { n, entries } => InteractionMatrix::from_upper_entries(n, &entries),
            MatrixRepr::Dense { rows } => {
                validate_interaction(&SquareMatrix::from_rows(&rows)?, DENSE_SYMMETRY_TOL)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelRepr {
    #[serde(flatten)]
    j: MatrixRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<Vec<f64>>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Writes pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_matrix(value: Value) -> Result<InteractionMatrix> {
    serde_json::from_value::<MatrixRepr>(value)?.into_matrix()
}

pub fn load_matrix(path: &Path) -> Result<InteractionMatrix> {
    read_json::<MatrixRepr>(path)?.into_matrix()
}

pub fn save_matrix(path: &Path, j: &InteractionMatrix) -> Result<()> {
    write_json(path, &MatrixFile::from(j.clone()))
}

pub fn parse_model(value: Value) -> Result<IsingSpec> {
    let repr: ModelRepr = serde_json::from_value(value)?;
    let j = repr.j.into_matrix()?;
    let h = match repr.h {
        Some(h) => ExternalField::new(h)?,
        None => ExternalField::zeros(j.dim()),
    };
    IsingSpec::new(j, h)
}

pub fn load_model(path: &Path) -> Result<IsingSpec> {
    parse_model(read_json(path)?)
}

pub fn save_model(path: &Path, spec: &IsingSpec) -> Result<()> {
    let h = spec.field().values();
    let repr = ModelRepr {
        j: MatrixRepr::Sparse {
            n: spec.dim(),
            entries: spec.interaction().upper_entries(),
        },
        h: h.iter().any(|&v| v != 0.0).then(|| h.to_vec()),
    };
    write_json(path, &repr)
}

pub fn load_basis(path: &Path) -> Result<Vec<InteractionMatrix>> {
    let items: Vec<Value> = read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    items
        .into_iter()
        .map(|item| match item {
            Value::String(p) => load_matrix(&dir.join(p)),
            other => parse_matrix(other),
        })
        .collect()
}

pub fn save_basis(path: &Path, basis: &[InteractionMatrix]) -> Result<()> {
    let files: Vec<MatrixFile> = basis.iter().cloned().map(MatrixFile::from).collect();
    write_json(path, &files)
}

pub fn load_spins(path: &Path) -> Result<SpinConfiguration> {
    read_json(path)
}

pub fn save_spins(path: &Path, x: &SpinConfiguration) -> Result<()> {
    let text = serde_json::to_string(x)?;
    fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    read_json(path)
}
