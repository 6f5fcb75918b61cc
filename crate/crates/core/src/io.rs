//! JSON file formats for states and observables.
//!
//! A state file is `{"dims": [...], "matrix": [[[re, im], ...], ...]}` with
//! rows in order. An observable file has the same `matrix` field plus an
//! optional `spectrum`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlations::Observable;
use crate::error::{Error, Result};
use crate::hermitian::{c, validate_density, CMatrix, DensityMatrix};

pub type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Rows,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ObservableFile {
    pub matrix: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
}

pub fn matrix_to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &Rows) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        Self {
            dims: rho.dims().to_vec(),
            matrix: matrix_to_rows(rho.matrix()),
        }
    }

    pub fn into_state(self) -> Result<DensityMatrix> {
        validate_density(matrix_from_rows(&self.matrix)?, &self.dims)
    }
}

pub fn parse_state(json: &str) -> Result<DensityMatrix> {
    serde_json::from_str::<StateFile>(json)?.into_state()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    parse_state(&read_text(path)?)
}

pub fn state_to_json(rho: &DensityMatrix) -> String {
    serde_json::to_string_pretty(&StateFile::from_state(rho)).expect("state serializes")
}

pub fn write_state(path: &Path, rho: &DensityMatrix) -> Result<()> {
    fs::write(path, state_to_json(rho) + "\n")?;
    Ok(())
}

pub fn parse_observable(json: &str) -> Result<Observable> {
    let file: ObservableFile = serde_json::from_str(json)?;
    let m = matrix_from_rows(&file.matrix)?;
    match file.spectrum {
        Some(s) => Observable::with_spectrum(m, s),
        None => Observable::new(m),
    }
}

pub fn read_observable(path: &Path) -> Result<Observable> {
    parse_observable(&read_text(path)?)
}
