//! Shared JSON shapes: complex numbers as `{"re": .., "im": ..}` objects and
//! matrices as row-major nested arrays of them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsonComplex {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<C64> for JsonComplex {
    fn from(z: C64) -> Self {
        JsonComplex { re: z.re, im: z.im }
    }
}

impl From<JsonComplex> for C64 {
    fn from(z: JsonComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

pub fn matrix_to_json(m: &CMatrix) -> Vec<Vec<JsonComplex>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].into()).collect())
        .collect()
}

pub fn matrix_from_json(rows: &[Vec<JsonComplex>], field: &str) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::config(field, "matrix has no rows"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::config(
                field,
                format!("row {i} has {} entries, expected {n}", row.len()),
            ));
        }
    }
    Ok(CMatrix::from_fn(n, n, |r, c| rows[r][c].into()))
}
