//! The shared matrix wire format:
//! `{"dim": int, "re": [[...]], "im": [[...]]}` with row-major parts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Upper bound on `dim` accepted from untrusted input.
pub const MAX_JSON_DIM: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let dim = m.nrows();
        MatrixJson {
            dim,
            re: (0..dim).map(|i| (0..dim).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..dim).map(|i| (0..dim).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let dim = self.dim;
        if dim == 0 || dim > MAX_JSON_DIM {
            return Err(Error::InvalidInput(format!("matrix dimension {dim} outside 1..={MAX_JSON_DIM}")));
        }
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != dim || part.iter().any(|row| row.len() != dim) {
                return Err(Error::DimensionMismatch(format!("`{name}` must be {dim}x{dim}")));
            }
            if part.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("`{name}` has non-finite entries")));
            }
        }
        Ok(CMatrix::from_fn(dim, dim, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}

/// Parses a matrix from its JSON text.
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let raw: MatrixJson = serde_json::from_str(text)?;
    raw.to_matrix()
}

pub fn to_json_string(m: &CMatrix) -> String {
    serde_json::to_string(&MatrixJson::from_matrix(m)).expect("matrix json is always serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pauli_y() {
        let m = parse_matrix(r#"{"dim":2,"re":[[0,0],[0,0]],"im":[[0,-1],[1,0]]}"#).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(m[(1, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_matrix(r#"{"dim":2,"re":[[0,0]],"im":[[0,0],[0,0]]}"#).is_err());
        assert!(parse_matrix(r#"{"dim":0,"re":[],"im":[]}"#).is_err());
        assert!(parse_matrix(r#"{"dim":1,"re":[[1]],"im":[[0]],"extra":1}"#).is_err());
        assert!(parse_matrix("not json").is_err());
        assert!(parse_matrix(r#"{"dim":99999999,"re":[],"im":[]}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let m = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 - 0.125 * j as f64, (i * j) as f64 / 7.0));
        assert_eq!(parse_matrix(&to_json_string(&m)).unwrap(), m);
    }
}
