use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::norm;

/// Per-item feature vectors for one round: `num_items` rows of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>"))]
pub struct FeatureMatrix {
    num_items: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(num_items: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != num_items * dim {
            return Err(Error::DimensionMismatch {
                expected: num_items * dim,
                got: data.len(),
            });
        }
        Ok(Self {
            num_items,
            dim,
            data,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let num_items = rows.len();
        let mut data = Vec::with_capacity(num_items * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            num_items,
            dim,
            data,
        })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, item: usize) -> &[f64] {
        &self.data[item * self.dim..(item + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.num_items)
    }

    /// Scores `xᵢᵀ θ` for every item.
    pub fn scores(&self, theta: &[f64]) -> Vec<f64> {
        self.rows().map(|x| crate::linalg::dot(x, theta)).collect()
    }

    pub fn max_row_norm(&self) -> f64 {
        self.rows().map(norm).fold(0.0, f64::max)
    }

    /// Checks the bounded-feature assumption `‖x‖ ≤ 1` (with a small slack for rounding).
    pub fn check_unit_ball(&self) -> Result<()> {
        let max = self.max_row_norm();
        if max > 1.0 + 1e-9 {
            return Err(invalid(alloc::format!("feature norm {max} exceeds 1")));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for FeatureMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<FeatureMatrix> for Vec<Vec<f64>> {
    fn from(m: FeatureMatrix) -> Self {
        m.rows().map(<[f64]>::to_vec).collect()
    }
}
