use crate::error::{Error, Result};

/// A design matrix (row-major, `len() x dim()`) paired with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    targets: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, targets: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("feature dimension must be >= 1".into()));
        }
        if features.len() != targets.len() * dim {
            return Err(Error::LengthMismatch {
                what: "dataset features",
                expected: targets.len() * dim,
                got: features.len(),
            });
        }
        Ok(Self {
            features,
            targets,
            dim,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.len() != targets.len() {
            return Err(Error::LengthMismatch {
                what: "dataset rows",
                expected: targets.len(),
                got: rows.len(),
            });
        }
        let mut features = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::LengthMismatch {
                    what: "dataset row",
                    expected: dim,
                    got: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        Self::new(features, targets, dim)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    #[inline]
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    #[inline]
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Copies the rows named by `indices` into contiguous buffers.
    pub(crate) fn gather_into(&self, indices: &[usize], xs: &mut Vec<f64>, ys: &mut Vec<f64>) {
        xs.clear();
        ys.clear();
        for &i in indices {
            xs.extend_from_slice(self.row(i));
            ys.push(self.targets[i]);
        }
    }
}
