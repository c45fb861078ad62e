use super::SymmetricOperator;
use crate::error::{Error, Result};

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetricOperator {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetricOperator {
    /// Accepts `data` if `max|a_ij - a_ji| <= tol * max|a_ij|`.
    pub fn new(n: usize, data: Vec<f64>, tol: f64) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {})",
                bad / n,
                bad % n
            )));
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut worst = (0.0, 0, 0);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (data[i * n + j] - data[j * n + i]).abs();
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        if worst.0 > tol * scale {
            return Err(Error::NotSymmetric(format!(
                "|a[{i},{j}] - a[{j},{i}]| = {d:.3e} exceeds {tol:.1e} * max|a| = {lim:.3e}",
                i = worst.1,
                j = worst.2,
                d = worst.0,
                lim = tol * scale,
            )));
        }
        Ok(Self { n, data })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// `Some(diagonal)` when every off-diagonal entry is zero.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let off_zero = (0..n).all(|i| (0..n).all(|j| i == j || self.data[i * n + j] == 0.0));
        off_zero.then(|| (0..n).map(|i| self.data[i * n + i]).collect())
    }
}

impl SymmetricOperator for DenseSymmetricOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (row, o) in self.data.chunks_exact(self.n).zip(out.iter_mut()) {
            *o = row.iter().zip(v).map(|(a, x)| a * x).sum();
        }
    }
}
