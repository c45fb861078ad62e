use serde::{Deserialize, Serialize};

use super::SymmetricOperator;

/// `A = diag(entries)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalOperator {
    entries: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(entries: Vec<f64>) -> Self {
        Self { entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![1.0; n])
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rank(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0.0).count()
    }
}

impl SymmetricOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.entries.len()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for ((o, d), x) in out.iter_mut().zip(&self.entries).zip(v) {
            *o = d * x;
        }
    }
}
