//! Operator abstraction and the concrete symmetric operators used by the
//! experiments.
//!
//! Every solver touches the matrix only through [`SymmetricOperator`]. The
//! operators here are immutable once built, so a single instance can be shared
//! across threads running independent solves.

mod dense;
mod diagonal;
pub mod matrix_market;
mod poisson;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub use dense::DenseSymmetricOperator;
pub use diagonal::DiagonalOperator;
pub use matrix_market::LoadedOperator;
pub use poisson::{assemble_poisson_neumann, Domain, Normal, PoissonNeumannOperator, SineProblem};

use crate::error::{Error, Result};
use crate::vector::{dot, norm};

/// Relative symmetry defect accepted for operators shipped by this crate.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative tolerance for the Neumann nullspace check.
pub const NULLSPACE_TOL: f64 = 1e-10;
/// Lower bound on Ritz values of operators that are claimed PSD.
pub const PSD_TOL: f64 = 1e-10;

/// A real symmetric linear map `v -> A v`.
pub trait SymmetricOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `A v` into `out`. Callers guarantee both slices have length
    /// [`dim`](Self::dim).
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }
}

fn random_unit<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let nv = norm(&v);
        if nv > 0.0 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

/// Largest observed `|<u, A v> - <A u, v>|` over `trials` seeded pairs of
/// random unit vectors.
pub fn symmetry_probe(op: &dyn SymmetricOperator, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("symmetry_probe needs at least one trial"));
    }
    let n = op.dim();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut au = vec![0.0; n];
    let mut av = vec![0.0; n];
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let u = random_unit(&mut rng, n);
        let v = random_unit(&mut rng, n);
        op.apply_into(&u, &mut au);
        op.apply_into(&v, &mut av);
        worst = worst.max((dot(&u, &av) - dot(&au, &v)).abs());
    }
    Ok(worst)
}

/// Cheap lower bound on `‖A‖₂` from a few seeded power steps.
pub fn norm_estimate(op: &dyn SymmetricOperator, steps: usize, seed: u64) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v = random_unit(&mut rng, n);
    let mut av = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..steps.max(1) {
        op.apply_into(&v, &mut av);
        est = norm(&av);
        if est == 0.0 {
            break;
        }
        for (vi, ai) in v.iter_mut().zip(&av) {
            *vi = ai / est;
        }
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Skewed(Vec<f64>, usize);

    impl SymmetricOperator for Skewed {
        fn dim(&self) -> usize {
            self.1
        }
        fn apply_into(&self, v: &[f64], out: &mut [f64]) {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..self.1).map(|j| self.0[i * self.1 + j] * v[j]).sum();
            }
        }
    }

    #[test]
    fn diagonal_is_symmetric_to_rounding() {
        let op = DiagonalOperator::new(vec![1.0, 2.0, 3.0]);
        assert!(symmetry_probe(&op, 10, 0).unwrap() <= 8.0 * f64::EPSILON);
    }

    #[test]
    fn asymmetric_matrix_is_caught() {
        let op = Skewed(vec![1.0, 2.0, 0.0, -2.0, 1.0, 0.5, 0.0, 0.0, 1.0], 3);
        assert!(symmetry_probe(&op, 20, 3).unwrap() > 0.1);
    }

    #[test]
    fn probe_rejects_zero_trials() {
        let op = DiagonalOperator::new(vec![1.0]);
        assert!(symmetry_probe(&op, 0, 0).is_err());
    }

    #[test]
    fn apply_checks_dimension() {
        let op = DiagonalOperator::new(vec![1.0, 2.0]);
        assert!(matches!(
            op.apply(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn norm_estimate_of_diagonal() {
        let op = DiagonalOperator::new(vec![0.5, -3.0, 1.0]);
        let est = norm_estimate(&op, 200, 1);
        assert!((est - 3.0).abs() < 1e-8, "{est}");
    }
}
