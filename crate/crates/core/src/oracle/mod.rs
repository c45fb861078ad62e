//! Dense brute-force references for tests and acceptance checks.
//!
//! Nothing in here is used by the solvers. Thresholds are fixed constants,
//! independent of solver tolerances.

mod dd;
mod dense;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub use dense::DenseMatrix;

use crate::error::{Error, Result};
use crate::linops::{DenseSymmetricOperator, SymmetricOperator};
use crate::vector::{axpy, dot, norm, scale, sub};

/// Relative asymmetry accepted by [`DenseProblem`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative off-diagonal Frobenius norm at which Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-14;
/// Relative threshold below which a new Krylov direction is considered dependent.
pub const KRYLOV_RANK_TOL: f64 = 1e-10;
/// Relative gap under which two eigenvalues count as equal.
pub const CLUSTER_TOL: f64 = 1e-10;
/// Projection weight, relative to `‖b‖`, below which an eigenspace is ignored.
pub const RELEVANCE_TOL: f64 = 1e-10;

/// Explicit symmetric matrix with a right-hand side.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
}

impl DenseProblem {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        check_symmetric(&a)?;
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: b.len(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn from_operator(op: &dyn SymmetricOperator, b: Vec<f64>) -> Result<Self> {
        Self::new(dense_from_operator(op), b)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn operator(&self) -> DenseSymmetricOperator {
        DenseSymmetricOperator::new(self.dim(), self.a.data().to_vec(), SYMMETRY_TOL)
            .expect("validated on construction")
    }
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, not square",
            a.rows(),
            a.cols()
        )));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs() {
        return Err(Error::NotSymmetric(format!(
            "max |a_ij - a_ji| = {asym:.3e}"
        )));
    }
    Ok(())
}

/// Assembles `A` column by column from `op`.
pub fn dense_from_operator(op: &dyn SymmetricOperator) -> DenseMatrix {
    let n = op.dim();
    let mut m = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` pairs with `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Eigenvalues with `|λ| <= rank_tol` are treated as zero.
    pub rank_tol: f64,
}

impl SpectralData {
    pub fn is_zero(&self, i: usize) -> bool {
        self.eigenvalues[i].abs() <= self.rank_tol
    }

    pub fn rank(&self) -> usize {
        (0..self.eigenvalues.len())
            .filter(|&i| !self.is_zero(i))
            .count()
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub fn eig_symmetric(a: &DenseMatrix) -> Result<SpectralData> {
    check_symmetric(a)?;
    let n = a.rows();
    let (vals, vecs) = dense::jacobi_eigen(a, JACOBI_TOL)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let eigenvectors = order.iter().map(|&i| vecs.column(i)).collect();
    let max_abs = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        rank_tol: n as f64 * f64::EPSILON * max_abs,
    })
}

/// `A†b`.
pub fn pseudo_inverse_solution(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let spec = eig_symmetric(a)?;
    let mut x = vec![0.0; b.len()];
    for (i, u) in spec.eigenvectors.iter().enumerate() {
        if !spec.is_zero(i) {
            axpy(dot(u, b) / spec.eigenvalues[i], u, &mut x);
        }
    }
    Ok(x)
}

/// Splits `b = b_range + b_null` with `b_range ∈ Range(A)`, `b_null ∈ Null(A)`.
pub fn ortho_decompose(a: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = eig_symmetric(a)?;
    let mut range = vec![0.0; b.len()];
    for (i, u) in spec.eigenvectors.iter().enumerate() {
        if !spec.is_zero(i) {
            axpy(dot(u, b), u, &mut range);
        }
    }
    let null = sub(b, &range);
    Ok((range, null))
}

/// Distinct eigenvalues whose eigenspace is not orthogonal to `b`, with the
/// norm of `b`'s projection onto that eigenspace.
pub fn relevant_eigenvalues(a: &DenseMatrix, b: &[f64]) -> Result<Vec<(f64, f64)>> {
    let bn = norm(b);
    if bn == 0.0 {
        return Err(Error::ZeroRhs);
    }
    let spec = eig_symmetric(a)?;
    let gap = CLUSTER_TOL * spec.max_abs();
    let mut clusters: Vec<(f64, f64, usize)> = Vec::new();
    for (i, u) in spec.eigenvectors.iter().enumerate() {
        let lam = if spec.is_zero(i) {
            0.0
        } else {
            spec.eigenvalues[i]
        };
        let c = dot(u, b);
        match clusters.last_mut() {
            Some((rep, w2, count)) if (lam - *rep).abs() <= gap => {
                *w2 += c * c;
                *count += 1;
                *rep += (lam - *rep) / *count as f64;
            }
            _ => clusters.push((lam, c * c, 1)),
        }
    }
    Ok(clusters
        .into_iter()
        .map(|(lam, w2, _)| (lam, w2.sqrt()))
        .filter(|&(_, w)| w > RELEVANCE_TOL * bn)
        .collect())
}

/// Orthonormal basis of `K_k(A, b)` for `k` up to `max_k`, built by Arnoldi
/// with full reorthogonalisation. Stops early when the space stops growing.
///
/// The recurrence runs in double-double arithmetic. In double precision,
/// rounding components in `Null(A)` are never damped by `A` and grow by
/// `1/h` each step, which at `d = 100` is enough to fake an extra dimension.
pub fn krylov_basis(a: &DenseMatrix, b: &[f64], max_k: usize) -> Result<Vec<Vec<f64>>> {
    use dd::Dd;
    let n = b.len();
    let bn = dd::norm(&b.iter().map(|&v| Dd::new(v)).collect::<Vec<_>>());
    if bn.hi == 0.0 {
        return Err(Error::ZeroRhs);
    }
    let cutoff = KRYLOV_RANK_TOL * a.frobenius();
    let mut basis: Vec<Vec<Dd>> = vec![b.iter().map(|&v| Dd::new(v) / bn).collect()];
    while basis.len() < max_k {
        let q = basis.last().expect("nonempty");
        let mut w: Vec<Dd> = (0..n)
            .map(|i| (0..n).fold(Dd::ZERO, |s, j| s + Dd::new(a[(i, j)]) * q[j]))
            .collect();
        let wn = dd::norm(&w);
        if wn.hi == 0.0 {
            break;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dd::dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi = *wi - c * *qi;
                }
            }
        }
        let rn = dd::norm(&w);
        if rn.hi <= cutoff {
            break;
        }
        basis.push(w.into_iter().map(|v| v / rn).collect());
    }
    Ok(basis
        .into_iter()
        .map(|v| v.into_iter().map(|x| x.hi).collect())
        .collect())
}

/// Dimension at which `K_k(A, b)` stops growing, counted as the number of
/// b-relevant eigenvalues.
///
/// The Krylov rank of a rounded matrix is not a stable quantity: its null
/// eigenvalues are distinct values near `ε‖A‖`, and rounding in the Arnoldi
/// recurrence can fake an extra dimension. The spectral count is not
/// affected by either.
pub fn grade(a: &DenseMatrix, b: &[f64]) -> Result<usize> {
    Ok(relevant_eigenvalues(a, b)?.len())
}

/// `argmin ‖b − A x‖` over `x ∈ K_k(A, b)`.
pub fn krylov_least_squares(a: &DenseMatrix, b: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("Krylov dimension must be at least 1"));
    }
    let basis = krylov_basis(a, b, k)?;
    if basis.len() < k {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the grade {} of b",
            basis.len()
        )));
    }
    let aw: Vec<Vec<f64>> = basis.iter().map(|w| a.matvec(w)).collect();
    let y = dense::lstsq(&DenseMatrix::from_columns(&aw), b, 1e-13)?;
    let mut x = vec![0.0; b.len()];
    for (w, yi) in basis.iter().zip(&y) {
        axpy(*yi, w, &mut x);
    }
    Ok(x)
}

/// `‖AᵀA x − Aᵀb‖ / ‖Aᵀb‖`; zero exactly when `x` is a normal solution.
pub fn normal_equation_residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let at = a.transpose();
    let lhs = at.matvec(&a.matvec(x));
    let rhs = at.matvec(b);
    let denom = norm(&rhs);
    let diff = norm(&sub(&lhs, &rhs));
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// `Q diag(eigenvalues) Qᵀ` with `Q` a seeded random orthogonal matrix.
pub fn random_symmetric(eigenvalues: &[f64], seed: u64) -> DenseMatrix {
    let n = eigenvalues.len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..2 {
            for u in &q {
                let c = dot(u, &v);
                axpy(-c, u, &mut v);
            }
        }
        let vn = norm(&v);
        if vn > 1e-8 {
            scale(1.0 / vn, &mut v);
            q.push(v);
        }
    }
    let mut a = DenseMatrix::zeros(n, n);
    for (u, &lam) in q.iter().zip(eigenvalues) {
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] += lam * u[i] * u[j];
            }
        }
    }
    // exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    a
}
