//! Seeded problem families shared by the integration tests.
#![allow(dead_code)]

use krylov_core::oracle::{self, DenseMatrix};
use krylov_core::{
    gen_matrix, gen_rhs, DenseSymmetricOperator, Family, SymmetricOperator, SynthSpec,
};

pub struct Problem {
    pub label: String,
    pub a: DenseMatrix,
    pub op: DenseSymmetricOperator,
    pub b: Vec<f64>,
}

impl Problem {
    pub fn new(label: String, a: DenseMatrix, b: Vec<f64>) -> Self {
        let n = a.rows();
        let op = DenseSymmetricOperator::new(n, a.data().to_vec(), 1e-12).unwrap();
        Self { label, a, op, b }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn with_rhs(&self, b: Vec<f64>) -> Self {
        Self {
            label: self.label.clone(),
            a: self.a.clone(),
            op: self.op.clone(),
            b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Diagonal,
    Dense,
}

/// Smallest relative gap between distinct nonzero eigenvalues, and between
/// any nonzero eigenvalue and zero.
pub fn min_gap(eigs: &[f64]) -> f64 {
    let scale = eigs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut nz: Vec<f64> = eigs.iter().copied().filter(|v| *v != 0.0).collect();
    nz.push(0.0);
    nz.sort_by(f64::total_cmp);
    nz.dedup();
    nz.windows(2)
        .map(|w| (w[1] - w[0]) / scale)
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues from the synthetic generator, rejecting draws whose distinct
/// eigenvalues are closer than `1e-6` relative.
pub fn spectrum(d: usize, m: usize, family: Family, seed: u64) -> (Vec<f64>, u64) {
    let mut s = seed;
    loop {
        let e = gen_matrix(&SynthSpec::new(d, m, family, s))
            .unwrap()
            .entries()
            .to_vec();
        if min_gap(&e) >= 1e-6 {
            return (e, s);
        }
        s = s.wrapping_add(0x9e37_79b9);
    }
}

pub fn matrix(kind: Kind, eigs: &[f64], seed: u64) -> DenseMatrix {
    match kind {
        Kind::Diagonal => DenseMatrix::from_diagonal(eigs),
        Kind::Dense => oracle::random_symmetric(eigs, seed ^ 0xdead_beef),
    }
}

/// Problem `i` of a seeded sweep over families, kinds, sizes and zero counts.
/// `m` ranges over `m_lo..=d/2`; inconsistent right-hand sides need `m_lo >= 1`.
pub fn sweep(i: u64, d_range: (usize, usize), m_lo: usize) -> (Problem, Kind, Family) {
    let kind = if i % 2 == 0 {
        Kind::Diagonal
    } else {
        Kind::Dense
    };
    let family = if (i / 2) % 2 == 0 {
        Family::Psd
    } else {
        Family::Indefinite
    };
    sweep_with(i, kind, family, d_range, m_lo)
}

/// As [`sweep`] but with diagonal matrices only, so the null space is exact
/// in floating point.
pub fn diagonal_sweep(i: u64, d_range: (usize, usize), m_lo: usize) -> (Problem, Kind, Family) {
    let family = if i % 2 == 0 {
        Family::Psd
    } else {
        Family::Indefinite
    };
    sweep_with(i, Kind::Diagonal, family, d_range, m_lo)
}

fn sweep_with(
    i: u64,
    kind: Kind,
    family: Family,
    d_range: (usize, usize),
    m_lo: usize,
) -> (Problem, Kind, Family) {
    let span = (d_range.1 - d_range.0 + 1) as u64;
    let d = d_range.0 + ((i * 7919) % span) as usize;
    let m_hi = d / 2;
    let m = m_lo + ((i * 104_729) % (m_hi - m_lo + 1) as u64) as usize;
    let (eigs, seed) = spectrum(d, m, family, 1000 + i);
    let a = matrix(kind, &eigs, seed);
    let b = gen_rhs(d, seed).unwrap();
    let label = format!("#{i} {kind:?} {family:?} d={d} m={m} seed={seed}");
    (Problem::new(label, a, b), kind, family)
}

pub fn rel_err(x: &[f64], want: &[f64]) -> f64 {
    let num: f64 = x
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = want.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn apply(op: &dyn SymmetricOperator, v: &[f64]) -> Vec<f64> {
    op.apply(v).unwrap()
}
