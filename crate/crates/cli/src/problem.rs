use anyhow::{ensure, Context, Result};
use krylov_core::linops::matrix_market::{read_operator_file, read_vector_file};
use krylov_core::{
    gen_matrix, gen_rhs, LoadedOperator, SineProblem, SymmetricOperator, SynthSpec, Truth,
};

use crate::config::ProblemSpec;

pub struct Problem {
    pub op: Box<dyn SymmetricOperator>,
    pub b: Vec<f64>,
    pub truth: Option<Truth>,
    /// Diagonal entries when the operator is diagonal.
    pub diagonal: Option<Vec<f64>>,
}

impl Problem {
    pub fn build(spec: &ProblemSpec, seed: u64) -> Result<Self> {
        match spec {
            ProblemSpec::Synth { d, m, family } => {
                let op = gen_matrix(&SynthSpec::new(*d, *m, *family, seed))?;
                let b = gen_rhs(*d, seed)?;
                Ok(Self::diagonal(op.entries().to_vec(), b))
            }
            ProblemSpec::Poisson { grid_n, domain } => {
                let p = SineProblem::new(*grid_n, *domain)?;
                Ok(Self {
                    op: Box::new(p.op),
                    b: p.rhs,
                    truth: Some(Truth {
                        x: p.truth,
                        remove_mean: true,
                    }),
                    diagonal: None,
                })
            }
            ProblemSpec::File { path, rhs } => {
                let op = read_operator_file(path)
                    .with_context(|| format!("loading {}", path.display()))?;
                let b = match rhs {
                    Some(r) => {
                        read_vector_file(r).with_context(|| format!("loading {}", r.display()))?
                    }
                    None => gen_rhs(op.dim(), seed)?,
                };
                ensure!(
                    b.len() == op.dim(),
                    "rhs has length {} but the matrix is {}",
                    b.len(),
                    op.dim()
                );
                Ok(match op {
                    LoadedOperator::Diagonal(d) => Self::diagonal(d.entries().to_vec(), b),
                    LoadedOperator::Dense(d) => Self {
                        op: Box::new(d),
                        b,
                        truth: None,
                        diagonal: None,
                    },
                })
            }
        }
    }

    fn diagonal(entries: Vec<f64>, b: Vec<f64>) -> Self {
        let x = entries
            .iter()
            .zip(&b)
            .map(|(&e, &v)| if e == 0.0 { 0.0 } else { v / e })
            .collect();
        Self {
            op: Box::new(krylov_core::DiagonalOperator::new(entries.clone())),
            b,
            truth: Some(Truth {
                x,
                remove_mean: false,
            }),
            diagonal: Some(entries),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Whether `b` has a component in the null space.
    pub fn inconsistent(&self) -> Option<bool> {
        let d = self.diagonal.as_ref()?;
        Some(d.iter().zip(&self.b).any(|(&e, &v)| e == 0.0 && v != 0.0))
    }
}

/// Grade of `b` for a diagonal matrix: one per distinct nonzero entry that
/// `b` touches, plus one if `b` touches the null space.
pub fn diagonal_grade(entries: &[f64], b: &[f64]) -> usize {
    let mut seen: Vec<f64> = entries
        .iter()
        .zip(b)
        .filter(|(&e, &v)| e != 0.0 && v != 0.0)
        .map(|(&e, _)| e)
        .collect();
    seen.sort_by(f64::total_cmp);
    seen.dedup();
    let null = entries.iter().zip(b).any(|(&e, &v)| e == 0.0 && v != 0.0);
    seen.len() + usize::from(null)
}
