//! Drivers that recover the pseudo-inverse solution `A†b` from CG and CR.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linops::SymmetricOperator;
use crate::solvers::{cd_init, SolveReport, SolverOptions, Termination};
use crate::vector::{axpy, dot, norm};

#[derive(Debug, Clone, Serialize)]
pub struct PisReport {
    /// `A†b`. `None` if the run stopped without a lucky breakdown or convergence.
    pub x_plus: Option<Vec<f64>>,
    /// A normal solution (`AᵀA x = Aᵀb`).
    pub x_star: Option<Vec<f64>>,
    pub consistent: bool,
    pub base: SolveReport,
}

/// `x − (⟨p, x⟩ / ‖p‖²) p`.
pub fn project_out(x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    crate::linops::check_dim(x.len(), p.len())?;
    let pp = dot(p, p);
    if pp == 0.0 {
        return Err(Error::invalid("cannot project out a zero vector"));
    }
    let mut out = x.to_vec();
    axpy(-dot(p, x) / pp, p, &mut out);
    Ok(out)
}

fn check_zero_start(opts: &SolverOptions) -> Result<()> {
    match &opts.x0 {
        Some(x0) if x0.iter().any(|&v| v != 0.0) => {
            Err(Error::invalid("pseudo-inverse drivers require x0 = 0"))
        }
        _ => Ok(()),
    }
}

/// CG with the corrective accumulator `x′` that turns the terminal CG iterate
/// into a normal solution, followed by a projection onto `Range(A)`.
pub fn cg_pis_solve<Op: SymmetricOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<PisReport> {
    check_zero_start(opts)?;
    let mut state = cd_init(op, b, 0, opts.clone())?;
    state.track_correction();
    state.run()?;
    let (base, correction) = state.into_parts();
    let tol = opts.tol;
    let p = base.p.as_deref().expect("CG reports its direction");
    let p_norm = norm(p);
    let (x_star, x_plus, consistent) = match base.termination {
        Termination::ConvergedResidual => (Some(base.x.clone()), Some(base.x.clone()), true),
        Termination::LuckyBreakdownAp if p_norm <= tol * base.b_norm => {
            (Some(base.x.clone()), Some(base.x.clone()), true)
        }
        Termination::LuckyBreakdownAp if base.b_in_null_space => {
            // b ∈ Null(A): A†b = 0 and every vector is a normal solution
            (Some(base.x.clone()), Some(vec![0.0; b.len()]), false)
        }
        Termination::LuckyBreakdownAp => {
            let r2 = dot(&base.r, &base.r);
            let mut x_star = base.x.clone();
            let c = correction.expect("tracked above");
            axpy(-(r2 * r2) / (p_norm * p_norm), &c, &mut x_star);
            let x_plus = project_out(&x_star, p)?;
            (Some(x_star), Some(x_plus), false)
        }
        _ => (None, None, false),
    };
    Ok(PisReport {
        x_plus,
        x_star,
        consistent,
        base,
    })
}

/// CR to its lucky breakdown, then one projection along the final direction.
pub fn cr_pis_solve<Op: SymmetricOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<PisReport> {
    check_zero_start(opts)?;
    let mut state = cd_init(op, b, 1, opts.clone())?;
    state.run()?;
    let base = state.into_report();
    let tol = opts.tol;
    let p = base.p.as_deref().expect("CR reports its direction");
    let p_norm = norm(p);
    let ap_small = base.final_rel_ap().is_some_and(|v| v <= tol);
    let (x_star, x_plus, consistent) = match base.termination {
        Termination::ConvergedResidual => (Some(base.x.clone()), Some(base.x.clone()), true),
        Termination::LuckyBreakdownAr if base.b_in_null_space => {
            (Some(base.x.clone()), Some(vec![0.0; b.len()]), false)
        }
        Termination::LuckyBreakdownAr if ap_small && p_norm > tol * base.b_norm => {
            let x_plus = project_out(&base.x, p)?;
            (Some(base.x.clone()), Some(x_plus), false)
        }
        Termination::LuckyBreakdownAr => (Some(base.x.clone()), Some(base.x.clone()), true),
        _ => (None, None, false),
    };
    Ok(PisReport {
        x_plus,
        x_star,
        consistent,
        base,
    })
}
