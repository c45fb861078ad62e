//! CG, CR and MINRES for symmetric systems that may be singular, indefinite
//! or inconsistent.
//!
//! CG and CR share one conjugate-direction stepper ([`CdState`]), selected by
//! `s = 0` (Euclidean inner product) or `s = 1` (`A`-weighted). Both steppers
//! are resumable: drive them with `step` until a terminal event, or use the
//! `*_solve` wrappers.

mod cd;
mod minres;

use serde::{Deserialize, Serialize};

pub use cd::{cd_init, CdState};
pub use minres::MinresState;

use crate::diagnostics::Trace;
use crate::error::{Error, Result};
use crate::linops::SymmetricOperator;

/// Relative threshold for classifying a curvature as zero.
pub const CURVATURE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    Cr,
    Minres,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cg => "cg",
            Method::Cr => "cr",
            Method::Minres => "minres",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    ConvergedResidual,
    /// `‖Ap‖/‖Ab‖ <= tol`: CG reached the grade on an inconsistent system.
    LuckyBreakdownAp,
    /// `‖Ar‖/‖Ab‖ <= tol`: the iterate is a normal solution.
    LuckyBreakdownAr,
    /// `⟨p, Ap⟩ = 0` (CG) or `⟨r, Ar⟩ = 0` (CR) with the direction outside
    /// the null space.
    ZeroCurvature,
    /// Early exit requested through
    /// [`SolverOptions::stop_on_nonpositive_curvature`].
    NonpositiveCurvature,
    MaxIterations,
    /// The Lanczos process ran out of directions without meeting either
    /// tolerance.
    LanczosBreakdown,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::ConvergedResidual => "ConvergedResidual",
            Termination::LuckyBreakdownAp => "LuckyBreakdownAp",
            Termination::LuckyBreakdownAr => "LuckyBreakdownAr",
            Termination::ZeroCurvature => "ZeroCurvature",
            Termination::NonpositiveCurvature => "NonpositiveCurvature",
            Termination::MaxIterations => "MaxIterations",
            Termination::LanczosBreakdown => "LanczosBreakdown",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one call to `step`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepEvent {
    Progressed,
    /// Progressed along a direction with `⟨p, Ap⟩ < 0`.
    NonpositiveCurvature {
        curvature: f64,
    },
    /// A zero-curvature direction; the state is left unchanged.
    ZeroCurvature {
        direction: Vec<f64>,
    },
    Terminated(Termination),
}

impl StepEvent {
    pub fn termination(&self) -> Option<Termination> {
        match self {
            StepEvent::Progressed | StepEvent::NonpositiveCurvature { .. } => None,
            StepEvent::ZeroCurvature { .. } => Some(Termination::ZeroCurvature),
            StepEvent::Terminated(t) => Some(*t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvaturePolicy {
    /// Zero curvature is reported as [`Error::ZeroCurvature`].
    Error,
    /// Zero curvature ends the solve with [`Termination::ZeroCurvature`].
    #[default]
    ReturnEvent,
}

/// Reference solution used to fill `error_vs_truth` in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub x: Vec<f64>,
    /// Compare after subtracting the mean from both vectors.
    pub remove_mean: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// `None` means `10 * dim`.
    pub max_iter: Option<usize>,
    pub curvature_policy: CurvaturePolicy,
    /// Stop CG/CR before updating along a direction with `⟨p, Ap⟩ < 0`.
    pub stop_on_nonpositive_curvature: bool,
    /// Keep `x_k`, `r_k` and the search directions for post-hoc diagnostics.
    pub record_vectors: bool,
    pub truth: Option<Truth>,
    pub x0: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
            curvature_policy: CurvaturePolicy::default(),
            stop_on_nonpositive_curvature: false,
            record_vectors: false,
            truth: None,
            x0: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_vectors = true;
        self
    }

    pub fn with_truth(mut self, x: Vec<f64>, remove_mean: bool) -> Self {
        self.truth = Some(Truth { x, remove_mean });
        self
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 || !self.tol.is_finite() {
            return Err(Error::invalid(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if let Some(x0) = &self.x0 {
            crate::linops::check_dim(dim, x0.len())?;
        }
        if let Some(t) = &self.truth {
            crate::linops::check_dim(dim, t.x.len())?;
        }
        Ok(())
    }

    pub(crate) fn iteration_cap(&self, dim: usize) -> usize {
        self.max_iter.unwrap_or(10 * dim)
    }
}

/// Result of a complete solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub method: Method,
    pub termination: Termination,
    /// Number of updates applied to `x`.
    pub iterations: usize,
    pub x: Vec<f64>,
    /// Recurrence residual at exit.
    pub r: Vec<f64>,
    /// Search direction at exit (CG and CR only).
    pub p: Option<Vec<f64>>,
    pub trace: Trace,
    pub zero_curvature_direction: Option<Vec<f64>>,
    /// First direction used with `⟨p, Ap⟩ < 0` (CG and CR only).
    pub negative_curvature_direction: Option<Vec<f64>>,
    /// `b ≠ 0` but `Ab = 0`.
    pub b_in_null_space: bool,
    pub b_norm: f64,
    pub ab_norm: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl SolveReport {
    pub fn final_rel_r(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.rel_r)
    }

    pub fn final_rel_ar(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.rel_ar)
    }

    pub fn final_rel_ap(&self) -> Option<f64> {
        self.trace.last().and_then(|r| r.rel_ap)
    }
}

fn drive_cd<Op: SymmetricOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    s: u8,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let mut state = cd_init(op, b, s, opts.clone())?;
    state.run()?;
    Ok(state.into_report())
}

/// Conjugate gradient (`s = 0`).
pub fn cg_solve<Op: SymmetricOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    drive_cd(op, b, 0, opts)
}

/// Conjugate residual (`s = 1`).
pub fn cr_solve<Op: SymmetricOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    drive_cd(op, b, 1, opts)
}

pub fn minres_solve<Op: SymmetricOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let mut state = MinresState::new(op, b, opts.clone())?;
    state.run();
    Ok(state.into_report())
}

pub fn solve<Op: SymmetricOperator + ?Sized>(
    method: Method,
    op: &Op,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    match method {
        Method::Cg => cg_solve(op, b, opts),
        Method::Cr => cr_solve(op, b, opts),
        Method::Minres => minres_solve(op, b, opts),
    }
}

/// A direction `p` from a CG run with `⟨p, Ap⟩ <= 0`, if one was met.
///
/// This is the first direction with negative curvature, else a
/// zero-curvature direction, else the terminal direction of a
/// [`Termination::LuckyBreakdownAp`] (where `Ap = 0`). `None` means `A` was
/// positive definite on the Krylov space explored.
pub fn npc_certificate(report: &SolveReport) -> Option<Vec<f64>> {
    if let Some(p) = &report.negative_curvature_direction {
        return Some(p.clone());
    }
    if let Some(p) = &report.zero_curvature_direction {
        return Some(p.clone());
    }
    match report.termination {
        Termination::LuckyBreakdownAp if !report.b_in_null_space => report.p.clone(),
        Termination::LuckyBreakdownAp => Some(report.r.clone()),
        _ => None,
    }
}
