use super::{
    CurvaturePolicy, Method, SolveReport, SolverOptions, StepEvent, Termination, CURVATURE_EPS,
};
use crate::diagnostics::Recorder;
use crate::error::{Error, Result};
use crate::linops::{check_dim, SymmetricOperator};
use crate::vector::{axpy, dot, norm, xpby};

/// Live state of the unified conjugate-direction iteration.
///
/// With `s = 0` this is CG: `α = ‖r‖²/⟨p, Ap⟩`. With `s = 1` it is CR:
/// `α = ⟨r, Ar⟩/‖Ap‖²`, and `Ap` follows the recurrence `Ap ← Ar + β Ap`
/// so each iteration costs one product with `A`. CG additionally forms `Ar`
/// for the trace.
#[derive(Debug)]
pub struct CdState<'a, Op: SymmetricOperator + ?Sized> {
    op: &'a Op,
    s: u8,
    opts: SolverOptions,
    max_iter: usize,
    k: usize,
    x: Vec<f64>,
    r: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
    ar: Vec<f64>,
    /// `⟨r, Aˢ r⟩`
    rho: f64,
    /// `⟨p, Ap⟩`
    curvature: f64,
    /// Largest `‖Av‖/‖v‖` seen so far, a lower bound on `‖A‖`.
    a_norm_est: f64,
    correction: Option<Vec<f64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    negative_direction: Option<Vec<f64>>,
    zero_direction: Option<Vec<f64>>,
    b_in_null_space: bool,
    finished: Option<Termination>,
    rec: Recorder,
}

fn ratio(av: &[f64], v: &[f64]) -> f64 {
    let vn = norm(v);
    if vn > 0.0 {
        norm(av) / vn
    } else {
        0.0
    }
}

/// Sets up `r_0 = p_0 = b − A x_0` and the cached products.
pub fn cd_init<'a, Op: SymmetricOperator + ?Sized>(
    op: &'a Op,
    b: &[f64],
    s: u8,
    opts: SolverOptions,
) -> Result<CdState<'a, Op>> {
    CdState::new(op, b, s, opts)
}

impl<'a, Op: SymmetricOperator + ?Sized> CdState<'a, Op> {
    pub fn new(op: &'a Op, b: &[f64], s: u8, opts: SolverOptions) -> Result<Self> {
        if s > 1 {
            return Err(Error::invalid(format!("s must be 0 or 1, got {s}")));
        }
        let n = op.dim();
        check_dim(n, b.len())?;
        opts.validate(n)?;
        let b_norm = norm(b);
        if b_norm == 0.0 {
            return Err(Error::ZeroRhs);
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side".into()));
        }
        let ab = op.apply(b)?;
        let ab_norm = norm(&ab);
        let (x, r, ar) = match &opts.x0 {
            Some(x0) if x0.iter().any(|&v| v != 0.0) => {
                let ax0 = op.apply(x0)?;
                let r: Vec<f64> = b.iter().zip(&ax0).map(|(b, a)| b - a).collect();
                let ar = op.apply(&r)?;
                (x0.clone(), r, ar)
            }
            _ => (vec![0.0; n], b.to_vec(), ab),
        };
        let p = r.clone();
        let ap = ar.clone();
        let rho = if s == 0 { dot(&r, &r) } else { dot(&r, &ar) };
        let curvature = dot(&p, &ap);
        let a_norm_est = (ab_norm / b_norm).max(ratio(&ar, &r));
        let rec = Recorder::new(b, b_norm, ab_norm, opts.truth.as_ref(), opts.record_vectors);
        let max_iter = opts.iteration_cap(n);
        let mut state = Self {
            op,
            s,
            max_iter,
            k: 0,
            x,
            r,
            p,
            ap,
            ar,
            rho,
            curvature,
            a_norm_est,
            correction: None,
            alphas: Vec::new(),
            betas: Vec::new(),
            negative_direction: None,
            zero_direction: None,
            b_in_null_space: ab_norm == 0.0,
            finished: None,
            rec,
            opts,
        };
        state.record();
        Ok(state)
    }

    /// Accumulate `x′ += (‖p‖² / (‖r‖² ⟨p, Ap⟩)) p` on every CG update.
    pub(crate) fn track_correction(&mut self) {
        self.correction = Some(vec![0.0; self.x.len()]);
    }

    fn record(&mut self) {
        let ar_norm = norm(&self.ar);
        let ap_norm = norm(&self.ap);
        self.rec.record(
            self.op,
            self.k,
            &self.x,
            &self.r,
            ar_norm,
            Some(ap_norm),
            Some(self.curvature),
        );
        self.rec.record_direction(&self.p);
    }

    pub fn method(&self) -> Method {
        if self.s == 0 {
            Method::Cg
        } else {
            Method::Cr
        }
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn ap(&self) -> &[f64] {
        &self.ap
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    /// `⟨r, Aˢ r⟩`
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `⟨p, Aˢ⁺¹ p⟩`
    pub fn pap(&self) -> f64 {
        if self.s == 0 {
            self.curvature
        } else {
            dot(&self.ap, &self.ap)
        }
    }

    pub fn b_norm(&self) -> f64 {
        self.rec.b_norm
    }

    pub fn ab_norm(&self) -> f64 {
        self.rec.ab_norm
    }

    pub fn correction(&self) -> Option<&[f64]> {
        self.correction.as_deref()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.finished
    }

    fn finish(&mut self, t: Termination) -> StepEvent {
        self.finished = Some(t);
        StepEvent::Terminated(t)
    }

    /// Performs the termination checks and, if none fire, one update.
    pub fn step(&mut self) -> Result<StepEvent> {
        if self.finished.is_some() {
            return Err(Error::Finished);
        }
        let tol = self.opts.tol;
        let b_norm = self.rec.b_norm;
        let ab_norm = self.rec.ab_norm;
        let r_norm = norm(&self.r);
        if r_norm <= tol * b_norm {
            return Ok(self.finish(Termination::ConvergedResidual));
        }
        if ab_norm == 0.0 {
            // b ∈ Null(A): no relative scale for Ap or Ar
            let t = if self.s == 0 {
                Termination::LuckyBreakdownAp
            } else {
                Termination::LuckyBreakdownAr
            };
            return Ok(self.finish(t));
        }
        let ap_norm = norm(&self.ap);
        let ar_norm = norm(&self.ar);
        // p numerically in Null(A) is the terminal direction, not a
        // zero-curvature one, however large ‖p‖ has grown
        let p_in_null =
            ap_norm <= tol * ab_norm || ap_norm <= CURVATURE_EPS * self.a_norm_est * norm(&self.p);
        if self.s == 0 && p_in_null {
            return Ok(self.finish(Termination::LuckyBreakdownAp));
        }
        if self.s == 1 && ar_norm <= tol * ab_norm {
            return Ok(self.finish(Termination::LuckyBreakdownAr));
        }
        let zero_curv = if self.s == 0 {
            self.curvature.abs() <= CURVATURE_EPS * norm(&self.p) * ap_norm
        } else {
            self.rho.abs() <= CURVATURE_EPS * r_norm * ar_norm
        };
        if zero_curv {
            let direction = if self.s == 0 {
                self.p.clone()
            } else {
                self.r.clone()
            };
            self.zero_direction = Some(direction.clone());
            self.finished = Some(Termination::ZeroCurvature);
            return match self.opts.curvature_policy {
                CurvaturePolicy::Error => Err(Error::ZeroCurvature {
                    iteration: self.k,
                    direction,
                }),
                CurvaturePolicy::ReturnEvent => Ok(StepEvent::ZeroCurvature { direction }),
            };
        }
        if self.k >= self.max_iter {
            return Ok(self.finish(Termination::MaxIterations));
        }
        let negative = self.curvature < 0.0;
        if negative {
            if self.negative_direction.is_none() {
                self.negative_direction = Some(self.p.clone());
            }
            if self.opts.stop_on_nonpositive_curvature {
                return Ok(self.finish(Termination::NonpositiveCurvature));
            }
        }
        let curvature_used = self.curvature;
        self.update();
        Ok(if negative {
            StepEvent::NonpositiveCurvature {
                curvature: curvature_used,
            }
        } else {
            StepEvent::Progressed
        })
    }

    fn update(&mut self) {
        let pap = self.pap();
        let alpha = self.rho / pap;
        if let Some(c) = self.correction.as_mut() {
            let coef = dot(&self.p, &self.p) / (dot(&self.r, &self.r) * self.curvature);
            axpy(coef, &self.p, c);
        }
        axpy(alpha, &self.p, &mut self.x);
        axpy(-alpha, &self.ap, &mut self.r);
        self.op.apply_into(&self.r, &mut self.ar);
        let rho_new = if self.s == 0 {
            dot(&self.r, &self.r)
        } else {
            dot(&self.r, &self.ar)
        };
        let beta = rho_new / self.rho;
        xpby(&self.r, beta, &mut self.p);
        if self.s == 0 {
            self.op.apply_into(&self.p, &mut self.ap);
        } else {
            xpby(&self.ar, beta, &mut self.ap);
        }
        self.a_norm_est = self
            .a_norm_est
            .max(ratio(&self.ar, &self.r))
            .max(ratio(&self.ap, &self.p));
        self.rho = rho_new;
        self.curvature = dot(&self.p, &self.ap);
        self.alphas.push(alpha);
        self.betas.push(beta);
        self.k += 1;
        self.record();
    }

    /// Steps until a terminal event.
    pub fn run(&mut self) -> Result<Termination> {
        loop {
            if let Some(t) = self.step()?.termination() {
                return Ok(t);
            }
        }
    }

    pub fn into_report(mut self) -> SolveReport {
        let termination = self.finished.unwrap_or(Termination::MaxIterations);
        if termination != Termination::MaxIterations {
            self.rec.drop_last_direction();
        }
        SolveReport {
            method: self.method(),
            termination,
            iterations: self.k,
            x: self.x,
            r: self.r,
            p: Some(self.p),
            trace: self.rec.trace,
            zero_curvature_direction: self.zero_direction,
            negative_curvature_direction: self.negative_direction,
            b_in_null_space: self.b_in_null_space,
            b_norm: self.rec.b_norm,
            ab_norm: self.rec.ab_norm,
            alphas: self.alphas,
            betas: self.betas,
        }
    }

    /// Like [`into_report`](Self::into_report), also returning the CG-PIS
    /// accumulator when it was tracked.
    pub(crate) fn into_parts(self) -> (SolveReport, Option<Vec<f64>>) {
        let mut this = self;
        let c = this.correction.take();
        (this.into_report(), c)
    }
}
