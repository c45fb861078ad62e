use super::{Method, SolveReport, SolverOptions, Termination};
use crate::diagnostics::Recorder;
use crate::error::{Error, Result};
use crate::linops::{check_dim, SymmetricOperator};
use crate::vector::{axpy, dot, norm, scale};

/// MINRES of Paige and Saunders: Lanczos tridiagonalisation with a Givens QR
/// of the `(k+1) × k` tridiagonal.
///
/// The Lanczos process runs one step ahead of the solution update. `‖A r_k‖`
/// is taken from an explicit product with the carried residual, as in CR.
/// The short-recurrence estimate `φ̄_k · ‖(γ̄_{k+1}, δ̄_{k+1})‖` drifts from it
/// once orthogonality is lost, which on singular inconsistent systems can hide
/// the point where the true value crosses the tolerance.
#[derive(Debug)]
pub struct MinresState<'a, Op: SymmetricOperator + ?Sized> {
    op: &'a Op,
    opts: SolverOptions,
    max_iter: usize,
    k: usize,
    x: Vec<f64>,
    /// Residual carried by the recurrence `r_k = s_k² r_{k-1} − φ̄_k c_k v_{k+1}`.
    r: Vec<f64>,
    /// Lanczos vectors `v_k` and `v_{k+1}`; `v_{k+1}` belongs to the pending column.
    v_prev: Vec<f64>,
    v: Vec<f64>,
    /// `v_{k+2}`, normalised, when `beta_next > 0`.
    v_next: Vec<f64>,
    /// `α_{k+1}` and `β_{k+2}` of the pending column.
    alpha: f64,
    beta_next: f64,
    w: Vec<f64>,
    w_prev: Vec<f64>,
    cs: f64,
    sn: f64,
    dbar: f64,
    epsln: f64,
    phibar: f64,
    tnorm2: f64,
    /// Pending column carries no new direction.
    exhausted: bool,
    ar_norm: f64,
    finished: Option<Termination>,
    rec: Recorder,
    betas: Vec<f64>,
    alphas: Vec<f64>,
}

impl<'a, Op: SymmetricOperator + ?Sized> MinresState<'a, Op> {
    pub fn new(op: &'a Op, b: &[f64], opts: SolverOptions) -> Result<Self> {
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
        let (x, r0, ab_norm) = match &opts.x0 {
            Some(x0) if x0.iter().any(|&v| v != 0.0) => {
                let ax0 = op.apply(x0)?;
                let r0: Vec<f64> = b.iter().zip(&ax0).map(|(b, a)| b - a).collect();
                (x0.clone(), r0, norm(&op.apply(b)?))
            }
            _ => (vec![0.0; n], b.to_vec(), f64::NAN),
        };
        let beta1 = norm(&r0);
        let mut v = r0.clone();
        if beta1 > 0.0 {
            scale(1.0 / beta1, &mut v);
        }
        let rec = Recorder::new(b, b_norm, ab_norm, opts.truth.as_ref(), opts.record_vectors);
        let max_iter = opts.iteration_cap(n);
        let mut state = Self {
            op,
            max_iter,
            k: 0,
            x,
            r: r0,
            v_prev: vec![0.0; n],
            v,
            v_next: vec![0.0; n],
            alpha: 0.0,
            beta_next: 0.0,
            w: vec![0.0; n],
            w_prev: vec![0.0; n],
            cs: -1.0,
            sn: 0.0,
            dbar: 0.0,
            epsln: 0.0,
            phibar: beta1,
            tnorm2: 0.0,
            exhausted: beta1 == 0.0,
            ar_norm: 0.0,
            finished: None,
            rec,
            betas: vec![beta1],
            alphas: Vec::new(),
            opts,
        };
        if !state.exhausted {
            state.lanczos(0.0);
        }
        state.ar_norm = state.ar_norm_now();
        if state.rec.ab_norm.is_nan() {
            // x0 = 0, so A r_0 = A b
            state.rec.ab_norm = state.ar_norm;
        }
        state.record();
        Ok(state)
    }

    /// One Lanczos step from `v` (given `β` of `v`), filling `alpha`,
    /// `beta_next` and `v_next`.
    fn lanczos(&mut self, beta_cur: f64) {
        let n = self.v.len();
        let mut y = vec![0.0; n];
        self.op.apply_into(&self.v, &mut y);
        if beta_cur != 0.0 {
            axpy(-beta_cur, &self.v_prev, &mut y);
        }
        let alpha = dot(&self.v, &y);
        axpy(-alpha, &self.v, &mut y);
        let beta = norm(&y);
        self.alpha = alpha;
        self.beta_next = beta;
        self.tnorm2 += alpha * alpha + beta * beta + beta_cur * beta_cur;
        let breakdown = beta <= n as f64 * f64::EPSILON * self.tnorm2.sqrt();
        if breakdown {
            self.beta_next = 0.0;
            self.v_next.iter_mut().for_each(|v| *v = 0.0);
        } else {
            scale(1.0 / beta, &mut y);
            self.v_next = y;
        }
    }

    fn ar_norm_now(&self) -> f64 {
        norm(&self.op.apply(&self.r).expect("dimension checked"))
    }

    fn record(&mut self) {
        let (x, r) = (self.x.clone(), self.r.clone());
        self.rec
            .record(self.op, self.k, &x, &r, self.ar_norm, None, None);
    }

    pub fn method(&self) -> Method {
        Method::Minres
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

    /// `φ̄_k`, the recurrence estimate of `‖r_k‖`.
    pub fn residual_norm(&self) -> f64 {
        self.phibar
    }

    pub fn termination(&self) -> Option<Termination> {
        self.finished
    }

    fn finish(&mut self, t: Termination) -> Option<Termination> {
        self.finished = Some(t);
        Some(t)
    }

    /// Termination checks, then one update. Returns the termination reason
    /// once the iteration has stopped.
    pub fn step(&mut self) -> Result<Option<Termination>> {
        if self.finished.is_some() {
            return Err(Error::Finished);
        }
        let tol = self.opts.tol;
        if self.phibar <= tol * self.rec.b_norm || norm(&self.r) <= tol * self.rec.b_norm {
            return Ok(self.finish(Termination::ConvergedResidual));
        }
        if self.ar_norm <= tol * self.rec.ab_norm || self.rec.ab_norm == 0.0 {
            return Ok(self.finish(Termination::LuckyBreakdownAr));
        }
        if self.exhausted {
            return Ok(self.finish(Termination::LanczosBreakdown));
        }
        if self.k >= self.max_iter {
            return Ok(self.finish(Termination::MaxIterations));
        }
        self.update();
        Ok(None)
    }

    fn update(&mut self) {
        let alpha = self.alpha;
        let beta = self.beta_next;
        let oldeps = self.epsln;
        let delta = self.cs * self.dbar + self.sn * alpha;
        let gbar = self.sn * self.dbar - self.cs * alpha;
        self.epsln = self.sn * beta;
        self.dbar = -self.cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        self.cs = gbar / gamma;
        self.sn = beta / gamma;
        let phi = self.cs * self.phibar;
        self.phibar *= self.sn;

        // w_{k+1} = (v_{k+1} − ε_k w_{k−1} − δ_{k+1} w_k) / γ_{k+1}
        let mut w_new = self.v.clone();
        axpy(-oldeps, &self.w_prev, &mut w_new);
        axpy(-delta, &self.w, &mut w_new);
        scale(1.0 / gamma, &mut w_new);
        self.w_prev = std::mem::replace(&mut self.w, w_new);
        axpy(phi, &self.w, &mut self.x);
        self.rec.record_direction(&self.w);

        let s2 = self.sn * self.sn;
        let c = self.phibar * self.cs;
        for (ri, vi) in self.r.iter_mut().zip(&self.v_next) {
            *ri = s2 * *ri - c * vi;
        }

        self.alphas.push(alpha);
        self.betas.push(beta);
        self.k += 1;

        if beta == 0.0 {
            self.exhausted = true;
        } else {
            self.v_prev = std::mem::replace(&mut self.v, std::mem::take(&mut self.v_next));
            self.v_next = vec![0.0; self.v.len()];
            self.lanczos(beta);
        }
        self.ar_norm = self.ar_norm_now();
        self.record();
    }

    pub fn run(&mut self) -> Termination {
        loop {
            match self.step() {
                Ok(Some(t)) => return t,
                Ok(None) => {}
                Err(_) => return self.finished.unwrap_or(Termination::MaxIterations),
            }
        }
    }

    pub fn into_report(self) -> SolveReport {
        SolveReport {
            method: Method::Minres,
            termination: self.finished.unwrap_or(Termination::MaxIterations),
            iterations: self.k,
            x: self.x,
            r: self.r,
            p: None,
            trace: self.rec.trace,
            zero_curvature_direction: None,
            negative_curvature_direction: None,
            b_in_null_space: self.rec.ab_norm == 0.0,
            b_norm: self.rec.b_norm,
            ab_norm: self.rec.ab_norm,
            alphas: self.alphas,
            betas: self.betas,
        }
    }
}
