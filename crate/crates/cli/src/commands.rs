use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use krylov_core::vector::norm_inf;
use krylov_core::{
    cg_pis_solve, cr_pis_solve, solve, stability_metrics, Method, SolveReport, SolverOptions,
    Termination,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, MethodName, ProblemSpec};
use crate::problem::{diagonal_grade, Problem};

pub const SCHEMA_VERSION: u32 = 1;

/// How a command finished, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    ZeroCurvature,
}

impl Status {
    fn from_runs(runs: &[RunSummary]) -> Self {
        if runs
            .iter()
            .any(|r| r.termination == Termination::ZeroCurvature)
        {
            Self::ZeroCurvature
        } else {
            Self::Clean
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub method: MethodName,
    pub termination: Termination,
    pub iterations: usize,
    pub final_rel_r: f64,
    pub final_rel_ar: f64,
    pub final_rel_ap: Option<f64>,
    pub residual_gap: f64,
    pub error_vs_truth: Option<f64>,
    pub b_in_null_space: bool,
    pub nonpositive_curvature: bool,
    pub x_star_available: bool,
    pub x_plus_available: bool,
    pub consistent: Option<bool>,
}

impl RunSummary {
    fn new(method: MethodName, rep: &SolveReport) -> Self {
        let last = rep.trace.last();
        Self {
            method,
            termination: rep.termination,
            iterations: rep.iterations,
            final_rel_r: rep.final_rel_r(),
            final_rel_ar: rep.final_rel_ar(),
            final_rel_ap: rep.final_rel_ap(),
            residual_gap: last.map_or(0.0, |r| r.residual_gap),
            error_vs_truth: last.and_then(|r| r.error_vs_truth),
            b_in_null_space: rep.b_in_null_space,
            nonpositive_curvature: rep.negative_curvature_direction.is_some()
                || rep.zero_curvature_direction.is_some(),
            x_star_available: false,
            x_plus_available: false,
            consistent: None,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    command: &'static str,
    config: &'a ExperimentConfig,
    dim: usize,
    runs: &'a [RunSummary],
    #[serde(skip_serializing_if = "Option::is_none")]
    max_discrepancy: Option<f64>,
}

fn options(cfg: &ExperimentConfig, problem: &Problem, record: bool) -> SolverOptions {
    SolverOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        record_vectors: record,
        truth: problem.truth.clone(),
        ..SolverOptions::default()
    }
}

fn core_method(m: MethodName) -> Method {
    match m {
        MethodName::Cg | MethodName::CgPis => Method::Cg,
        MethodName::Cr | MethodName::CrPis => Method::Cr,
        MethodName::Minres => Method::Minres,
    }
}

fn run(
    method: MethodName,
    problem: &Problem,
    opts: &SolverOptions,
) -> Result<(SolveReport, RunSummary)> {
    let op = problem.op.as_ref();
    let b = &problem.b;
    let pis = match method {
        MethodName::CgPis => Some(cg_pis_solve(op, b, opts)?),
        MethodName::CrPis => Some(cr_pis_solve(op, b, opts)?),
        _ => None,
    };
    Ok(match pis {
        Some(p) => {
            let mut s = RunSummary::new(method, &p.base);
            s.x_star_available = p.x_star.is_some();
            s.x_plus_available = p.x_plus.is_some();
            s.consistent = Some(p.consistent);
            (p.base, s)
        }
        None => {
            let rep = solve(core_method(method), op, b, opts)?;
            let s = RunSummary::new(method, &rep);
            (rep, s)
        }
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn prepare(cfg: &ExperimentConfig) -> Result<Problem> {
    let spec = cfg.validate()?;
    let problem = Problem::build(spec, cfg.seed)?;
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(problem)
}

fn report_line(s: &RunSummary) {
    println!(
        "{:<7} {} after {} iterations, rel_r {:.3e}, rel_Ar {:.3e}",
        s.method.as_str(),
        s.termination,
        s.iterations,
        s.final_rel_r,
        s.final_rel_ar
    );
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Status> {
    let problem = prepare(cfg)?;
    let out = &cfg.output_dir;
    let opts = options(cfg, &problem, cfg.record_vectors);
    let mut runs = Vec::new();
    for &method in &cfg.methods {
        let (rep, summary) = run(method, &problem, &opts)?;
        rep.trace
            .write_csv(create(out, &format!("{}_trace.csv", method.as_str()))?)?;
        if cfg.record_vectors {
            let metrics = stability_metrics(&rep, problem.op.as_ref())?;
            metrics.write_csv(create(out, &format!("{}_stability.csv", method.as_str()))?)?;
        }
        report_line(&summary);
        runs.push(summary);
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        command: "solve",
        config: cfg,
        dim: problem.dim(),
        runs: &runs,
        max_discrepancy: None,
    };
    write_json(out, "summary.json", &summary)?;
    Ok(Status::from_runs(&runs))
}

pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Status> {
    for needed in [MethodName::Cr, MethodName::Minres] {
        if !cfg.methods.contains(&needed) {
            bail!("compare needs {} among the methods", needed.as_str());
        }
    }
    let problem = prepare(cfg)?;
    let opts = options(cfg, &problem, true);
    let (cr, cr_sum) = run(MethodName::Cr, &problem, &opts)?;
    let (mr, mr_sum) = run(MethodName::Minres, &problem, &opts)?;
    let xs = |r: &SolveReport| {
        r.trace
            .vectors
            .as_ref()
            .map(|v| v.x.clone())
            .unwrap_or_default()
    };
    let (x_cr, x_mr) = (xs(&cr), xs(&mr));
    let n = x_cr.len().min(x_mr.len());
    let mut w = csv_writer(&cfg.output_dir, "compare.csv")?;
    w.write_record(["k", "max_abs_diff"])?;
    let mut worst = 0.0_f64;
    for k in 0..n {
        let d: Vec<f64> = x_mr[k].iter().zip(&x_cr[k]).map(|(a, b)| a - b).collect();
        let gap = norm_inf(&d);
        worst = worst.max(gap);
        w.write_record([k.to_string(), krylov_core::diagnostics::fmt_f64(gap)])?;
    }
    w.flush()?;
    report_line(&cr_sum);
    report_line(&mr_sum);
    println!("max |x_MR - x_CR| over {n} iterates: {worst:.3e}");
    let runs = [cr_sum, mr_sum];
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        command: "compare",
        config: cfg,
        dim: problem.dim(),
        runs: &runs,
        max_discrepancy: Some(worst),
    };
    write_json(&cfg.output_dir, "summary.json", &summary)?;
    Ok(Status::from_runs(&runs))
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(dir, name)?))
}

#[derive(Serialize)]
struct InstabilitySummary<'a> {
    schema_version: u32,
    command: &'static str,
    config: &'a ExperimentConfig,
    grade: usize,
    run: &'a RunSummary,
    /// `‖Ap_{g−1}‖ / ‖Ab‖`, if the run got that far.
    rel_ap_at_grade: Option<f64>,
    /// CG stopped with `LuckyBreakdownAp` after exactly `g − 1` updates.
    terminated_at_grade: bool,
    /// `rel_ap_at_grade <= tol`. `None` when `b` has no null-space component
    /// and the prediction does not apply.
    prediction_held: Option<bool>,
}

pub fn cmd_instability(cfg: &ExperimentConfig) -> Result<Status> {
    if !matches!(cfg.validate()?, ProblemSpec::Synth { .. }) {
        bail!("instability needs a synth problem");
    }
    let problem = prepare(cfg)?;
    let entries = problem
        .diagonal
        .as_ref()
        .context("synthetic problems are diagonal")?;
    let g = diagonal_grade(entries, &problem.b);
    let mut opts = options(cfg, &problem, true);
    opts.max_iter = Some(cfg.max_iter.map_or(g, |m| m.min(g)));
    let (rep, summary) = run(MethodName::Cg, &problem, &opts)?;
    let metrics = stability_metrics(&rep, problem.op.as_ref())?;

    let mut w = csv_writer(&cfg.output_dir, "instability.csv")?;
    w.write_record(["k", "rel_Ap", "rel_Ar", "ortho_loss", "conj_loss"])?;
    let fmt = krylov_core::diagnostics::fmt_f64;
    for (i, r) in rep.trace.records.iter().enumerate() {
        w.write_record([
            r.k.to_string(),
            r.rel_ap.map(fmt).unwrap_or_default(),
            fmt(r.rel_ar),
            fmt(metrics.ortho_loss[i]),
            fmt(metrics.conj_loss[i]),
        ])?;
    }
    w.flush()?;

    let rel_ap_at_grade = rep
        .trace
        .records
        .iter()
        .find(|r| r.k + 1 == g)
        .and_then(|r| r.rel_ap);
    let terminated_at_grade =
        rep.termination == Termination::LuckyBreakdownAp && rep.iterations + 1 == g;
    let prediction_held = problem
        .inconsistent()
        .filter(|&inc| inc)
        .map(|_| rel_ap_at_grade.is_some_and(|v| v <= cfg.tol));
    report_line(&summary);
    let at = rel_ap_at_grade.map_or("-".to_string(), |v| format!("{v:.3e}"));
    match prediction_held {
        Some(true) => println!(
            "grade {g}: rel_Ap at g-1 = {at}, vanished at tol {:e}",
            cfg.tol
        ),
        Some(false) => println!("grade {g}: rel_Ap at g-1 = {at}, above tol {:e}", cfg.tol),
        None => println!("grade {g}: b has no null-space component, prediction not applicable"),
    }
    let out = InstabilitySummary {
        schema_version: SCHEMA_VERSION,
        command: "instability",
        config: cfg,
        grade: g,
        run: &summary,
        rel_ap_at_grade,
        terminated_at_grade,
        prediction_held,
    };
    write_json(&cfg.output_dir, "instability.json", &out)?;
    Ok(Status::from_runs(std::slice::from_ref(&summary)))
}
