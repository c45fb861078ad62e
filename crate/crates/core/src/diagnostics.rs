//! Per-iteration traces and post-hoc stability metrics.
//!
//! Solvers push one [`IterationRecord`] per iterate. When vectors are
//! recorded, [`stability_metrics`] measures the loss of orthogonality and
//! conjugacy that exact arithmetic would forbid.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linops::{check_dim, SymmetricOperator};
use crate::oracle::DenseMatrix;
use crate::solvers::{Method, SolveReport};
use crate::vector::{dot, mean, norm};

/// Scalars describing iterate `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖r_k‖ / ‖b‖`
    pub rel_r: f64,
    /// `‖A r_k‖ / ‖Ab‖`, or the raw norm when `Ab = 0`.
    pub rel_ar: f64,
    /// `‖A p_k‖ / ‖Ab‖` (CG and CR).
    pub rel_ap: Option<f64>,
    /// `⟨p_k, A p_k⟩` (CG and CR).
    pub curvature: Option<f64>,
    /// `‖(b − A x_k) − r_k‖`
    pub residual_gap: f64,
    /// `‖x_true − x_k‖ / ‖x_true‖`
    pub error_vs_truth: Option<f64>,
}

/// Vectors kept when `record_vectors` is on. `x[k]` and `r[k]` belong to
/// record `k`; `directions[k]` is the direction used to leave iterate `k`
/// (`p_k` for CG/CR, `w_{k+1}` for MINRES).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RecordedVectors {
    pub x: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    #[serde(skip)]
    pub vectors: Option<RecordedVectors>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn min_rel_ar(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.rel_ar)
            .fold(f64::INFINITY, f64::min)
    }

    pub const CSV_HEADER: [&'static str; 7] = [
        "k",
        "rel_r",
        "rel_Ar",
        "rel_Ap",
        "curvature",
        "residual_gap",
        "error_vs_truth",
    ];

    /// One row per record, 17 significant digits, empty cells for absent values.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.records {
            out.write_record([
                r.k.to_string(),
                fmt_f64(r.rel_r),
                fmt_f64(r.rel_ar),
                opt(r.rel_ap),
                opt(r.curvature),
                fmt_f64(r.residual_gap),
                opt(r.error_vs_truth),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `‖(b − A x) − r‖`, recomputed from scratch.
pub fn residual_gap(x: &[f64], r: &[f64], op: &dyn SymmetricOperator, b: &[f64]) -> Result<f64> {
    let n = op.dim();
    check_dim(n, x.len())?;
    check_dim(n, r.len())?;
    check_dim(n, b.len())?;
    let mut ax = vec![0.0; n];
    op.apply_into(x, &mut ax);
    Ok(gap_with(&ax, r, b))
}

fn gap_with(ax: &[f64], r: &[f64], b: &[f64]) -> f64 {
    ax.iter()
        .zip(r)
        .zip(b)
        .map(|((a, r), b)| {
            let d = (b - a) - r;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Shared bookkeeping for the solvers' traces.
#[derive(Debug)]
pub(crate) struct Recorder {
    b: Vec<f64>,
    pub b_norm: f64,
    pub ab_norm: f64,
    truth: Option<(Vec<f64>, bool, f64)>,
    record_vectors: bool,
    scratch: Vec<f64>,
    pub trace: Trace,
}

impl Recorder {
    pub fn new(
        b: &[f64],
        b_norm: f64,
        ab_norm: f64,
        truth: Option<&crate::solvers::Truth>,
        record_vectors: bool,
    ) -> Self {
        let truth = truth.map(|t| {
            let mut x = t.x.clone();
            if t.remove_mean {
                let m = mean(&x);
                x.iter_mut().for_each(|v| *v -= m);
            }
            let n = norm(&x);
            (x, t.remove_mean, n)
        });
        Self {
            b: b.to_vec(),
            b_norm,
            ab_norm,
            truth,
            record_vectors,
            scratch: vec![0.0; b.len()],
            trace: Trace {
                records: Vec::new(),
                vectors: record_vectors.then(RecordedVectors::default),
            },
        }
    }

    pub fn rel_a(&self, v: f64) -> f64 {
        if self.ab_norm > 0.0 {
            v / self.ab_norm
        } else {
            v
        }
    }

    fn error_vs_truth(&self, x: &[f64]) -> Option<f64> {
        let (t, remove_mean, tn) = self.truth.as_ref()?;
        let shift = if *remove_mean { mean(x) } else { 0.0 };
        let e = t
            .iter()
            .zip(x)
            .map(|(t, x)| {
                let d = t - (x - shift);
                d * d
            })
            .sum::<f64>()
            .sqrt();
        Some(if *tn > 0.0 { e / tn } else { e })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record<Op: SymmetricOperator + ?Sized>(
        &mut self,
        op: &Op,
        k: usize,
        x: &[f64],
        r: &[f64],
        ar_norm: f64,
        ap_norm: Option<f64>,
        curvature: Option<f64>,
    ) {
        op.apply_into(x, &mut self.scratch);
        let residual_gap = gap_with(&self.scratch, r, &self.b);
        let rec = IterationRecord {
            k,
            rel_r: norm(r) / self.b_norm,
            rel_ar: self.rel_a(ar_norm),
            rel_ap: ap_norm.map(|v| self.rel_a(v)),
            curvature,
            residual_gap,
            error_vs_truth: self.error_vs_truth(x),
        };
        self.trace.records.push(rec);
        if let Some(v) = self.trace.vectors.as_mut() {
            v.x.push(x.to_vec());
            v.r.push(r.to_vec());
        }
    }

    pub fn record_direction(&mut self, d: &[f64]) {
        if self.record_vectors {
            if let Some(v) = self.trace.vectors.as_mut() {
                v.directions.push(d.to_vec());
            }
        }
    }

    pub fn drop_last_direction(&mut self) {
        if let Some(v) = self.trace.vectors.as_mut() {
            if v.directions.len() > v.r.len().saturating_sub(1) {
                v.directions.pop();
            }
        }
    }
}

/// Loss-of-orthogonality and loss-of-conjugacy series for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub method: Method,
    pub ortho_loss: Vec<f64>,
    pub conj_loss: Vec<f64>,
}

impl StabilityReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "ortho_loss", "conj_loss"])?;
        for (k, (o, c)) in self.ortho_loss.iter().zip(&self.conj_loss).enumerate() {
            out.write_record([k.to_string(), fmt_f64(*o), fmt_f64(*c)])?;
        }
        out.flush()?;
        Ok(())
    }
}

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 2000;
const POWER_SEED: u64 = 0x5eed;

/// Largest singular value by power iteration on `MᵀM`.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    if let Some(v) = m.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("matrix entry {v}")));
    }
    Ok(power_iteration(m.rows(), m.cols(), |i, j| m[(i, j)], None).0)
}

/// Power iteration on `MᵀM` for a matrix given entrywise. Returns the norm
/// estimate and the final right singular vector guess.
fn power_iteration(
    rows: usize,
    cols: usize,
    m: impl Fn(usize, usize) -> f64,
    start: Option<Vec<f64>>,
) -> (f64, Vec<f64>) {
    if rows == 0 || cols == 0 {
        return (0.0, vec![]);
    }
    let mut v = start
        .filter(|s| s.len() == cols && norm(s) > 0.0)
        .unwrap_or_else(|| {
            let mut rng = ChaCha20Rng::seed_from_u64(POWER_SEED);
            (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect()
        });
    let vn = norm(&v);
    v.iter_mut().for_each(|x| *x /= vn);
    let mut mv = vec![0.0; rows];
    let mut est = 0.0;
    for _ in 0..POWER_MAX_ITER {
        for (i, o) in mv.iter_mut().enumerate() {
            *o = (0..cols).map(|j| m(i, j) * v[j]).sum();
        }
        let mut w: Vec<f64> = (0..cols)
            .map(|j| (0..rows).map(|i| m(i, j) * mv[i]).sum())
            .collect();
        let wn = norm(&w);
        if wn == 0.0 {
            return (0.0, v);
        }
        let next = wn.sqrt();
        w.iter_mut().for_each(|x| *x /= wn);
        v = w;
        if (next - est).abs() <= POWER_TOL * next {
            return (next, v);
        }
        est = next;
    }
    (est, v)
}

/// Spectral norm of every leading principal block `G[0..=k, 0..=k]` of the
/// symmetric "defect" matrix built from a Gram matrix.
fn leading_block_norms(
    n_total: usize,
    block_of: impl Fn(usize) -> usize,
    entry: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_total);
    let mut warm: Option<Vec<f64>> = None;
    for k in 0..n_total {
        let size = block_of(k);
        let start = warm.take().map(|mut v| {
            v.resize(size, 1e-3);
            v
        });
        let (s, v) = power_iteration(size, size, &entry, start);
        out.push(s);
        warm = Some(v);
    }
    out
}

fn gram(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = cols.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&cols[i], &cols[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n > 0.0 {
        v.iter().map(|x| x / n).collect()
    } else {
        v.to_vec()
    }
}

/// `‖I − ĈᵀĈ‖₂` over leading blocks, `Ĉ` having unit columns.
fn ortho_series(cols: &[Vec<f64>], records: usize) -> Vec<f64> {
    let unit: Vec<Vec<f64>> = cols.iter().map(|c| normalized(c)).collect();
    let g = gram(&unit);
    let last = unit.len().saturating_sub(1);
    leading_block_norms(
        records,
        |k| k.min(last) + 1,
        |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - g[i][j]
        },
    )
}

/// `‖diag(⟨c_i, A c_i⟩) − CᵀAC‖₂` over leading blocks.
fn conj_series(cols: &[Vec<f64>], a_cols: &[Vec<f64>], records: usize) -> Vec<f64> {
    let n = cols.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            // average the two evaluations to keep the defect exactly symmetric
            let v = 0.5 * (dot(&cols[i], &a_cols[j]) + dot(&a_cols[i], &cols[j]));
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    let last = n.saturating_sub(1);
    leading_block_norms(
        records,
        |k| k.min(last) + 1,
        |i, j| if i == j { 0.0 } else { -g[i][j] },
    )
}

/// Stability metrics from a run recorded with `record_vectors`.
///
/// For CG: `‖I − R̂ᵀR̂‖` (unit residuals) and `‖diag(⟨p_i, Ap_i⟩) − PᵀAP‖`.
/// For CR and MINRES: `‖I − (AP)̂ᵀ(AP)̂‖` (unit `Ap_i`) and
/// `‖diag(⟨r_i, Ar_i⟩) − RᵀAR‖`. Entry `k` uses iterates `0..=k`.
pub fn stability_metrics(
    report: &SolveReport,
    op: &dyn SymmetricOperator,
) -> Result<StabilityReport> {
    let vecs = report.trace.vectors.as_ref().ok_or(Error::MissingVectors)?;
    let records = report.trace.len();
    if vecs.r.len() != records {
        return Err(Error::MissingVectors);
    }
    let apply_all =
        |cols: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> { cols.iter().map(|c| op.apply(c)).collect() };
    let dirs: &[Vec<f64>] = if vecs.directions.is_empty() {
        &vecs.r[..1]
    } else {
        &vecs.directions
    };
    let (ortho_loss, conj_loss) = match report.method {
        Method::Cg => {
            let ap = apply_all(dirs)?;
            (
                ortho_series(&vecs.r, records),
                conj_series(dirs, &ap, records),
            )
        }
        Method::Cr | Method::Minres => {
            let ap = apply_all(dirs)?;
            let ar = apply_all(&vecs.r)?;
            (
                ortho_series(&ap, records),
                conj_series(&vecs.r, &ar, records),
            )
        }
    };
    Ok(StabilityReport {
        method: report.method,
        ortho_loss,
        conj_loss,
    })
}
