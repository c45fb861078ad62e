use serde::{Deserialize, Serialize};

use super::SymmetricOperator;
use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x_lo, x_hi] × [y_lo, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Domain {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    pub fn unit_square() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    /// `[-10, 10]²` shifted by `1e-3` in both directions, so the origin
    /// singularity of `sin(√(x²+y²))` never lands on a node.
    pub fn off_center() -> Self {
        let c = 1e-3;
        Self::new(-10.0 + c, 10.0 + c, -10.0 + c, 10.0 + c)
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.x_lo, self.x_hi, self.y_lo, self.y_hi]
            .iter()
            .all(|v| v.is_finite())
            && self.x_hi > self.x_lo
            && self.y_hi > self.y_lo;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate domain {self:?}")))
        }
    }
}

/// `-Δ_h` on a uniform node-centred grid with a pure Neumann closure.
///
/// Boundary ghost values are mirrored and every row is scaled by its control
/// volume fraction (1 inside, 1/2 on edges, 1/4 at corners). The result is the
/// weighted graph Laplacian of the grid, which is symmetric, PSD and has the
/// constants as its null space.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonNeumannOperator {
    grid_n: usize,
    domain: Domain,
    hx: f64,
    hy: f64,
}

impl PoissonNeumannOperator {
    pub fn new(grid_n: usize, domain: Domain) -> Result<Self> {
        if grid_n < 2 {
            return Err(Error::invalid(format!(
                "grid_n must be at least 2, got {grid_n}"
            )));
        }
        domain.validate()?;
        let hx = (domain.x_hi - domain.x_lo) / grid_n as f64;
        let hy = (domain.y_hi - domain.y_lo) / grid_n as f64;
        Ok(Self {
            grid_n,
            domain,
            hx,
            hy,
        })
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Nodes per side.
    pub fn side(&self) -> usize {
        self.grid_n + 1
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.side() + i
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.domain.x_lo + i as f64 * self.hx,
            self.domain.y_lo + j as f64 * self.hy,
        )
    }

    /// Samples `u` at every node in operator ordering.
    pub fn sample(&self, u: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let s = self.side();
        let mut out = Vec::with_capacity(s * s);
        for j in 0..s {
            for i in 0..s {
                let (x, y) = self.node(i, j);
                out.push(u(x, y));
            }
        }
        out
    }

    fn edge_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.grid_n {
            0.5
        } else {
            1.0
        }
    }

    /// Coefficient of the edge `(i,j)–(i+1,j)`.
    fn cx(&self, j: usize) -> f64 {
        self.edge_weight(j) / (self.hx * self.hx)
    }

    /// Coefficient of the edge `(i,j)–(i,j+1)`.
    fn cy(&self, i: usize) -> f64 {
        self.edge_weight(i) / (self.hy * self.hy)
    }
}

impl SymmetricOperator for PoissonNeumannOperator {
    fn dim(&self) -> usize {
        self.side() * self.side()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let s = self.side();
        let n = self.grid_n;
        for j in 0..s {
            let cx = self.cx(j);
            for i in 0..s {
                let c = j * s + i;
                let u = v[c];
                let cy = self.cy(i);
                let mut acc = 0.0;
                if i > 0 {
                    acc += cx * (u - v[c - 1]);
                }
                if i < n {
                    acc += cx * (u - v[c + 1]);
                }
                if j > 0 {
                    acc += cy * (u - v[c - s]);
                }
                if j < n {
                    acc += cy * (u - v[c + s]);
                }
                out[c] = acc;
            }
        }
    }
}

/// Outward unit normal at a boundary node. Corners contribute once per side.
pub type Normal = (f64, f64);

/// Gauss–Legendre nodes and weights on `[0, 1]`.
const GAUSS: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Builds the operator and right-hand side for `-Δu = f` with `∂u/∂n = g`.
///
/// The source term is the average of `f` over each node's control volume,
/// integrated quadrant by quadrant so `f` is never evaluated at a node. This
/// keeps integrable singularities such as `1/r` at a grid point finite.
/// `g` receives the outward normal of the side being closed, so corner nodes
/// are evaluated once for each adjacent side.
pub fn assemble_poisson_neumann(
    grid_n: usize,
    domain: Domain,
    f: impl Fn(f64, f64) -> f64,
    g: impl Fn(f64, f64, Normal) -> f64,
) -> Result<(PoissonNeumannOperator, Vec<f64>)> {
    let op = PoissonNeumannOperator::new(grid_n, domain)?;
    let s = op.side();
    let n = grid_n;
    let mut rhs = vec![0.0; s * s];
    let sample = |v: f64, what: &str, x: f64, y: f64| -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("{what}({x}, {y}) = {v}")))
        }
    };
    for j in 0..s {
        let wy = op.edge_weight(j);
        for i in 0..s {
            let wx = op.edge_weight(i);
            let (x, y) = op.node(i, j);
            let mut val = 0.0;
            for (sx, present_x) in [(-1.0, i > 0), (1.0, i < n)] {
                for (sy, present_y) in [(-1.0, j > 0), (1.0, j < n)] {
                    if !(present_x && present_y) {
                        continue;
                    }
                    for &(tx, cx) in &GAUSS {
                        for &(ty, cy) in &GAUSS {
                            let qx = x + sx * tx * op.hx / 2.0;
                            let qy = y + sy * ty * op.hy / 2.0;
                            val += cx * cy * sample(f(qx, qy), "f", qx, qy)? / 4.0;
                        }
                    }
                }
            }
            if i == 0 {
                val += wy * sample(g(x, y, (-1.0, 0.0)), "g", x, y)? / op.hx;
            }
            if i == n {
                val += wy * sample(g(x, y, (1.0, 0.0)), "g", x, y)? / op.hx;
            }
            if j == 0 {
                val += wx * sample(g(x, y, (0.0, -1.0)), "g", x, y)? / op.hy;
            }
            if j == n {
                val += wx * sample(g(x, y, (0.0, 1.0)), "g", x, y)? / op.hy;
            }
            rhs[op.index(i, j)] = val;
        }
    }
    Ok((op, rhs))
}

/// The manufactured problem with `u(x, y) = sin(√(x² + y²))`.
#[derive(Debug, Clone)]
pub struct SineProblem {
    pub op: PoissonNeumannOperator,
    pub rhs: Vec<f64>,
    /// Sampled exact solution with its mean removed.
    pub truth: Vec<f64>,
}

impl SineProblem {
    pub fn new(grid_n: usize, domain: Domain) -> Result<Self> {
        let radius = |x: f64, y: f64| x.hypot(y);
        let f = |x: f64, y: f64| {
            let r = radius(x, y);
            r.sin() - r.cos() / r
        };
        let g = |x: f64, y: f64, (nx, ny): Normal| {
            let r = radius(x, y);
            r.cos() * (x * nx + y * ny) / r
        };
        let (op, rhs) = assemble_poisson_neumann(grid_n, domain, f, g)?;
        let mut truth = op.sample(|x, y| radius(x, y).sin());
        let m = crate::vector::mean(&truth);
        truth.iter_mut().for_each(|t| *t -= m);
        Ok(Self { op, rhs, truth })
    }
}
