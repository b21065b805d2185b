//! Graded radial meshes on `(0, 1]` and the trapezoid integration operators
//! used by the nested integral equation.
//!
//! Node `0` is a guard node `r₀ = (1/(2M))^ς`; nodes `1..=M` are `(i/M)^ς`.
//! The origin is never a node. The cell `[0, r₀]` is closed with the one-sided
//! rectangle `r₀·f(r₀)`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    grading: f64,
    cells: usize,
}

impl RadialGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Number of graded cells `M` (the guard node is extra).
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn guard(&self) -> f64 {
        self.nodes[0]
    }

    /// Indices of the nodes lying in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.nodes.partition_point(|&r| r < lo);
        let end = self.nodes.partition_point(|&r| r <= hi);
        start..end.max(start)
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction<'_> {
        GridFunction {
            grid: self,
            values: self.nodes.iter().map(|&r| f(r)).collect(),
        }
    }

    pub fn function(&self, values: Vec<f64>) -> GridFunction<'_> {
        assert_eq!(values.len(), self.nodes.len(), "grid function length");
        GridFunction { grid: self, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<'g> {
    pub grid: &'g RadialGrid,
    pub values: Vec<f64>,
}

/// Lower limit of a tail integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailStart {
    /// The open endpoint `r = 0`, including the guard cell.
    Origin,
    Node(usize),
}

/// Build the graded grid `r_i = (i/M)^ς` with guard node `(1/(2M))^ς`.
pub fn graded_grid(cells: usize, grading: f64) -> Result<RadialGrid> {
    if cells == 0 {
        return Err(Error::DegenerateGrid("at least one cell required".into()));
    }
    if !(grading >= 1.0) || !grading.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grading exponent must be >= 1, got {grading}"
        )));
    }
    let m = cells as f64;
    let mut nodes = Vec::with_capacity(cells + 1);
    nodes.push((0.5 / m).powf(grading));
    nodes.extend((1..=cells).map(|i| (i as f64 / m).powf(grading)));
    // (M/M)^ς is exactly 1 for any ς, but be explicit.
    *nodes.last_mut().unwrap() = 1.0;
    Ok(RadialGrid {
        nodes,
        grading,
        cells,
    })
}

/// `I(r_i) ≈ ∫₀^{r_i} f`, trapezoid on the mesh plus the guard rectangle.
pub fn cumulative_integral<'g>(f: &GridFunction<'g>) -> GridFunction<'g> {
    let r = f.grid.nodes();
    let v = &f.values;
    let mut out = Vec::with_capacity(r.len());
    let mut acc = r[0] * v[0];
    out.push(acc);
    for i in 1..r.len() {
        acc += 0.5 * (v[i - 1] + v[i]) * (r[i] - r[i - 1]);
        out.push(acc);
    }
    GridFunction {
        grid: f.grid,
        values: out,
    }
}

/// `∫_{r_i}^1 f` at every node; zero at `r = 1`.
pub fn tail_integrals<'g>(f: &GridFunction<'g>) -> GridFunction<'g> {
    let r = f.grid.nodes();
    let v = &f.values;
    let n = r.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        acc += 0.5 * (v[i] + v[i + 1]) * (r[i + 1] - r[i]);
        out[i] = acc;
    }
    GridFunction {
        grid: f.grid,
        values: out,
    }
}

/// `∫_r^1 f` for a single lower limit.
pub fn tail_integral(f: &GridFunction<'_>, start: TailStart) -> f64 {
    let r = f.grid.nodes();
    let v = &f.values;
    let first = match start {
        TailStart::Origin => 0,
        TailStart::Node(i) => i,
    };
    let mut acc = 0.0;
    for i in (first..r.len() - 1).rev() {
        acc += 0.5 * (v[i] + v[i + 1]) * (r[i + 1] - r[i]);
    }
    if start == TailStart::Origin {
        acc += r[0] * v[0];
    }
    acc
}

/// Absolute target for [`integrate`].
pub const SCALAR_QUAD_TOL: f64 = 1e-13;

/// Adaptive (double-exponential) quadrature of `f` over `[a, b]`, split at
/// the given interior breakpoints. The error target is relative to the
/// magnitude of the result, with an absolute floor.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(a);
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut total = 0.0;
    let mut err = 0.0;
    for w in edges.windows(2) {
        let rough = quadrature::integrate(&f, w[0], w[1], SCALAR_QUAD_TOL);
        let target = 1e-11 * rough.integral.abs() + SCALAR_QUAD_TOL;
        let (v, e) = refine(&f, w[0], w[1], target, rough, 40);
        total += v;
        err += e;
    }
    if !total.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            achieved: f64::INFINITY,
            requested: SCALAR_QUAD_TOL,
        });
    }
    let allowed = 1e-9 * total.abs().max(1e-300) + 1e-12;
    if err > allowed {
        return Err(Error::QuadratureNonConvergence {
            achieved: err,
            requested: allowed,
        });
    }
    Ok(total)
}

fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    target: f64,
    estimate: quadrature::Output,
    depth: u32,
) -> (f64, f64) {
    if estimate.error_estimate <= target || depth == 0 {
        return (estimate.integral, estimate.error_estimate);
    }
    let mid = 0.5 * (a + b);
    let left = quadrature::integrate(f, a, mid, 0.5 * target);
    let right = quadrature::integrate(f, mid, b, 0.5 * target);
    let (l, le) = refine(f, a, mid, 0.5 * target, left, depth - 1);
    let (r, re) = refine(f, mid, b, 0.5 * target, right, depth - 1);
    (l + r, le + re)
}
