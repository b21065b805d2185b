//! Monotone Picard iteration for the integral form
//!
//! ```text
//! u(r) = ∫_r^1 φ⁻¹(t, λ ∫₀^t f(s)/g(u(s)) ds) dt
//! ```
//!
//! on a graded grid. Started from the subsolution `u ≡ 0` the iterates
//! increase; started from a verified supersolution they decrease. Failure to
//! converge is classified as touchdown (the iterate reaches the plate) or as
//! an indeterminate iteration budget exhaustion.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Model, PhiOperator};
use crate::quadrature::{graded_grid, tail_integral, RadialGrid, TailStart};

/// Discretisation and iteration controls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Numerics {
    /// Number of graded cells `M`.
    pub cells: usize,
    /// Grading exponent `ς`.
    pub grading: f64,
    /// Sup-norm update below which the iteration has converged.
    pub tol_fix: f64,
    /// Residual a converged solution must meet.
    pub tol_res: f64,
    /// Consistency tolerance of the quadrature layer; monotonicity and
    /// supersolution checks allow `10·tol_quad`.
    pub tol_quad: f64,
    /// Touchdown when `u(r₀) ≥ 1 − eps_td`.
    pub eps_td: f64,
    /// Smallest admissible `g(u)` before an iterate is declared touching.
    pub g_floor: f64,
    pub max_iter: usize,
    /// At budget exhaustion, a growing `u(r₀) > 1 − touchdown_margin` counts
    /// as touchdown; anything else is indeterminate.
    pub touchdown_margin: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            cells: 2048,
            grading: 2.0,
            tol_fix: 1e-10,
            tol_res: 1e-6,
            tol_quad: 1e-8,
            eps_td: 1e-6,
            g_floor: 1e-14,
            max_iter: 10_000,
            touchdown_margin: 1e-3,
        }
    }
}

impl Numerics {
    pub fn with_cells(cells: usize) -> Self {
        Numerics {
            cells,
            ..Self::default()
        }
    }

    pub fn monotone_slack(&self) -> f64 {
        10.0 * self.tol_quad
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Converged,
    TouchdownDetected,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationReport {
    pub status: Status,
    pub iterations: usize,
    /// Sup-norm of the last update.
    pub final_delta: f64,
    /// `sup |u − T(u)|` of the returned iterate; `NaN` unless converged.
    pub residual: f64,
    /// Largest pointwise move against the expected monotone direction.
    pub max_reversal: f64,
}

/// Nodal values of a candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    pub grid: Arc<RadialGrid>,
    pub u: Vec<f64>,
    pub lambda: f64,
}

impl SolutionGrid {
    pub fn zeros(grid: Arc<RadialGrid>, lambda: f64) -> Self {
        let u = vec![0.0; grid.len()];
        SolutionGrid { grid, u, lambda }
    }

    /// Value at the guard node, the numerical stand-in for `u(0⁺)`.
    pub fn u0(&self) -> f64 {
        self.u[0]
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Per-node form of `w ↦ φ⁻¹(r_i, w)`.
#[derive(Debug, Clone)]
enum InverseKernel {
    /// `(w·scale_i)^exponent`.
    Power {
        scale: Vec<f64>,
        exponent: f64,
    },
    /// `(w·scale_i)^{exponent_i}`.
    VariablePower {
        scale: Vec<f64>,
        exponent: Vec<f64>,
    },
    /// `w·scale_i`.
    Linear {
        scale: Vec<f64>,
    },
    General,
}

impl InverseKernel {
    fn new(op: &PhiOperator, nodes: &[f64]) -> Self {
        match op {
            PhiOperator::PowerMonomial { alpha, beta } if *beta == 0.0 => InverseKernel::Linear {
                scale: nodes.iter().map(|r| r.powf(-alpha)).collect(),
            },
            PhiOperator::PowerMonomial { alpha, beta } => InverseKernel::Power {
                scale: nodes.iter().map(|r| r.powf(-alpha)).collect(),
                exponent: 1.0 / (beta + 1.0),
            },
            PhiOperator::VariableExponent { n, p, .. } => InverseKernel::VariablePower {
                scale: nodes.iter().map(|r| r.powf(1.0 - n)).collect(),
                exponent: nodes.iter().map(|&r| 1.0 / (p.eval(r) - 1.0)).collect(),
            },
            PhiOperator::SphereCap { .. } => InverseKernel::Linear {
                scale: nodes
                    .iter()
                    .map(|&r| 1.0 / op.eval(r, 1.0).expect("finite sphere weight"))
                    .collect(),
            },
            PhiOperator::MonomialSum(_) => InverseKernel::General,
        }
    }
}

/// A model bound to a grid, with the source and its primitive tabulated.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Model,
    pub numerics: Numerics,
    grid: Arc<RadialGrid>,
    source: Vec<f64>,
    primitive: Vec<f64>,
    kernel: InverseKernel,
}

impl Problem {
    pub fn new(model: Model, numerics: Numerics) -> Result<Self> {
        let grid = graded_grid(numerics.cells, numerics.grading)?;
        let source = grid.nodes().iter().map(|&r| model.source.eval(r)).collect();
        let primitive = grid
            .nodes()
            .iter()
            .map(|&r| model.source.cumulative(r))
            .collect::<Result<Vec<_>>>()?;
        let kernel = InverseKernel::new(&model.operator, grid.nodes());
        Ok(Problem {
            model,
            numerics,
            grid: Arc::new(grid),
            source,
            primitive,
            kernel,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// `F(r_i)` at every node.
    pub fn primitive(&self) -> &[f64] {
        &self.primitive
    }

    fn inverse_at(&self, i: usize, w: f64) -> Result<f64> {
        let v = match &self.kernel {
            InverseKernel::Linear { scale } => w * scale[i],
            InverseKernel::Power { scale, exponent } => (w * scale[i]).powf(*exponent),
            InverseKernel::VariablePower { scale, exponent } => (w * scale[i]).powf(exponent[i]),
            InverseKernel::General => {
                return self.model.operator.inverse(self.grid.nodes()[i], w);
            }
        };
        if !v.is_finite() {
            return Err(Error::EvaluationOverflow {
                what: "phi inverse",
                r: self.grid.nodes()[i],
                v: w,
            });
        }
        Ok(v)
    }

    /// Tail integral `∫_{r_i}^1 φ⁻¹(t, w(t)) dt` of a nodal `w`, written into
    /// `out`; returns the integral from the origin.
    fn integrate_inverse(&self, w: &[f64], out: &mut [f64]) -> Result<f64> {
        let r = self.grid.nodes();
        let n = r.len();
        let mut upper = self.inverse_at(n - 1, w[n - 1])?;
        out[n - 1] = 0.0;
        let mut acc = 0.0;
        for i in (0..n - 1).rev() {
            let lower = self.inverse_at(i, w[i])?;
            acc += 0.5 * (lower + upper) * (r[i + 1] - r[i]);
            out[i] = acc;
            upper = lower;
        }
        Ok(acc + r[0] * upper)
    }

    /// One application of the integral operator, in place.
    fn apply(&self, lambda: f64, u: &[f64], out: &mut [f64], scratch: &mut [f64]) -> Result<()> {
        let r = self.grid.nodes();
        let floor = self.numerics.g_floor;
        let mut prev = 0.0;
        let mut acc = 0.0;
        for i in 0..r.len() {
            let g = self.model.gap.eval(u[i]);
            if !(g > floor) {
                return Err(Error::GapFloorBreached { r: r[i], floor });
            }
            let cur = self.source[i] / g;
            acc += if i == 0 {
                r[0] * cur
            } else {
                0.5 * (prev + cur) * (r[i] - r[i - 1])
            };
            scratch[i] = lambda * acc;
            prev = cur;
        }
        self.integrate_inverse(scratch, out)?;
        Ok(())
    }

    /// `Φ(λ) = ∫₀¹ φ⁻¹(s, λ F(s)) ds`.
    pub fn phi_integral(&self, lambda: f64) -> Result<f64> {
        let w: Vec<f64> = self.primitive.iter().map(|f| lambda * f).collect();
        let mut out = vec![0.0; w.len()];
        self.integrate_inverse(&w, &mut out)
    }
}

/// `u_{k+1} = T_λ(u_k)`.
pub fn picard_step(problem: &Problem, lambda: f64, u: &SolutionGrid) -> Result<SolutionGrid> {
    let n = problem.grid.len();
    let mut out = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    problem.apply(lambda, &u.u, &mut out, &mut scratch)?;
    Ok(SolutionGrid {
        grid: problem.grid.clone(),
        u: out,
        lambda,
    })
}

/// `sup_i |u(r_i) − T_λ(u)(r_i)|`.
pub fn residual(problem: &Problem, lambda: f64, u: &SolutionGrid) -> Result<f64> {
    let next = picard_step(problem, lambda, u)?;
    Ok(sup_distance(&u.u, &next.u))
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Increasing,
    Decreasing,
}

fn iterate(
    problem: &Problem,
    lambda: f64,
    start: Vec<f64>,
    direction: Direction,
) -> Result<(SolutionGrid, IterationReport)> {
    let num = &problem.numerics;
    let n = start.len();
    let mut u = start;
    let mut next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut delta = f64::INFINITY;
    let mut max_reversal: f64 = 0.0;
    let mut growing = false;

    let finish = |u: Vec<f64>, status, iterations, delta, residual, max_reversal| {
        Ok((
            SolutionGrid {
                grid: problem.grid.clone(),
                u,
                lambda,
            },
            IterationReport {
                status,
                iterations,
                final_delta: delta,
                residual,
                max_reversal,
            },
        ))
    };

    for k in 1..=num.max_iter {
        match problem.apply(lambda, &u, &mut next, &mut scratch) {
            Ok(()) => {}
            Err(Error::GapFloorBreached { .. }) => {
                return finish(
                    u,
                    Status::TouchdownDetected,
                    k - 1,
                    delta,
                    f64::NAN,
                    max_reversal,
                );
            }
            Err(e) => return Err(e),
        }
        delta = 0.0;
        for (old, new) in u.iter().zip(&next) {
            let step = new - old;
            delta = f64::max(delta, step.abs());
            let against = match direction {
                Direction::Increasing => -step,
                Direction::Decreasing => step,
            };
            if against > max_reversal {
                max_reversal = against;
            }
        }
        growing = next[0] > u[0];
        std::mem::swap(&mut u, &mut next);

        if u[0] >= 1.0 - num.eps_td {
            return finish(
                u,
                Status::TouchdownDetected,
                k,
                delta,
                f64::NAN,
                max_reversal,
            );
        }
        if delta <= num.tol_fix {
            // The residual of `u` is the size of the next update.
            match problem.apply(lambda, &u, &mut next, &mut scratch) {
                Ok(()) => {
                    let res = sup_distance(&u, &next);
                    if res <= num.tol_res {
                        return finish(u, Status::Converged, k, delta, res, max_reversal);
                    }
                }
                Err(Error::GapFloorBreached { .. }) => {
                    return finish(
                        u,
                        Status::TouchdownDetected,
                        k,
                        delta,
                        f64::NAN,
                        max_reversal,
                    );
                }
                Err(e) => return Err(e),
            }
        }
    }

    let status = if growing && u[0] > 1.0 - num.touchdown_margin {
        Status::TouchdownDetected
    } else {
        Status::MaxIterations
    };
    finish(u, status, num.max_iter, delta, f64::NAN, max_reversal)
}

/// Iterate from the subsolution `u ≡ 0`.
pub fn solve_from_subsolution(
    problem: &Problem,
    lambda: f64,
) -> Result<(SolutionGrid, IterationReport)> {
    check_lambda(lambda)?;
    iterate(
        problem,
        lambda,
        vec![0.0; problem.grid.len()],
        Direction::Increasing,
    )
}

/// Iterate downward from `start`, which must satisfy `T_λ(start) ≤ start`
/// up to the quadrature slack.
pub fn solve_from_supersolution(
    problem: &Problem,
    lambda: f64,
    start: &SolutionGrid,
) -> Result<(SolutionGrid, IterationReport)> {
    check_lambda(lambda)?;
    let image = picard_step(problem, lambda, start)?;
    let slack = problem.numerics.monotone_slack();
    if let Some((i, excess)) = image
        .u
        .iter()
        .zip(&start.u)
        .map(|(t, s)| t - s)
        .enumerate()
        .find(|(_, excess)| *excess > slack)
    {
        return Err(Error::NotASupersolution {
            r: problem.grid.nodes()[i],
            excess,
        });
    }
    iterate(problem, lambda, start.u.clone(), Direction::Decreasing)
}

/// `ū(r) = ∫_r^1 φ⁻¹(t, λ₀ F(t)) dt`, a supersolution for every
/// `λ ≤ λ₀ g(ρ)` where `ρ = ū(0) = Φ(λ₀) < 1`. Returns `ū` and that bound.
pub fn build_small_lambda_supersolution(
    problem: &Problem,
    lambda0: f64,
) -> Result<(SolutionGrid, f64)> {
    check_lambda(lambda0)?;
    let w: Vec<f64> = problem.primitive.iter().map(|f| lambda0 * f).collect();
    let mut u = vec![0.0; w.len()];
    let rho = problem.integrate_inverse(&w, &mut u)?;
    if !(rho < 1.0) {
        return Err(Error::RhoNotBelowOne { rho });
    }
    let lambda_max = lambda0 * problem.model.gap.eval(rho);
    Ok((
        SolutionGrid {
            grid: problem.grid.clone(),
            u,
            lambda: lambda_max,
        },
        lambda_max,
    ))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
        });
    }
    Ok(())
}

/// `u(0⁺)` including the guard cell: `u(r₀) + ∫₀^{r₀} φ⁻¹`.
pub fn value_at_origin(problem: &Problem, sol: &SolutionGrid) -> Result<f64> {
    let mut scratch = vec![0.0; sol.u.len()];
    let mut out = vec![0.0; sol.u.len()];
    problem.apply(sol.lambda, &sol.u, &mut out, &mut scratch)?;
    let r0 = problem.grid.guard();
    Ok(sol.u[0] + r0 * problem.inverse_at(0, scratch[0])?)
}

/// Tail integral of an arbitrary nodal function on the problem grid.
pub fn tail_from_origin(problem: &Problem, values: Vec<f64>) -> f64 {
    tail_integral(&problem.grid.function(values), TailStart::Origin)
}
