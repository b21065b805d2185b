//! Pull-in voltage: analytic bounds, bisection on solvability, branch sweeps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Majorant, Model};
use crate::monotone::{solve_from_subsolution, IterationReport, Numerics, Problem, Status};

/// `(P(r), p(r)) = (max{r^{1/d}, r^{1/e}}, min{r^{1/d}, r^{1/e}})`.
pub fn pde_pair(maj: &Majorant, r: f64) -> (f64, f64) {
    let a = r.powf(1.0 / maj.d);
    let b = r.powf(1.0 / maj.e);
    (a.max(b), a.min(b))
}

/// Inverse of `r ↦ p(r)`. Below one the `e`-root is the smaller value, above
/// one the `d`-root is.
pub fn pde_min_inverse(maj: &Majorant, y: f64) -> f64 {
    if y <= 1.0 {
        y.powf(maj.e)
    } else {
        y.powf(maj.d)
    }
}

/// `p⁻¹(2 P(𝒫(1) a_sup) P(g(0)) / p(F(½)))`.
pub fn upper_bound(model: &Model, maj: &Majorant) -> Result<f64> {
    let half = model.source.cumulative(0.5)?;
    if !(half > 0.0) {
        return Err(Error::DegenerateSource(half));
    }
    let (big_a, _) = pde_pair(maj, maj.polynomial_at_one() * maj.a_sup);
    let (big_g, _) = pde_pair(maj, model.gap.eval(0.0));
    let (_, small_f) = pde_pair(maj, half);
    Ok(pde_min_inverse(maj, 2.0 * big_a * big_g / small_f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    /// `Φ(1)`.
    pub phi_at_one: f64,
    /// Maximising `δ` when `Φ(1) ≥ 1`.
    pub delta: Option<f64>,
    /// `λ₀` whose small-λ supersolution covers every `λ ≤ value`.
    pub lambda0: f64,
}

const DELTA_LO: f64 = 1e-6;
const DELTA_HI: f64 = 1.0 - 1e-6;
const PRESCAN: usize = 64;

/// `g(Φ(1))` when `Φ(1) < 1`, otherwise `sup_δ Φ⁻¹(δ) g(δ)`.
pub fn lower_bound(problem: &Problem) -> Result<LowerBound> {
    let phi_at_one = problem.phi_integral(1.0)?;
    if phi_at_one < 1.0 {
        return Ok(LowerBound {
            value: problem.model.gap.eval(phi_at_one),
            phi_at_one,
            delta: None,
            lambda0: 1.0,
        });
    }
    let objective = |delta: f64| -> Result<f64> {
        Ok(phi_inverse(problem, delta)? * problem.model.gap.eval(delta))
    };

    let step = (DELTA_HI - DELTA_LO) / (PRESCAN - 1) as f64;
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..PRESCAN {
        let value = objective(DELTA_LO + k as f64 * step)?;
        if value > best.1 {
            best = (k, value);
        }
    }
    let mut a = DELTA_LO + best.0.saturating_sub(1) as f64 * step;
    let mut b = (DELTA_LO + (best.0 + 1) as f64 * step).min(DELTA_HI);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = objective(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = objective(x1)?;
        }
    }
    let (delta, value) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    let (delta, value) = if value >= best.1 {
        (delta, value)
    } else {
        (DELTA_LO + best.0 as f64 * step, best.1)
    };
    Ok(LowerBound {
        value,
        phi_at_one,
        delta: Some(delta),
        lambda0: phi_inverse(problem, delta)?,
    })
}

/// `Φ⁻¹(δ)` by doubling then bisection.
pub fn phi_inverse(problem: &Problem, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::Domain {
            what: "phi inverse target",
            value: delta,
        });
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while problem.phi_integral(hi)? < delta {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::RootNotBracketed {
                what: "phi inverse",
                target: delta,
                limit: hi,
            });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if problem.phi_integral(mid)? < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Exists,
    NotExists,
    /// Iteration budget ran out; counted as existing.
    Indeterminate,
}

impl Classification {
    fn from_status(status: Status) -> Self {
        match status {
            Status::Converged => Classification::Exists,
            Status::TouchdownDetected => Classification::NotExists,
            Status::MaxIterations => Classification::Indeterminate,
        }
    }

    pub fn exists(self) -> bool {
        !matches!(self, Classification::NotExists)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub lambda: f64,
    pub classification: Classification,
    pub iterations: usize,
    pub u0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullInEstimate {
    pub lower: f64,
    pub upper: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Number of nonlinear solves performed.
    pub evaluations: usize,
    pub low_confidence: bool,
    pub trace: Vec<TraceEntry>,
}

impl PullInEstimate {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.bracket_lo + self.bracket_hi)
    }

    pub fn width(&self) -> f64 {
        self.bracket_hi - self.bracket_lo
    }
}

/// Bisection for the solvability threshold over
/// `[lower_bound, min(upper_bound, lambda_init_hi)]`. If the initial upper
/// end is still solvable it is pushed out towards the analytic upper bound.
pub fn bisect_pullin(problem: &Problem, width: f64, lambda_init_hi: f64) -> Result<PullInEstimate> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "width must be positive, got {width}"
        )));
    }
    let lower = lower_bound(problem)?.value;
    let upper = upper_bound(&problem.model, &problem.model.majorant())?;
    if lower > upper {
        return Err(Error::InconsistentBracket(format!(
            "lower bound {lower} exceeds upper bound {upper}"
        )));
    }
    let mut est = PullInEstimate {
        lower,
        upper,
        bracket_lo: lower,
        bracket_hi: upper.min(lambda_init_hi.max(lower)),
        evaluations: 0,
        low_confidence: false,
        trace: Vec::new(),
    };
    if est.bracket_hi - est.bracket_lo <= width && est.bracket_hi == upper {
        return Ok(est);
    }

    let classify = |est: &mut PullInEstimate, lambda: f64| -> Result<Classification> {
        let (sol, rep) = solve_from_subsolution(problem, lambda)?;
        let class = Classification::from_status(rep.status);
        est.evaluations += 1;
        if class == Classification::Indeterminate {
            est.low_confidence = true;
        }
        est.trace.push(TraceEntry {
            lambda,
            classification: class,
            iterations: rep.iterations,
            u0: sol.u0(),
        });
        Ok(class)
    };

    let lo = est.bracket_lo;
    if !classify(&mut est, lo)?.exists() {
        return Err(Error::InconsistentBracket(format!(
            "no solution found at the lower bound {lower}"
        )));
    }
    loop {
        let hi = est.bracket_hi;
        if !classify(&mut est, hi)?.exists() {
            break;
        }
        if hi >= upper {
            return Err(Error::InconsistentBracket(format!(
                "solution found at the upper bound {upper}"
            )));
        }
        est.bracket_lo = hi;
        est.bracket_hi = (2.0 * hi).min(upper);
    }
    while est.bracket_hi - est.bracket_lo > width {
        let mid = 0.5 * (est.bracket_lo + est.bracket_hi);
        if classify(&mut est, mid)?.exists() {
            est.bracket_lo = mid;
        } else {
            est.bracket_hi = mid;
        }
    }
    check_trace(&est.trace)?;
    Ok(est)
}

fn check_trace(trace: &[TraceEntry]) -> Result<()> {
    let top_exists = trace
        .iter()
        .filter(|t| t.classification.exists())
        .map(|t| t.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    let bottom_missing = trace
        .iter()
        .filter(|t| !t.classification.exists())
        .map(|t| t.lambda)
        .fold(f64::INFINITY, f64::min);
    if top_exists >= bottom_missing {
        return Err(Error::InconsistentBracket(format!(
            "solution at {top_exists} above touchdown at {bottom_missing}"
        )));
    }
    Ok(())
}

/// Bisection brackets for a sequence of grid sizes, to expose how the
/// discrete threshold moves under refinement.
pub fn refinement_trend(
    model: &Model,
    numerics: &Numerics,
    cells: &[usize],
    width: f64,
) -> Result<Vec<(usize, PullInEstimate)>> {
    cells
        .iter()
        .map(|&m| {
            let problem = Problem::new(
                model.clone(),
                Numerics {
                    cells: m,
                    ..numerics.clone()
                },
            )?;
            Ok((m, bisect_pullin(&problem, width, f64::INFINITY)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    /// `u(r₀)`.
    pub u0: f64,
    pub norm_sup: f64,
    pub status: Status,
    pub iterations: usize,
}

fn branch_point(problem: &Problem, lambda: f64) -> Result<BranchPoint> {
    let (
        sol,
        IterationReport {
            status, iterations, ..
        },
    ) = solve_from_subsolution(problem, lambda)?;
    Ok(BranchPoint {
        lambda,
        u0: sol.u0(),
        norm_sup: sol.sup_norm(),
        status,
        iterations,
    })
}

/// Minimal-branch sweep, one zero-start solve per `λ`.
pub fn branch_sweep(problem: &Problem, lambdas: &[f64]) -> Result<Vec<BranchPoint>> {
    branch_sweep_parallel(problem, lambdas, 1)
}

/// As [`branch_sweep`], spreading the solves over `jobs` threads. Output
/// order follows the input.
pub fn branch_sweep_parallel(
    problem: &Problem,
    lambdas: &[f64],
    jobs: usize,
) -> Result<Vec<BranchPoint>> {
    if lambdas.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter(
            "lambda values must be sorted ascending".into(),
        ));
    }
    if let Some(&bad) = lambdas.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::Domain {
            what: "lambda",
            value: bad,
        });
    }
    let jobs = jobs.max(1).min(lambdas.len().max(1));
    if jobs == 1 {
        return lambdas.iter().map(|&l| branch_point(problem, l)).collect();
    }
    let chunk = lambdas.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = lambdas
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&l| branch_point(problem, l))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(lambdas.len());
        for h in handles {
            out.extend(h.join().expect("sweep worker panicked")?);
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::ScalarFn;
    use crate::model::{GapFunction, PhiOperator, SourceProfile};
    use approx::assert_relative_eq;

    fn maj(d: f64, e: f64) -> Majorant {
        Majorant::new(vec![1.0, 1.0], vec![d, e], 1.0)
    }

    #[test]
    fn pair_examples() {
        assert_eq!(pde_pair(&maj(2.0, 1.0), 4.0), (4.0, 2.0));
        assert_eq!(pde_pair(&maj(1.0, 1.0), 0.3), (0.3, 0.3));
        assert_eq!(pde_pair(&maj(3.0, 1.5), 1.0), (1.0, 1.0));
    }

    #[test]
    fn min_inverse_examples() {
        let m = maj(2.0, 1.0);
        assert_eq!(pde_min_inverse(&m, 2.0), 4.0);
        assert_eq!(pde_min_inverse(&m, 1.0), 1.0);
        assert_eq!(pde_min_inverse(&m, 0.25), 0.25);
        assert_eq!(pde_min_inverse(&maj(1.0, 1.0), 0.37), 0.37);
    }

    #[test]
    fn min_inverse_matches_brute_force() {
        let m = maj(2.0, 1.0);
        for &y in &[0.1, 0.5, 1.5, 2.0, 7.0] {
            // scan p on a fine grid for the crossing
            let mut best = (f64::INFINITY, 0.0);
            for k in 1..600_000 {
                let r = k as f64 * 1e-4;
                let gap = (pde_pair(&m, r).1 - y).abs();
                if gap < best.0 {
                    best = (gap, r);
                }
            }
            assert!((best.1 - pde_min_inverse(&m, y)).abs() < 2e-4, "y = {y}");
        }
    }

    #[test]
    fn upper_bound_examples() {
        let r1 = Model::reference();
        assert_relative_eq!(
            upper_bound(&r1, &r1.majorant()).unwrap(),
            48.0,
            max_relative = 1e-14
        );
        let scaled = Model::new(
            r1.operator.clone(),
            GapFunction::custom(
                ScalarFn::callable(|u| 4.0 * (1.0 - u).powi(2)),
                ScalarFn::callable(|u| -8.0 * (1.0 - u)),
                2.0,
                0.5,
            ),
            r1.source.clone(),
        );
        assert_relative_eq!(
            upper_bound(&scaled, &scaled.majorant()).unwrap(),
            192.0,
            max_relative = 1e-14
        );
        let unit = Model::new(
            PhiOperator::power(0.0, 0.0).unwrap(),
            r1.gap.clone(),
            SourceProfile::direct(ScalarFn::constant(2.0)),
        );
        assert_relative_eq!(
            upper_bound(&unit, &unit.majorant()).unwrap(),
            2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn degenerate_source_upper_bound() {
        let r1 = Model::reference();
        let zero = Model::new(
            r1.operator.clone(),
            r1.gap.clone(),
            SourceProfile::direct(ScalarFn::constant(0.0)),
        );
        assert!(matches!(
            upper_bound(&zero, &zero.majorant()),
            Err(Error::DegenerateSource(_))
        ));
    }

    #[test]
    fn reference_lower_bound() {
        let p = Problem::new(Model::reference(), Numerics::with_cells(256)).unwrap();
        let lb = lower_bound(&p).unwrap();
        // the guard-cell rectangle costs O(r₀²)
        assert_relative_eq!(lb.phi_at_one, 1.0 / 6.0, max_relative = 1e-9);
        assert_relative_eq!(lb.value, 25.0 / 36.0, max_relative = 1e-9);
        assert_eq!(lb.delta, None);
    }

    #[test]
    fn searched_lower_bound_matches_grid_max() {
        // Φ(λ) = 2λ, so Φ⁻¹(δ)·g(δ) = δ(1−δ)²/2, maximal at δ = 1/3
        let model = Model::power_law(2.0, 0.0, 2.0, 2.0, 12.0).unwrap();
        let p = Problem::new(model, Numerics::with_cells(256)).unwrap();
        let lb = lower_bound(&p).unwrap();
        assert_relative_eq!(lb.phi_at_one, 2.0, max_relative = 1e-9);
        let brute = (1..100_000)
            .map(|k| {
                let d = k as f64 * 1e-5;
                d * (1.0 - d).powi(2) / 2.0
            })
            .fold(0.0, f64::max);
        assert!((lb.value - brute).abs() < 1e-6);
        assert!((lb.delta.unwrap() - 1.0 / 3.0).abs() < 1e-6);
        let (_, lambda_max) =
            crate::monotone::build_small_lambda_supersolution(&p, lb.lambda0).unwrap();
        assert_relative_eq!(lambda_max, lb.value, max_relative = 1e-12);
    }

    #[test]
    fn phi_inverse_round_trip() {
        let p = Problem::new(Model::reference(), Numerics::with_cells(128)).unwrap();
        assert_relative_eq!(phi_inverse(&p, 0.5).unwrap(), 3.0, max_relative = 1e-9);
        assert_eq!(phi_inverse(&p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn wide_tolerance_returns_bounds() {
        let p = Problem::new(Model::reference(), Numerics::with_cells(128)).unwrap();
        let est = bisect_pullin(&p, 100.0, f64::INFINITY).unwrap();
        assert_eq!(est.evaluations, 0);
        assert_eq!((est.bracket_lo, est.bracket_hi), (est.lower, est.upper));
    }

    #[test]
    fn bisection_brackets_threshold() {
        let p = Problem::new(Model::reference(), Numerics::with_cells(256)).unwrap();
        let est = bisect_pullin(&p, 1e-2, 2.0).unwrap();
        assert!(est.lower <= est.bracket_lo && est.bracket_hi <= est.upper);
        assert!(est.width() <= 1e-2);
        assert_eq!(est.trace[0].classification, Classification::Exists);
        assert!(est.bracket_lo > 1.2 && est.bracket_hi < 1.4);
    }

    #[test]
    fn bisection_rejects_nonpositive_width() {
        let p = Problem::new(Model::reference(), Numerics::with_cells(64)).unwrap();
        assert!(bisect_pullin(&p, 0.0, 2.0).is_err());
    }

    #[test]
    fn sweep_examples() {
        let p = Problem::new(Model::reference(), Numerics::with_cells(256)).unwrap();
        let pts = branch_sweep(&p, &[0.0, 0.1, 0.2]).unwrap();
        assert_eq!(pts[0].u0, 0.0);
        assert!(0.0 < pts[1].u0 && pts[1].u0 < pts[2].u0);
        let single = branch_sweep(&p, &[0.0]).unwrap();
        assert_eq!(single.len(), 1);
        let past = branch_sweep(&p, &[0.5, 60.0]).unwrap();
        assert_eq!(past[1].status, Status::TouchdownDetected);
        assert!(branch_sweep(&p, &[0.2, 0.1]).is_err());
    }

    #[test]
    fn parallel_sweep_preserves_order() {
        let p = Problem::new(Model::reference(), Numerics::with_cells(128)).unwrap();
        let lambdas: Vec<f64> = (0..10).map(|k| 0.1 * k as f64).collect();
        let seq = branch_sweep(&p, &lambdas).unwrap();
        let par = branch_sweep_parallel(&p, &lambdas, 3).unwrap();
        assert_eq!(seq, par);
    }
}
