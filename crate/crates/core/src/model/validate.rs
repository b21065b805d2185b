//! Sampled checks of the standing hypotheses on a concrete model.
//!
//! Labels follow the printed numbering: H1 gap monotonicity, H2 source
//! positivity, H3 operator monotonicity and integrability, H4 majorant;
//! A1–A4 are the extra conditions needed for the touchdown asymptotics of
//! the power-monomial operator.

use serde::Serialize;

use super::{default_majorant, GapFunction, Model, PhiOperator, SourceProfile};
use crate::func::sample_points;
use crate::quadrature::{graded_grid, tail_integral, TailStart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Needed by the solver, bounds and bisection.
    General,
    /// Needed only by the asymptotics and the shooter.
    Asymptotic,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: &'static str,
    pub scope: Scope,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `(M, ∫₀¹ φ⁻¹(s, F(s)) ds)` on successively refined graded meshes.
    pub integrability: Vec<(usize, f64)>,
}

impl ValidationReport {
    pub fn general_ok(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.scope == Scope::General)
            .all(|c| c.passed)
    }

    pub fn asymptotic_ok(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.scope == Scope::Asymptotic)
            .all(|c| c.passed)
    }

    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, label: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.label == label)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn check(label: &'static str, scope: Scope, failures: Vec<String>, ok_detail: String) -> Check {
    Check {
        label,
        scope,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            ok_detail
        } else {
            failures.join("; ")
        },
    }
}

/// Check the hypotheses on deterministic sample grids. Failures are report
/// entries, never errors. Asymptotic (A) checks are included whenever the
/// operator is a power monomial.
pub fn validate_hypotheses(model: &Model) -> ValidationReport {
    let samples = sample_points();
    let interior: Vec<f64> = samples.iter().copied().filter(|&r| r > 0.0).collect();
    let mut checks = Vec::new();

    let h1 = gap_monotone(&model.gap, &samples);
    checks.push(h1.clone());
    checks.push(source_positive(&model.source, &samples, &interior));
    let (h3, integrability) = operator_monotone(model, &interior);
    checks.push(h3);
    checks.push(majorant_bound(&model.operator, &samples));

    if let PhiOperator::PowerMonomial { alpha, beta } = model.operator {
        checks.push(Check {
            label: "A1",
            scope: Scope::Asymptotic,
            ..h1
        });
        checks.push(gap_asymptotics(&model.gap));
        checks.push(exponents(alpha, beta, model.source.gamma()));
        checks.push(permittivity(&model.source, &samples));
    }

    ValidationReport {
        checks,
        integrability,
    }
}

fn gap_monotone(gap: &GapFunction, samples: &[f64]) -> Check {
    let mut fails = Vec::new();
    let g1 = gap.eval(1.0);
    if g1.abs() > 1e-14 {
        fails.push(format!("g(1) = {g1} is not zero"));
    }
    let g0 = gap.eval(0.0);
    if !(g0 > 0.0) {
        fails.push(format!("g(0) = {g0} is not positive"));
    }
    if let Some(w) = samples
        .windows(2)
        .find(|w| !(gap.eval(w[1]) < gap.eval(w[0])))
    {
        fails.push(format!("g not strictly decreasing on [{}, {}]", w[0], w[1]));
    }
    check(
        "H1",
        Scope::General,
        fails,
        format!("g strictly decreasing on [0,1], g(0) = {g0}, g(1) = 0"),
    )
}

fn source_positive(src: &SourceProfile, samples: &[f64], interior: &[f64]) -> Check {
    let mut fails = Vec::new();
    if let Some(&s) = samples.iter().find(|&&s| !(src.eval(s) >= 0.0)) {
        fails.push(format!("f({s}) = {} is negative or undefined", src.eval(s)));
    }
    let f1 = src.cumulative(1.0);
    match &f1 {
        Ok(v) if v.is_finite() => {}
        Ok(v) => fails.push(format!("F(1) = {v} is not finite")),
        Err(e) => fails.push(format!("F(1): {e}")),
    }
    if let Some(&r) = interior
        .iter()
        .find(|&&r| !matches!(src.cumulative(r), Ok(v) if v > 0.0))
    {
        fails.push(format!("F({r}) is not positive"));
    }
    check(
        "H2",
        Scope::General,
        fails,
        format!("f >= 0, F(1) = {}, F > 0 on (0,1]", f1.unwrap_or(f64::NAN)),
    )
}

fn operator_monotone(model: &Model, interior: &[f64]) -> (Check, Vec<(usize, f64)>) {
    let op = &model.operator;
    let mut fails = Vec::new();
    let velocities: Vec<f64> = std::iter::once(0.0)
        .chain((-12..=12).map(|k| 10f64.powf(k as f64 / 4.0)))
        .collect();
    'outer: for &r in interior {
        if !matches!(op.eval(r, 0.0), Ok(v) if v == 0.0) {
            fails.push(format!("phi({r}, 0) != 0"));
            break;
        }
        let mut prev = 0.0;
        for &v in &velocities[1..] {
            match op.eval(r, v) {
                Ok(cur) if cur > prev => prev = cur,
                Ok(_) => {
                    fails.push(format!("phi({r}, .) not strictly increasing near v = {v}"));
                    break 'outer;
                }
                Err(e) => {
                    fails.push(e.to_string());
                    break 'outer;
                }
            }
        }
        if !matches!(op.eval(r, 1e12), Ok(big) if big > prev) {
            fails.push(format!("phi({r}, v) does not grow without bound"));
            break;
        }
    }

    // ∫₀¹ φ⁻¹(s, F(s)) ds on refined meshes; finite values that settle.
    let mut trend = Vec::new();
    for cells in [256usize, 1024, 4096] {
        let grid = graded_grid(cells, 2.0).expect("fixed grid parameters");
        let mut values = Vec::with_capacity(grid.len());
        let mut failed = None;
        for &s in grid.nodes() {
            match model
                .source
                .cumulative(s)
                .and_then(|big_f| op.inverse(s, big_f))
            {
                Ok(v) => values.push(v),
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        match failed {
            Some(e) => {
                fails.push(format!("integrability quadrature at M = {cells}: {e}"));
                break;
            }
            None => trend.push((
                cells,
                tail_integral(&grid.function(values), TailStart::Origin),
            )),
        }
    }
    if trend.len() == 3 {
        let v: Vec<f64> = trend.iter().map(|t| t.1).collect();
        let d1 = (v[1] - v[0]).abs();
        let d2 = (v[2] - v[1]).abs();
        if !v.iter().all(|x| x.is_finite()) {
            fails.push(format!("integral of phi^-1(s, F(s)) not finite: {v:?}"));
        } else if d2 > d1 && d2 > 1e-10 * v[2].abs().max(1.0) {
            fails.push(format!(
                "integral of phi^-1(s, F(s)) not settling under refinement: {v:?}"
            ));
        }
    }
    let detail = format!(
        "phi strictly increasing, phi(r,0) = 0, integral of phi^-1(s,F(s)) = {}",
        trend.last().map(|t| t.1).unwrap_or(f64::NAN)
    );
    (check("H3", Scope::General, fails, detail), trend)
}

fn majorant_bound(op: &PhiOperator, samples: &[f64]) -> Check {
    let maj = default_majorant(op);
    let mut fails = Vec::new();
    if !maj.a_sup.is_finite() || !(maj.a_sup > 0.0) {
        fails.push(format!(
            "sup a(r) = {} is not finite and positive",
            maj.a_sup
        ));
    }
    if !(maj.e > 0.0 && maj.d >= maj.e) {
        fails.push(format!("exponents d = {}, e = {} invalid", maj.d, maj.e));
    }
    if fails.is_empty() {
        let velocities: Vec<f64> = (0..=40).map(|k| 1e-3 * 1.5f64.powi(k)).collect();
        'outer: for &r in samples.iter().filter(|&&r| r > 0.0) {
            for &v in &velocities {
                let lhs = op.eval(r, v).unwrap_or(f64::INFINITY);
                let rhs = maj.a_sup * maj.polynomial(v);
                if lhs > rhs * (1.0 + 1e-12) {
                    fails.push(format!("phi({r}, {v}) = {lhs} exceeds bound {rhs}"));
                    break 'outer;
                }
            }
        }
    }
    check(
        "H4",
        Scope::General,
        fails,
        format!(
            "phi <= a_sup * P(v) with a_sup = {}, d = {}, e = {}",
            maj.a_sup, maj.d, maj.e
        ),
    )
}

fn gap_asymptotics(gap: &GapFunction) -> Check {
    let (a, q) = gap.asymptotic_data();
    let mut fails = Vec::new();
    if !(q > 0.0 && q < 1.0) {
        fails.push(format!("q = {q} outside (0, 1)"));
    }
    if !(a > 0.0) {
        fails.push(format!("A = {a} is not positive"));
    }
    let mut last_dev = f64::NAN;
    if fails.is_empty() {
        let devs: Vec<f64> = (2..=8)
            .map(|k| {
                let u = 1.0 - 10f64.powi(-k);
                let ratio = gap.derivative(u) / gap.eval(u).powf(q);
                (ratio / -a - 1.0).abs()
            })
            .collect();
        last_dev = *devs.last().unwrap();
        if !(last_dev <= 1e-3) {
            fails.push(format!(
                "g'(u)/g(u)^q does not approach -A = {}: relative deviations {devs:?}",
                -a
            ));
        }
    }
    check(
        "A2",
        Scope::Asymptotic,
        fails,
        format!("g'(u) ~ -A g(u)^q with A = {a}, q = {q} (deviation {last_dev:.1e} at 1-1e-8)"),
    )
}

fn exponents(alpha: f64, beta: f64, gamma: Option<f64>) -> Check {
    let mut fails = Vec::new();
    if !(beta > -1.0) {
        fails.push(format!("beta = {beta} <= -1"));
    }
    if !(alpha > beta + 1.0) {
        fails.push(format!(
            "alpha > beta + 1 violated: {alpha} <= {}",
            beta + 1.0
        ));
    }
    match gamma {
        Some(g) if g >= alpha => {}
        Some(g) => fails.push(format!("gamma >= alpha violated: {g} < {alpha}")),
        None => fails.push("source must be a weighted power s^gamma h(s)".into()),
    }
    check(
        "A3",
        Scope::Asymptotic,
        fails,
        "beta > -1, alpha > beta + 1, gamma >= alpha".to_string(),
    )
}

fn permittivity(src: &SourceProfile, samples: &[f64]) -> Check {
    let mut fails = Vec::new();
    match src {
        SourceProfile::WeightedPower { h, c, .. } => {
            let values: Vec<f64> = samples.iter().map(|&r| h.eval(r)).collect();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(lo > 0.0 && hi.is_finite()) {
                fails.push(format!(
                    "h not within a positive bounded range: [{lo}, {hi}]"
                ));
            }
            let dev = (h.eval(1e-8) / c - 1.0).abs();
            if !(dev <= 1e-3) {
                fails.push(format!(
                    "h(r)/C does not approach 1: deviation {dev} at r = 1e-8"
                ));
            }
        }
        SourceProfile::Direct { .. } => {
            fails.push("source must be a weighted power s^gamma h(s)".into())
        }
    }
    check(
        "A4",
        Scope::Asymptotic,
        fails,
        "h bounded in a positive range with h(r)/C -> 1".into(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::ScalarFn;
    use crate::model::Term;

    #[test]
    fn reference_model_passes_everything() {
        let report = validate_hypotheses(&Model::reference());
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.label, c.detail);
        }
        assert_eq!(report.checks.len(), 8);
        // ∫₀¹ s/3 ds
        let last = report.integrability.last().unwrap().1;
        assert!((last - 1.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn gap_not_vanishing_at_one_fails_h1() {
        let mut model = Model::reference();
        model.gap = GapFunction::custom(
            ScalarFn::callable(|u| 1.0 - 0.5 * u),
            ScalarFn::constant(-0.5),
            0.5,
            0.5,
        );
        let report = validate_hypotheses(&model);
        assert!(!report.get("H1").unwrap().passed);
        assert!(!report.general_ok());
    }

    #[test]
    fn shooter_exponent_condition() {
        let model = Model::power_law(1.0, 0.5, 2.0, 2.0, 1.0).unwrap();
        let report = validate_hypotheses(&model);
        let a3 = report.get("A3").unwrap();
        assert!(!a3.passed);
        assert!(a3.detail.contains("alpha > beta + 1"));
        assert!(report.general_ok());
    }

    #[test]
    fn unit_gap_power_fails_a2() {
        let model = Model::power_law(2.0, 0.0, 2.0, 1.0, 1.0).unwrap();
        let report = validate_hypotheses(&model);
        assert!(!report.get("A2").unwrap().passed);
        assert!(report.general_ok());
        assert!(!report.all_ok());
    }

    #[test]
    fn non_power_operators_skip_asymptotic_checks() {
        let model = Model::new(
            PhiOperator::sphere_cap(3, 1.5).unwrap(),
            GapFunction::mems(2.0).unwrap(),
            SourceProfile::direct(ScalarFn::constant(1.0)),
        );
        let report = validate_hypotheses(&model);
        assert!(report.all_ok());
        assert!(report.get("A2").is_none());

        let sum = Model::new(
            PhiOperator::monomial_sum(vec![
                Term {
                    alpha: 2.0,
                    beta: 0.0,
                },
                Term {
                    alpha: 3.0,
                    beta: 1.0,
                },
            ])
            .unwrap(),
            GapFunction::mems(2.0).unwrap(),
            SourceProfile::weighted_power(3.0, 1.0).unwrap(),
        );
        assert!(validate_hypotheses(&sum).all_ok());
    }

    #[test]
    fn zero_source_fails_h2() {
        let mut model = Model::reference();
        model.source = SourceProfile::direct(ScalarFn::constant(0.0));
        assert!(!validate_hypotheses(&model).get("H2").unwrap().passed);
    }
}
