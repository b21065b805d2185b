use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::{sample_points, ScalarFn};

/// Guaranteed relative accuracy of the bracketed inverse for
/// [`PhiOperator::MonomialSum`]. The bisection continues to adjacent floats
/// so a single-term sum agrees with the closed-form monomial.
pub const TOL_INV: f64 = 1e-12;
/// Upper end of the bracket search for numerical inverses.
pub const V_MAX: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub alpha: f64,
    pub beta: f64,
}

/// The operator kernel `φ(r, v)` of the problem `φ(r, −u') = λ ∫₀^r f/g(u)`.
#[derive(Debug, Clone)]
pub enum PhiOperator {
    /// `r^α |v|^β v`, the radial operator `r^{-γ}(r^α |u'|^β u')'`.
    PowerMonomial { alpha: f64, beta: f64 },
    /// `Σ r^{αᵢ} |v|^{βᵢ} v`.
    MonomialSum(Vec<Term>),
    /// `r^{N-1} |v|^{p(r)-2} v`, the radial `p(x)`-Laplacian.
    VariableExponent { n: f64, p: ScalarFn, epsilon: f64 },
    /// `ρ sin(r/ρ)^{N-1} v`, Laplace–Beltrami on a sphere cap.
    SphereCap { n: u32, rho: f64 },
}

impl PhiOperator {
    pub fn power(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !(beta > -1.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power monomial needs finite alpha and beta > -1 (alpha = {alpha}, beta = {beta})"
            )));
        }
        Ok(PhiOperator::PowerMonomial { alpha, beta })
    }

    pub fn monomial_sum(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter(
                "monomial sum needs at least one term".into(),
            ));
        }
        if let Some(t) = terms
            .iter()
            .find(|t| !t.alpha.is_finite() || !(t.beta > -1.0) || !t.beta.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "monomial sum term needs beta > -1 (alpha = {}, beta = {})",
                t.alpha, t.beta
            )));
        }
        Ok(PhiOperator::MonomialSum(terms))
    }

    pub fn variable_exponent(n: f64, p: ScalarFn, epsilon: f64) -> Result<Self> {
        if !(n > 1.0) || !n.is_finite() {
            return Err(Error::InvalidParameter(format!("N must exceed 1, got {n}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if let Some(r) = sample_points()
            .into_iter()
            .find(|&r| !(p.eval(r) >= 1.0 + epsilon && p.eval(r) < n))
        {
            return Err(Error::InvalidParameter(format!(
                "p({r}) = {} outside [1 + epsilon, N)",
                p.eval(r)
            )));
        }
        Ok(PhiOperator::VariableExponent { n, p, epsilon })
    }

    pub fn sphere_cap(n: u32, rho: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "sphere dimension must be >= 2, got {n}"
            )));
        }
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho must be >= 1, got {rho}"
            )));
        }
        Ok(PhiOperator::SphereCap { n, rho })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhiOperator::PowerMonomial { .. } => "power",
            PhiOperator::MonomialSum(_) => "sum",
            PhiOperator::VariableExponent { .. } => "variable",
            PhiOperator::SphereCap { .. } => "sphere",
        }
    }

    /// `φ(r, v)`.
    pub fn eval(&self, r: f64, v: f64) -> Result<f64> {
        let out = match self {
            PhiOperator::PowerMonomial { alpha, beta } => signed_power(v, *beta) * r.powf(*alpha),
            PhiOperator::MonomialSum(terms) => terms
                .iter()
                .map(|t| signed_power(v, t.beta) * r.powf(t.alpha))
                .sum(),
            PhiOperator::VariableExponent { n, p, .. } => {
                signed_power(v, p.eval(r) - 2.0) * r.powf(n - 1.0)
            }
            PhiOperator::SphereCap { n, rho } => sphere_weight(*n, *rho, r) * v,
        };
        if v == 0.0 {
            return Ok(0.0);
        }
        if !out.is_finite() {
            return Err(Error::EvaluationOverflow { what: "phi", r, v });
        }
        Ok(out)
    }

    /// `φ⁻¹(r, w)` for `w ≥ 0`.
    pub fn inverse(&self, r: f64, w: f64) -> Result<f64> {
        if !(w >= 0.0) {
            return Err(Error::Domain {
                what: "phi inverse",
                value: w,
            });
        }
        if w == 0.0 {
            return Ok(0.0);
        }
        let v = match self {
            PhiOperator::PowerMonomial { alpha, beta } => {
                (w * r.powf(-alpha)).powf(1.0 / (beta + 1.0))
            }
            PhiOperator::VariableExponent { n, p, .. } => {
                (w * r.powf(1.0 - n)).powf(1.0 / (p.eval(r) - 1.0))
            }
            PhiOperator::SphereCap { n, rho } => w / sphere_weight(*n, *rho, r),
            PhiOperator::MonomialSum(terms) => return invert_sum(terms, r, w),
        };
        if !v.is_finite() {
            return Err(Error::EvaluationOverflow {
                what: "phi inverse",
                r,
                v: w,
            });
        }
        Ok(v)
    }
}

/// `|v|^β v`.
fn signed_power(v: f64, beta: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.abs().powf(beta) * v
    }
}

pub(crate) fn sphere_weight(n: u32, rho: f64, r: f64) -> f64 {
    rho * (r / rho).sin().powi(n as i32 - 1)
}

fn invert_sum(terms: &[Term], r: f64, w: f64) -> Result<f64> {
    let phi = |v: f64| -> f64 {
        terms
            .iter()
            .map(|t| v.powf(t.beta + 1.0) * r.powf(t.alpha))
            .sum()
    };
    let mut hi = 1.0;
    while phi(hi) < w {
        hi *= 2.0;
        if hi > V_MAX {
            return Err(Error::RootNotBracketed {
                what: "phi",
                target: w,
                limit: V_MAX,
            });
        }
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_monomial_eval_and_inverse() {
        let op = PhiOperator::power(2.0, 0.0).unwrap();
        assert_eq!(op.eval(0.5, 4.0).unwrap(), 1.0);
        assert_eq!(op.inverse(0.5, 1.0).unwrap(), 4.0);
        assert_eq!(op.eval(0.5, -4.0).unwrap(), -1.0);
    }

    #[test]
    fn zero_maps_to_zero() {
        let ops = [
            PhiOperator::power(2.0, 0.5).unwrap(),
            PhiOperator::monomial_sum(vec![Term {
                alpha: 1.0,
                beta: 0.0,
            }])
            .unwrap(),
            PhiOperator::variable_exponent(3.0, ScalarFn::constant(2.0), 0.5).unwrap(),
            PhiOperator::sphere_cap(3, 2.0).unwrap(),
        ];
        for op in &ops {
            assert_eq!(op.eval(0.3, 0.0).unwrap(), 0.0);
            assert_eq!(op.inverse(0.3, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn sphere_cap_at_quarter_turn() {
        let op = PhiOperator::sphere_cap(2, 1.0).unwrap();
        assert_relative_eq!(
            op.eval(std::f64::consts::FRAC_PI_2, 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn monomial_sum_quadratic_root() {
        let op = PhiOperator::monomial_sum(vec![
            Term {
                alpha: 2.0,
                beta: 0.0,
            },
            Term {
                alpha: 2.0,
                beta: 1.0,
            },
        ])
        .unwrap();
        assert_relative_eq!(op.inverse(1.0, 2.0).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn odd_in_v() {
        let op = PhiOperator::monomial_sum(vec![
            Term {
                alpha: 1.0,
                beta: 0.5,
            },
            Term {
                alpha: 2.0,
                beta: 2.0,
            },
        ])
        .unwrap();
        let a = op.eval(0.7, 1.3).unwrap();
        let b = op.eval(0.7, -1.3).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn negative_target_is_domain_error() {
        let op = PhiOperator::power(2.0, 0.0).unwrap();
        assert!(matches!(op.inverse(0.5, -1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn overflow_is_reported() {
        let op = PhiOperator::power(0.0, 10.0).unwrap();
        assert!(matches!(
            op.eval(1.0, 1e300),
            Err(Error::EvaluationOverflow { .. })
        ));
    }

    #[test]
    fn constructor_invariants() {
        assert!(PhiOperator::power(1.0, -1.0).is_err());
        assert!(PhiOperator::monomial_sum(vec![]).is_err());
        assert!(PhiOperator::sphere_cap(3, 0.5).is_err());
        assert!(PhiOperator::variable_exponent(3.0, ScalarFn::constant(3.5), 0.5).is_err());
        assert!(PhiOperator::variable_exponent(3.0, ScalarFn::constant(1.2), 0.5).is_err());
    }
}
