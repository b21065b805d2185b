use serde::Serialize;

use super::operator::{sphere_weight, PhiOperator};
use crate::func::sample_points;

/// Polynomial-like bound `φ(r, v) ≤ a(r) Σ cᵢ v^{dᵢ}` with `a_sup = sup a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Majorant {
    pub coefficients: Vec<f64>,
    pub exponents: Vec<f64>,
    pub a_sup: f64,
    /// Largest exponent.
    pub d: f64,
    /// Smallest exponent.
    pub e: f64,
}

impl Majorant {
    pub fn new(coefficients: Vec<f64>, exponents: Vec<f64>, a_sup: f64) -> Self {
        let d = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = exponents.iter().copied().fold(f64::INFINITY, f64::min);
        Majorant {
            coefficients,
            exponents,
            a_sup,
            d,
            e,
        }
    }

    /// `𝒫(v)`.
    pub fn polynomial(&self, v: f64) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.exponents)
            .map(|(c, d)| c * v.powf(*d))
            .sum()
    }

    /// `𝒫(1) = Σ cᵢ`.
    pub fn polynomial_at_one(&self) -> f64 {
        self.coefficients.iter().sum()
    }
}

/// The standard majorant for each operator family:
/// power `a = r^α, 𝒫 = v^{β+1}`; sum `a = r^{min αᵢ}, 𝒫 = Σ v^{βᵢ+1}`;
/// variable exponent `a = r^{N−1}, 𝒫 = v^{p̄−1} + v^{p̃−1}`;
/// sphere cap `a = ρ sin(r/ρ)^{N−1}, 𝒫 = v`.
pub fn default_majorant(op: &PhiOperator) -> Majorant {
    let samples = sample_points();
    let sup = |a: &dyn Fn(f64) -> f64| samples.iter().map(|&r| a(r)).fold(0.0, f64::max);
    match op {
        PhiOperator::PowerMonomial { alpha, beta } => {
            Majorant::new(vec![1.0], vec![beta + 1.0], sup(&|r: f64| r.powf(*alpha)))
        }
        PhiOperator::MonomialSum(terms) => {
            let alpha_min = terms.iter().map(|t| t.alpha).fold(f64::INFINITY, f64::min);
            Majorant::new(
                vec![1.0; terms.len()],
                terms.iter().map(|t| t.beta + 1.0).collect(),
                sup(&|r: f64| r.powf(alpha_min)),
            )
        }
        PhiOperator::VariableExponent { n, p, .. } => {
            let values: Vec<f64> = samples.iter().map(|&r| p.eval(r)).collect();
            let p_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let p_min = values.iter().copied().fold(f64::INFINITY, f64::min);
            Majorant::new(
                vec![1.0, 1.0],
                vec![p_max - 1.0, p_min - 1.0],
                sup(&|r: f64| r.powf(n - 1.0)),
            )
        }
        PhiOperator::SphereCap { n, rho } => Majorant::new(
            vec![1.0],
            vec![1.0],
            sup(&|r: f64| sphere_weight(*n, *rho, r)),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::operator::Term;

    #[test]
    fn power_monomial_majorant() {
        let m = default_majorant(&PhiOperator::power(2.0, 0.0).unwrap());
        assert_eq!(m.coefficients, vec![1.0]);
        assert_eq!(m.exponents, vec![1.0]);
        assert_eq!(m.a_sup, 1.0);
        assert_eq!((m.d, m.e), (1.0, 1.0));
    }

    #[test]
    fn sphere_cap_majorant() {
        let m = default_majorant(&PhiOperator::sphere_cap(2, 1.0).unwrap());
        assert_eq!(m.exponents, vec![1.0]);
        assert!((m.a_sup - 1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn monomial_sum_majorant() {
        let m = default_majorant(
            &PhiOperator::monomial_sum(vec![
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
        );
        assert_eq!(m.exponents, vec![1.0, 2.0]);
        assert_eq!((m.d, m.e), (2.0, 1.0));
        assert_eq!(m.a_sup, 1.0);
        assert_eq!(m.polynomial(2.0), 6.0);
        assert_eq!(m.polynomial_at_one(), 2.0);
    }
}
