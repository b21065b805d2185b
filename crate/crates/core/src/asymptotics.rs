//! Near-origin law of the touchdown solution for the power-monomial model:
//! `u*(r) = 1 − 𝒞 r^{θσ(1−q)} + o(r^{θσ(1−q)})`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Model, PhiOperator};
use crate::monotone::SolutionGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Gap asymptotics `g'(u) ~ −A g(u)^q` as `u → 1`.
    pub a: f64,
    pub q: f64,
    /// Limit of the permittivity at the origin.
    pub c: f64,
    /// `γ + 2 + β − α`.
    pub theta: f64,
    /// `1 / ((1−q)(β+1) + 1)`.
    pub sigma: f64,
    pub kappa: f64,
    /// `θσ(1−q)`.
    pub exponent: f64,
}

impl AsymptoticConstants {
    pub fn compute(alpha: f64, beta: f64, gamma: f64, a: f64, q: f64, c: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::AsymptoticHypothesis(msg));
        if !(beta > -1.0) {
            return bad(format!("beta must exceed -1, got {beta}"));
        }
        if !(alpha > beta + 1.0) {
            return bad(format!(
                "need alpha > beta + 1, got alpha = {alpha}, beta = {beta}"
            ));
        }
        if !(gamma >= alpha) {
            return bad(format!(
                "need gamma >= alpha, got gamma = {gamma}, alpha = {alpha}"
            ));
        }
        if !(a > 0.0) || !(q < 1.0) || !(c > 0.0) {
            return bad(format!(
                "need A > 0, q < 1, C > 0, got A = {a}, q = {q}, C = {c}"
            ));
        }
        let theta = gamma + 2.0 + beta - alpha;
        let sigma = 1.0 / ((1.0 - q) * (beta + 1.0) + 1.0);
        let margin = gamma + 1.0 - theta * sigma;
        if !(margin > 0.0) {
            return bad(format!(
                "gamma + 1 - theta*sigma = {margin} must be positive"
            ));
        }
        let kappa = (a / (theta * sigma)).powf((beta + 1.0) * sigma) * (c / margin).powf(sigma);
        Ok(AsymptoticConstants {
            alpha,
            beta,
            gamma,
            a,
            q,
            c,
            theta,
            sigma,
            kappa,
            exponent: theta * sigma * (1.0 - q),
        })
    }

    /// Constants for a power-monomial model with a weighted-power source.
    pub fn for_model(model: &Model) -> Result<Self> {
        let PhiOperator::PowerMonomial { alpha, beta } = model.operator else {
            return Err(Error::AsymptoticHypothesis(format!(
                "the asymptotic law needs a power-monomial operator, got {}",
                model.operator.name()
            )));
        };
        let (Some(gamma), Some(c)) = (model.source.gamma(), model.source.limit_constant()) else {
            return Err(Error::AsymptoticHypothesis(
                "the asymptotic law needs a weighted-power source".into(),
            ));
        };
        let (a, q) = model.gap.asymptotic_data();
        Self::compute(alpha, beta, gamma, a, q, c)
    }

    /// `γ + 1 − θσ`.
    pub fn margin(&self) -> f64 {
        self.gamma + 1.0 - self.theta * self.sigma
    }

    /// `𝒞(λ*) = κ^{1−q} λ*^{σ(1−q)} / (A(1−q))`.
    pub fn coef(&self, lambda_star: f64) -> f64 {
        let s = 1.0 - self.q;
        self.kappa.powf(s) * lambda_star.powf(self.sigma * s) / (self.a * s)
    }
}

/// `1 − 𝒞(λ*) r^{θσ(1−q)}`.
pub fn expansion_eval(constants: &AsymptoticConstants, lambda_star: f64, r: f64) -> f64 {
    1.0 - constants.coef(lambda_star) * r.powf(constants.exponent)
}

pub const DEFAULT_WINDOW: (f64, f64) = (1e-4, 1e-2);
const MIN_FIT_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub coef: f64,
    pub r2: f64,
    pub nodes: usize,
}

/// Least-squares line through `(ln r, ln(1 − u))` on the window.
pub fn fit_asymptotics(u: &SolutionGrid, window: (f64, f64)) -> Result<PowerFit> {
    let points: Vec<(f64, f64)> = u
        .grid
        .nodes()
        .iter()
        .zip(&u.u)
        .filter(|(r, v)| **r >= window.0 && **r <= window.1 && **v < 1.0)
        .map(|(r, v)| (r.ln(), (1.0 - v).ln()))
        .collect();
    if points.len() < MIN_FIT_NODES {
        return Err(Error::TooFewNodes {
            need: MIN_FIT_NODES,
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    // a flat profile leaves only rounding in syy
    let r2 = if syy > 1e-20 * n * (1.0 + my * my) {
        1.0 - ss_res / syy
    } else {
        0.0
    };
    Ok(PowerFit {
        exponent: slope,
        coef: intercept.exp(),
        r2,
        nodes: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::graded_grid;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn reference_constants() {
        let k = AsymptoticConstants::for_model(&Model::reference()).unwrap();
        assert_eq!(k.theta, 2.0);
        assert_relative_eq!(k.sigma, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(k.exponent, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(k.kappa, 0.9f64.powf(2.0 / 3.0), max_relative = 1e-14);
        assert!((k.kappa - 0.932170).abs() < 1e-6);
        // 𝒞(1) = κ^{1/2}
        assert_relative_eq!(k.coef(1.0), k.kappa.sqrt(), max_relative = 1e-14);
        assert!((expansion_eval(&k, 1.0, 1e-3) - 0.990345).abs() < 1e-6);
    }

    #[test]
    fn table_rows() {
        for n in 3..8 {
            for p in [1.5, 2.0, 3.0] {
                if let Ok(m) = Model::p_laplacian(n, p, 2.0) {
                    if let Ok(k) = AsymptoticConstants::for_model(&m) {
                        assert_relative_eq!(k.theta, p, max_relative = 1e-14);
                    }
                }
            }
            for kk in 1..n {
                let m = Model::k_hessian(n, kk, 2.0).unwrap();
                if let Ok(k) = AsymptoticConstants::for_model(&m) {
                    assert_eq!(k.theta, 2.0 * kk as f64);
                }
            }
        }
    }

    #[test]
    fn hypothesis_violations() {
        assert!(AsymptoticConstants::compute(1.0, 0.5, 2.0, 2.0, 0.5, 1.0).is_err());
        assert!(AsymptoticConstants::compute(3.0, 0.0, 2.0, 2.0, 0.5, 1.0).is_err());
        assert!(AsymptoticConstants::compute(2.0, 0.0, 2.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn expansion_limits() {
        let k = AsymptoticConstants::for_model(&Model::reference()).unwrap();
        assert!((1.0 - expansion_eval(&k, 1.0, 1e-30)).abs() < 1e-15);
        let unit = AsymptoticConstants {
            kappa: 1.0,
            a: 1.0,
            q: 0.0,
            sigma: 0.5,
            ..k
        };
        assert_eq!(expansion_eval(&unit, 1.0, 1.0), 0.0);
    }

    fn synthetic(profile: impl Fn(f64) -> f64) -> SolutionGrid {
        let grid = Arc::new(graded_grid(2048, 2.0).unwrap());
        let u = grid.nodes().iter().map(|&r| profile(r)).collect();
        SolutionGrid {
            grid,
            u,
            lambda: 1.0,
        }
    }

    #[test]
    fn exact_power_law_fit() {
        let fit = fit_asymptotics(
            &synthetic(|r| 1.0 - 0.9 * r.powf(2.0 / 3.0)),
            DEFAULT_WINDOW,
        )
        .unwrap();
        assert_relative_eq!(fit.exponent, 2.0 / 3.0, max_relative = 1e-10);
        assert_relative_eq!(fit.coef, 0.9, max_relative = 1e-10);
        assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn constant_profile_has_no_power_law() {
        let fit = fit_asymptotics(&synthetic(|_| 0.5), DEFAULT_WINDOW).unwrap();
        assert!(fit.exponent.abs() < 1e-15);
        assert_eq!(fit.r2, 0.0);
    }

    #[test]
    fn narrow_window_rejected() {
        assert!(matches!(
            fit_asymptotics(&synthetic(|r| 1.0 - r), (0.5, 0.5001)),
            Err(Error::TooFewNodes { .. })
        ));
    }
}
