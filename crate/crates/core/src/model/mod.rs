//! Problem data: operator kernel, gap nonlinearity, and source.

mod gap;
mod majorant;
mod operator;
mod source;
mod validate;

pub use gap::GapFunction;
pub use majorant::{default_majorant, Majorant};
pub use operator::{PhiOperator, Term, TOL_INV, V_MAX};
pub use source::SourceProfile;
pub use validate::{validate_hypotheses, Check, Scope, ValidationReport};

/// A complete instance of the boundary-value problem
/// `φ(r, −u'(r)) = λ ∫₀^r f(s)/g(u(s)) ds`, `u(1) = 0`.
#[derive(Debug, Clone)]
pub struct Model {
    pub operator: PhiOperator,
    pub gap: GapFunction,
    pub source: SourceProfile,
}

impl Model {
    pub fn new(operator: PhiOperator, gap: GapFunction, source: SourceProfile) -> Self {
        Model {
            operator,
            gap,
            source,
        }
    }

    /// The radial operator `r^{-γ}(r^α|u'|^β u')'` with gap `(1−u)^p` and
    /// constant permittivity `C`.
    pub fn power_law(alpha: f64, beta: f64, gamma: f64, p: f64, c: f64) -> crate::Result<Self> {
        Ok(Model {
            operator: PhiOperator::power(alpha, beta)?,
            gap: GapFunction::mems(p)?,
            source: SourceProfile::weighted_power(gamma, c)?,
        })
    }

    /// `-Δu = λ/(1−u)²` on the unit ball of ℝ³ (α = γ = 2, β = 0).
    pub fn reference() -> Self {
        Self::power_law(2.0, 0.0, 2.0, 2.0, 1.0).expect("reference parameters are valid")
    }

    /// Radial k-Hessian in dimension N with gap `(1−u)^p`.
    pub fn k_hessian(n: u32, k: u32, p: f64) -> crate::Result<Self> {
        let (n, k) = (n as f64, k as f64);
        Self::power_law(n - k, k - 1.0, n - 1.0, p, 1.0)
    }

    /// Radial p-Laplacian in dimension N with gap `(1−u)^gap_power`.
    pub fn p_laplacian(n: u32, p: f64, gap_power: f64) -> crate::Result<Self> {
        let n = n as f64;
        Self::power_law(n - 1.0, p - 2.0, n - 1.0, gap_power, 1.0)
    }

    pub fn majorant(&self) -> Majorant {
        default_majorant(&self.operator)
    }
}
