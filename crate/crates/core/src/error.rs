use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain of {what}: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("evaluation overflow in {what} (r = {r}, v = {v})")]
    EvaluationOverflow { what: &'static str, r: f64, v: f64 },

    #[error("could not bracket the inverse of {what} below {limit:e} for target {target:e}")]
    RootNotBracketed {
        what: &'static str,
        target: f64,
        limit: f64,
    },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("gap function fell below the floor {floor:e} at r = {r:e} (incipient touchdown)")]
    GapFloorBreached { r: f64, floor: f64 },

    #[error("initial guess is not a supersolution: excess {excess:e} at r = {r:e}")]
    NotASupersolution { r: f64, excess: f64 },

    #[error("rho = {rho} is not below one; choose a smaller lambda_0")]
    RhoNotBelowOne { rho: f64 },

    #[error("F(1/2) = {0:e} is not positive")]
    DegenerateSource(f64),

    #[error("inconsistent bisection bracket: {0}")]
    InconsistentBracket(String),

    #[error("asymptotic hypotheses violated: {0}")]
    AsymptoticHypothesis(String),

    #[error("seed tail {tail:e} exceeds tolerance {tol:e}; increase the seed time T")]
    SeedTail { tail: f64, tol: f64 },

    #[error("membership in the contraction set violated: |X| = {0} > 1/4")]
    OutsideContractionSet(f64),

    #[error("grid too small: {0}")]
    DegenerateGrid(String),

    #[error("no zero crossing of v before t = {t_floor} (v = {v})")]
    NoZeroCrossing { t_floor: f64, v: f64 },

    #[error("integration integrity lost at t = {t}: {reason}")]
    Integrity { t: f64, reason: String },

    #[error("radius {r:e} lies outside the trajectory coverage [{lo:e}, {hi:e}]")]
    OutsideCoverage { r: f64, lo: f64, hi: f64 },

    #[error("fit needs at least {need} usable nodes, found {found}")]
    TooFewNodes { need: usize, found: usize },
}
