use crate::error::{Error, Result};
use crate::func::ScalarFn;

/// The gap nonlinearity `g`, strictly decreasing with `g(1) = 0`.
#[derive(Debug, Clone)]
pub enum GapFunction {
    /// `g(u) = (1 − u)^p`.
    MemsPower { p: f64 },
    /// User-supplied `g` and `g'` with the asymptotic data
    /// `g'(u) ~ −A g(u)^q` as `u → 1⁻`.
    Custom {
        g: ScalarFn,
        dg: ScalarFn,
        a: f64,
        q: f64,
    },
}

impl GapFunction {
    pub fn mems(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gap power must be positive, got {p}"
            )));
        }
        Ok(GapFunction::MemsPower { p })
    }

    pub fn custom(g: ScalarFn, dg: ScalarFn, a: f64, q: f64) -> Self {
        GapFunction::Custom { g, dg, a, q }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            GapFunction::MemsPower { p } => {
                if u >= 1.0 {
                    0.0
                } else {
                    (1.0 - u).powf(*p)
                }
            }
            GapFunction::Custom { g, .. } => g.eval(u),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            GapFunction::MemsPower { p } => {
                if u >= 1.0 {
                    0.0
                } else {
                    -p * (1.0 - u).powf(p - 1.0)
                }
            }
            GapFunction::Custom { dg, .. } => dg.eval(u),
        }
    }

    /// `g⁻¹(w)` for `w ≥ 0`.
    pub fn inverse(&self, w: f64) -> Result<f64> {
        if !(w >= 0.0) {
            return Err(Error::Domain {
                what: "gap inverse",
                value: w,
            });
        }
        match self {
            GapFunction::MemsPower { p } => Ok(1.0 - w.powf(1.0 / p)),
            GapFunction::Custom { g, .. } => {
                let g = |u: f64| g.eval(u);
                let mut lo = 0.0;
                while g(lo) < w {
                    lo = 2.0 * lo - 1.0;
                    if lo < -1e12 {
                        return Err(Error::RootNotBracketed {
                            what: "gap",
                            target: w,
                            limit: 1e12,
                        });
                    }
                }
                let mut hi = 1.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid) > w {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// `g(1 − z)`, without forming `1 − z` where a closed form allows.
    pub fn eval_depth(&self, z: f64) -> f64 {
        match self {
            GapFunction::MemsPower { p } => {
                if z <= 0.0 {
                    0.0
                } else {
                    z.powf(*p)
                }
            }
            GapFunction::Custom { g, .. } => g.eval(1.0 - z),
        }
    }

    /// `g'(1 − z)`.
    pub fn derivative_depth(&self, z: f64) -> f64 {
        match self {
            GapFunction::MemsPower { p } => {
                if z <= 0.0 {
                    0.0
                } else {
                    -p * z.powf(p - 1.0)
                }
            }
            GapFunction::Custom { dg, .. } => dg.eval(1.0 - z),
        }
    }

    /// `1 − g⁻¹(w)`.
    pub fn inverse_depth(&self, w: f64) -> Result<f64> {
        match self {
            GapFunction::MemsPower { p } if w >= 0.0 => Ok(w.powf(1.0 / p)),
            _ => Ok(1.0 - self.inverse(w)?),
        }
    }

    /// `(A, q)` with `g'(u) = −A g(u)^q (1 + o(1))` as `u → 1⁻`.
    pub fn asymptotic_data(&self) -> (f64, f64) {
        match self {
            GapFunction::MemsPower { p } => (*p, (p - 1.0) / p),
            GapFunction::Custom { a, q, .. } => (*a, *q),
        }
    }
}
