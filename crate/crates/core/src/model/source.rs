use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::quadrature::integrate;

/// The source `f` on `[0, 1]`.
#[derive(Debug, Clone)]
pub enum SourceProfile {
    /// `f(s) = s^γ h(s)` with permittivity `h(r) → C` as `r → 0⁺`.
    WeightedPower {
        gamma: f64,
        h: ScalarFn,
        c: f64,
    },
    Direct {
        f: ScalarFn,
    },
}

impl SourceProfile {
    /// `f(s) = C s^γ` (constant permittivity).
    pub fn weighted_power(gamma: f64, c: f64) -> Result<Self> {
        Self::weighted_power_with(gamma, ScalarFn::constant(c), c)
    }

    pub fn weighted_power_with(gamma: f64, h: ScalarFn, c: f64) -> Result<Self> {
        if !(gamma > -1.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must exceed -1, got {gamma}"
            )));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {c}"
            )));
        }
        Ok(SourceProfile::WeightedPower { gamma, h, c })
    }

    pub fn direct(f: ScalarFn) -> Self {
        SourceProfile::Direct { f }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            SourceProfile::WeightedPower { gamma, h, .. } => s.powf(*gamma) * h.eval(s),
            SourceProfile::Direct { f } => f.eval(s),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            SourceProfile::WeightedPower { gamma, .. } => Some(*gamma),
            SourceProfile::Direct { .. } => None,
        }
    }

    /// Limit constant `C` of the permittivity.
    pub fn limit_constant(&self) -> Option<f64> {
        match self {
            SourceProfile::WeightedPower { c, .. } => Some(*c),
            SourceProfile::Direct { .. } => None,
        }
    }

    /// Permittivity `h(r)`; `None` for a direct source.
    pub fn permittivity(&self, r: f64) -> Option<f64> {
        match self {
            SourceProfile::WeightedPower { h, .. } => Some(h.eval(r)),
            SourceProfile::Direct { .. } => None,
        }
    }

    pub fn has_constant_permittivity(&self) -> bool {
        matches!(self, SourceProfile::WeightedPower { h, .. } if h.as_constant().is_some())
    }

    /// `F(r) = ∫₀^r f(s) ds`.
    pub fn cumulative(&self, r: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain {
                what: "source cumulative",
                value: r,
            });
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        match self {
            SourceProfile::WeightedPower { gamma, h, .. } => match h.as_constant() {
                Some(h0) => Ok(h0 * r.powf(gamma + 1.0) / (gamma + 1.0)),
                None => integrate(|s| self.eval(s), 0.0, r, &h.breakpoints(0.0, r)),
            },
            SourceProfile::Direct { f } => match f.as_constant() {
                Some(c) => Ok(c * r),
                None => integrate(|s| f.eval(s), 0.0, r, &f.breakpoints(0.0, r)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms() {
        let d = SourceProfile::direct(ScalarFn::constant(1.0));
        assert_eq!(d.cumulative(0.5).unwrap(), 0.5);
        let w = SourceProfile::weighted_power(2.0, 1.0).unwrap();
        assert_eq!(w.cumulative(1.0).unwrap(), 1.0 / 3.0);
        assert_eq!(w.cumulative(0.0).unwrap(), 0.0);
        assert_eq!(d.cumulative(0.0).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_path_matches_closed_form() {
        let closed = SourceProfile::weighted_power(2.5, 1.5).unwrap();
        let quad =
            SourceProfile::weighted_power_with(2.5, ScalarFn::callable(|_| 1.5), 1.5).unwrap();
        for &r in &[0.1, 0.5, 1.0] {
            assert_relative_eq!(
                quad.cumulative(r).unwrap(),
                closed.cumulative(r).unwrap(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn table_permittivity_splits_at_knots() {
        let h = ScalarFn::table(vec![(0.0, 1.0), (0.5, 2.0), (1.0, 2.0)]).unwrap();
        let src = SourceProfile::weighted_power_with(0.0, h, 1.0).unwrap();
        // ∫₀^0.5 (1 + 2s) ds + 0.5·2 = 0.75 + 1
        assert_relative_eq!(src.cumulative(1.0).unwrap(), 1.75, max_relative = 1e-10);
    }

    #[test]
    fn out_of_range_radius() {
        let d = SourceProfile::direct(ScalarFn::constant(1.0));
        assert!(d.cumulative(1.5).is_err());
    }
}
