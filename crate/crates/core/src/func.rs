//! Function-valued model data: closed-form tags, piecewise-linear tables, or
//! arbitrary callables.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ScalarFn {
    Constant(f64),
    /// Piecewise-linear interpolation through `(x, y)` knots, held constant
    /// outside the knot range.
    Table(Vec<(f64, f64)>),
    Callable(Callable),
}

impl ScalarFn {
    pub fn constant(c: f64) -> Self {
        ScalarFn::Constant(c)
    }

    pub fn table(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("empty table".into()));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidParameter("non-finite table entry".into()));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate table abscissa".into()));
        }
        Ok(ScalarFn::Table(knots))
    }

    pub fn callable(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn::Callable(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Table(knots) => interpolate(knots, x),
            ScalarFn::Callable(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarFn::Constant(c) => Some(*c),
            ScalarFn::Table(k) if k.len() == 1 => Some(k[0].1),
            _ => None,
        }
    }

    /// Kinks strictly inside `(a, b)`; quadrature splits there.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            ScalarFn::Table(knots) => knots
                .iter()
                .map(|k| k.0)
                .filter(|&x| x > a && x < b)
                .collect(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant(c) => write!(f, "Constant({c})"),
            ScalarFn::Table(k) => write!(f, "Table({k:?})"),
            ScalarFn::Callable(_) => write!(f, "Callable(..)"),
        }
    }
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= x);
    let (x0, y0) = knots[i - 1];
    let (x1, y1) = knots[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// 256 deterministic sample points on `[0, 1]`, clustered at both ends
/// (Chebyshev–Lobatto nodes mapped to the unit interval).
pub fn sample_points() -> Vec<f64> {
    const COUNT: usize = 256;
    (0..COUNT)
        .map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (COUNT - 1) as f64;
            0.5 * (1.0 - theta.cos())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_and_clamps() {
        let t = ScalarFn::table(vec![(1.0, 3.0), (0.0, 1.0)]).unwrap();
        assert_eq!(t.eval(0.5), 2.0);
        assert_eq!(t.eval(-1.0), 1.0);
        assert_eq!(t.eval(2.0), 3.0);
        assert!(ScalarFn::table(vec![]).is_err());
        assert!(ScalarFn::table(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn samples_cover_unit_interval() {
        let s = sample_points();
        assert_eq!(s.len(), 256);
        assert_eq!(s[0], 0.0);
        assert!((s[255] - 1.0).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
