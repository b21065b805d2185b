//! Touchdown solution and pull-in voltage by backward shooting.
//!
//! With `r = e^{T*−t}` the touchdown profile becomes `v(t) = u*(e^{T*−t})`,
//! which near `t = +∞` follows the singular ansatz
//! `v = g⁻¹(κ e^{−θσt})`. Seeding there and integrating
//!
//! ```text
//! w' = −e^{−(γ+1)t} h / g(v),   v' = e^{(α/(β+1) − 1)t} w^{1/(β+1)}
//! ```
//!
//! backward until `v` vanishes gives `T*`, `λ* = e^{−θT*}` and the profile.
//! The state is carried as the depth `z = 1 − v` so the seed, where `v` is
//! within `1e-5` of one, loses no digits.

use std::sync::Arc;

use serde::Serialize;

use crate::asymptotics::AsymptoticConstants;
use crate::error::{Error, Result};
use crate::model::{GapFunction, Model, SourceProfile};
use crate::monotone::{Numerics, SolutionGrid};
use crate::quadrature::{graded_grid, integrate, RadialGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShooterConfig {
    /// Seed time `T`.
    pub t_seed: f64,
    pub dt: f64,
    /// Integration gives up below this time.
    pub t_floor: f64,
    /// Required bound on `κ e^{−θσT}`.
    pub seed_tail_tol: f64,
    /// Tolerance on `v(T*)`.
    pub root_tol: f64,
    /// Largest relative change of `w` accepted in one step.
    pub max_w_change: f64,
    /// Length of the scan past `T*` for further crossings.
    pub scan_past: f64,
    /// Passes of the `T*`-dependent permittivity update (variable `h` only).
    pub outer_passes: usize,
    /// Seed from the refinement map instead of the bare ansatz.
    pub refine_seed: bool,
}

pub const DEFAULT_SEED_TAIL: f64 = 1e-10;

impl ShooterConfig {
    /// Defaults with `T` the smallest time meeting the seed tail bound.
    pub fn auto(k: &AsymptoticConstants) -> Self {
        Self::with_seed_time(minimal_seed_time(k, DEFAULT_SEED_TAIL))
    }

    pub fn with_seed_time(t_seed: f64) -> Self {
        ShooterConfig {
            t_seed,
            dt: 1e-3,
            t_floor: t_seed - 200.0,
            seed_tail_tol: DEFAULT_SEED_TAIL,
            root_tol: 1e-10,
            max_w_change: 0.1,
            scan_past: 1.0,
            outer_passes: 3,
            refine_seed: false,
        }
    }
}

/// Smallest `T` with `κ e^{−θσT} ≤ tol`.
pub fn minimal_seed_time(k: &AsymptoticConstants, tol: f64) -> f64 {
    (k.kappa / tol).ln() / (k.theta * k.sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShooterState {
    pub t: f64,
    pub v: f64,
    pub w: f64,
    /// `1 − v`, carried without cancellation.
    pub depth: f64,
}

#[derive(Debug, Clone)]
pub struct ShooterResult {
    pub constants: AsymptoticConstants,
    pub t_star: f64,
    pub lambda_star: f64,
    /// Accepted states from `T*` up to the seed, increasing in `t`.
    pub trajectory: Vec<ShooterState>,
    pub touchdown_profile: Option<SolutionGrid>,
    pub seed: ShooterState,
    /// `κ e^{−θσT}`.
    pub seed_tail: f64,
    /// Sign changes of `v` found in the scan past `T*`.
    pub extra_crossings: usize,
    /// Shots taken; more than one only for variable permittivity.
    pub passes: usize,
    /// The shift `t_ref` used for `h(e^{t_ref − t})` in the last pass.
    pub h_shift: f64,
}

impl ShooterResult {
    /// Radii covered by the trajectory.
    pub fn coverage(&self) -> (f64, f64) {
        ((self.t_star - self.seed.t).exp(), 1.0)
    }
}

/// The backward system in the depth variable.
struct Dynamics<'a> {
    k: &'a AsymptoticConstants,
    gap: &'a GapFunction,
    source: &'a SourceProfile,
    h_shift: f64,
    v_rate: f64,
    inv_b: f64,
}

impl<'a> Dynamics<'a> {
    fn new(
        k: &'a AsymptoticConstants,
        gap: &'a GapFunction,
        source: &'a SourceProfile,
        h_shift: f64,
    ) -> Self {
        Dynamics {
            k,
            gap,
            source,
            h_shift,
            v_rate: k.alpha / (k.beta + 1.0) - 1.0,
            inv_b: 1.0 / (k.beta + 1.0),
        }
    }

    fn h(&self, t: f64) -> f64 {
        permittivity_at(self.source, self.k, self.h_shift, t)
    }

    /// `v' = −z'`.
    fn slope(&self, t: f64, w: f64) -> f64 {
        (self.v_rate * t).exp() * w.powf(self.inv_b)
    }

    fn rhs(&self, t: f64, z: f64, w: f64) -> Result<(f64, f64)> {
        if !(w > 0.0) {
            return Err(Error::Integrity {
                t,
                reason: format!("w = {w} is not positive"),
            });
        }
        let dz = -self.slope(t, w);
        let dw = -(-(self.k.gamma + 1.0) * t).exp() * self.h(t) / self.gap.eval_depth(z);
        if !dz.is_finite() || !dw.is_finite() {
            return Err(Error::Integrity {
                t,
                reason: format!("non-finite derivative (z = {z}, w = {w})"),
            });
        }
        Ok((dz, dw))
    }

    fn rk4(&self, t: f64, z: f64, w: f64, h: f64) -> Result<(f64, f64)> {
        let (k1z, k1w) = self.rhs(t, z, w)?;
        let (k2z, k2w) = self.rhs(t + 0.5 * h, z + 0.5 * h * k1z, w + 0.5 * h * k1w)?;
        let (k3z, k3w) = self.rhs(t + 0.5 * h, z + 0.5 * h * k2z, w + 0.5 * h * k2w)?;
        let (k4z, k4w) = self.rhs(t + h, z + h * k3z, w + h * k3w)?;
        Ok((
            z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
            w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        ))
    }
}

fn permittivity_at(source: &SourceProfile, k: &AsymptoticConstants, h_shift: f64, t: f64) -> f64 {
    if source.has_constant_permittivity() {
        return k.c;
    }
    let r = (h_shift - t).exp().min(1.0);
    source.permittivity(r).unwrap_or(k.c)
}

/// `ψ(t) = κ⁻¹ ∫_t^∞ e^{(α−β−1)(t−s)} e^{−θ(1−σ)s} h(s) ds`, with
/// `h(s) = h(e^{h_shift − s})`.
pub fn psi_eval(
    k: &AsymptoticConstants,
    source: &SourceProfile,
    h_shift: f64,
    t: f64,
) -> Result<f64> {
    let m = k.margin();
    if !(m > 0.0) {
        return Err(Error::AsymptoticHypothesis(format!(
            "gamma + 1 - theta*sigma = {m} must be positive"
        )));
    }
    let decay = (-k.theta * (1.0 - k.sigma) * t).exp();
    if source.has_constant_permittivity() {
        return Ok(k.c * decay / (k.kappa * m));
    }
    // s = t + τ; stop where e^{−mτ} drops below 1e-16
    let span = 16.0 * std::f64::consts::LN_10 / m;
    let integral = integrate(
        |tau| (-m * tau).exp() * permittivity_at(source, k, h_shift, t + tau),
        0.0,
        span,
        &[],
    )?;
    let psi = decay * integral / k.kappa;
    if !psi.is_finite() {
        return Err(Error::Integrity {
            t,
            reason: "divergent psi tail".into(),
        });
    }
    Ok(psi)
}

/// Initial state at `T` from the singular ansatz with zero correction.
pub fn seed_state(
    k: &AsymptoticConstants,
    gap: &GapFunction,
    source: &SourceProfile,
    h_shift: f64,
    t_seed: f64,
    tail_tol: f64,
) -> Result<ShooterState> {
    let tail = k.kappa * (-k.theta * k.sigma * t_seed).exp();
    // the minimal seed time meets the bound only up to rounding
    if !(tail <= tail_tol * (1.0 + 1e-12)) {
        return Err(Error::SeedTail {
            tail,
            tol: tail_tol,
        });
    }
    let depth = gap.inverse_depth(tail)?;
    let w = ((k.beta + 1.0 - k.alpha) * t_seed).exp() * psi_eval(k, source, h_shift, t_seed)?;
    Ok(ShooterState {
        t: t_seed,
        v: 1.0 - depth,
        w,
        depth,
    })
}

/// One application of the refinement map `Γ` on the nodes `ts` (increasing,
/// last node `T_max`), with the correction `x` beyond `T_max` taken as zero.
pub fn gamma_refine(
    k: &AsymptoticConstants,
    gap: &GapFunction,
    source: &SourceProfile,
    h_shift: f64,
    ts: &[f64],
    x: &[f64],
) -> Result<Vec<f64>> {
    Ok(refine_parts(k, gap, source, h_shift, ts, x)?.0)
}

/// `(Γ(x), y)` on the nodes.
fn refine_parts(
    k: &AsymptoticConstants,
    gap: &GapFunction,
    source: &SourceProfile,
    h_shift: f64,
    ts: &[f64],
    x: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = ts.len();
    if n < 3 || x.len() != n || ts.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::DegenerateGrid(format!(
            "refinement needs at least 3 increasing nodes with matching values, got {n}"
        )));
    }
    let ts_rate = k.theta * k.sigma;
    let scaled: Vec<f64> = ts
        .iter()
        .zip(x)
        .map(|(t, x)| x * (ts_rate * t).exp() / k.kappa)
        .collect();
    let worst = scaled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst > 0.25 {
        return Err(Error::OutsideContractionSet(worst));
    }

    // y(t) = −κ⁻¹ ∫_t^{T_max} e^{(α−β−1)(t−s)} e^{−θ(1−σ)s} h X/(1+X) ds
    let rate = k.alpha - k.beta - 1.0;
    let q: Vec<f64> = ts
        .iter()
        .zip(&scaled)
        .map(|(&t, &xs)| {
            (-k.theta * (1.0 - k.sigma) * t).exp() * permittivity_at(source, k, h_shift, t) * xs
                / (1.0 + xs)
        })
        .collect();
    let mut y = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        let damp = (rate * (ts[i] - ts[i + 1])).exp();
        acc = damp * acc + 0.5 * (ts[i + 1] - ts[i]) * (q[i] + damp * q[i + 1]);
        y[i] = -acc / k.kappa;
    }

    let mut integrand = Vec::with_capacity(n);
    for i in 0..n {
        let base = k.kappa * (-ts_rate * ts[i]).exp();
        let total = psi_eval(k, source, h_shift, ts[i])? + y[i];
        let slope = gap.derivative_depth(gap.inverse_depth(base + x[i])?);
        integrand.push(total.powf(1.0 / (k.beta + 1.0)) * slope + ts_rate * base);
    }
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        acc += 0.5 * (ts[i + 1] - ts[i]) * (integrand[i] + integrand[i + 1]);
        out[i] = -acc;
    }
    Ok((out, y))
}

/// Seed corrected by a few sweeps of `Γ` on `[T, T + 30]`.
fn refined_seed(
    k: &AsymptoticConstants,
    gap: &GapFunction,
    source: &SourceProfile,
    h_shift: f64,
    t_seed: f64,
    tail_tol: f64,
) -> Result<ShooterState> {
    let bare = seed_state(k, gap, source, h_shift, t_seed, tail_tol)?;
    let nodes = 3001;
    let ts: Vec<f64> = (0..nodes).map(|i| t_seed + 0.01 * i as f64).collect();
    let mut x = vec![0.0; nodes];
    let mut y = vec![0.0; nodes];
    for _ in 0..4 {
        (x, y) = refine_parts(k, gap, source, h_shift, &ts, &x)?;
    }
    let tail = k.kappa * (-k.theta * k.sigma * t_seed).exp();
    let depth = gap.inverse_depth(tail + x[0])?;
    let psi = psi_eval(k, source, h_shift, t_seed)?;
    Ok(ShooterState {
        depth,
        v: 1.0 - depth,
        w: ((k.beta + 1.0 - k.alpha) * t_seed).exp() * (psi + y[0]),
        ..bare
    })
}

struct Shot {
    t_star: f64,
    trajectory: Vec<ShooterState>,
    seed: ShooterState,
    extra_crossings: usize,
}

fn shoot_once(dyn_: &Dynamics, seed: ShooterState, cfg: &ShooterConfig) -> Result<Shot> {
    let state = |t: f64, z: f64, w: f64| ShooterState {
        t,
        v: 1.0 - z,
        w,
        depth: z,
    };
    let mut traj = vec![seed];
    let (mut t, mut z, mut w) = (seed.t, seed.depth, seed.w);

    let step = |t: f64, z: f64, w: f64| -> Result<(f64, f64, f64)> {
        let mut h = -cfg.dt;
        for _ in 0..40 {
            let (z1, w1) = dyn_.rk4(t, z, w, h)?;
            if (w1 - w).abs() <= cfg.max_w_change * w {
                return Ok((t + h, z1, w1));
            }
            h *= 0.5;
        }
        Err(Error::Integrity {
            t,
            reason: "step control could not limit the change of w".into(),
        })
    };

    loop {
        if t <= cfg.t_floor {
            return Err(Error::NoZeroCrossing {
                t_floor: cfg.t_floor,
                v: 1.0 - z,
            });
        }
        let (t1, z1, w1) = step(t, z, w)?;
        if !(w1 > 0.0) || !(dyn_.slope(t1, w1) > 0.0) {
            return Err(Error::Integrity {
                t: t1,
                reason: format!("lost monotonicity (w = {w1})"),
            });
        }
        if z1 >= 1.0 {
            let tau = crossing(dyn_, t, z, w, t1 - t, z1, cfg.root_tol)?;
            let (zs, ws) = dyn_.rk4(t, z, w, tau)?;
            let t_star = t + tau;
            traj.push(state(t_star, zs, ws));
            traj.reverse();
            let extra = scan_past(dyn_, (t1, z1, w1), t_star - cfg.scan_past, cfg);
            return Ok(Shot {
                t_star,
                trajectory: traj,
                seed,
                extra_crossings: extra,
            });
        }
        traj.push(state(t1, z1, w1));
        (t, z, w) = (t1, z1, w1);
    }
}

/// Signed partial step `τ ∈ [h, 0]` from `(t, z, w)` landing on `z = 1`,
/// by Illinois-modified regula falsi on RK4 sub-steps.
fn crossing(dyn_: &Dynamics, t: f64, z: f64, w: f64, h: f64, z1: f64, tol: f64) -> Result<f64> {
    let (mut a, mut fa) = (0.0, z - 1.0);
    let (mut b, mut fb) = (h, z1 - 1.0);
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = dyn_.rk4(t, z, w, c)?.0 - 1.0;
        if fc.abs() <= tol {
            return Ok(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < 1e-15 * h.abs() {
            return Ok(c);
        }
    }
    Ok((a * fb - b * fa) / (fb - fa))
}

/// Sign changes of `v` on `[t_end, t]` after the first crossing.
fn scan_past(dyn_: &Dynamics, start: (f64, f64, f64), t_end: f64, cfg: &ShooterConfig) -> usize {
    let (mut t, mut z, mut w) = start;
    let mut changes = 0;
    while t > t_end {
        let Ok((z1, w1)) = dyn_.rk4(t, z, w, -cfg.dt) else {
            break;
        };
        if !(w1 > 0.0) || !z1.is_finite() {
            break;
        }
        if (z1 >= 1.0) != (z >= 1.0) {
            changes += 1;
        }
        (t, z, w) = (t - cfg.dt, z1, w1);
    }
    changes
}

/// Shoot from `cfg.t_seed` down to the first zero of `v`.
pub fn shoot_backward(model: &Model, cfg: &ShooterConfig) -> Result<ShooterResult> {
    let k = AsymptoticConstants::for_model(model)?;
    if !(cfg.dt > 0.0) || !(cfg.t_seed > cfg.t_floor) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and T > t_floor, got dt = {}, T = {}, t_floor = {}",
            cfg.dt, cfg.t_seed, cfg.t_floor
        )));
    }
    let constant_h = model.source.has_constant_permittivity();
    let mut h_shift = 0.0;
    let mut passes = 0;
    loop {
        passes += 1;
        let dyn_ = Dynamics::new(&k, &model.gap, &model.source, h_shift);
        let seed = if cfg.refine_seed {
            refined_seed(
                &k,
                &model.gap,
                &model.source,
                h_shift,
                cfg.t_seed,
                cfg.seed_tail_tol,
            )?
        } else {
            seed_state(
                &k,
                &model.gap,
                &model.source,
                h_shift,
                cfg.t_seed,
                cfg.seed_tail_tol,
            )?
        };
        let shot = shoot_once(&dyn_, seed, cfg)?;
        let settled = (shot.t_star - h_shift).abs() < 1e-12;
        if constant_h || settled || passes >= cfg.outer_passes {
            return Ok(ShooterResult {
                constants: k,
                t_star: shot.t_star,
                lambda_star: (-k.theta * shot.t_star).exp(),
                trajectory: shot.trajectory,
                touchdown_profile: None,
                seed: shot.seed,
                seed_tail: k.kappa * (-k.theta * k.sigma * cfg.t_seed).exp(),
                extra_crossings: shot.extra_crossings,
                passes,
                h_shift,
            });
        }
        h_shift = shot.t_star;
    }
}

/// `u*(r) = v(T* − ln r)` on the grid, by monotone cubic Hermite
/// interpolation of the depth with slopes from the ODE.
pub fn reconstruct_touchdown(
    result: &ShooterResult,
    model: &Model,
    grid: &Arc<RadialGrid>,
) -> Result<SolutionGrid> {
    let traj = &result.trajectory;
    let k = &result.constants;
    let dyn_ = Dynamics::new(k, &model.gap, &model.source, result.h_shift);
    let (lo, hi) = result.coverage();
    let ts: Vec<f64> = traj.iter().map(|s| s.t).collect();
    let slopes: Vec<f64> = traj.iter().map(|s| -dyn_.slope(s.t, s.w)).collect();
    let mut u = Vec::with_capacity(grid.len());
    for &r in grid.nodes() {
        if r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12) {
            return Err(Error::OutsideCoverage { r, lo, hi });
        }
        let t = (result.t_star - r.ln()).clamp(ts[0], ts[ts.len() - 1]);
        let i = match ts.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(ts.len() - 2),
        };
        let z = hermite_monotone(
            (ts[i], traj[i].depth, slopes[i]),
            (ts[i + 1], traj[i + 1].depth, slopes[i + 1]),
            t,
        );
        u.push(1.0 - z);
    }
    Ok(SolutionGrid {
        grid: grid.clone(),
        u,
        lambda: result.lambda_star,
    })
}

fn hermite_monotone(a: (f64, f64, f64), b: (f64, f64, f64), t: f64) -> f64 {
    let (t0, y0, mut m0) = a;
    let (t1, y1, mut m1) = b;
    let h = t1 - t0;
    let delta = (y1 - y0) / h;
    if delta == 0.0 {
        m0 = 0.0;
        m1 = 0.0;
    } else {
        let (mut al, mut be) = (m0 / delta, m1 / delta);
        al = al.max(0.0);
        be = be.max(0.0);
        let norm = al * al + be * be;
        if norm > 9.0 {
            let tau = 3.0 / norm.sqrt();
            al *= tau;
            be *= tau;
        }
        m0 = al * delta;
        m1 = be * delta;
    }
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

/// Shoot and reconstruct on the problem grid, raising `T` when the seed end
/// does not reach the guard node.
pub fn shoot_touchdown(
    model: &Model,
    numerics: &Numerics,
    cfg: &ShooterConfig,
) -> Result<ShooterResult> {
    let grid = Arc::new(graded_grid(numerics.cells, numerics.grading)?);
    let mut cfg = cfg.clone();
    let mut result = shoot_backward(model, &cfg)?;
    let needed = result.t_star - grid.guard().ln() + 0.5;
    if cfg.t_seed < needed {
        cfg.t_floor += needed - cfg.t_seed;
        cfg.t_seed = needed;
        result = shoot_backward(model, &cfg)?;
    }
    result.touchdown_profile = Some(reconstruct_touchdown(&result, model, &grid)?);
    Ok(result)
}
