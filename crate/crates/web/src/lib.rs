//! wasm-bindgen entry points for the static demo page. Every export takes
//! plain numbers and returns a JSON string; the `*_json` functions hold the
//! logic so they can be exercised natively.

// NaN-rejecting guards are written as !(x > a).
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use wasm_bindgen::prelude::*;

use touchdown_core::asymptotics::{
    expansion_eval, fit_asymptotics, AsymptoticConstants, PowerFit, DEFAULT_WINDOW,
};
use touchdown_core::model::Model;
use touchdown_core::monotone::{solve_from_subsolution, Numerics, Problem, Status};
use touchdown_core::pullin::{bisect_pullin, branch_sweep};
use touchdown_core::shooter::{shoot_touchdown, ShooterConfig};

/// The power-law model `r^{-γ}(r^α|u'|^β u')' = λ C/(1−u)^p`.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub c: f64,
    pub cells: usize,
}

impl Params {
    fn problem(&self) -> Result<Problem, String> {
        let model = self.model()?;
        Problem::new(model, Numerics::with_cells(self.cells)).map_err(|e| e.to_string())
    }

    fn model(&self) -> Result<Model, String> {
        if self.cells < 8 || self.cells > 1 << 16 {
            return Err(format!(
                "grid size must lie in [8, 65536], got {}",
                self.cells
            ));
        }
        Model::power_law(self.alpha, self.beta, self.gamma, self.p, self.c)
            .map_err(|e| e.to_string())
    }
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Thin out a profile for plotting.
fn decimate(r: &[f64], u: &[f64], keep: usize) -> (Vec<f64>, Vec<f64>) {
    let stride = (r.len() / keep.max(1)).max(1);
    let mut idx: Vec<usize> = (0..r.len()).step_by(stride).collect();
    if idx.last() != Some(&(r.len() - 1)) {
        idx.push(r.len() - 1);
    }
    (
        idx.iter().map(|&i| r[i]).collect(),
        idx.iter().map(|&i| u[i]).collect(),
    )
}

#[derive(Serialize)]
struct Profile {
    lambda: f64,
    status: Status,
    iterations: usize,
    residual: Option<f64>,
    u0: f64,
    r: Vec<f64>,
    u: Vec<f64>,
}

pub fn solve_profile_json(params: Params, lambda: f64) -> Result<String, String> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(format!("lambda must be non-negative, got {lambda}"));
    }
    let problem = params.problem()?;
    let (sol, rep) = solve_from_subsolution(&problem, lambda).map_err(|e| e.to_string())?;
    let (r, u) = decimate(sol.grid.nodes(), &sol.u, 400);
    to_json(&Profile {
        lambda,
        status: rep.status,
        iterations: rep.iterations,
        residual: rep.residual.is_finite().then_some(rep.residual),
        u0: sol.u0(),
        r,
        u,
    })
}

#[derive(Serialize)]
struct SweepPoint {
    lambda: f64,
    u0: f64,
    converged: bool,
}

#[derive(Serialize)]
struct Sweep {
    lower: f64,
    upper: f64,
    bracket: [f64; 2],
    points: Vec<SweepPoint>,
}

pub fn branch_sweep_json(params: Params, points: usize) -> Result<String, String> {
    let problem = params.problem()?;
    let est = bisect_pullin(&problem, 1e-3, f64::INFINITY).map_err(|e| e.to_string())?;
    let top = est.bracket_hi;
    let lambdas: Vec<f64> = (1..=points)
        .map(|i| top * i as f64 / points as f64)
        .collect();
    let sweep = branch_sweep(&problem, &lambdas).map_err(|e| e.to_string())?;
    to_json(&Sweep {
        lower: est.lower,
        upper: est.upper,
        bracket: [est.bracket_lo, est.bracket_hi],
        points: sweep
            .into_iter()
            .map(|p| SweepPoint {
                lambda: p.lambda,
                u0: p.u0,
                converged: p.status == Status::Converged,
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct Shot {
    constants: AsymptoticConstants,
    t_star: f64,
    lambda_star: f64,
    coef: f64,
    fit: Option<PowerFit>,
    r: Vec<f64>,
    u: Vec<f64>,
    law: Vec<f64>,
}

pub fn shoot_json(params: Params) -> Result<String, String> {
    let model = params.model()?;
    let k = AsymptoticConstants::for_model(&model).map_err(|e| e.to_string())?;
    let res = shoot_touchdown(
        &model,
        &Numerics::with_cells(params.cells),
        &ShooterConfig::auto(&k),
    )
    .map_err(|e| e.to_string())?;
    let profile = res
        .touchdown_profile
        .as_ref()
        .expect("profile reconstructed");
    let (r, u) = decimate(profile.grid.nodes(), &profile.u, 400);
    let law = r
        .iter()
        .map(|&x| expansion_eval(&k, res.lambda_star, x))
        .collect();
    to_json(&Shot {
        constants: k,
        t_star: res.t_star,
        lambda_star: res.lambda_star,
        coef: k.coef(res.lambda_star),
        fit: fit_asymptotics(profile, DEFAULT_WINDOW).ok(),
        r,
        u,
        law,
    })
}

fn js(result: Result<String, String>) -> Result<String, JsValue> {
    result.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solve_profile(
    alpha: f64,
    beta: f64,
    gamma: f64,
    p: f64,
    c: f64,
    cells: usize,
    lambda: f64,
) -> Result<String, JsValue> {
    js(solve_profile_json(
        Params {
            alpha,
            beta,
            gamma,
            p,
            c,
            cells,
        },
        lambda,
    ))
}

#[wasm_bindgen]
pub fn sweep_branch(
    alpha: f64,
    beta: f64,
    gamma: f64,
    p: f64,
    c: f64,
    cells: usize,
    points: usize,
) -> Result<String, JsValue> {
    js(branch_sweep_json(
        Params {
            alpha,
            beta,
            gamma,
            p,
            c,
            cells,
        },
        points,
    ))
}

#[wasm_bindgen]
pub fn shoot(
    alpha: f64,
    beta: f64,
    gamma: f64,
    p: f64,
    c: f64,
    cells: usize,
) -> Result<String, JsValue> {
    js(shoot_json(Params {
        alpha,
        beta,
        gamma,
        p,
        c,
        cells,
    }))
}
