use serde::Serialize;

use touchdown_core::asymptotics::{expansion_eval, fit_asymptotics, AsymptoticConstants, PowerFit};
use touchdown_core::model::{validate_hypotheses, Model, ValidationReport};
use touchdown_core::monotone::{solve_from_subsolution, IterationReport, Problem, Status};
use touchdown_core::pullin::{
    bisect_pullin, branch_sweep_parallel, refinement_trend, LowerBound, PullInEstimate,
};
use touchdown_core::shooter::{shoot_backward, shoot_touchdown, ShooterResult, ShooterState};

use crate::config::RunConfig;
use crate::output::{num, Csv, OutDir};
use crate::svg::{Plot, Series};
use crate::Common;

#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration; exit code 2.
    Usage(String),
    /// The computation failed or reported a negative outcome; exit code 1.
    Compute(String),
}

impl From<touchdown_core::Error> for Failure {
    fn from(e: touchdown_core::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

struct Run {
    config: RunConfig,
    model: Model,
    out: OutDir,
    svg: bool,
}

impl Run {
    fn problem(&self) -> Result<Problem, Failure> {
        Ok(Problem::new(self.model.clone(), self.config.numerics())?)
    }
}

fn load(common: &Common) -> Result<(RunConfig, Model), Failure> {
    let config = RunConfig::load(&common.config)
        .map_err(|e| Failure::Usage(format!("{}: {e}", common.config.display())))?;
    let model = config.build_model().map_err(Failure::Usage)?;
    Ok((config, model))
}

fn print_report(report: &ValidationReport) {
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let scope = format!("{:?}", c.scope).to_lowercase();
        println!("{} {:<10} {verdict}  {}", c.label, scope, c.detail);
    }
}

/// Load the configuration, check the hypotheses unless forced, and open the
/// output directory. `asymptotic` also gates on the asymptotic checks.
fn start(common: &Common, asymptotic: bool) -> Result<Run, Failure> {
    let (config, model) = load(common)?;
    if !common.force {
        let report = validate_hypotheses(&model);
        let ok = if asymptotic {
            report.all_ok()
        } else {
            report.general_ok()
        };
        if !ok {
            print_report(&report);
            return Err(Failure::Compute(
                "hypothesis checks failed (use --force to run anyway)".into(),
            ));
        }
    }
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| config.output.dir.clone());
    let out = OutDir::create(&dir)?;
    let svg = common.svg || config.output.svg;
    Ok(Run {
        config,
        model,
        out,
        svg,
    })
}

pub fn validate(common: &Common) -> Outcome {
    let (_, model) = load(common)?;
    let report = validate_hypotheses(&model);
    print_report(&report);
    if report.all_ok() {
        println!("all hypotheses hold");
        Ok(())
    } else {
        let failed: Vec<&str> = report.failures().map(|c| c.label).collect();
        Err(Failure::Compute(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    config: &'a RunConfig,
    lambda: f64,
    report: &'a IterationReport,
    u0: f64,
    norm_sup: f64,
}

pub fn solve(common: &Common, lambda: f64) -> Outcome {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Failure::Usage(format!(
            "--lambda must be a non-negative number, got {lambda}"
        )));
    }
    let mut run = start(common, false)?;
    let problem = run.problem()?;
    let (sol, report) = solve_from_subsolution(&problem, lambda)?;
    let mut csv = Csv::new(&["r", "u"]);
    for (r, u) in sol.grid.nodes().iter().zip(&sol.u) {
        csv.row(&[num(*r), num(*u)]);
    }
    run.out.csv("solution.csv", csv)?;
    run.out.json(
        "solve.json",
        &SolveReport {
            config: &run.config,
            lambda,
            report: &report,
            u0: sol.u0(),
            norm_sup: sol.sup_norm(),
        },
    )?;
    if run.svg {
        let points = sol
            .grid
            .nodes()
            .iter()
            .copied()
            .zip(sol.u.iter().copied())
            .collect();
        run.out.svg(
            "solution.svg",
            Plot {
                title: format!("solution at lambda = {lambda}"),
                x_label: "r".into(),
                y_label: "u".into(),
                log_x: false,
                log_y: false,
                series: vec![Series::line("u(r)", points)],
            }
            .render(),
        )?;
    }
    run.out.announce();
    println!(
        "status {:?} after {} iterations, u(r0) = {:.10}",
        report.status,
        report.iterations,
        sol.u0()
    );
    match report.status {
        Status::Converged => Ok(()),
        other => Err(Failure::Compute(format!(
            "solver finished with status {other:?}"
        ))),
    }
}

#[derive(Serialize)]
struct Bracket {
    lower: f64,
    upper: f64,
    bracket: [f64; 2],
    midpoint: f64,
    width: f64,
    evaluations: usize,
    low_confidence: bool,
}

impl From<&PullInEstimate> for Bracket {
    fn from(e: &PullInEstimate) -> Self {
        Bracket {
            lower: e.lower,
            upper: e.upper,
            bracket: [e.bracket_lo, e.bracket_hi],
            midpoint: e.midpoint(),
            width: e.width(),
            evaluations: e.evaluations,
            low_confidence: e.low_confidence,
        }
    }
}

#[derive(Serialize)]
struct TrendEntry {
    #[serde(rename = "M")]
    m: usize,
    bracket: [f64; 2],
}

#[derive(Serialize)]
struct PullInReport<'a> {
    config: &'a RunConfig,
    lower_bound: LowerBound,
    #[serde(flatten)]
    estimate: Bracket,
    refinement: Vec<TrendEntry>,
}

pub fn pullin(common: &Common, width: f64, refine: &[usize]) -> Outcome {
    if !(width > 0.0) {
        return Err(Failure::Usage(format!(
            "--width must be positive, got {width}"
        )));
    }
    let mut run = start(common, false)?;
    let problem = run.problem()?;
    let lower_bound = touchdown_core::pullin::lower_bound(&problem)?;
    let est = bisect_pullin(&problem, width, f64::INFINITY)?;
    let refinement = refinement_trend(&run.model, &problem.numerics, refine, width)?
        .into_iter()
        .map(|(m, e)| TrendEntry {
            m,
            bracket: [e.bracket_lo, e.bracket_hi],
        })
        .collect();
    let mut csv = Csv::new(&["lambda", "classification", "iterations", "u0"]);
    for t in &est.trace {
        csv.row(&[
            num(t.lambda),
            format!("{:?}", t.classification),
            t.iterations.to_string(),
            num(t.u0),
        ]);
    }
    run.out.csv("pullin_trace.csv", csv)?;
    run.out.json(
        "pullin.json",
        &PullInReport {
            config: &run.config,
            lower_bound,
            estimate: Bracket::from(&est),
            refinement,
        },
    )?;
    run.out.announce();
    println!("bounds [{:.10}, {:.10}]", est.lower, est.upper);
    println!(
        "bracket [{:.10}, {:.10}] after {} solves",
        est.bracket_lo, est.bracket_hi, est.evaluations
    );
    Ok(())
}

pub fn branch(
    common: &Common,
    lambda_max: Option<f64>,
    points: usize,
    jobs: usize,
    width: f64,
) -> Outcome {
    if let Some(l) = lambda_max {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Failure::Usage(format!(
                "--lambda must be positive, got {l}"
            )));
        }
    }
    let mut run = start(common, false)?;
    let problem = run.problem()?;
    let top = match (points, lambda_max) {
        (0, _) => 0.0,
        (_, Some(l)) => l,
        (_, None) => bisect_pullin(&problem, width, f64::INFINITY)?.bracket_hi,
    };
    let lambdas: Vec<f64> = (1..=points)
        .map(|i| top * i as f64 / points as f64)
        .collect();
    let sweep = branch_sweep_parallel(&problem, &lambdas, jobs)?;
    let mut csv = Csv::new(&["lambda", "u0", "norm_sup", "status", "iterations"]);
    for p in &sweep {
        csv.row(&[
            num(p.lambda),
            num(p.u0),
            num(p.norm_sup),
            format!("{:?}", p.status),
            p.iterations.to_string(),
        ]);
    }
    run.out.csv("branch.csv", csv)?;
    if run.svg {
        let converged = sweep
            .iter()
            .filter(|p| p.status == Status::Converged)
            .map(|p| (p.lambda, p.u0))
            .collect();
        run.out.svg(
            "branch.svg",
            Plot {
                title: "minimal branch".into(),
                x_label: "lambda".into(),
                y_label: "u(r0)".into(),
                log_x: false,
                log_y: false,
                series: vec![Series::line("converged", converged).with_markers()],
            }
            .render(),
        )?;
    }
    run.out.announce();
    let converged = sweep
        .iter()
        .filter(|p| p.status == Status::Converged)
        .count();
    println!("{converged} of {} points converged", sweep.len());
    Ok(())
}

#[derive(Serialize)]
struct FitBlock {
    window: (f64, f64),
    exponent_hat: f64,
    coef_hat: f64,
    r2: f64,
    nodes: usize,
    exponent: f64,
    coef: f64,
    exponent_rel_err: f64,
    coef_rel_err: f64,
}

fn fit_block(res: &ShooterResult, window: (f64, f64)) -> Option<FitBlock> {
    let k = &res.constants;
    let profile = res.touchdown_profile.as_ref()?;
    let PowerFit {
        exponent,
        coef,
        r2,
        nodes,
    } = fit_asymptotics(profile, window).ok()?;
    let law = k.coef(res.lambda_star);
    Some(FitBlock {
        window,
        exponent_hat: exponent,
        coef_hat: coef,
        r2,
        nodes,
        exponent: k.exponent,
        coef: law,
        exponent_rel_err: (exponent - k.exponent).abs() / k.exponent,
        coef_rel_err: (coef - law).abs() / law,
    })
}

fn run_shooter(run: &Run) -> Result<ShooterResult, Failure> {
    let k = AsymptoticConstants::for_model(&run.model)?;
    Ok(shoot_touchdown(
        &run.model,
        &run.config.numerics(),
        &run.config.shooter(&k),
    )?)
}

fn overlay(res: &ShooterResult, window: Option<(f64, f64)>) -> Plot {
    let profile = res
        .touchdown_profile
        .as_ref()
        .expect("profile reconstructed");
    let inside = |r: f64| window.is_none_or(|(lo, hi)| r >= lo && r <= hi);
    let computed: Vec<(f64, f64)> = profile
        .grid
        .nodes()
        .iter()
        .zip(&profile.u)
        .filter(|(r, _)| inside(**r))
        .map(|(r, u)| (*r, 1.0 - u))
        .collect();
    let law = computed
        .iter()
        .map(|&(r, _)| (r, 1.0 - expansion_eval(&res.constants, res.lambda_star, r)))
        .collect();
    Plot {
        title: format!("touchdown profile, lambda* = {:.6}", res.lambda_star),
        x_label: "r".into(),
        y_label: "1 - u*(r)".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series::line("computed", computed),
            Series::line("asymptotic law", law).dashed(),
        ],
    }
}

#[derive(Serialize)]
struct ShootReport<'a> {
    config: &'a RunConfig,
    constants: AsymptoticConstants,
    t_seed: f64,
    t_star: f64,
    lambda_star: f64,
    coef: f64,
    seed: ShooterState,
    seed_tail: f64,
    extra_crossings: usize,
    passes: usize,
    fit: Option<FitBlock>,
}

pub fn shoot(common: &Common) -> Outcome {
    let mut run = start(common, true)?;
    let res = run_shooter(&run)?;
    let mut traj = Csv::new(&["t", "v", "w"]);
    for s in &res.trajectory {
        traj.row(&[num(s.t), num(s.v), num(s.w)]);
    }
    run.out.csv("trajectory.csv", traj)?;
    let profile = res
        .touchdown_profile
        .as_ref()
        .expect("profile reconstructed");
    let mut prof = Csv::new(&["r", "u"]);
    for (r, u) in profile.grid.nodes().iter().zip(&profile.u) {
        prof.row(&[num(*r), num(*u)]);
    }
    run.out.csv("touchdown.csv", prof)?;
    run.out.json(
        "shoot.json",
        &ShootReport {
            config: &run.config,
            constants: res.constants,
            t_seed: res.seed.t,
            t_star: res.t_star,
            lambda_star: res.lambda_star,
            coef: res.constants.coef(res.lambda_star),
            seed: res.seed,
            seed_tail: res.seed_tail,
            extra_crossings: res.extra_crossings,
            passes: res.passes,
            fit: fit_block(&res, touchdown_core::asymptotics::DEFAULT_WINDOW),
        },
    )?;
    if run.svg {
        run.out.svg("shoot.svg", overlay(&res, None).render())?;
    }
    run.out.announce();
    println!("T* = {:.12}, lambda* = {:.12}", res.t_star, res.lambda_star);
    if res.extra_crossings > 0 {
        println!(
            "warning: {} further crossings after T*",
            res.extra_crossings
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct AsymptoticsReport<'a> {
    config: &'a RunConfig,
    constants: AsymptoticConstants,
    lambda_star: f64,
    coef: f64,
    fit: Option<FitBlock>,
}

pub fn asymptotics(common: &Common, window: (f64, f64)) -> Outcome {
    if !(window.0 > 0.0 && window.0 < window.1 && window.1 <= 1.0) {
        return Err(Failure::Usage(format!(
            "fit window must satisfy 0 < lo < hi <= 1, got [{}, {}]",
            window.0, window.1
        )));
    }
    let mut run = start(common, true)?;
    let res = run_shooter(&run)?;
    let fit = fit_block(&res, window);
    let Some(block) = fit else {
        return Err(Failure::Compute(format!(
            "too few grid nodes in [{}, {}]; raise M or widen the window",
            window.0, window.1
        )));
    };
    println!(
        "exponent {:.8} (law {:.8}), coefficient {:.8} (law {:.8})",
        block.exponent_hat, block.exponent, block.coef_hat, block.coef
    );
    run.out.json(
        "asymptotics.json",
        &AsymptoticsReport {
            config: &run.config,
            constants: res.constants,
            lambda_star: res.lambda_star,
            coef: res.constants.coef(res.lambda_star),
            fit: Some(block),
        },
    )?;
    run.out.svg(
        "asymptotics.svg",
        overlay(&res, Some((window.0 * 1e-2, 1.0))).render(),
    )?;
    run.out.announce();
    Ok(())
}

#[derive(Serialize)]
struct CrosscheckReport<'a> {
    config: &'a RunConfig,
    bracket: [f64; 2],
    midpoint: f64,
    lambda_star_shoot: f64,
    discrepancy: f64,
    threshold: f64,
    pass: bool,
}

pub fn crosscheck(common: &Common, width: f64, threshold: f64) -> Outcome {
    if !(width > 0.0) {
        return Err(Failure::Usage(format!(
            "--width must be positive, got {width}"
        )));
    }
    let mut run = start(common, true)?;
    let problem = run.problem()?;
    let est = bisect_pullin(&problem, width, f64::INFINITY)?;
    let k = AsymptoticConstants::for_model(&run.model)?;
    let shot = shoot_backward(&run.model, &run.config.shooter(&k))?;
    let discrepancy = (shot.lambda_star - est.midpoint()).abs() / shot.lambda_star;
    let pass = discrepancy <= threshold;
    run.out.json(
        "crosscheck.json",
        &CrosscheckReport {
            config: &run.config,
            bracket: [est.bracket_lo, est.bracket_hi],
            midpoint: est.midpoint(),
            lambda_star_shoot: shot.lambda_star,
            discrepancy,
            threshold,
            pass,
        },
    )?;
    run.out.announce();
    println!(
        "bisection {:.10}, shooting {:.10}, discrepancy {:.4}% (threshold {:.4}%)",
        est.midpoint(),
        shot.lambda_star,
        100.0 * discrepancy,
        100.0 * threshold
    );
    if pass {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::Compute("discrepancy above threshold".into()))
    }
}
