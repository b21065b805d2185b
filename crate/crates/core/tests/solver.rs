use approx::assert_relative_eq;

use touchdown_core::asymptotics::AsymptoticConstants;
use touchdown_core::model::{validate_hypotheses, GapFunction, Model, PhiOperator, SourceProfile};
use touchdown_core::monotone::{
    build_small_lambda_supersolution, residual, solve_from_subsolution, solve_from_supersolution,
    value_at_origin, Numerics, Problem, SolutionGrid, Status,
};
use touchdown_core::pullin::{bisect_pullin, lower_bound, upper_bound};
use touchdown_core::shooter::{shoot_backward, shoot_touchdown, ShooterConfig};

fn problem(model: Model, cells: usize) -> Problem {
    Problem::new(model, Numerics::with_cells(cells)).unwrap()
}

fn at_quarter(sol: &SolutionGrid) -> f64 {
    // r_i = (i/M)² puts r = 1/4 at i = M/2 on every grid
    sol.u[sol.grid.cells() / 2]
}

#[test]
fn reference_small_voltage_against_richardson() {
    let lambda = 0.1;
    let solve = |m| {
        let p = problem(Model::reference(), m);
        let (sol, rep) = solve_from_subsolution(&p, lambda).unwrap();
        assert_eq!(rep.status, Status::Converged);
        (
            value_at_origin(&p, &sol).unwrap(),
            at_quarter(&sol),
            sol.u0(),
        )
    };
    let (o2, q2, u0) = solve(2048);
    let (o4, q4, _) = solve(4096);
    let (o8, q8, _) = solve(8192);
    assert!(u0 < 0.1 * 1.2 / 6.0);
    let (ro, rq) = ((4.0 * o8 - o4) / 3.0, (4.0 * q8 - q4) / 3.0);
    assert!((o2 - ro).abs() < 1e-6, "{o2} vs {ro}");
    assert!((q2 - rq).abs() < 1e-6, "{q2} vs {rq}");
    // successive differences shrink by about four
    let ratio = (q2 - q4) / (q4 - q8);
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn converged_solutions_are_ordered_and_valid() {
    let p = problem(Model::reference(), 1024);
    let lb = lower_bound(&p).unwrap();
    let (bar, lambda_max) = build_small_lambda_supersolution(&p, lb.lambda0).unwrap();
    let slack = 10.0 * p.numerics.tol_quad;
    for frac in [0.2, 0.6, 1.0] {
        let lambda = frac * lambda_max;
        let (low, rep_low) = solve_from_subsolution(&p, lambda).unwrap();
        let (high, rep_high) = solve_from_supersolution(&p, lambda, &bar).unwrap();
        assert_eq!(rep_low.status, Status::Converged);
        assert_eq!(rep_high.status, Status::Converged);
        assert!(rep_low.final_delta <= p.numerics.tol_fix);
        assert!(rep_low.residual <= p.numerics.tol_res);
        for i in 0..low.u.len() {
            assert!(low.u[i] <= high.u[i] + slack);
            assert!(high.u[i] <= bar.u[i] + slack);
            assert!((0.0..1.0).contains(&low.u[i]));
        }
        assert_eq!(*low.u.last().unwrap(), 0.0);
        assert!(low.u.windows(2).all(|w| w[1] <= w[0] + slack));
        assert!(residual(&p, lambda, &low).unwrap() <= p.numerics.tol_res);
    }
}

#[test]
fn shooter_profile_solves_the_integral_equation() {
    let model = Model::reference();
    let k = AsymptoticConstants::for_model(&model).unwrap();
    let numerics = Numerics::default();
    let res = shoot_touchdown(&model, &numerics, &ShooterConfig::auto(&k)).unwrap();
    let profile = res.touchdown_profile.as_ref().unwrap();
    let p = Problem::new(model, numerics).unwrap();
    let res_norm = residual(&p, res.lambda_star, profile).unwrap();
    assert!(res_norm <= 1e-4, "residual {res_norm}");
    assert!(res.lambda_star <= upper_bound(&p.model, &p.model.majorant()).unwrap());
    // u* decreasing in r, close to one at the guard node
    assert!(profile.u.windows(2).all(|w| w[1] < w[0]));
    assert!(profile.u0() > 0.99);
}

#[test]
fn shooter_trajectory_stores_consistent_flux() {
    // w = e^{(β+1−α)t} v'^{β+1} against centred differences of v
    let model = Model::k_hessian(5, 2, 3.0).unwrap();
    let k = AsymptoticConstants::for_model(&model).unwrap();
    let res = shoot_backward(&model, &ShooterConfig::auto(&k)).unwrap();
    let tr = &res.trajectory;
    let mut worst: f64 = 0.0;
    for i in (2..tr.len() - 2).step_by(97) {
        let (a, b, c) = (tr[i - 1], tr[i], tr[i + 1]);
        if (c.t - b.t - (b.t - a.t)).abs() > 1e-12 {
            continue;
        }
        let dv = (c.v - a.v) / (c.t - a.t);
        let w = ((k.beta + 1.0 - k.alpha) * b.t).exp() * dv.powf(k.beta + 1.0);
        worst = worst.max((w - b.w).abs() / b.w);
    }
    assert!(worst < 1e-5, "worst relative flux mismatch {worst}");
}

#[test]
fn high_dimension_laplacian_oracles_agree() {
    // above dimension seven the minimal branch ends at the singular solution
    let model = Model::power_law(9.0, 0.0, 9.0, 2.0, 1.0).unwrap();
    let p = problem(model.clone(), 2048);
    let est = bisect_pullin(&p, 1e-3, f64::INFINITY).unwrap();
    let k = AsymptoticConstants::for_model(&model).unwrap();
    let shot = shoot_backward(&model, &ShooterConfig::auto(&k)).unwrap();
    let rel = (shot.lambda_star - est.midpoint()).abs() / shot.lambda_star;
    assert!(
        rel <= 0.02,
        "shoot {} vs bisection {}",
        shot.lambda_star,
        est.midpoint()
    );
}

#[test]
fn general_bounds_for_a_sphere_cap() {
    let model = Model::new(
        PhiOperator::sphere_cap(3, 1.0).unwrap(),
        GapFunction::mems(2.0).unwrap(),
        SourceProfile::weighted_power(2.0, 1.0).unwrap(),
    );
    assert!(validate_hypotheses(&model).general_ok());
    let p = problem(model, 512);
    let est = bisect_pullin(&p, 1e-2, f64::INFINITY).unwrap();
    assert!(est.lower <= est.bracket_lo && est.bracket_hi <= est.upper);
    assert!(est.width() <= 1e-2);
}

#[test]
fn lower_bound_scales_with_the_source() {
    // φ⁻¹ linear in w: doubling f doubles Φ, so the δ-search result halves
    let base = Model::power_law(2.0, 0.0, 2.0, 2.0, 12.0).unwrap();
    let doubled = Model::power_law(2.0, 0.0, 2.0, 2.0, 24.0).unwrap();
    let a = lower_bound(&problem(base, 256)).unwrap().value;
    let b = lower_bound(&problem(doubled, 256)).unwrap().value;
    assert_relative_eq!(b, a / 2.0, max_relative = 1e-8);
}
