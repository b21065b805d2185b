use serde_json::Value;
use touchdown_web::{branch_sweep_json, shoot_json, solve_profile_json, Params};

const R1: Params = Params {
    alpha: 2.0,
    beta: 0.0,
    gamma: 2.0,
    p: 2.0,
    c: 1.0,
    cells: 512,
};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn profile_is_decimated_and_converged() {
    let v = parse(solve_profile_json(R1, 0.5).unwrap());
    assert_eq!(v["status"], "Converged");
    let r = v["r"].as_array().unwrap();
    assert!(r.len() <= 520);
    assert_eq!(r.last().unwrap().as_f64(), Some(1.0));
    assert_eq!(
        v["u"].as_array().unwrap().last().unwrap().as_f64(),
        Some(0.0)
    );
    assert!(v["residual"].as_f64().unwrap() <= 1e-6);

    let v = parse(solve_profile_json(R1, 100.0).unwrap());
    assert_eq!(v["status"], "TouchdownDetected");
    assert!(v["residual"].is_null());
}

#[test]
fn sweep_stays_below_the_bracket() {
    let v = parse(branch_sweep_json(R1, 12).unwrap());
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 12);
    let u0: Vec<f64> = pts
        .iter()
        .filter(|p| p["converged"] == true)
        .map(|p| p["u0"].as_f64().unwrap())
        .collect();
    assert!(u0.len() >= 11);
    assert!(u0.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn shooting_gives_closed_form_voltage() {
    let v = parse(shoot_json(R1).unwrap());
    assert!((v["lambda_star"].as_f64().unwrap() - 10.0 / 9.0).abs() < 1e-8);
    let u = v["u"].as_array().unwrap();
    let law = v["law"].as_array().unwrap();
    assert_eq!(u.len(), law.len());
}

#[test]
fn bad_input_is_an_error() {
    assert!(solve_profile_json(R1, -1.0).is_err());
    assert!(shoot_json(Params { cells: 2, ..R1 }).is_err());
    assert!(shoot_json(Params { alpha: 0.5, ..R1 }).is_err());
}
