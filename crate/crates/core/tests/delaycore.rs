mod common;

use common::Pantograph;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdde_core::delaycore::io::{export_columnar, export_sampled_csv, import_columnar};
use sdde_core::delaycore::{
    check_monotone_delay, integrate_dde, integrate_dde_with, DdeOptions, HistoryFunction,
    ModelSpec, StripBox, RESIDUAL_CONSTANT,
};
use sdde_core::example41::{build_neural_model, default_history, NeuralModelParams};
use sdde_core::models::{toy_history, toy_scalar, ToyParams};
use sdde_core::Error;

#[test]
fn toy_solution_matches_pantograph_series() {
    let model = toy_scalar(ToyParams::default()).unwrap();
    let hist = toy_history(0.3, 0.0, 1.0, 0.0).unwrap();
    let tr = integrate_dde(&model, &hist, 4.0, 1e-11).unwrap();
    let exact = Pantograph::new(0.3, 0.0, 1.0);
    for k in 0..=40 {
        let t = 0.1 * k as f64;
        let y = tr.eval(t).unwrap();
        assert!(
            (y[0] - exact.x(t)).abs() < 1e-9,
            "t = {t}: {} vs {}",
            y[0],
            exact.x(t)
        );
        assert!((y[1] - exact.tau(t)).abs() < 1e-12);
        assert!((tr.eta(t).unwrap() - (t - exact.tau(t))).abs() < 1e-12);
    }
    assert!(tr.breakpoints.is_empty());
}

#[test]
fn eta_iterates_follow_geometric_contraction() {
    let model = toy_scalar(ToyParams::default()).unwrap();
    let hist = toy_history(0.3, 0.0, 1.0, 0.0).unwrap();
    let tr = integrate_dde(&model, &hist, 2.0, 1e-10).unwrap();
    let exact = Pantograph::new(0.3, 0.0, 1.0);
    for k in 0..10 {
        assert!((tr.eta_iterate(2.0, k).unwrap() - exact.eta_k(2.0, k as i32)).abs() < 1e-11);
    }
}

#[test]
fn residual_is_bounded_by_declared_constant() {
    let model = build_neural_model(&NeuralModelParams::default()).unwrap();
    let hist = default_history(0.0, 20.0).unwrap();
    let tol = 1e-8;
    let tr = integrate_dde(&model, &hist, 30.0, tol).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let t = rng.gen_range(0.0..30.0);
        let r = tr.residual(&model, t).unwrap();
        assert!(r <= RESIDUAL_CONSTANT * tol, "residual {r:e} at t = {t}");
    }
}

#[test]
fn eta_strictly_increasing_along_orbit() {
    let model = build_neural_model(&NeuralModelParams::default()).unwrap();
    let hist = default_history(0.0, 20.0).unwrap();
    let tr = integrate_dde(&model, &hist, 40.0, 1e-8).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for k in 0..=4000 {
        let t = 0.01 * k as f64;
        let e = tr.eta(t).unwrap();
        assert!(e < t && e > prev, "t = {t}");
        prev = e;
    }
    let rep = check_monotone_delay(&tr, &model, 500).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.min_rate > 0.5 * (1.0 + (-std::f64::consts::PI).exp()) * 0.0 + model.l);
}

#[test]
fn fixed_step_order_is_five() {
    let model = toy_scalar(ToyParams::default()).unwrap();
    let hist = toy_history(0.3, 0.0, 1.0, 0.0).unwrap();
    let exact = Pantograph::new(0.3, 0.0, 1.0).x(2.0);
    let err = |h: f64| {
        let tr = integrate_dde_with(&model, &hist, 2.0, &DdeOptions::fixed(h)).unwrap();
        (tr.eval(2.0).unwrap()[0] - exact).abs()
    };
    let (e1, e2) = (err(0.4), err(0.2));
    let order = (e1 / e2).log2();
    assert!(order > 4.5, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn tolerance_refinement_reduces_error() {
    let model = toy_scalar(ToyParams::default()).unwrap();
    let hist = toy_history(0.3, 0.0, 1.0, 0.0).unwrap();
    let exact = Pantograph::new(0.3, 0.0, 1.0);
    let sup_err = |tol: f64| {
        let tr = integrate_dde(&model, &hist, 5.0, tol).unwrap();
        (0..=50)
            .map(|k| 0.1 * k as f64)
            .map(|t| (tr.eval(t).unwrap()[0] - exact.x(t)).abs())
            .fold(0.0_f64, f64::max)
    };
    let errs: Vec<f64> = [1e-4, 1e-7, 1e-10]
        .iter()
        .map(|&tol| sup_err(tol))
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 1e-9, "{errs:?}");
}

fn lag_model() -> ModelSpec {
    ModelSpec::from_fns(
        "lag",
        1,
        1,
        StripBox::new(vec![-5.0], vec![5.0], 0.5).unwrap(),
        StripBox::new(vec![-1.0], vec![5.0], 0.5).unwrap(),
        0.5,
        2.0,
        |x, d, o| o[0] = -0.5 * x[0] - d[0],
        |_, _| Complex64::new(0.0, 0.0),
    )
    .unwrap()
}

#[test]
fn breakpoints_smooth_out() {
    // constant history: x' jumps at t0, x'' at t0 + 1, x''' at t0 + 2
    let model = lag_model();
    let hist = HistoryFunction::constant(-1.0, 0.0, vec![1.0, 1.0]).unwrap();
    let tr = integrate_dde(&model, &hist, 3.5, 1e-12).unwrap();
    let bps: Vec<f64> = tr.breakpoints.iter().map(|b| b.time).collect();
    assert!(
        (bps[1] - 1.0).abs() < 1e-12 && (bps[2] - 2.0).abs() < 1e-12,
        "{bps:?}"
    );

    let d = 1e-3;
    let x = |t: f64| tr.eval(t).unwrap()[0];
    let d1 = |t: f64, side: f64| (x(t + side * d) - x(t)) / (side * d);
    let d2 = |t: f64, side: f64| (x(t + 2.0 * side * d) - 2.0 * x(t + side * d) + x(t)) / (d * d);
    let jump1 = (d1(0.0, 1.0) - 0.0).abs();
    let jump2 = (d2(1.0, 1.0) - d2(1.0, -1.0)).abs();
    let d3 = |t: f64, side: f64| {
        let s = side * d;
        (x(t + 3.0 * s) - 3.0 * x(t + 2.0 * s) + 3.0 * x(t + s) - x(t)) / (s * s * s)
    };
    let jump3 = (d3(2.0, 1.0) - d3(2.0, -1.0)).abs();
    assert!(jump1 > 0.5, "first-derivative jump {jump1}");
    assert!(
        jump2 < jump1 && jump3 < jump2,
        "jumps {jump1} {jump2} {jump3}"
    );
}

#[test]
fn domain_exit_reports_time_and_constraint() {
    // x' = 1 leaves U = [-5, 5] at t = 4 starting from 1
    let model = ModelSpec::from_fns(
        "drift",
        1,
        1,
        StripBox::new(vec![-5.0], vec![5.0], 0.5).unwrap(),
        StripBox::new(vec![-1.0], vec![5.0], 0.5).unwrap(),
        0.5,
        2.0,
        |_, _, o| o[0] = Complex64::new(1.0, 0.0),
        |_, _| Complex64::new(0.0, 0.0),
    )
    .unwrap();
    let hist = HistoryFunction::constant(-1.0, 0.0, vec![1.0, 1.0]).unwrap();
    match integrate_dde(&model, &hist, 10.0, 1e-9) {
        Err(Error::DomainExit { time, constraint }) => {
            assert!((time - 4.0).abs() < 1e-8, "exit at {time}");
            assert!(
                constraint.contains("x[0]") && constraint.contains("above"),
                "{constraint}"
            );
        }
        other => panic!("expected domain exit, got {other:?}"),
    }
}

#[test]
fn columnar_roundtrip_preserves_dense_output() {
    let model = lag_model();
    let hist = HistoryFunction::constant(-1.0, 0.0, vec![1.0, 1.0]).unwrap();
    let tr = integrate_dde(&model, &hist, 3.0, 1e-9).unwrap();
    let text = export_columnar(&tr, 16);
    let back = import_columnar(&text).unwrap();
    assert_eq!(back.breakpoints, tr.breakpoints);
    for k in 0..=40 {
        let t = -1.0 + 0.1 * k as f64;
        let (a, b) = (tr.eval(t).unwrap(), back.eval(t).unwrap());
        assert!(
            a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12),
            "t = {t}"
        );
    }
    let csv = export_sampled_csv(&tr, 0.0, 3.0, 7).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.starts_with("t,x1,tau"));
    assert!(import_columnar("garbage").is_err());
}
