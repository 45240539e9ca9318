mod common;

use common::Pantograph;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdde_core::delaycore::{integrate_dde, ModelSpec, StripBox, Trajectory};
use sdde_core::example41::{build_neural_model, default_history, NeuralModelParams};
use sdde_core::lift::{
    build_lift, chain_points, decay_profile, integrate_lifted, lift_consistency, product_weight,
    rhs_h, LiftedState, TailSource,
};
use sdde_core::models::{toy_history, toy_scalar, ToyParams};
use sdde_core::seqspace::norm_lm;

fn toy_trajectory(t_end: f64) -> (ModelSpec, Trajectory) {
    let model = toy_scalar(ToyParams::default()).unwrap();
    let hist = toy_history(0.3, 0.0, 1.0, 0.0).unwrap();
    let tr = integrate_dde(&model, &hist, t_end, 1e-12).unwrap();
    (model, tr)
}

fn neural_trajectory(t_end: f64) -> (ModelSpec, Trajectory) {
    let model = build_neural_model(&NeuralModelParams::default()).unwrap();
    let hist = default_history(0.0, 20.0).unwrap();
    let tr = integrate_dde(&model, &hist, t_end, 1e-10).unwrap();
    (model, tr)
}

#[test]
fn lift_blocks_equal_scaled_states_at_eta_iterates() {
    let (_, tr) = neural_trajectory(30.0);
    let w = build_lift(&tr, 25.0, 24).unwrap();
    for j in 1..=24 {
        let s = tr.eta_iterate(25.0, j - 1).unwrap();
        let y = tr.eval(s).unwrap();
        let cj = std::f64::consts::E.powi(j as i32);
        for (k, z) in w.seq.block(j).iter().enumerate() {
            assert!((z.re * cj - y[k]).abs() < 1e-10, "block {j} component {k}");
        }
    }
}

#[test]
fn lift_intertwines_eta_with_the_shift() {
    let (_, tr) = neural_trajectory(30.0);
    let t = 28.0;
    let a = build_lift(&tr, t, 16).unwrap();
    let b = build_lift(&tr, tr.eta(t).unwrap(), 16).unwrap();
    let c = std::f64::consts::E;
    for j in 1..16 {
        for (p, q) in a.seq.block(j + 1).iter().zip(b.seq.block(j)) {
            assert!((p - q / c).norm() < 1e-14);
        }
    }
}

#[test]
fn toy_lift_matches_exact_solution() {
    let (_, tr) = toy_trajectory(2.0);
    let exact = Pantograph::new(0.3, 0.0, 1.0);
    let w = build_lift(&tr, 2.0, 12).unwrap();
    for j in 1..=12 {
        let s = exact.eta_k(2.0, j as i32 - 1);
        let cj = 2f64.powi(j as i32);
        assert!((w.seq.block(j)[0].re * cj - exact.x(s)).abs() < 1e-9);
        assert!((w.seq.block(j)[1].re * cj - exact.tau(s)).abs() < 1e-12);
    }
}

#[test]
fn first_block_reduces_to_scalar_equations() {
    // J = 1, M = 1: y1' = f(c y1, c^2 y2)/c, z1' = g/c
    let (model, tr) = toy_trajectory(1.0);
    let w = build_lift(&tr, 1.0, 1).unwrap();
    let h = rhs_h(&w, &model).unwrap();
    let u2 = w.tail[0].re;
    assert!((h.block(1)[0].re - (-u2) / 2.0).abs() < 1e-15);
    assert!((h.block(1)[1].re - 0.3 / 2.0).abs() < 1e-15);
}

#[test]
fn finite_differences_of_lift_match_rhs() {
    let (model, tr) = toy_trajectory(2.2);
    for t in [0.0, 0.7, 1.3, 2.0] {
        let rep = lift_consistency(&tr, &model, t, 16, 0.1).unwrap();
        assert!(rep.observed_order >= 2.0, "{rep:?}");
        assert!(rep.mismatch < 1e-6, "{rep:?}");
    }
}

#[test]
fn lifted_integration_tracks_direct_solution() {
    let (model, tr) = toy_trajectory(2.0);
    let w0 = build_lift(&tr, 0.0, 16).unwrap();
    let sol = integrate_lifted(&model, &w0, 1.0, 1e-11, TailSource::Trajectory(&tr), None).unwrap();
    for k in 0..=20 {
        let t = 0.05 * k as f64;
        let w = sol.eval(t).unwrap();
        let direct = build_lift(&tr, t, 16).unwrap();
        let err = w.sup_distance(&direct.seq);
        assert!(err < 1e-9, "t = {t}: {err:e}");
    }
}

#[test]
fn decay_bounded_by_sampled_chain_maximum() {
    let (model, tr) = neural_trajectory(60.0);
    for t in [20.0, 40.0, 60.0] {
        let w = build_lift(&tr, t, 40).unwrap();
        let p = decay_profile(&w, &model, 0).unwrap();
        let ratio = p.max_one_minus_g / model.c;
        for (i, d) in p.d.iter().enumerate() {
            assert!(*d <= ratio.powi(i as i32 + 1) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn product_weight_matches_naive_product() {
    let (model, tr) = neural_trajectory(30.0);
    let w = build_lift(&tr, 30.0, 12).unwrap();
    let chain = chain_points(&model, &w.unscaled(), &w.tail).unwrap();
    let naive = (0..8).fold(Complex64::new(1.0, 0.0), |acc, i| {
        acc * (1.0 - model.eval_g(&chain[i].x, chain[i].v)) / model.c
    });
    let fast = product_weight(&model, &chain, 8).unwrap();
    assert!((fast - naive).norm() <= 1e-12 * naive.norm());
}

#[test]
fn rhs_blocks_bounded_in_polynomial_weights() {
    let (model, tr) = neural_trajectory(60.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for m in 1..=3u32 {
        let mut worst = 0.0_f64;
        for _ in 0..20 {
            let t = rng.gen_range(20.0..60.0);
            let h = rhs_h(&build_lift(&tr, t, 40).unwrap(), &model).unwrap();
            worst = worst.max(norm_lm(&h, m).unwrap());
        }
        assert!(worst.is_finite() && worst < 10.0, "m = {m}: {worst}");
    }
}

#[test]
fn equilibrium_rhs_vanishes() {
    let model = ModelSpec::from_fns(
        "zero",
        1,
        2,
        StripBox::new(vec![-1.0], vec![1.0], 0.1).unwrap(),
        StripBox::new(vec![0.0], vec![2.0], 0.1).unwrap(),
        0.5,
        2.0,
        |_, _, o| o[0] = Complex64::new(0.0, 0.0),
        |_, _| Complex64::new(0.0, 0.0),
    )
    .unwrap();
    let states: Vec<Complex64> = (0..6)
        .flat_map(|_| [Complex64::new(0.2, 0.0), Complex64::new(1.0, 0.0)])
        .collect();
    let w =
        LiftedState::from_unscaled(0.0, 2.0, 1, &states, vec![Complex64::new(0.2, 0.0)]).unwrap();
    assert_eq!(rhs_h(&w, &model).unwrap().norm_sup(), 0.0);
}
