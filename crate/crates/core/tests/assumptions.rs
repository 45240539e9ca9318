use num_complex::Complex64;
use sdde_core::assumptions::*;
use sdde_core::delaycore::{ModelSpec, StripBox};
use sdde_core::example41::{alpha5_threshold, build_neural_model, tau_upper, NeuralModelParams};
use sdde_core::Error;

/// Scalar model whose `g` runs linearly in τ from `g_lo` at `V.lo` to `g_hi` at `V.hi`.
fn ramp_model(g_lo: f64, g_hi: f64, l: f64, c: f64) -> ModelSpec {
    ModelSpec::from_fns(
        "ramp",
        1,
        1,
        StripBox::new(vec![-1.0], vec![1.0], 0.2).unwrap(),
        StripBox::new(vec![0.0], vec![2.0], 0.2).unwrap(),
        l,
        c,
        |_x: &[Complex64], _d: &[Complex64], out: &mut [Complex64]| {
            out[0] = Complex64::new(0.0, 0.0)
        },
        move |_x: &[Complex64], tau: Complex64| g_lo + (g_hi - g_lo) * tau / 2.0,
    )
    .unwrap()
}

fn const_g_model(g: f64, l: f64, c: f64) -> ModelSpec {
    ramp_model(g, g, l, c)
}

#[test]
fn disk_center_gives_full_radius() {
    let (l, c) = (0.4, 2.5);
    let m = const_g_model(1.0 - 0.5 * (l + c), l, c);
    let rep = check_a2(&m, &A2Options::default()).unwrap();
    assert!((rep.worst_margin - 0.5 * (c - l)).abs() < 1e-14);
    assert!(rep.pass);
    assert_eq!(rep.grid_density, vec![DEFAULT_DENSITY; 2]);
}

#[test]
fn disk_boundary_fails_with_zero_margin() {
    let (l, c) = (0.5, 2.0);
    let m = const_g_model(1.0 - c, l, c);
    let rep = check_a2(&m, &A2Options::default()).unwrap();
    assert!(rep.worst_margin.abs() < 1e-14);
    assert!(!rep.pass);
}

#[test]
fn example41_real_margin_matches_closed_form() {
    let p = NeuralModelParams::default();
    let m = build_neural_model(&p).unwrap();
    let rep = check_a2(&m, &A2Options::default()).unwrap();
    assert!(rep.pass, "{rep:?}");
    // 1 - g = h(x)(1 + tanh τ); min at x = 0, τ = 0; max at the box corner, τ = upper
    let big_m = p.m_sigma;
    let s = 2.0 * big_m * big_m;
    let h_corner = 0.5 * (p.h0 + p.h1) + 0.5 * (p.h1 - p.h0) * s / (1.0 + s);
    let w_min = 0.5 * (p.h0 + p.h1);
    let w_max = h_corner * (1.0 + tau_upper(p.h0).tanh());
    let expected = (w_min - 0.5).min(std::f64::consts::E - w_max);
    assert!(
        (rep.real.worst_margin - expected).abs() < 1e-12,
        "{} vs {expected}",
        rep.real.worst_margin
    );
    assert!((w_max - h_corner / p.h0).abs() < 1e-12);
    // the proof's chain: h0 < 1 - g < 2 / (1 + e^{-π}) bounds the margin from below
    let chain = (p.h0 - 0.5).min(std::f64::consts::E - 2.0 / (1.0 + (-std::f64::consts::PI).exp()));
    assert!(rep.real.worst_margin >= chain);
    let strip = rep.strip.as_ref().unwrap();
    assert!(strip.worst_margin > 0.0 && strip.worst_margin <= rep.real.worst_margin + 0.05);
    assert!(rep.strip_width_tested == p.epsilon_strip);
}

#[test]
fn latin_hypercube_fallback() {
    let m = ramp_model(-0.2, 0.3, 0.5, 2.0);
    let opts = A2Options {
        max_points: 100,
        lhs_samples: 5000,
        seed: 3,
        ..A2Options::default()
    };
    let rep = check_a2(&m, &opts).unwrap();
    assert_eq!(rep.real.method, "latin-hypercube");
    assert_eq!(rep.real.n_points, 5000);
    assert!(rep.note.contains("Latin-hypercube"));
    let exact = check_a2(&m, &A2Options::default()).unwrap();
    assert!(rep.real.worst_margin >= exact.real.worst_margin - 1e-12);
    assert!(rep.real.worst_margin - exact.real.worst_margin < 1e-3);
    let again = check_a2(&m, &opts).unwrap();
    assert_eq!(rep.worst_point, again.worst_point);
}

#[test]
fn search_lc_examples() {
    // 1 - g in [0.6, 0.8] cannot have c > 1
    let m = ramp_model(0.2, 0.4, 0.5, 2.0);
    assert!(matches!(search_lc(&m, 33), Err(Error::Infeasible(_))));

    // 1 - g in [0.7, 1.5]
    let m = ramp_model(-0.5, 0.3, 0.5, 2.0);
    let r = search_lc(&m, 33).unwrap();
    assert!(
        (r.l - 0.665).abs() < 1e-12 && (r.c - 1.575).abs() < 1e-12,
        "{r:?}"
    );
    assert!(r.margin > 0.0);
    assert!(
        check_a2_with(
            &m,
            r.l,
            r.c,
            &A2Options {
                include_strip: false,
                ..A2Options::default()
            }
        )
        .unwrap()
        .pass
    );

    let m = const_g_model(0.0, 0.5, 2.0);
    let r = search_lc(&m, 9).unwrap();
    assert_eq!((r.l, r.c), (0.5, 2.0));

    // 1 - g must stay positive
    let m = ramp_model(0.5, 1.2, 0.5, 2.0);
    assert!(matches!(search_lc(&m, 9), Err(Error::Infeasible(_))));
}

#[test]
fn search_lc_complex_g_uses_enclosing_disk() {
    let m = ModelSpec::from_fns(
        "rotating",
        1,
        1,
        StripBox::new(vec![-1.0], vec![1.0], 0.2).unwrap(),
        StripBox::new(vec![0.0], vec![1.0], 0.2).unwrap(),
        0.5,
        2.0,
        |_x: &[Complex64], _d: &[Complex64], out: &mut [Complex64]| {
            out[0] = Complex64::new(0.0, 0.0)
        },
        |x: &[Complex64], _tau: Complex64| Complex64::new(0.0, 0.3) * x[0],
    )
    .unwrap();
    let r = search_lc(&m, 21).unwrap();
    assert!(r.complex_g);
    // 1 - g = 1 - 0.3 i x: enclosing disk centered at 1 with radius 0.3
    let mid = 0.5 * (r.l + r.c);
    let rad = 0.5 * (r.c - r.l);
    assert!(
        (mid - 1.0).abs() < 1e-6 && (rad - 0.315).abs() < 1e-6,
        "{r:?}"
    );
}

#[test]
fn alpha_conditions_for_defaults() {
    let rep = check_alpha(&NeuralModelParams::default());
    assert!(rep.all_pass, "{rep:?}");
    assert!((rep.get("alpha1").unwrap().value + 1.0).abs() < 1e-10);
    assert!(rep
        .get("alpha3")
        .unwrap()
        .detail
        .contains("on all of R: false"));
}

#[test]
fn alpha5_threshold_brackets() {
    assert!((alpha5_threshold() - 0.521_606_959_3).abs() < 1e-9);
    let at = |h0: f64| {
        check_alpha(&NeuralModelParams {
            h0,
            ..NeuralModelParams::default()
        })
    };
    assert!(!at(0.51).get("alpha5").unwrap().pass);
    assert!(at(0.55).get("alpha5").unwrap().pass);
    assert!(at(0.6).get("alpha5").unwrap().pass);
    assert_eq!(at(0.51).first_failure().unwrap().name, "alpha5");
}

#[test]
fn alpha4_tail_inequality_for_default_box() {
    for (mu, sigma) in [(1.0, 2.0), (0.5, -3.0), (2.0, 0.1)] {
        let p = NeuralModelParams::new(mu, sigma, 0.6, 0.8);
        let c = check_alpha(&p);
        let a4 = c.get("alpha4").unwrap();
        assert!(a4.pass, "{a4:?}");
        // |b(y)/y| <= 1/|y| <= 1/M < μ/(2|σ|), so the worst slack is at least μ/(2|σ|) - 1/M
        assert!(a4.value >= mu / (2.0 * sigma.abs()) - 1.0 / p.m_sigma - 1e-12);
    }
    let p = NeuralModelParams {
        m_sigma: 1.0,
        ..NeuralModelParams::default()
    };
    assert!(!check_alpha(&p).get("alpha4").unwrap().pass);
}

#[test]
fn alpha_flags_bad_nonlinearities() {
    let p = NeuralModelParams::default();
    let h = |x: &[Complex64]| sdde_core::example41::h_default(0.6, 0.8, x);
    let increasing = |y: Complex64| y.tanh();
    let rep = check_alpha_with(&p, &increasing, &h, 101);
    assert!(
        !rep.get("alpha1").unwrap().pass
            && !rep.get("alpha3").unwrap().pass
            && !rep.get("alpha4").unwrap().pass
    );
    let wide_h = |x: &[Complex64]| 0.55 + 0.0 * x[0];
    assert!(
        !check_alpha_with(&p, &sdde_core::example41::b_default, &wide_h, 101)
            .get("alpha2")
            .unwrap()
            .pass
    );
}
