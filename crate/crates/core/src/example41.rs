//! The adaptive-delay neural pair
//!
//! ```text
//! x1' = -μ x1 + σ b(x2(t - τ))
//! x2' = -μ x2 + σ b(x1(t - τ))
//! τ'  = 1 - h(x)(1 + tanh τ)
//! ```
//!
//! with `b = -tanh` and a rational bump `h` taking values in `(h0, h1)`.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assumptions::{check_a2, check_alpha, A2Options, A2Report, AlphaReport};
use crate::complexext::{
    extend_orbit, DiskGrid, DiskRadiusReport, ExtendConfig, LipschitzEstimate,
};
pub use crate::complexext::{ContinuationSummary, TaylorSummary};
use crate::delaycore::{
    check_monotone_delay, integrate_dde, HistoryFunction, ModelSpec, MonotoneDelayReport, StripBox,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::lift::{build_lift, decay_profile, DecayProfile};

/// `(1 + e^{-π})/2`, the lower bound on `h0` that keeps `1 - g` off the pole of tanh.
pub fn alpha5_threshold() -> f64 {
    0.5 * (1.0 + (-PI).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralModelParams {
    pub mu: f64,
    pub sigma: f64,
    pub h0: f64,
    pub h1: f64,
    /// Radius of the x-box; defaults to `1 + 2|σ|/μ`.
    pub m_sigma: f64,
    pub epsilon_strip: f64,
}

impl Default for NeuralModelParams {
    fn default() -> Self {
        Self::new(1.0, 2.0, 0.6, 0.8)
    }
}

impl NeuralModelParams {
    pub fn new(mu: f64, sigma: f64, h0: f64, h1: f64) -> Self {
        Self {
            mu,
            sigma,
            h0,
            h1,
            m_sigma: default_m_sigma(mu, sigma),
            epsilon_strip: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::param(
                "mu",
                format!("must be positive, got {}", self.mu),
            ));
        }
        if !(0.5 < self.h0 && self.h0 < self.h1 && self.h1 < 1.0) {
            return Err(Error::param(
                "h0,h1",
                format!(
                    "need 1/2 < h0 < h1 < 1, got h0 = {}, h1 = {}",
                    self.h0, self.h1
                ),
            ));
        }
        if !(self.h0 > alpha5_threshold()) {
            return Err(Error::param(
                "h0",
                format!(
                    "must exceed (1 + e^-pi)/2 = {:.6}, got {}",
                    alpha5_threshold(),
                    self.h0
                ),
            ));
        }
        if !(self.m_sigma > 0.0) {
            return Err(Error::param("m_sigma", "box radius must be positive"));
        }
        if !(self.epsilon_strip > 0.0 && self.epsilon_strip < 0.5 * PI) {
            return Err(Error::param(
                "epsilon_strip",
                "strip half-width must lie in (0, π/2)",
            ));
        }
        Ok(())
    }

    pub fn range_box(&self) -> RangeBox {
        RangeBox {
            x_bounds: (-self.m_sigma, self.m_sigma),
            tau_bounds: (0.0, tau_upper(self.h0)),
        }
    }
}

pub fn default_m_sigma(mu: f64, sigma: f64) -> f64 {
    1.0 + 2.0 * sigma.abs() / mu
}

/// `-ln(2 h0 - 1)/2`, the τ at which `h0 (1 + tanh τ) = 1`.
pub fn tau_upper(h0: f64) -> f64 {
    -(2.0 * h0 - 1.0).ln() / 2.0
}

pub fn b_default(y: Complex64) -> Complex64 {
    -y.tanh()
}

pub fn h_default(h0: f64, h1: f64, x: &[Complex64]) -> Complex64 {
    let s: Complex64 = x.iter().map(|z| z * z).sum();
    Complex64::new(0.5 * (h0 + h1), 0.0) + 0.5 * (h1 - h0) * s / (1.0 + s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBox {
    pub x_bounds: (f64, f64),
    pub tau_bounds: (f64, f64),
}

pub fn build_neural_model(p: &NeuralModelParams) -> Result<ModelSpec> {
    p.validate()?;
    let (mu, sigma, h0, h1) = (p.mu, p.sigma, p.h0, p.h1);
    let bx = p.range_box();
    ModelSpec::from_fns(
        "example41",
        2,
        1,
        StripBox::new(
            vec![bx.x_bounds.0; 2],
            vec![bx.x_bounds.1; 2],
            p.epsilon_strip,
        )?,
        StripBox::new(
            vec![bx.tau_bounds.0],
            vec![bx.tau_bounds.1],
            p.epsilon_strip,
        )?,
        0.5,
        E,
        move |x, xd, out| {
            out[0] = -mu * x[0] + sigma * b_default(xd[1]);
            out[1] = -mu * x[1] + sigma * b_default(xd[0]);
        },
        move |chain, tau| 1.0 - h_default(h0, h1, &chain[..2]) * (1.0 + tau.tanh()),
    )
}

/// Constant history `(x0, τ0)` on `[t0 - span, t0]`.
pub fn default_history(t0: f64, span: f64) -> Result<HistoryFunction> {
    HistoryFunction::constant(t0 - span, t0, vec![0.5, -0.3, 0.4])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RangeReport {
    pub t_from: f64,
    pub t_to: f64,
    pub n_samples: usize,
    /// Smallest signed distance to the box boundary (negative outside).
    pub min_distance: f64,
    /// Sample times outside the box (at most 32 listed).
    pub violation_times: Vec<f64>,
    pub n_violations: usize,
    pub pass: bool,
    pub note: String,
}

/// Samples the orbit on `[t_from, t_end]` and measures containment in the open box.
pub fn verify_range_box(
    traj: &Trajectory,
    bx: &RangeBox,
    t_from: f64,
    n_samples: usize,
) -> Result<RangeReport> {
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least two samples"));
    }
    let t_to = traj.t_end();
    let t_from = t_from.max(traj.t_min);
    let n = traj.meta.n;
    let mut min_distance = f64::INFINITY;
    let mut violation_times = Vec::new();
    let mut n_violations = 0;
    for k in 0..n_samples {
        let t = t_from + (t_to - t_from) * k as f64 / (n_samples - 1) as f64;
        let y = traj.eval(t)?;
        let mut d = f64::INFINITY;
        for &xi in &y[..n] {
            d = d.min(xi - bx.x_bounds.0).min(bx.x_bounds.1 - xi);
        }
        d = d.min(y[n] - bx.tau_bounds.0).min(bx.tau_bounds.1 - y[n]);
        min_distance = min_distance.min(d);
        if d <= 0.0 {
            n_violations += 1;
            if violation_times.len() < 32 {
                violation_times.push(t);
            }
        }
    }
    Ok(RangeReport {
        t_from,
        t_to,
        n_samples,
        min_distance,
        violation_times,
        n_violations,
        pass: n_violations == 0,
        note: "empirical containment of a post-transient orbit; consistent with, not implied by, the periodic-orbit range lemma".into(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitInequalityReport {
    pub n_samples: usize,
    pub min_one_plus_tanh: f64,
    pub max_one_plus_tanh: f64,
    /// `1/h0`.
    pub upper: f64,
    pub min_one_minus_g: f64,
    pub max_one_minus_g: f64,
    pub l: f64,
    pub c: f64,
    pub pass: bool,
}

/// Samples `1 ≤ 1 + tanh τ ≤ 1/h0` and `l < 1 - g < c` along `[t0, t_end]`.
pub fn check_orbit_inequalities(
    traj: &Trajectory,
    model: &ModelSpec,
    p: &NeuralModelParams,
    n_samples: usize,
) -> Result<OrbitInequalityReport> {
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least two samples"));
    }
    let (a, b) = (traj.t0, traj.t_end());
    let mut r = OrbitInequalityReport {
        n_samples,
        min_one_plus_tanh: f64::INFINITY,
        max_one_plus_tanh: f64::NEG_INFINITY,
        upper: 1.0 / p.h0,
        min_one_minus_g: f64::INFINITY,
        max_one_minus_g: f64::NEG_INFINITY,
        l: model.l,
        c: model.c,
        pass: false,
    };
    for k in 0..n_samples {
        let t = a + (b - a) * k as f64 / (n_samples - 1) as f64;
        let y = traj.eval(t)?;
        let th = 1.0 + y[2].tanh();
        let w = 1.0 - traj.rhs(model, t)?[2];
        r.min_one_plus_tanh = r.min_one_plus_tanh.min(th);
        r.max_one_plus_tanh = r.max_one_plus_tanh.max(th);
        r.min_one_minus_g = r.min_one_minus_g.min(w);
        r.max_one_minus_g = r.max_one_minus_g.max(w);
    }
    r.pass = r.min_one_plus_tanh >= 1.0
        && r.max_one_plus_tanh <= r.upper
        && r.min_one_minus_g > r.l
        && r.max_one_minus_g < r.c;
    Ok(r)
}

/// Numerical settings of the end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub t0: f64,
    pub history_span: f64,
    pub t_end: f64,
    pub tol: f64,
    /// Start of the window used for range-box containment.
    pub transient: f64,
    pub range_samples: usize,
    /// Lift time; must lie where the orbit still moves, or every Taylor coefficient past `a_0` vanishes.
    pub lift_time: f64,
    pub depth: usize,
    pub decay_m: u32,
    pub a2: A2Options,
    pub lipschitz_samples: usize,
    pub radius_samples: usize,
    pub h_max: f64,
    /// Defaults to `(1 - 1/c)/2`.
    pub lambda0: Option<f64>,
    pub n_lambda: usize,
    pub grid: DiskGrid,
    pub fp_tol: f64,
    pub max_iter: usize,
    pub n_taylor: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn extend_config(&self) -> ExtendConfig {
        ExtendConfig {
            depth: self.depth,
            window: vec![-1.0, -0.5, 0.5, 1.0],
            lipschitz_samples: self.lipschitz_samples,
            radius_samples: self.radius_samples,
            h_max: self.h_max,
            lambda0: self.lambda0,
            n_lambda: self.n_lambda,
            grid: self.grid,
            fp_tol: self.fp_tol,
            max_iter: self.max_iter,
            n_taylor: self.n_taylor,
            seed: self.seed,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            history_span: 20.0,
            t_end: 200.0,
            tol: 1e-10,
            transient: 100.0,
            range_samples: 4000,
            lift_time: 15.0,
            depth: 32,
            decay_m: 1,
            a2: A2Options::default(),
            lipschitz_samples: 16,
            radius_samples: 64,
            h_max: 1.0,
            lambda0: None,
            n_lambda: 6,
            grid: DiskGrid::default(),
            fp_tol: 1e-10,
            max_iter: 200_000,
            n_taylor: 12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub params: NeuralModelParams,
    pub config: PipelineConfig,
    pub alpha: AlphaReport,
    pub a2: A2Report,
    pub n_segments: usize,
    pub monotone_delay: MonotoneDelayReport,
    pub orbit_inequalities: OrbitInequalityReport,
    pub range: RangeReport,
    pub decay: DecayProfile,
    pub lipschitz: LipschitzEstimate,
    pub disk: DiskRadiusReport,
    pub continuation: ContinuationSummary,
    pub taylor: TaylorSummary,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// check_alpha → check_a2 → integrate → range box → lift and decay → λ-continuation → Taylor.
pub fn run_full_pipeline(p: &NeuralModelParams, cfg: &PipelineConfig) -> Result<PipelineReport> {
    let alpha = check_alpha(p);
    if let Some(bad) = alpha.first_failure() {
        return Err(Error::AssumptionFailed {
            condition: bad.name.clone(),
            detail: bad.detail.clone(),
        }
        .at_stage("check_alpha"));
    }
    let model = build_neural_model(p).map_err(|e| e.at_stage("build_model"))?;
    let a2 = check_a2(&model, &cfg.a2).map_err(|e| e.at_stage("check_a2"))?;
    if !a2.pass {
        return Err(Error::AssumptionFailed {
            condition: "A2".into(),
            detail: format!("worst margin {:e} at {:?}", a2.worst_margin, a2.worst_point),
        }
        .at_stage("check_a2"));
    }
    let hist =
        default_history(cfg.t0, cfg.history_span).map_err(|e| e.at_stage("integrate_dde"))?;
    let traj = integrate_dde(&model, &hist, cfg.t_end, cfg.tol)
        .map_err(|e| e.at_stage("integrate_dde"))?;
    let monotone_delay = check_monotone_delay(&traj, &model, cfg.range_samples)
        .map_err(|e| e.at_stage("integrate_dde"))?;
    let orbit_inequalities = check_orbit_inequalities(&traj, &model, p, cfg.range_samples)
        .map_err(|e| e.at_stage("integrate_dde"))?;
    let range = verify_range_box(&traj, &p.range_box(), cfg.transient, cfg.range_samples)
        .map_err(|e| e.at_stage("verify_range_box"))?;

    let w = build_lift(&traj, cfg.lift_time, cfg.depth).map_err(|e| e.at_stage("build_lift"))?;
    let decay = decay_profile(&w, &model, cfg.decay_m).map_err(|e| e.at_stage("build_lift"))?;
    let ext = extend_orbit(&model, &traj, cfg.lift_time, &cfg.extend_config())?.report;
    let taylor = ext.taylor;

    let mut notes = vec![
        range.note.clone(),
        "the λ-family is assumed to converge as a whole; the proof only gives convergent subsequences".into(),
        a2.note.clone(),
    ];
    if taylor.block1.iter().all(|s| s.fit.n_used < 2) {
        notes.push("all Taylor coefficients past a_0 are below the noise floor (orbit at rest near the lift time)".into());
    }
    let pass = a2.pass
        && monotone_delay.pass
        && orbit_inequalities.pass
        && range.pass
        && ext.continuation.drift_monotone
        && taylor.pass;
    Ok(PipelineReport {
        params: *p,
        config: cfg.clone(),
        alpha,
        a2,
        n_segments: traj.segments().len(),
        monotone_delay,
        orbit_inequalities,
        range,
        decay,
        lipschitz: ext.lipschitz,
        disk: ext.disk,
        continuation: ext.continuation,
        taylor,
        pass,
        notes,
    })
}
