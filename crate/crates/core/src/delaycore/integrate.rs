use serde::{Deserialize, Serialize};

use super::dopri::{dopri_step, step_factor, Segment, ORDER};
use super::history::HistoryFunction;
use super::model::ModelSpec;
use super::trajectory::{Breakpoint, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};

/// Bound on `max_t |ẋ - rhs|` relative to `tol` that accepted trajectories meet.
pub const RESIDUAL_CONSTANT: f64 = 1e3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DdeOptions {
    pub tol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    /// Constant step size; disables error control and breakpoint landing.
    pub fixed_step: Option<f64>,
    pub track_breakpoints: bool,
    pub max_steps: usize,
}

impl DdeOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            h_init: None,
            h_max: f64::INFINITY,
            fixed_step: None,
            track_breakpoints: true,
            max_steps: 2_000_000,
        }
    }

    pub fn fixed(h: f64) -> Self {
        Self {
            fixed_step: Some(h),
            track_breakpoints: false,
            ..Self::new(1.0)
        }
    }
}

enum StageFail {
    /// A delayed argument landed inside the step being computed.
    DelayInStep,
    Hard(Error),
}

impl From<Error> for StageFail {
    fn from(e: Error) -> Self {
        StageFail::Hard(e)
    }
}

/// Integrates the delay system from the end of `hist` to `t_end`.
pub fn integrate_dde(
    model: &ModelSpec,
    hist: &HistoryFunction,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    integrate_dde_with(model, hist, t_end, &DdeOptions::new(tol))
}

pub fn integrate_dde_with(
    model: &ModelSpec,
    hist: &HistoryFunction,
    t_end: f64,
    opts: &DdeOptions,
) -> Result<Trajectory> {
    model.validate()?;
    let n = model.n;
    let width = n + 1;
    if hist.width() != width {
        return Err(Error::param(
            "history",
            format!("width {} does not match N + 1 = {width}", hist.width()),
        ));
    }
    if !(opts.tol > 0.0) || !opts.tol.is_finite() {
        return Err(Error::param(
            "tol",
            format!("must be positive, got {}", opts.tol),
        ));
    }
    if !(t_end > hist.t0) {
        return Err(Error::param(
            "t_end",
            format!("must exceed t0 = {}", hist.t0),
        ));
    }
    if let Some(h) = opts.fixed_step {
        if !(h > 0.0) {
            return Err(Error::param(
                "fixed_step",
                format!("must be positive, got {h}"),
            ));
        }
    }

    let meta = TrajectoryMeta {
        n,
        m: model.m,
        c: model.c,
        l: model.l,
    };
    let mut traj = Trajectory::start(meta, hist, opts.tol);
    let mut t = hist.t0;
    let mut y = hist.eval(t);
    if let Some(constraint) = model.domain_violation(&y[..n], y[n]) {
        return Err(Error::DomainExit {
            time: t,
            constraint,
        });
    }

    // breakpoints with derivative jumps up to the integrator order are worth landing on
    let max_order = ORDER.saturating_sub(hist.smoothness.min(ORDER));
    let mut bps: Vec<Breakpoint> = Vec::new();
    if opts.track_breakpoints && max_order > 0 {
        bps.push(Breakpoint { time: t, order: 0 });
    }
    let mut next_bp = 0usize;

    let span = t_end - t;
    let mut h = match opts.fixed_step {
        Some(h) => h,
        None => opts
            .h_init
            .unwrap_or((0.5 * y[n]).min(span * 1e-2).min(0.1)),
    }
    .min(opts.h_max);

    let mut k1 = vec![0.0; width];
    let mut t_step = t;
    match eval_rhs(model, &traj, t_step, t, &y, &mut k1) {
        Ok(()) => {}
        Err(StageFail::Hard(e)) => return Err(e),
        Err(StageFail::DelayInStep) => {
            return Err(Error::param("history", "τ(t0) must be positive"));
        }
    }

    let mut landing: Option<f64> = None;
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { time: t, h });
        }
        let mut last = false;
        if let Some(tb) = landing {
            h = tb - t;
        }
        if t + h >= t_end - 1e-13 * span {
            h = t_end - t;
            last = true;
        }
        if opts.fixed_step.is_none() && h < 1e-12 * span.max(1.0) {
            return Err(Error::StepUnderflow { time: t, h });
        }

        t_step = t;
        let mut rhs =
            |s: f64, ys: &[f64], out: &mut [f64]| eval_rhs(model, &traj, t_step, s, ys, out);
        let step = match dopri_step(&mut rhs, t, &y, &k1, h, opts.tol) {
            Ok(s) => s,
            Err(StageFail::DelayInStep) => {
                if opts.fixed_step.is_some() {
                    return Err(Error::param(
                        "fixed_step",
                        format!("step {h} exceeds the delay near t = {t}"),
                    ));
                }
                landing = None;
                h *= 0.5;
                continue;
            }
            Err(StageFail::Hard(e)) => return Err(e),
        };

        if opts.fixed_step.is_none() && step.err > 1.0 {
            landing = None;
            h *= step_factor(step.err);
            continue;
        }

        // propagate the next pending breakpoint: land on the root of η(t) = bp
        if landing.is_none() && next_bp < bps.len() && bps[next_bp].order < max_order {
            let bp = bps[next_bp].time;
            let eta_new = t + h - step.y_new[n];
            if eta_new > bp + 1e-13 * bp.abs().max(1.0) {
                let root = eta_root(&step.segment, n, bp);
                if root - t > 1e-10 * h.max(1e-300) && root < t + h {
                    landing = Some(root);
                    continue;
                }
                // root at the step start; treat as already landed
                let order = bps[next_bp].order + 1;
                push_breakpoint(&mut bps, t, order, max_order);
                next_bp += 1;
            }
        }

        if let Some(exit) = domain_exit(model, &step.segment, n) {
            return Err(exit);
        }

        let t_new = match landing {
            Some(tb) => tb,
            None if last => t_end,
            None => t + h,
        };
        let mut seg = step.segment;
        seg.h = t_new - t;
        traj.body.segments.push(seg);
        if let Some(tb) = landing.take() {
            let order = bps[next_bp].order + 1;
            push_breakpoint(&mut bps, tb, order, max_order);
            next_bp += 1;
        }
        t = t_new;
        y = step.y_new;
        k1 = step.k_last;
        if opts.fixed_step.is_none() {
            h = (h * step_factor(step.err)).min(opts.h_max);
        }
    }

    traj.breakpoints = bps;
    Ok(traj)
}

fn push_breakpoint(bps: &mut Vec<Breakpoint>, time: f64, order: u32, max_order: u32) {
    if order <= max_order {
        bps.push(Breakpoint { time, order });
    }
}

fn eval_rhs(
    model: &ModelSpec,
    traj: &Trajectory,
    t_known: f64,
    t: f64,
    y: &[f64],
    out: &mut [f64],
) -> Result<(), StageFail> {
    let n = model.n;
    let tau = y[n];
    if !(tau > 0.0) {
        return Err(StageFail::Hard(Error::DomainExit {
            time: t,
            constraint: format!("tau = {tau} is not positive"),
        }));
    }
    let slack = 1e-13 * t_known.abs().max(1.0);
    let lookup = |s: f64| -> Result<Vec<f64>, StageFail> {
        if s < traj.t_min {
            return Err(StageFail::Hard(Error::DelayBeforeHistory {
                time: t,
                delayed: s,
                t_min: traj.t_min,
            }));
        }
        if s > t_known + slack {
            return Err(StageFail::DelayInStep);
        }
        Ok(traj.eval(s.min(traj.t_end().max(traj.t0)))?)
    };
    let eta = t - tau;
    let delayed = lookup(eta)?;
    let mut chain = Vec::with_capacity(n * model.m);
    chain.extend_from_slice(&y[..n]);
    let mut s = eta;
    let mut state = delayed.clone();
    for k in 1..model.m {
        if k > 1 {
            s -= state[n];
            state = lookup(s)?;
        }
        chain.extend_from_slice(&state[..n]);
    }
    model.f_real(&y[..n], &delayed[..n], &mut out[..n]);
    out[n] = model.g_real(&chain, tau);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(StageFail::Hard(Error::NonFinite {
            location: format!("right-hand side at t = {t}"),
        }));
    }
    Ok(())
}

/// Root of `η(t) = bp` inside a step, by bisection on the monotone dense output.
fn eta_root(seg: &Segment, n: usize, bp: f64) -> f64 {
    let mut buf = vec![0.0; seg.coeffs.len()];
    let mut phi = |t: f64| {
        seg.eval_into(t, &mut buf);
        t - buf[n] - bp
    };
    let (mut a, mut b) = (seg.t_start, seg.t_end());
    if phi(a) >= 0.0 {
        return a;
    }
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if phi(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            break;
        }
    }
    b
}

/// First exit of the dense output from `U × V` within a step.
fn domain_exit(model: &ModelSpec, seg: &Segment, n: usize) -> Option<Error> {
    let mut buf = vec![0.0; n + 1];
    let violated = |t: f64, buf: &mut [f64]| {
        seg.eval_into(t, buf);
        model.domain_violation(&buf[..n], buf[n])
    };
    const PROBES: usize = 8;
    let mut good = seg.t_start;
    for i in 1..=PROBES {
        let t = seg.t_start + seg.h * i as f64 / PROBES as f64;
        if violated(t, &mut buf).is_some() {
            let (mut a, mut b) = (good, t);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if violated(mid, &mut buf).is_some() {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let constraint = violated(b, &mut buf).unwrap_or_default();
            return Some(Error::DomainExit {
                time: b,
                constraint,
            });
        }
        good = t;
    }
    None
}

/// Report of `dη/dt = 1 - g` sampled along an orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneDelayReport {
    pub n_samples: usize,
    pub min_rate: f64,
    pub max_rate: f64,
    pub l: f64,
    pub c: f64,
    pub pass: bool,
}

/// Samples `1 - g` along `[t0, t_end]` and checks `l < 1 - g < c`.
pub fn check_monotone_delay(
    traj: &Trajectory,
    model: &ModelSpec,
    n_samples: usize,
) -> Result<MonotoneDelayReport> {
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least two samples"));
    }
    let (a, b) = (traj.t0, traj.t_end());
    let mut min_rate = f64::INFINITY;
    let mut max_rate = f64::NEG_INFINITY;
    for i in 0..n_samples {
        let t = a + (b - a) * i as f64 / (n_samples - 1) as f64;
        let rhs = traj.rhs(model, t)?;
        let rate = 1.0 - rhs[model.n];
        min_rate = min_rate.min(rate);
        max_rate = max_rate.max(rate);
    }
    Ok(MonotoneDelayReport {
        n_samples,
        min_rate,
        max_rate,
        l: model.l,
        c: model.c,
        pass: min_rate > model.l && max_rate < model.c,
    })
}
