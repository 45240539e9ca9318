//! Dormand–Prince 5(4) with Hairer's fourth-order continuous extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Order of the propagated solution.
pub const ORDER: u32 = 5;

/// One polynomial piece `p(θ) = Σ a_k θ^k`, `θ = (t - t_start)/h ∈ [0, 1]`,
/// one coefficient row per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub h: f64,
    pub coeffs: Vec<[f64; 5]>,
}

impl Segment {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.h
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t_start) / self.h;
        for (o, a) in out.iter_mut().zip(&self.coeffs) {
            *o = a[0] + th * (a[1] + th * (a[2] + th * (a[3] + th * a[4])));
        }
    }

    pub fn eval_deriv_into(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t_start) / self.h;
        for (o, a) in out.iter_mut().zip(&self.coeffs) {
            *o = (a[1] + th * (2.0 * a[2] + th * (3.0 * a[3] + th * 4.0 * a[4]))) / self.h;
        }
    }

    /// Quartic through five equispaced samples of `f` on `[t_start, t_start + h]`.
    pub fn interpolate<F: Fn(f64) -> Vec<f64>>(t_start: f64, h: f64, f: F) -> Self {
        let samples: Vec<Vec<f64>> = (0..5).map(|i| f(t_start + h * i as f64 / 4.0)).collect();
        let width = samples[0].len();
        // inverse Vandermonde at θ = 0, 1/4, 1/2, 3/4, 1
        const INV: [[f64; 5]; 5] = [
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [-25.0 / 3.0, 16.0, -12.0, 16.0 / 3.0, -1.0],
            [70.0 / 3.0, -208.0 / 3.0, 76.0, -112.0 / 3.0, 22.0 / 3.0],
            [-80.0 / 3.0, 96.0, -128.0, 224.0 / 3.0, -16.0],
            [32.0 / 3.0, -128.0 / 3.0, 64.0, -128.0 / 3.0, 32.0 / 3.0],
        ];
        let coeffs = (0..width)
            .map(|c| {
                let mut a = [0.0; 5];
                for (k, row) in INV.iter().enumerate() {
                    a[k] = (0..5).map(|i| row[i] * samples[i][c]).sum();
                }
                a
            })
            .collect();
        Self { t_start, h, coeffs }
    }
}

/// Ordered, contiguous list of segments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseQuartic {
    pub segments: Vec<Segment>,
}

impl PiecewiseQuartic {
    pub fn t_start(&self) -> Option<f64> {
        self.segments.first().map(|s| s.t_start)
    }

    pub fn t_end(&self) -> Option<f64> {
        self.segments.last().map(Segment::t_end)
    }

    /// Segment containing `t`; the right end belongs to the last segment.
    pub fn locate(&self, t: f64) -> Option<&Segment> {
        let (first, last) = (self.segments.first()?, self.segments.last()?);
        let span = last.t_end() - first.t_start;
        let slack = 1e-12 * span.abs().max(1.0);
        if t < first.t_start - slack || t > last.t_end() + slack {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        Some(&self.segments[idx.saturating_sub(1)])
    }
}

/// Result of one attempted step.
pub(crate) struct StepOutcome {
    pub y_new: Vec<f64>,
    pub k_last: Vec<f64>,
    pub err: f64,
    pub segment: Segment,
}

/// Attempts one step from `(t, y)` with slope `k1 = rhs(t, y)`.
pub(crate) fn dopri_step<E, F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    k1: &[f64],
    h: f64,
    tol: f64,
) -> Result<StepOutcome, E>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let d = y.len();
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut k5 = vec![0.0; d];
    let mut k6 = vec![0.0; d];
    let mut k7 = vec![0.0; d];
    let mut ys = vec![0.0; d];

    for i in 0..d {
        ys[i] = y[i] + h * A21 * k1[i];
    }
    rhs(t + C2 * h, &ys, &mut k2)?;
    for i in 0..d {
        ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    rhs(t + C3 * h, &ys, &mut k3)?;
    for i in 0..d {
        ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    rhs(t + C4 * h, &ys, &mut k4)?;
    for i in 0..d {
        ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    rhs(t + C5 * h, &ys, &mut k5)?;
    for i in 0..d {
        ys[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    rhs(t + h, &ys, &mut k6)?;
    let mut y_new = vec![0.0; d];
    for i in 0..d {
        y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    rhs(t + h, &y_new, &mut k7)?;

    let mut acc = 0.0;
    for i in 0..d {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = tol + tol * y[i].abs().max(y_new[i].abs());
        acc += (e / sc).powi(2);
    }
    let err = (acc / d as f64).sqrt();

    let coeffs = (0..d)
        .map(|i| {
            let r1 = y[i];
            let r2 = y_new[i] - y[i];
            let r3 = h * k1[i] - r2;
            let r4 = r2 - h * k7[i] - r3;
            let r5 =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            [r1, r2 + r3, r4 + r5 - r3, -(r4 + 2.0 * r5), r5]
        })
        .collect();

    Ok(StepOutcome {
        y_new,
        k_last: k7,
        err: if err.is_finite() { err } else { f64::INFINITY },
        segment: Segment {
            t_start: t,
            h,
            coeffs,
        },
    })
}

/// Step-size factor from an error estimate, clamped to `[0.2, 5]`.
pub(crate) fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-1.0 / ORDER as f64)).clamp(0.2, 5.0)
    }
}

/// Options for plain ODE solves.
#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub tol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            h_init: None,
            h_max: f64::INFINITY,
            h_min: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

/// Adaptive forward solve of `y' = rhs(t, y)` on `[t0, t_end]` with dense output.
pub fn solve_ode<F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<PiecewiseQuartic>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(opts.tol > 0.0) {
        return Err(Error::param(
            "tol",
            format!("must be positive, got {}", opts.tol),
        ));
    }
    if !(t_end > t0) {
        return Err(Error::param(
            "t_end",
            format!("must exceed the start time {t0}"),
        ));
    }
    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; y.len()];
    rhs(t, &y, &mut k1)?;
    let mut h = opts.h_init.unwrap_or(span * 1e-3).min(opts.h_max).min(span);
    let mut out = PiecewiseQuartic::default();
    let mut steps = 0;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { time: t, h });
        }
        let last = t + h >= t_end - 1e-14 * span;
        if last {
            h = t_end - t;
        }
        let step = dopri_step(&mut rhs, t, &y, &k1, h, opts.tol)?;
        if step.err <= 1.0 {
            t = if last { t_end } else { t + h };
            y = step.y_new;
            k1 = step.k_last;
            out.segments.push(step.segment);
            h = (h * step_factor(step.err)).min(opts.h_max);
        } else {
            h *= step_factor(step.err);
            if h < opts.h_min * span.max(1.0) {
                return Err(Error::StepUnderflow { time: t, h });
            }
        }
    }
    Ok(out)
}
