use serde::{Deserialize, Serialize};

use super::contraction::{solve_fixed_point, ContractionConfig, ConvergenceRecord};
use super::orbit::{ComplexOrbit, DiskGrid};
use crate::delaycore::ModelSpec;
use crate::error::{Error, Result};
use crate::lift::LiftedState;

/// Share of `λ/l0` used as disk radius.
pub const CONTRACTION_SAFETY: f64 = 0.8;

pub fn default_lambda0(c: f64) -> f64 {
    0.5 * (1.0 - 1.0 / c)
}

/// `λ_n = λ0 2^{-n}`, `n = 0..=n_max`.
pub fn lambda_schedule(lambda0: f64, n_max: usize) -> Vec<f64> {
    (0..=n_max)
        .map(|n| lambda0 * 0.5_f64.powi(n as i32))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationConfig {
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    pub grid: DiskGrid,
    pub h0: f64,
    pub lipschitz_l0: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub fp_tol: f64,
    /// Stop once the inter-stage drift drops below this.
    pub drift_tol: Option<f64>,
}

impl ContinuationConfig {
    /// Common radius `min(h0, 0.8 λ_min / l0)`.
    pub fn common_radius(&self) -> f64 {
        let lam_min = self.lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
        let by_lambda = CONTRACTION_SAFETY * lam_min / self.lipschitz_l0;
        if by_lambda.is_finite() {
            self.h0.min(by_lambda)
        } else {
            self.h0
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub lambda: f64,
    pub convergence: ConvergenceRecord,
    /// Scaled sup distance to the previous stage's orbit.
    pub drift: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationResult {
    pub h: f64,
    pub stages: Vec<StageRecord>,
    pub drift_monotone: bool,
    /// Per-stage fixed points, in schedule order.
    pub orbits: Vec<ComplexOrbit>,
    /// Two-point Richardson estimate of the `λ → 0` orbit.
    pub extrapolated: ComplexOrbit,
}

fn combine(a: &ComplexOrbit, b: &ComplexOrbit, wa: f64, wb: f64) -> ComplexOrbit {
    let mix3 = |x: &Vec<Vec<Vec<_>>>, y: &Vec<Vec<Vec<_>>>| {
        x.iter()
            .zip(y)
            .map(|(rx, ry)| {
                rx.iter()
                    .zip(ry)
                    .map(|(p, q): (&Vec<num_complex::Complex64>, &Vec<_>)| {
                        p.iter().zip(q).map(|(u, v)| wa * u + wb * v).collect()
                    })
                    .collect()
            })
            .collect()
    };
    let mut out = b.clone();
    out.lambda = None;
    out.values = mix3(&a.values, &b.values);
    out.h_values = mix3(&a.h_values, &b.h_values);
    out.circle = a
        .circle
        .iter()
        .zip(&b.circle)
        .map(|(p, q)| p.iter().zip(q).map(|(u, v)| wa * u + wb * v).collect())
        .collect();
    out
}

pub fn lambda_continuation(
    model: &ModelSpec,
    w_t0: &LiftedState,
    cfg: &ContinuationConfig,
) -> Result<ContinuationResult> {
    if cfg.lambdas.len() < 2 {
        return Err(Error::param(
            "lambdas",
            "continuation needs at least two stages",
        ));
    }
    if cfg.lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param(
            "lambdas",
            "schedule must be strictly decreasing",
        ));
    }
    let h = cfg.common_radius();
    let mut stages: Vec<StageRecord> = Vec::new();
    let mut orbits: Vec<ComplexOrbit> = Vec::new();
    for &lambda in &cfg.lambdas {
        let cc = ContractionConfig {
            lambda,
            h,
            lipschitz_l0: cfg.lipschitz_l0,
            delta: cfg.delta,
            max_iter: cfg.max_iter,
            fp_tol: cfg.fp_tol,
        };
        let (orbit, convergence) = solve_fixed_point(&cc, model, w_t0, cfg.grid, orbits.last())?;
        let drift = orbits.last().map(|prev| orbit.scaled_distance(prev));
        orbits.push(orbit);
        stages.push(StageRecord {
            lambda,
            convergence,
            drift,
        });
        if let (Some(tol), Some(d)) = (cfg.drift_tol, drift) {
            if d < tol {
                break;
            }
        }
    }
    let drifts: Vec<f64> = stages.iter().filter_map(|s| s.drift).collect();
    let drift_monotone = drifts.windows(2).all(|w| w[1] < w[0]);
    let n = orbits.len();
    let (lp, ln) = (stages[n - 2].lambda, stages[n - 1].lambda);
    // w0 = w_n + (w_n - w_{n-1}) λ_n / (λ_{n-1} - λ_n)
    let r = ln / (lp - ln);
    let extrapolated = combine(&orbits[n - 2], &orbits[n - 1], -r, 1.0 + r);
    Ok(ContinuationResult {
        h,
        stages,
        drift_monotone,
        orbits,
        extrapolated,
    })
}
