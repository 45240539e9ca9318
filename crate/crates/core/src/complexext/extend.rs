//! Lift at one time, size the disk, continue in λ and read off Taylor coefficients.

use serde::{Deserialize, Serialize};

use super::continuation::{
    default_lambda0, lambda_continuation, lambda_schedule, ContinuationConfig, StageRecord,
};
use super::contraction::{estimate_lipschitz, LipschitzEstimate};
use super::orbit::{ComplexOrbit, DiskGrid};
use super::radius::{default_margin, disk_radius_report, DiskRadiusReport};
use super::taylor::{taylor_coefficients, TaylorSeries};
use crate::delaycore::{ModelSpec, Trajectory};
use crate::error::{Error, Result};
use crate::lift::{build_lift, LiftedState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtendConfig {
    pub depth: usize,
    /// Offsets from the lift time of the extra lifts that enter the sampled set `Q`.
    pub window: Vec<f64>,
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

impl Default for ExtendConfig {
    fn default() -> Self {
        Self {
            depth: 32,
            window: vec![-1.0, -0.5, 0.5, 1.0],
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
pub struct ContinuationSummary {
    pub h: f64,
    pub stages: Vec<StageRecord>,
    pub drift_monotone: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaylorSummary {
    /// Block-1 series of the extrapolated orbit.
    pub block1: Vec<TaylorSeries>,
    pub min_fitted_radius: f64,
    /// `0.5 h0`.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtendReport {
    pub lift_time: f64,
    pub margin: f64,
    pub lipschitz: LipschitzEstimate,
    pub disk: DiskRadiusReport,
    pub continuation: ContinuationSummary,
    pub taylor: TaylorSummary,
}

/// Everything the extension produced; the report is the serialisable part.
#[derive(Debug, Clone)]
pub struct Extension {
    pub report: ExtendReport,
    pub lifted: LiftedState,
    pub extrapolated: ComplexOrbit,
}

/// Runs the complex-time extension of `traj` around `lift_time`.
///
/// Errors carry the stage label `build_lift`, `lambda_continuation` or `taylor_coefficients`.
pub fn extend_orbit(
    model: &ModelSpec,
    traj: &Trajectory,
    lift_time: f64,
    cfg: &ExtendConfig,
) -> Result<Extension> {
    if cfg.n_lambda < 1 {
        return Err(
            Error::param("n_lambda", "need at least one λ stage").at_stage("lambda_continuation")
        );
    }
    let lift = |t: f64| build_lift(traj, t, cfg.depth);
    let w = lift(lift_time).map_err(|e| e.at_stage("build_lift"))?;

    let stage = "lambda_continuation";
    let margin = default_margin(model, &w);
    let lipschitz = estimate_lipschitz(model, &w, margin, cfg.lipschitz_samples, cfg.seed)
        .map_err(|e| e.at_stage(stage))?;
    let window = cfg
        .window
        .iter()
        .map(|d| lift(lift_time + d))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage(stage))?;
    let disk = disk_radius_report(
        model,
        &w,
        &window,
        margin,
        cfg.radius_samples,
        cfg.seed,
        cfg.h_max,
    )
    .map_err(|e| e.at_stage(stage))?;
    let cont_cfg = ContinuationConfig {
        lambdas: lambda_schedule(
            cfg.lambda0.unwrap_or_else(|| default_lambda0(model.c)),
            cfg.n_lambda,
        ),
        grid: cfg.grid,
        h0: disk.h0,
        lipschitz_l0: lipschitz.l0,
        delta: margin,
        max_iter: cfg.max_iter,
        fp_tol: cfg.fp_tol,
        drift_tol: None,
    };
    let cont = lambda_continuation(model, &w, &cont_cfg).map_err(|e| e.at_stage(stage))?;

    let series = taylor_coefficients(&cont.extrapolated, cfg.n_taylor)
        .map_err(|e| e.at_stage("taylor_coefficients"))?;
    let block1: Vec<TaylorSeries> = series.into_iter().filter(|s| s.block == 1).collect();
    let min_fitted_radius = block1
        .iter()
        .map(|s| s.fit.radius)
        .fold(f64::INFINITY, f64::min);
    let threshold = 0.5 * disk.h0;
    let taylor = TaylorSummary {
        pass: min_fitted_radius > threshold && block1.iter().all(|s| s.fit.normalized_slope < 0.0),
        block1,
        min_fitted_radius,
        threshold,
    };
    Ok(Extension {
        report: ExtendReport {
            lift_time,
            margin,
            lipschitz,
            disk,
            continuation: ContinuationSummary {
                h: cont.h,
                stages: cont.stages,
                drift_monotone: cont.drift_monotone,
            },
            taylor,
        },
        lifted: w,
        extrapolated: cont.extrapolated,
    })
}
