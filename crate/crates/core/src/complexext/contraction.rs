//! The perturbed operator
//!
//! ```text
//! L(ν, λ)(t) = ((1-λ)I - T^{-1}) ν(t) + (T^{-1} + λI) ν_{t0} + ∫_{t0}^{t} H(ν(s)) ds
//! ```
//!
//! on a complex disk, with the integral taken along the straight ray from `t0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orbit::{ComplexOrbit, DiskGrid};
use super::quadrature::CompositeRule;
use crate::delaycore::ModelSpec;
use crate::error::{Error, Result};
use crate::lift::{eval_h_into, LiftedState};

pub const LIPSCHITZ_SAFETY: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionConfig {
    pub lambda: f64,
    pub h: f64,
    pub lipschitz_l0: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub fp_tol: f64,
}

impl ContractionConfig {
    /// `κ = 1 - λ + l0 h`.
    pub fn kappa(&self) -> f64 {
        1.0 - self.lambda + self.lipschitz_l0 * self.h
    }

    pub fn validate(&self, c: f64) -> Result<()> {
        let upper = 1.0 - 1.0 / c;
        if !(self.lambda > 0.0 && self.lambda < upper) {
            return Err(Error::param(
                "lambda",
                format!("must lie in (0, {upper}), got {}", self.lambda),
            ));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::param(
                "h",
                format!("disk radius must be positive, got {}", self.h),
            ));
        }
        if !(self.fp_tol > 0.0) {
            return Err(Error::param("fp_tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be positive"));
        }
        if !(self.kappa() < 1.0) {
            return Err(Error::NotContractive {
                kappa: self.kappa(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// Safety-inflated constant used for disk sizing.
    pub l0: f64,
    pub raw: f64,
    pub safety: f64,
    pub delta: f64,
    pub n_samples: usize,
}

fn h_of(model: &ModelSpec, states: &[Complex64], tail: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); states.len()];
    eval_h_into(model, states, tail, &mut out)?;
    Ok(out)
}

fn sup_norm(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}

/// Lipschitz constant of `H` on the sup-norm ball of radius `delta` around `anchor`.
///
/// Takes the larger of sampled difference quotients over random pairs and the
/// induced ∞-norm of finite-difference Jacobians at random ball points, then
/// multiplies by [`LIPSCHITZ_SAFETY`].
pub fn estimate_lipschitz(
    model: &ModelSpec,
    anchor: &LiftedState,
    delta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if !(delta > 0.0) {
        return Err(Error::param(
            "delta",
            format!("must be positive, got {delta}"),
        ));
    }
    if n_samples == 0 {
        return Err(Error::param("n_samples", "need at least one sample"));
    }
    let base = anchor.unscaled();
    let tail = &anchor.tail;
    let dim = base.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase = |rng: &mut ChaCha8Rng| {
        Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
    };
    let mut raw = 0.0_f64;

    for s in 0..n_samples {
        // pair with full-modulus offsets in random phase and sign directions
        let dir: Vec<Complex64> = (0..dim).map(|_| phase(&mut rng)).collect();
        let r1 = rng.gen_range(0.1..1.0) * delta;
        let p1: Vec<Complex64> = base.iter().zip(&dir).map(|(b, d)| b + r1 * d).collect();
        let p2: Vec<Complex64> = if s % 2 == 0 {
            base.iter().zip(&dir).map(|(b, d)| b - r1 * d).collect()
        } else {
            base.iter()
                .map(|b| b + delta * rng.gen_range(0.0..1.0) * phase(&mut rng))
                .collect()
        };
        let dist = p1
            .iter()
            .zip(&p2)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()));
        if dist > 0.0 {
            let (h1, h2) = (h_of(model, &p1, tail)?, h_of(model, &p2, tail)?);
            let dh = h1
                .iter()
                .zip(&h2)
                .fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()));
            raw = raw.max(dh / dist);
        }

        // Jacobian rows at a random ball point
        let p: Vec<Complex64> = base
            .iter()
            .map(|b| b + delta * 0.5 * rng.gen_range(0.0..1.0) * phase(&mut rng))
            .collect();
        let h0 = h_of(model, &p, tail)?;
        let eps = 1e-7 * (1.0 + sup_norm(&p));
        let mut row_sums = vec![0.0; dim];
        let mut q = p.clone();
        for k in 0..dim {
            q[k] += eps;
            let hk = h_of(model, &q, tail)?;
            q[k] = p[k];
            for (rs, (a, b)) in row_sums.iter_mut().zip(hk.iter().zip(&h0)) {
                *rs += (a - b).norm() / eps;
            }
        }
        raw = raw.max(row_sums.iter().cloned().fold(0.0, f64::max));
    }
    Ok(LipschitzEstimate {
        l0: LIPSCHITZ_SAFETY * raw,
        raw,
        safety: LIPSCHITZ_SAFETY,
        delta,
        n_samples,
    })
}

/// Precomputed sweep data for one disk and one λ.
pub(crate) struct Scheme<'a> {
    model: &'a ModelSpec,
    rule: CompositeRule,
    grid: DiskGrid,
    t0: f64,
    h: f64,
    lambda: f64,
    center: Vec<Complex64>,
    /// `c^{-j}` per flat entry.
    inv_cj: Vec<f64>,
    /// Tail closure at each node, `[ray][node]`.
    tails: Vec<Vec<Vec<Complex64>>>,
    pub(crate) angles: Vec<f64>,
    c: f64,
    width: usize,
    depth: usize,
}

impl<'a> Scheme<'a> {
    pub(crate) fn new(
        model: &'a ModelSpec,
        w_t0: &LiftedState,
        grid: DiskGrid,
        h: f64,
        lambda: f64,
    ) -> Result<Self> {
        grid.validate()?;
        let rule = CompositeRule::new(grid.subintervals, grid.order)?;
        let center = w_t0.unscaled();
        let width = model.width();
        let depth = w_t0.depth();
        let c = model.c;
        let inv_cj = (0..center.len())
            .map(|i| c.powi(-((i / width) as i32 + 1)))
            .collect();
        let angles = grid.angles();
        let tails = angles
            .iter()
            .map(|&th| {
                rule.nodes
                    .iter()
                    .map(|&xi| {
                        let dt = Complex64::from_polar(xi * h, th);
                        w_t0.tail
                            .iter()
                            .zip(&w_t0.tail_slope)
                            .map(|(b, s)| b + dt * s)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            model,
            rule,
            grid,
            t0: w_t0.t,
            h,
            lambda,
            center,
            inv_cj,
            tails,
            angles,
            c,
            width,
            depth,
        })
    }

    pub(crate) fn constant_guess(&self) -> Vec<Vec<Vec<Complex64>>> {
        vec![vec![self.center.clone(); self.rule.len()]; self.angles.len()]
    }

    /// One application of `L`; returns new values, `H` of the input, and the update distance.
    #[allow(clippy::type_complexity)]
    pub(crate) fn sweep(
        &self,
        values: &[Vec<Vec<Complex64>>],
    ) -> Result<(Vec<Vec<Vec<Complex64>>>, Vec<Vec<Vec<Complex64>>>, f64)> {
        let lam = self.lambda;
        let results: Vec<Result<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>, f64)>> = values
            .par_iter()
            .enumerate()
            .map(|(r, ray_vals)| {
                let hs = ray_vals
                    .iter()
                    .zip(&self.tails[r])
                    .map(|(v, tail)| h_of(self.model, v, tail))
                    .collect::<Result<Vec<_>>>()?;
                let rot = Complex64::from_polar(self.h, self.angles[r]);
                let mut dist = 0.0_f64;
                let mut new_vals = Vec::with_capacity(ray_vals.len());
                for (k, v) in ray_vals.iter().enumerate() {
                    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
                    for (m, wkm) in self.rule.matrix[k].iter().enumerate() {
                        for (o, hv) in out.iter_mut().zip(&hs[m]) {
                            *o += *wkm * hv;
                        }
                    }
                    for (i, o) in out.iter_mut().enumerate() {
                        let ic = self.inv_cj[i];
                        *o = (1.0 - lam - ic) * v[i] + (ic + lam) * self.center[i] + rot * *o;
                        dist = dist.max((*o - v[i]).norm());
                    }
                    new_vals.push(out);
                }
                Ok((new_vals, hs, dist))
            })
            .collect();
        let mut new_values = Vec::with_capacity(values.len());
        let mut h_values = Vec::with_capacity(values.len());
        let mut dist = 0.0_f64;
        for r in results {
            let (v, h, d) = r?;
            new_values.push(v);
            h_values.push(h);
            dist = dist.max(d);
        }
        Ok((new_values, h_values, dist))
    }

    /// Nyström value at radius fraction `xi` on every ray, valid at a fixed point.
    pub(crate) fn nystrom(&self, h_values: &[Vec<Vec<Complex64>>], xi: f64) -> Vec<Vec<Complex64>> {
        let row = self.rule.row(xi);
        h_values
            .iter()
            .enumerate()
            .map(|(r, hs)| {
                let rot = Complex64::from_polar(self.h, self.angles[r]);
                let mut integral = vec![Complex64::new(0.0, 0.0); self.center.len()];
                for (m, wm) in row.iter().enumerate() {
                    for (o, hv) in integral.iter_mut().zip(&hs[m]) {
                        *o += *wm * hv;
                    }
                }
                integral
                    .iter()
                    .enumerate()
                    .map(|(i, s)| self.center[i] + rot * s / (self.lambda + self.inv_cj[i]))
                    .collect()
            })
            .collect()
    }

    pub(crate) fn orbit(
        &self,
        values: Vec<Vec<Vec<Complex64>>>,
        h_values: Vec<Vec<Vec<Complex64>>>,
    ) -> ComplexOrbit {
        let circle_xi = self.grid.circle_fraction;
        let circle = self.nystrom(&h_values, circle_xi);
        ComplexOrbit {
            center_t0: self.t0,
            radius_h: self.h,
            c: self.c,
            width: self.width,
            depth: self.depth,
            lambda: Some(self.lambda),
            rays: self.angles.clone(),
            node_xi: self.rule.nodes.clone(),
            values,
            h_values,
            center: self.center.clone(),
            circle_xi,
            circle,
        }
    }
}

/// Applies `L(·, λ)` once to `orbit`; returns the image and the sup-norm update.
pub fn picard_apply(
    orbit: &ComplexOrbit,
    cfg: &ContractionConfig,
    model: &ModelSpec,
    w_t0: &LiftedState,
    grid: DiskGrid,
) -> Result<(ComplexOrbit, f64)> {
    cfg.validate(model.c)?;
    let scheme = Scheme::new(model, w_t0, grid, cfg.h, cfg.lambda)?;
    if orbit.values.len() != scheme.angles.len() || orbit.n_nodes() != scheme.rule.len() {
        return Err(Error::param(
            "orbit",
            "orbit grid does not match the disk grid",
        ));
    }
    let (values, h_values, dist) = scheme.sweep(&orbit.values)?;
    Ok((scheme.orbit(values, h_values), dist))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub lambda: f64,
    pub h: f64,
    pub kappa: f64,
    pub iterations: usize,
    pub updates: Vec<f64>,
    /// Largest ratio of successive updates above the rounding floor.
    pub measured_ratio: f64,
    pub converged: bool,
    /// Sup over nodes of `‖ν - ν_{t0}‖_∞`, to compare with `δ`.
    pub max_deviation: f64,
}

/// Iterates `L` from `initial` (or the constant orbit `ν_{t0}`) until the update drops below `fp_tol`.
pub fn solve_fixed_point(
    cfg: &ContractionConfig,
    model: &ModelSpec,
    w_t0: &LiftedState,
    grid: DiskGrid,
    initial: Option<&ComplexOrbit>,
) -> Result<(ComplexOrbit, ConvergenceRecord)> {
    cfg.validate(model.c)?;
    let scheme = Scheme::new(model, w_t0, grid, cfg.h, cfg.lambda)?;
    let mut values = match initial {
        Some(o) => {
            if o.values.len() != scheme.angles.len() || o.n_nodes() != scheme.rule.len() {
                return Err(Error::param(
                    "initial",
                    "initial orbit grid does not match the disk grid",
                ));
            }
            o.values.clone()
        }
        None => scheme.constant_guess(),
    };
    let floor = 1e-13 * (1.0 + sup_norm(&scheme.center));
    let mut updates = Vec::new();
    let mut measured_ratio = 0.0_f64;
    let h_values;
    loop {
        let (next, _, dist) = scheme.sweep(&values)?;
        if let Some(&prev) = updates.last() {
            if prev > 100.0 * floor && dist > 10.0 * floor {
                measured_ratio = measured_ratio.max(dist / prev);
            }
        }
        updates.push(dist);
        values = next;
        if dist < cfg.fp_tol {
            // refresh H at the converged values for the Nyström evaluation
            let (_, hs, _) = scheme.sweep(&values)?;
            h_values = hs;
            break;
        }
        if updates.len() >= cfg.max_iter {
            return Err(Error::NoConvergence {
                iterations: updates.len(),
                last_update: dist,
                ratio: measured_ratio,
            });
        }
    }
    let max_deviation = values
        .iter()
        .flatten()
        .map(|v| {
            v.iter()
                .zip(&scheme.center)
                .fold(0.0_f64, |a, (p, q)| a.max((p - q).norm()))
        })
        .fold(0.0_f64, f64::max);
    let record = ConvergenceRecord {
        lambda: cfg.lambda,
        h: cfg.h,
        kappa: cfg.kappa(),
        iterations: updates.len(),
        updates,
        measured_ratio,
        converged: true,
        max_deviation,
    };
    Ok((scheme.orbit(values, h_values), record))
}

/// Value of a converged orbit at `t0 + ρ e^{iθ_ray}` by Nyström interpolation.
pub fn evaluate_orbit(
    model: &ModelSpec,
    w_t0: &LiftedState,
    orbit: &ComplexOrbit,
    grid: DiskGrid,
    ray: usize,
    rho: f64,
) -> Result<Vec<Complex64>> {
    let lambda = orbit.lambda.ok_or_else(|| {
        Error::param(
            "orbit",
            "Nyström evaluation needs a fixed point for a given λ",
        )
    })?;
    if !(0.0..=orbit.radius_h).contains(&rho) {
        return Err(Error::param("rho", "point lies outside the disk"));
    }
    let scheme = Scheme::new(model, w_t0, grid, orbit.radius_h, lambda)?;
    let all = scheme.nystrom(&orbit.h_values, rho / orbit.radius_h);
    Ok(all[ray].clone())
}
