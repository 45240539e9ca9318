use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::orbit::ComplexOrbit;
use crate::error::{Error, Result};

/// Relative floor below which normalized coefficients `|a_k| ρ^k` are treated as noise.
pub const COEFF_FLOOR: f64 = 1e-13;

/// `a_k = (1/R) Σ_r f(t0 + ρ e^{iθ_r}) e^{-ikθ_r} / ρ^k` for equispaced samples.
pub fn taylor_from_samples(
    samples: &[Complex64],
    rho: f64,
    n_coeffs: usize,
) -> Result<Vec<Complex64>> {
    let r = samples.len();
    if r < 2 * n_coeffs {
        return Err(Error::InsufficientSamples {
            have: r,
            need: 2 * n_coeffs,
        });
    }
    if !(rho > 0.0) {
        return Err(Error::param("rho", "circle radius must be positive"));
    }
    Ok((0..n_coeffs)
        .map(|k| {
            let s: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(m, f)| {
                    f * Complex64::from_polar(
                        1.0,
                        -std::f64::consts::TAU * (k * m) as f64 / r as f64,
                    )
                })
                .sum();
            s / (r as f64 * rho.powi(k as i32))
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusFit {
    /// Slope of `ln |a_k|` against `k`.
    pub slope: f64,
    /// Slope of `ln(|a_k| ρ^k)`; negative means the sampled coefficients decay geometrically.
    pub normalized_slope: f64,
    /// `e^{-slope}`; infinite when fewer than two coefficients clear the floor.
    pub radius: f64,
    pub n_used: usize,
    /// First index from which `|a_k| ρ^k` is non-increasing down to the floor.
    pub tail_decay_from: Option<usize>,
}

fn regression_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn fit_radius(coeffs: &[Complex64], rho: f64) -> RadiusFit {
    let scaled: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm() * rho.powi(k as i32))
        .collect();
    let top = scaled.iter().cloned().fold(0.0, f64::max);
    let floor = COEFF_FLOOR * top;
    let pts: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(k, _)| scaled[*k] > floor)
        .map(|(k, a)| (k as f64, a.norm().ln()))
        .collect();
    let (slope, normalized_slope, radius) = if pts.len() < 2 {
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY)
    } else {
        let s = regression_slope(&pts);
        (s, s + rho.ln(), (-s).exp())
    };
    let last_ok = (1..scaled.len()).rev().find(|&k| scaled[k] > floor);
    let tail_decay_from = match last_ok {
        None => Some(1.min(scaled.len().saturating_sub(1))),
        Some(last) => {
            let mut k0 = last;
            while k0 > 1 && scaled[k0 - 1] >= scaled[k0] * (1.0 - 1e-12) {
                k0 -= 1;
            }
            Some(k0)
        }
    };
    RadiusFit {
        slope,
        normalized_slope,
        radius,
        n_used: pts.len(),
        tail_decay_from,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaylorSeries {
    pub block: usize,
    pub component: usize,
    pub rho: f64,
    pub coeffs: Vec<Complex64>,
    pub fit: RadiusFit,
}

/// Taylor coefficients at `t0` of every unscaled component, from the orbit's circle values.
pub fn taylor_coefficients(orbit: &ComplexOrbit, n_coeffs: usize) -> Result<Vec<TaylorSeries>> {
    let rho = orbit.circle_radius();
    let dim = orbit.center.len();
    (0..dim)
        .map(|i| {
            let samples: Vec<Complex64> = orbit.circle.iter().map(|v| v[i]).collect();
            let coeffs = taylor_from_samples(&samples, rho, n_coeffs)?;
            let fit = fit_radius(&coeffs, rho);
            Ok(TaylorSeries {
                block: i / orbit.width + 1,
                component: i % orbit.width,
                rho,
                coeffs,
                fit,
            })
        })
        .collect()
}
