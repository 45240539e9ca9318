use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::CompositeRule;
use crate::error::{Error, Result};
use crate::lift::scale;
use crate::seqspace::WeightedSeq;

/// Sampling layout of a disk `Ω_h = {|t - t0| ≤ h}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskGrid {
    /// Number of equispaced rays `θ_k = 2πk/R`.
    pub rays: usize,
    /// Radial Gauss–Legendre subintervals per ray.
    pub subintervals: usize,
    /// Gauss nodes per subinterval.
    pub order: usize,
    /// Radius of the Taylor circle as a fraction of `h`.
    pub circle_fraction: f64,
}

impl Default for DiskGrid {
    fn default() -> Self {
        Self {
            rays: 32,
            subintervals: 2,
            order: 8,
            circle_fraction: 0.9,
        }
    }
}

impl DiskGrid {
    pub fn validate(&self) -> Result<()> {
        if self.rays < 2 {
            return Err(Error::InsufficientSamples {
                have: self.rays,
                need: 2,
            });
        }
        if !(self.circle_fraction > 0.0 && self.circle_fraction <= 1.0) {
            return Err(Error::param("circle_fraction", "must lie in (0, 1]"));
        }
        CompositeRule::new(self.subintervals, self.order).map(|_| ())
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.rays)
            .map(|k| TAU * k as f64 / self.rays as f64)
            .collect()
    }
}

/// Unscaled lifted values `ν = T w` sampled on the rays of a complex disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexOrbit {
    pub center_t0: f64,
    pub radius_h: f64,
    pub c: f64,
    pub width: usize,
    pub depth: usize,
    /// `None` for extrapolated (λ → 0) orbits.
    pub lambda: Option<f64>,
    pub rays: Vec<f64>,
    /// Radial nodes `ξ ∈ (0, 1)`; node `t = t0 + ξ h e^{iθ}`.
    pub node_xi: Vec<f64>,
    /// `values[ray][node]`, each flat `J (N+1)`.
    pub values: Vec<Vec<Vec<Complex64>>>,
    /// `H(ν)` at the nodes of the last sweep.
    pub h_values: Vec<Vec<Vec<Complex64>>>,
    /// `ν(t0)`.
    pub center: Vec<Complex64>,
    pub circle_xi: f64,
    /// Values on the Taylor circle, one per ray angle.
    pub circle: Vec<Vec<Complex64>>,
}

impl ComplexOrbit {
    pub fn n_nodes(&self) -> usize {
        self.node_xi.len()
    }

    pub fn node_time(&self, ray: usize, node: usize) -> Complex64 {
        self.center_t0 + Complex64::from_polar(self.node_xi[node] * self.radius_h, self.rays[ray])
    }

    pub fn circle_radius(&self) -> f64 {
        self.circle_xi * self.radius_h
    }

    /// Scaled value `T^{-1} ν` at a node.
    pub fn scaled(&self, ray: usize, node: usize) -> Result<WeightedSeq> {
        scale(self.c, self.width, &self.values[ray][node])
    }

    /// Largest deviation from `ν(t̄) = conj ν(t)` between conjugate rays.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let r = self.rays.len();
        let mut worst = 0.0_f64;
        for k in 0..r {
            let kc = (r - k) % r;
            for (a, b) in self.values[k].iter().zip(&self.values[kc]) {
                for (p, q) in a.iter().zip(b) {
                    worst = worst.max((p - q.conj()).norm());
                }
            }
        }
        worst
    }

    /// Indices of the rays lying on the real axis (`θ = 0` and `θ = π`).
    pub fn real_rays(&self) -> Vec<usize> {
        let r = self.rays.len();
        let mut out = vec![0];
        if r.is_multiple_of(2) {
            out.push(r / 2);
        }
        out
    }

    /// Sup over nodes of `‖T^{-1}(ν_a - ν_b)‖_∞` for orbits on the same grid.
    pub fn scaled_distance(&self, other: &ComplexOrbit) -> f64 {
        let mut worst = 0.0_f64;
        for (ra, rb) in self.values.iter().zip(&other.values) {
            for (a, b) in ra.iter().zip(rb) {
                for (i, (p, q)) in a.iter().zip(b).enumerate() {
                    let cj = self.c.powi((i / self.width) as i32 + 1);
                    worst = worst.max((p - q).norm() / cj);
                }
            }
        }
        worst
    }
}
