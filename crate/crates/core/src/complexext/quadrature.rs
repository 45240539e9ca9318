//! Composite Gauss–Legendre rule on `[0, 1]` with partial-integral rows.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; p];
    let mut w = vec![0.0; p];
    for i in 0..p.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (p as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..p {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = p as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[p - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[p - 1 - i] = w[i];
    }
    (x, w)
}

/// `S` equal subintervals of `[0, 1]` with `p` Gauss nodes each.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub subintervals: usize,
    pub order: usize,
    pub nodes: Vec<f64>,
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
    /// `matrix[k][m] = ∫_0^{ξ_k} ℓ_m`, the partial integrals at the nodes.
    pub matrix: Vec<Vec<f64>>,
}

impl CompositeRule {
    pub fn new(subintervals: usize, order: usize) -> Result<Self> {
        if subintervals == 0 || order < 2 {
            return Err(Error::param(
                "quadrature",
                "need at least one subinterval and two nodes each",
            ));
        }
        let (gl_x, gl_w) = gauss_legendre(order);
        let len = 1.0 / subintervals as f64;
        let nodes = (0..subintervals)
            .flat_map(|s| gl_x.iter().map(move |z| (s as f64 + 0.5 * (1.0 + z)) * len))
            .collect();
        let mut rule = Self {
            subintervals,
            order,
            nodes,
            gl_x,
            gl_w,
            matrix: Vec::new(),
        };
        rule.matrix = rule.nodes.iter().map(|&xi| rule.row(xi)).collect();
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weights `r_m` with `∫_0^ξ φ ≈ Σ r_m φ(ξ_m)` for any `ξ ∈ [0, 1]`.
    pub fn row(&self, xi: f64) -> Vec<f64> {
        let p = self.order;
        let len = 1.0 / self.subintervals as f64;
        let xi = xi.clamp(0.0, 1.0);
        let own = ((xi / len) as usize).min(self.subintervals - 1);
        let mut row = vec![0.0; self.len()];
        for s in 0..own {
            for m in 0..p {
                row[s * p + m] = 0.5 * len * self.gl_w[m];
            }
        }
        let a = own as f64 * len;
        let local = &self.nodes[own * p..(own + 1) * p];
        let half = 0.5 * (xi - a);
        for (q, zq) in self.gl_x.iter().enumerate() {
            let x = a + half * (1.0 + zq);
            for m in 0..p {
                let mut l = 1.0;
                for (k, &xk) in local.iter().enumerate() {
                    if k != m {
                        l *= (x - xk) / (local[m] - xk);
                    }
                }
                row[own * p + m] += half * self.gl_w[q] * l;
            }
        }
        row
    }
}
