#![allow(dead_code)]

/// Exact toy-scalar solution for `τ' = g0`: `x(t) = P(t - s*)`, `τ(t) = g0 (t - s*)`
/// with `P' (s) = -P(q s)`, `q = 1 - g0`, evaluated from the closed-form series
/// `a_k = (-1)^k q^{k(k-1)/2} / k!`.
pub struct Pantograph {
    pub g0: f64,
    pub s_star: f64,
}

impl Pantograph {
    pub fn new(g0: f64, t0: f64, tau0: f64) -> Self {
        Self {
            g0,
            s_star: t0 - tau0 / g0,
        }
    }

    pub fn x(&self, t: f64) -> f64 {
        let q = 1.0 - self.g0;
        let s = t - self.s_star;
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 0..60u32 {
            if k > 0 {
                fact *= k as f64;
            }
            let kk = k as f64;
            let term =
                (-1f64).powi(k as i32) * q.powf(kk * (kk - 1.0) / 2.0) * s.powi(k as i32) / fact;
            sum += term;
        }
        sum
    }

    pub fn dx(&self, t: f64) -> f64 {
        let q = 1.0 - self.g0;
        -self.x(self.s_star + q * (t - self.s_star))
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.g0 * (t - self.s_star)
    }

    /// `η^k(t) = s* + q^k (t - s*)`.
    pub fn eta_k(&self, t: f64, k: i32) -> f64 {
        self.s_star + (1.0 - self.g0).powi(k) * (t - self.s_star)
    }
}

impl Pantograph {
    /// `P(t - s*)` for complex `t`.
    pub fn x_complex(&self, t: num_complex::Complex64) -> num_complex::Complex64 {
        let q = 1.0 - self.g0;
        let s = t - self.s_star;
        let mut sum = num_complex::Complex64::new(0.0, 0.0);
        let mut pow = num_complex::Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..60u32 {
            if k > 0 {
                fact *= k as f64;
                pow *= s;
            }
            let kk = k as f64;
            sum += (-1f64).powi(k as i32) * q.powf(kk * (kk - 1.0) / 2.0) * pow / fact;
        }
        sum
    }

    pub fn eta_k_complex(&self, t: num_complex::Complex64, k: i32) -> num_complex::Complex64 {
        self.s_star + (1.0 - self.g0).powi(k) * (t - self.s_star)
    }
}
