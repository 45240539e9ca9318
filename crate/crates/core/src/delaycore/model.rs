use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand sides of the delay system, evaluable at complex arguments.
///
/// `f` receives the current state `x(t)` and the delayed state `x(t - τ(t))`.
/// `g` receives the chain `(x(t), x(η(t)), …, x(η^{M-1}(t)))` flattened to
/// `M * N` entries, followed by `τ(t)`.
pub trait ModelFunctions: Send + Sync {
    fn f(&self, current: &[Complex64], delayed: &[Complex64], out: &mut [Complex64]);
    fn g(&self, chain: &[Complex64], tau: Complex64) -> Complex64;
}

struct FnModel<F, G> {
    f: F,
    g: G,
}

impl<F, G> ModelFunctions for FnModel<F, G>
where
    F: Fn(&[Complex64], &[Complex64], &mut [Complex64]) + Send + Sync,
    G: Fn(&[Complex64], Complex64) -> Complex64 + Send + Sync,
{
    fn f(&self, current: &[Complex64], delayed: &[Complex64], out: &mut [Complex64]) {
        (self.f)(current, delayed, out)
    }

    fn g(&self, chain: &[Complex64], tau: Complex64) -> Complex64 {
        (self.g)(chain, tau)
    }
}

/// Axis-aligned box with an imaginary strip of half-width `strip` around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub strip: f64,
}

impl StripBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, strip: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::param(
                "box",
                "bounds must be non-empty and of equal length",
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::param(
                "box",
                format!("need finite lo < hi, got {lo:?} / {hi:?}"),
            ));
        }
        if !(strip >= 0.0) || !strip.is_finite() {
            return Err(Error::param(
                "strip",
                format!("half-width must be >= 0, got {strip}"),
            ));
        }
        Ok(Self { lo, hi, strip })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// First violated bound for a real point in the closed box, if any.
    pub fn violation(&self, x: &[f64], label: &str) -> Option<String> {
        for (i, &xi) in x.iter().enumerate() {
            if !xi.is_finite() {
                return Some(format!("{label}[{i}] is not finite"));
            }
            if xi < self.lo[i] {
                return Some(format!("{label}[{i}] = {xi} below {}", self.lo[i]));
            }
            if xi > self.hi[i] {
                return Some(format!("{label}[{i}] = {xi} above {}", self.hi[i]));
            }
        }
        None
    }

    /// Membership of a complex point in the closed box-plus-strip.
    pub fn contains_complex(&self, z: &[Complex64], slack: f64) -> bool {
        z.iter().enumerate().all(|(i, zi)| {
            zi.re >= self.lo[i] - self.strip - slack
                && zi.re <= self.hi[i] + self.strip + slack
                && zi.im.abs() <= self.strip + slack
        })
    }

    /// Signed distance of a real point to the box boundary (positive inside).
    pub fn interior_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| (xi - self.lo[i]).min(self.hi[i] - xi))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The delay system `x' = f(x, x(t-τ))`, `τ' = g(x, x∘η, …, x∘η^{M-1}, τ)`
/// together with its domain `U × V` and the constants `l < 1 < c`.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub u: StripBox,
    pub v: StripBox,
    pub l: f64,
    pub c: f64,
    pub funcs: Arc<dyn ModelFunctions>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("u", &self.u)
            .field("v", &self.v)
            .field("l", &self.l)
            .field("c", &self.c)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        u: StripBox,
        v: StripBox,
        l: f64,
        c: f64,
        funcs: Arc<dyn ModelFunctions>,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            n,
            m,
            u,
            v,
            l,
            c,
            funcs,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a model from plain closures.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fns<F, G>(
        name: impl Into<String>,
        n: usize,
        m: usize,
        u: StripBox,
        v: StripBox,
        l: f64,
        c: f64,
        f: F,
        g: G,
    ) -> Result<Self>
    where
        F: Fn(&[Complex64], &[Complex64], &mut [Complex64]) + Send + Sync + 'static,
        G: Fn(&[Complex64], Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self::new(name, n, m, u, v, l, c, Arc::new(FnModel { f, g }))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("N", "state dimension must be positive"));
        }
        if self.m == 0 {
            return Err(Error::param("M", "need at least one delay argument in g"));
        }
        if !(0.0 < self.l && self.l < 1.0 && 1.0 < self.c && self.c.is_finite()) {
            return Err(Error::param(
                "l,c",
                format!("need 0 < l < 1 < c, got l = {}, c = {}", self.l, self.c),
            ));
        }
        if self.u.dim() != self.n {
            return Err(Error::param(
                "U",
                format!("box has dimension {}, expected {}", self.u.dim(), self.n),
            ));
        }
        if self.v.dim() != 1 {
            return Err(Error::param("V", "delay box must be one-dimensional"));
        }
        Ok(())
    }

    /// Block width `N + 1` of the lifted state.
    pub fn width(&self) -> usize {
        self.n + 1
    }

    pub fn eval_f(&self, current: &[Complex64], delayed: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        self.funcs.f(current, delayed, &mut out);
        out
    }

    pub fn eval_g(&self, chain: &[Complex64], tau: Complex64) -> Complex64 {
        self.funcs.g(chain, tau)
    }

    pub fn f_real(&self, current: &[f64], delayed: &[f64], out: &mut [f64]) {
        let cur: Vec<Complex64> = current.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let del: Vec<Complex64> = delayed.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut tmp = vec![Complex64::new(0.0, 0.0); self.n];
        self.funcs.f(&cur, &del, &mut tmp);
        for (o, z) in out.iter_mut().zip(tmp) {
            *o = z.re;
        }
    }

    pub fn g_real(&self, chain: &[f64], tau: f64) -> f64 {
        let ch: Vec<Complex64> = chain.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.funcs.g(&ch, Complex64::new(tau, 0.0)).re
    }

    /// Margin of the disk condition `|1 - g - (c+l)/2| < (c-l)/2` at one value of `g`.
    pub fn disk_margin(&self, g: Complex64) -> f64 {
        let center = 0.5 * (self.c + self.l);
        let radius = 0.5 * (self.c - self.l);
        radius - (Complex64::new(1.0 - center, 0.0) - g).norm()
    }

    /// First violated constraint of `U × V` (closed) for a real state, if any.
    pub fn domain_violation(&self, x: &[f64], tau: f64) -> Option<String> {
        if let Some(msg) = self.u.violation(x, "x") {
            return Some(msg);
        }
        if !(tau > 0.0) {
            return Some(format!("tau = {tau} is not positive"));
        }
        self.v.violation(&[tau], "tau")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn rejects_inadmissible_constants() {
        let u = StripBox::new(vec![-1.0], vec![1.0], 0.1).unwrap();
        let v = StripBox::new(vec![0.0], vec![2.0], 0.1).unwrap();
        let mk = |l, cc| {
            ModelSpec::from_fns(
                "t",
                1,
                1,
                u.clone(),
                v.clone(),
                l,
                cc,
                |_, _, o| o[0] = c(0.0),
                |_, _| c(0.0),
            )
        };
        assert!(mk(0.5, 2.0).is_ok());
        assert!(mk(1.0, 2.0).is_err());
        assert!(mk(0.5, 1.0).is_err());
        assert!(StripBox::new(vec![1.0], vec![1.0], 0.0).is_err());
    }

    #[test]
    fn disk_margin_center_and_boundary() {
        let u = StripBox::new(vec![-1.0], vec![1.0], 0.0).unwrap();
        let v = StripBox::new(vec![0.0], vec![2.0], 0.0).unwrap();
        let m = ModelSpec::from_fns(
            "t",
            1,
            1,
            u,
            v,
            0.5,
            2.0,
            |_, _, o| o[0] = c(0.0),
            |_, _| c(0.0),
        )
        .unwrap();
        assert!((m.disk_margin(c(1.0 - 1.25)) - 0.75).abs() < 1e-15);
        assert!(m.disk_margin(c(1.0 - 2.0)).abs() < 1e-15);
        assert!(m.domain_violation(&[0.5], 1.0).is_none());
        assert!(m.domain_violation(&[1.5], 1.0).unwrap().contains("above"));
        assert!(m
            .domain_violation(&[0.5], 0.0)
            .unwrap()
            .contains("not positive"));
    }
}
