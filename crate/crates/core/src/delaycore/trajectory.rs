use serde::{Deserialize, Serialize};

use super::dopri::{PiecewiseQuartic, Segment};
use super::history::HistoryFunction;
use super::model::ModelSpec;
use crate::error::{Error, Result};

/// A propagated discontinuity time; `order` counts propagation hops from `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub time: f64,
    pub order: u32,
}

/// Model constants carried along for export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub n: usize,
    pub m: usize,
    pub c: f64,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub enum HistoryRepr {
    Function(HistoryFunction),
    Segments(PiecewiseQuartic),
}

/// Dense solution `(x, τ)` on `[t_min, t_end]`: the history on `[t_min, t0]`
/// followed by integrator segments on `[t0, t_end]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub history: HistoryRepr,
    pub t_min: f64,
    pub t0: f64,
    pub body: PiecewiseQuartic,
    pub breakpoints: Vec<Breakpoint>,
    pub tol: f64,
}

impl Trajectory {
    pub(crate) fn start(meta: TrajectoryMeta, hist: &HistoryFunction, tol: f64) -> Self {
        Self {
            meta,
            history: HistoryRepr::Function(hist.clone()),
            t_min: hist.t_min,
            t0: hist.t0,
            body: PiecewiseQuartic::default(),
            breakpoints: Vec::new(),
            tol,
        }
    }

    pub fn width(&self) -> usize {
        self.meta.n + 1
    }

    pub fn t_end(&self) -> f64 {
        self.body.t_end().unwrap_or(self.t0)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.body.segments
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_end()
    }

    fn out_of_domain(&self, t: f64) -> Error {
        Error::OutOfDomain {
            t,
            lo: self.t_min,
            hi: self.t_end(),
        }
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if t >= self.t0 && !self.body.segments.is_empty() {
            let seg = self.body.locate(t).ok_or_else(|| self.out_of_domain(t))?;
            seg.eval_into(t, out);
            return Ok(());
        }
        if t < self.t_min || t > self.t0 {
            return Err(self.out_of_domain(t));
        }
        match &self.history {
            HistoryRepr::Function(h) => h.eval_into(t, out),
            HistoryRepr::Segments(p) => p
                .locate(t)
                .ok_or_else(|| self.out_of_domain(t))?
                .eval_into(t, out),
        }
        Ok(())
    }

    /// `(x(t), τ(t))`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.width()];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// `(ẋ(t), τ̇(t))` from the dense output (right derivative at segment joins).
    pub fn eval_deriv(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.width()];
        if t >= self.t0 && !self.body.segments.is_empty() {
            let seg = self.body.locate(t).ok_or_else(|| self.out_of_domain(t))?;
            seg.eval_deriv_into(t, &mut out);
            return Ok(out);
        }
        if t < self.t_min || t > self.t0 {
            return Err(self.out_of_domain(t));
        }
        match &self.history {
            HistoryRepr::Function(h) => out = h.eval_deriv(t),
            HistoryRepr::Segments(p) => p
                .locate(t)
                .ok_or_else(|| self.out_of_domain(t))?
                .eval_deriv_into(t, &mut out),
        }
        Ok(out)
    }

    pub fn tau(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?[self.meta.n])
    }

    /// `η(t) = t - τ(t)`.
    pub fn eta(&self, t: f64) -> Result<f64> {
        Ok(t - self.tau(t)?)
    }

    /// `η^k(t)`; `k = 0` returns `t`.
    pub fn eta_iterate(&self, t: f64, k: usize) -> Result<f64> {
        let mut s = t;
        for depth in 1..=k {
            if !self.contains(s) {
                return Err(Error::EtaDepth {
                    depth: depth - 1,
                    time: s,
                });
            }
            s = self.eta(s)?;
            if !self.contains(s) {
                return Err(Error::EtaDepth { depth, time: s });
            }
        }
        Ok(s)
    }

    /// Largest `k ≤ k_max` with `η^k(t)` inside the known domain.
    pub fn eta_depth(&self, t: f64, k_max: usize) -> usize {
        let mut s = t;
        for k in 1..=k_max {
            match self.eta(s) {
                Ok(next) if self.contains(next) => s = next,
                _ => return k - 1,
            }
        }
        k_max
    }

    /// Right-hand side of the delay system at `t`, evaluated through the dense output.
    pub fn rhs(&self, model: &ModelSpec, t: f64) -> Result<Vec<f64>> {
        let n = model.n;
        let y = self.eval(t)?;
        let eta = t - y[n];
        let delayed = self.eval(eta)?;
        let mut chain = Vec::with_capacity(n * model.m);
        chain.extend_from_slice(&y[..n]);
        let mut s = eta;
        for k in 1..model.m {
            if k > 1 {
                s = self.eta(s)?;
            }
            chain.extend_from_slice(&self.eval(s)?[..n]);
        }
        let mut out = vec![0.0; n + 1];
        model.f_real(&y[..n], &delayed[..n], &mut out[..n]);
        out[n] = model.g_real(&chain, y[n]);
        Ok(out)
    }

    /// Max-norm defect between the dense derivative and the right-hand side at `t`.
    pub fn residual(&self, model: &ModelSpec, t: f64) -> Result<f64> {
        let d = self.eval_deriv(t)?;
        let r = self.rhs(model, t)?;
        Ok(d.iter()
            .zip(&r)
            .fold(0.0_f64, |a, (p, q)| a.max((p - q).abs())))
    }

    /// History part as quartic pieces (used for export).
    pub fn history_segments(&self, pieces: usize) -> PiecewiseQuartic {
        match &self.history {
            HistoryRepr::Segments(p) => p.clone(),
            HistoryRepr::Function(h) => {
                let dt = (self.t0 - self.t_min) / pieces as f64;
                let segments = (0..pieces)
                    .map(|i| {
                        Segment::interpolate(self.t_min + i as f64 * dt, dt, |t| {
                            h.eval(t.min(self.t0))
                        })
                    })
                    .collect();
                PiecewiseQuartic { segments }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_tau_trajectory(alpha: f64) -> Trajectory {
        // τ(t) = α t on [1e-9, 4]: history only, no integrated body
        let hist = HistoryFunction::new(1e-9, 4.0, 2, 0, move |t, out| {
            out[0] = 0.0;
            out[1] = alpha * t;
        })
        .unwrap();
        Trajectory::start(
            TrajectoryMeta {
                n: 1,
                m: 1,
                c: 2.0,
                l: 0.5,
            },
            &hist,
            1e-8,
        )
    }

    #[test]
    fn eta_examples() {
        let tr = linear_tau_trajectory(0.5);
        assert_eq!(tr.eta(4.0).unwrap(), 2.0);
        assert_eq!(tr.eta_iterate(3.0, 0).unwrap(), 3.0);
    }

    #[test]
    fn eta_iterate_linear_delay() {
        let alpha = 0.3;
        let tr = linear_tau_trajectory(alpha);
        for k in 0..8 {
            let expect = (1.0 - alpha).powi(k as i32) * 4.0;
            assert!((tr.eta_iterate(4.0, k).unwrap() - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn eta_iterate_reports_failing_depth() {
        let hist = HistoryFunction::constant(-2.5, 0.0, vec![0.0, 1.0]).unwrap();
        let tr = Trajectory::start(
            TrajectoryMeta {
                n: 1,
                m: 1,
                c: 2.0,
                l: 0.5,
            },
            &hist,
            1e-8,
        );
        assert_eq!(tr.eta_iterate(0.0, 2).unwrap(), -2.0);
        match tr.eta_iterate(0.0, 5) {
            Err(Error::EtaDepth { depth, .. }) => assert_eq!(depth, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(tr.eta_depth(0.0, 10), 2);
    }
}
