use num_complex::Complex64;

use super::{eval_h_into, tail_len, LiftedState};
use crate::delaycore::{solve_ode, ModelSpec, OdeOptions, PiecewiseQuartic, Trajectory};
use crate::error::{Error, Result};
use crate::seqspace::WeightedSeq;

/// Where the truncated system reads the unscaled states past block `J`.
#[derive(Debug, Clone, Copy)]
pub enum TailSource<'a> {
    /// `x(η^{J+k-1}(t))` from a direct trajectory.
    Trajectory(&'a Trajectory),
    /// First-order Taylor extrapolation from the lifted state's tail and slope.
    Linear,
}

impl TailSource<'_> {
    pub(crate) fn tail_at(
        &self,
        w0: &LiftedState,
        model: &ModelSpec,
        t: Complex64,
    ) -> Result<Vec<Complex64>> {
        match self {
            TailSource::Trajectory(traj) => {
                if t.im != 0.0 {
                    return Err(Error::param(
                        "tail",
                        "trajectory closure is only available on the real axis",
                    ));
                }
                let big_j = w0.depth();
                let n = model.n;
                let mut s = traj.eta_iterate(t.re, big_j)?;
                let mut tail = Vec::with_capacity(tail_len(model.m) * n);
                for k in 0..tail_len(model.m) {
                    if k > 0 {
                        s = traj.eta(s)?;
                    }
                    tail.extend(traj.eval(s)?[..n].iter().map(|&v| Complex64::new(v, 0.0)));
                }
                Ok(tail)
            }
            TailSource::Linear => {
                let dt = t - w0.t;
                Ok(w0
                    .tail
                    .iter()
                    .zip(&w0.tail_slope)
                    .map(|(b, s)| b + dt * s)
                    .collect())
            }
        }
    }
}

/// Dense solution of the truncated lifted system on the real axis.
#[derive(Debug, Clone)]
pub struct LiftedTrajectory {
    pub c: f64,
    pub width: usize,
    pub depth: usize,
    pub lambda: Option<f64>,
    /// Dense output in `s = -t` when integrating backward.
    pub reversed: bool,
    pub dense: PiecewiseQuartic,
}

impl LiftedTrajectory {
    /// Scaled lifted state `w(t)`.
    pub fn eval(&self, t: f64) -> Result<WeightedSeq> {
        let s = if self.reversed { -t } else { t };
        let seg = self.dense.locate(s).ok_or(Error::OutOfDomain {
            t,
            lo: self.t_start().min(self.t_end()),
            hi: self.t_start().max(self.t_end()),
        })?;
        let mut buf = vec![0.0; self.width * self.depth];
        seg.eval_into(s, &mut buf);
        WeightedSeq::new(
            self.c,
            self.width,
            buf.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn t_start(&self) -> f64 {
        let s = self.dense.t_start().unwrap_or(f64::NAN);
        if self.reversed {
            -s
        } else {
            s
        }
    }

    pub fn t_end(&self) -> f64 {
        let s = self.dense.t_end().unwrap_or(f64::NAN);
        if self.reversed {
            -s
        } else {
            s
        }
    }
}

/// Integrates `w' = H(T w)` on `[w0.t, t_end]`, or `w' = (λT + I)^{-1} H(T w)`
/// when `lambda` is given. `t_end < w0.t` integrates backward.
pub fn integrate_lifted(
    model: &ModelSpec,
    w0: &LiftedState,
    t_end: f64,
    tol: f64,
    tail: TailSource<'_>,
    lambda: Option<f64>,
) -> Result<LiftedTrajectory> {
    let c = model.c;
    let width = model.width();
    let big_j = w0.depth();
    if w0.seq.width() != width {
        return Err(Error::param("w0", "block width does not match the model"));
    }
    if let Some(lam) = lambda {
        if !(lam >= 0.0) {
            return Err(Error::param("lambda", format!("must be >= 0, got {lam}")));
        }
    }
    if w0.seq.as_slice().iter().any(|z| z.im != 0.0) {
        return Err(Error::param(
            "w0",
            "real-axis integration needs a real lifted state",
        ));
    }
    let y0: Vec<f64> = w0.seq.as_slice().iter().map(|z| z.re).collect();
    let weights: Vec<f64> = (1..=big_j).map(|j| c.powi(j as i32)).collect();
    let resolvent: Option<Vec<f64>> =
        lambda.map(|lam| weights.iter().map(|cj| 1.0 / (lam * cj + 1.0)).collect());

    let reversed = t_end < w0.t;
    let sign = if reversed { -1.0 } else { 1.0 };
    let mut states = vec![Complex64::new(0.0, 0.0); y0.len()];
    let mut h = vec![Complex64::new(0.0, 0.0); y0.len()];
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let t = sign * s;
        for (j, (dst, src)) in states.chunks_mut(width).zip(y.chunks(width)).enumerate() {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = Complex64::new(s * weights[j], 0.0);
            }
        }
        let tail_states = tail.tail_at(w0, model, Complex64::new(t, 0.0))?;
        eval_h_into(model, &states, &tail_states, &mut h)?;
        for (j, (dst, src)) in dy.chunks_mut(width).zip(h.chunks(width)).enumerate() {
            let r = resolvent.as_ref().map_or(1.0, |r| r[j]);
            for (d, s) in dst.iter_mut().zip(src) {
                *d = sign * r * s.re;
            }
        }
        Ok(())
    };
    let dense = solve_ode(rhs, sign * w0.t, &y0, sign * t_end, &OdeOptions::new(tol))?;
    Ok(LiftedTrajectory {
        c,
        width,
        depth: big_j,
        lambda,
        reversed,
        dense,
    })
}
