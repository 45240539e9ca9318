use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type EvalFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Initial data `(x, τ)` on `[t_min, t0]`.
///
/// `smoothness` is the number of derivatives that stay continuous across the
/// junction at `t0`; a history that is itself a piece of a solution has no
/// junction at all and uses [`HistoryFunction::SMOOTH`].
#[derive(Clone)]
pub struct HistoryFunction {
    pub t_min: f64,
    pub t0: f64,
    pub smoothness: u32,
    eval: EvalFn,
    width: usize,
}

impl fmt::Debug for HistoryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HistoryFunction")
            .field("t_min", &self.t_min)
            .field("t0", &self.t0)
            .field("smoothness", &self.smoothness)
            .field("width", &self.width)
            .finish_non_exhaustive()
    }
}

impl HistoryFunction {
    pub const SMOOTH: u32 = u32::MAX;

    /// `eval(t, out)` writes `(x_1, …, x_N, τ)` into `out` (length `width`).
    pub fn new<F>(t_min: f64, t0: f64, width: usize, smoothness: u32, eval: F) -> Result<Self>
    where
        F: Fn(f64, &mut [f64]) + Send + Sync + 'static,
    {
        if !(t_min < t0) || !t_min.is_finite() || !t0.is_finite() {
            return Err(Error::param(
                "history",
                format!("need t_min < t0, got [{t_min}, {t0}]"),
            ));
        }
        if width < 2 {
            return Err(Error::param(
                "history",
                "state must hold at least one x component and τ",
            ));
        }
        Ok(Self {
            t_min,
            t0,
            smoothness,
            eval: Arc::new(eval),
            width,
        })
    }

    pub fn constant(t_min: f64, t0: f64, state: Vec<f64>) -> Result<Self> {
        let width = state.len();
        Self::new(t_min, t0, width, 0, move |_, out| {
            out.copy_from_slice(&state)
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        (self.eval)(t, out)
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        (self.eval)(t, &mut out);
        out
    }

    /// Second-order finite-difference derivative, one-sided at the ends of the domain.
    pub fn eval_deriv(&self, t: f64) -> Vec<f64> {
        let span = self.t0 - self.t_min;
        let d = 1e-5 * span.clamp(1e-3, 1.0);
        let combine = |pts: [(f64, f64); 3]| -> Vec<f64> {
            let mut out = vec![0.0; self.width];
            for (s, w) in pts {
                if w != 0.0 {
                    for (o, v) in out.iter_mut().zip(self.eval(s)) {
                        *o += w * v / d;
                    }
                }
            }
            out
        };
        if t - d < self.t_min {
            combine([(t, -1.5), (t + d, 2.0), (t + 2.0 * d, -0.5)])
        } else if t + d > self.t0 {
            combine([(t, 1.5), (t - d, -2.0), (t - 2.0 * d, 0.5)])
        } else {
            combine([(t - d, -0.5), (t, 0.0), (t + d, 0.5)])
        }
    }
}
