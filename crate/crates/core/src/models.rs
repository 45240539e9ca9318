//! Built-in models.

use num_complex::Complex64;

use crate::delaycore::{HistoryFunction, ModelSpec, StripBox};
use crate::error::{Error, Result};
use crate::example41::{build_neural_model, NeuralModelParams};

pub const BUILTIN_NAMES: &[&str] = &["example41", "toy-scalar"];

/// Parameters of the scalar test model `x' = -x(t - τ)`, `τ' = g0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyParams {
    pub g0: f64,
    pub c: f64,
    pub l: f64,
}

impl Default for ToyParams {
    fn default() -> Self {
        Self {
            g0: 0.3,
            c: 2.0,
            l: 0.5,
        }
    }
}

pub fn toy_scalar(p: ToyParams) -> Result<ModelSpec> {
    let g0 = p.g0;
    ModelSpec::from_fns(
        "toy-scalar",
        1,
        1,
        StripBox::new(vec![-3.0], vec![3.0], 0.5)?,
        StripBox::new(vec![-1.0], vec![10.0], 0.5)?,
        p.l,
        p.c,
        |_, delayed, out| out[0] = -delayed[0],
        move |_, _| Complex64::new(g0, 0.0),
    )
}

/// Taylor coefficients of `P' (s) = -P(q s)`, `P(0) = 1`, truncated once negligible.
fn pantograph_coeffs(q: f64) -> Vec<f64> {
    let mut a = vec![1.0];
    for k in 0..80 {
        let next = -q.powi(k as i32) * a[k] / (k + 1) as f64;
        a.push(next);
        if next.abs() < 1e-40 {
            break;
        }
    }
    a
}

/// History of the toy model that is itself a solution, so `t0` is not a breakpoint.
///
/// With `τ' = g0 ∈ (0, 1)` every solution with linear delay `τ = g0 (t - s*)`
/// and `x(t) = P(t - s*)` solves the system, where `P` is the entire pantograph
/// function above and `s* = t0 - τ0/g0`. For `g0 = 0` a constant history is returned.
pub fn toy_history(g0: f64, t0: f64, tau0: f64, t_span_back: f64) -> Result<HistoryFunction> {
    if !(tau0 > 0.0) {
        return Err(Error::param("tau0", "initial delay must be positive"));
    }
    if g0 == 0.0 {
        return HistoryFunction::constant(t0 - t_span_back, t0, vec![1.0, tau0]);
    }
    if !(g0 > 0.0 && g0 < 1.0) {
        return Err(Error::param("g0", "solution history needs g0 in [0, 1)"));
    }
    let s_star = t0 - tau0 / g0;
    let a = pantograph_coeffs(1.0 - g0);
    let t_min = s_star + 1e-6 * (t0 - s_star);
    HistoryFunction::new(t_min, t0, 2, HistoryFunction::SMOOTH, move |t, out| {
        let s = t - s_star;
        out[0] = a.iter().rev().fold(0.0, |acc, &ak| acc * s + ak);
        out[1] = g0 * s;
    })
}

/// Looks up a built-in model by name with default parameters.
pub fn builtin(name: &str) -> Result<ModelSpec> {
    match name {
        "toy-scalar" => toy_scalar(ToyParams::default()),
        "example41" => build_neural_model(&NeuralModelParams::default()),
        other => Err(Error::param(
            "model",
            format!(
                "unknown built-in {other:?}; known: {}",
                BUILTIN_NAMES.join(", ")
            ),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pantograph_history_solves_the_system() {
        let h = toy_history(0.3, 0.0, 1.0, 0.0).unwrap();
        for t in [-3.0, -1.2, 0.0] {
            let y = h.eval(t);
            let d = h.eval_deriv(t);
            let delayed = h.eval(t - y[1]);
            assert!((d[0] + delayed[0]).abs() < 1e-8, "t = {t}");
            assert!((d[1] - 0.3).abs() < 1e-8);
        }
        assert!((h.eval(0.0)[1] - 1.0).abs() < 1e-15);
    }
}
