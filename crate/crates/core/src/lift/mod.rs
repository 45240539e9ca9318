//! Sequence-space lift `(y_j, z_j) = c^{-j} (x, τ)(η^{j-1}(t))` and its vector field.
//!
//! Along a solution the lifted blocks obey `w' = H(T w)` with
//!
//! ```text
//! H_j(ν) = G_j(ν) · ( f(u_j, u_{j+1}), g(μ_j) ) / (1 - g(μ_j))
//! G_j(ν) = c^{-j} ∏_{i=1}^{j} (1 - g(μ_i)),   μ_i = (u_i, …, u_{i+M-1}, v_i)
//! ```
//!
//! where `ν = T w` holds the unscaled states `(u_j, v_j) = c^j (y_j, z_j)`.
//! Blocks near the truncation depth `J` need unscaled states beyond `J`;
//! these come from a tail closure rather than zero padding.

mod integrate;
pub mod io;

pub use integrate::{integrate_lifted, LiftedTrajectory, TailSource};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::delaycore::{ModelSpec, Trajectory};
use crate::error::{Error, Result};
use crate::seqspace::WeightedSeq;

pub const DEFAULT_DEPTH: usize = 32;

/// Number of unscaled `x`-states past block `J` the truncated field reads.
///
/// `g` at block `j` reads `u_j..u_{j+M-1}` and `f` reads `u_{j+1}`, so the
/// closure needs `max(M - 1, 1)` states.
pub fn tail_len(m: usize) -> usize {
    m.saturating_sub(1).max(1)
}

/// Truncated lift at time `t` with its tail closure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftedState {
    pub t: f64,
    pub seq: WeightedSeq,
    pub n: usize,
    /// Unscaled `x(η^{J+k-1}(t))`, `k = 1..K`, flattened.
    pub tail: Vec<Complex64>,
    /// Time derivatives of the tail states.
    pub tail_slope: Vec<Complex64>,
    /// `η^{k}(t)` for `k = 0..J+K-1`.
    pub eta_times: Vec<f64>,
    /// Largest available η-depth at `t` (capped at `4 J`).
    pub achieved_depth: usize,
}

impl LiftedState {
    pub fn depth(&self) -> usize {
        self.seq.trunc_j()
    }

    /// Unscaled states `ν = T w` as flat block-major data.
    pub fn unscaled(&self) -> Vec<Complex64> {
        unscale(&self.seq)
    }

    /// Builds a lifted state from given unscaled blocks and tail (no trajectory).
    pub fn from_unscaled(
        t: f64,
        c: f64,
        n: usize,
        states: &[Complex64],
        tail: Vec<Complex64>,
    ) -> Result<Self> {
        let seq = scale(c, n + 1, states)?;
        Ok(Self {
            t,
            seq,
            n,
            tail_slope: vec![Complex64::new(0.0, 0.0); tail.len()],
            tail,
            eta_times: Vec::new(),
            achieved_depth: 0,
        })
    }
}

/// `T w` for a weighted sequence, flat.
pub fn unscale(w: &WeightedSeq) -> Vec<Complex64> {
    let c = w.base_c();
    let mut out = w.as_slice().to_vec();
    for (i, block) in out.chunks_mut(w.width()).enumerate() {
        let cj = c.powi(i as i32 + 1);
        block.iter_mut().for_each(|z| *z *= cj);
    }
    out
}

/// `T^{-1} ν` as a weighted sequence.
pub fn scale(c: f64, width: usize, states: &[Complex64]) -> Result<WeightedSeq> {
    let mut data = states.to_vec();
    for (i, block) in data.chunks_mut(width).enumerate() {
        let cj = c.powi(i as i32 + 1);
        block.iter_mut().for_each(|z| *z /= cj);
    }
    WeightedSeq::new(c, width, data)
}

/// Lift of `traj` at time `t` with `J` blocks.
pub fn build_lift(traj: &Trajectory, t: f64, big_j: usize) -> Result<LiftedState> {
    if big_j == 0 {
        return Err(Error::param("J", "truncation depth must be at least 1"));
    }
    let n = traj.meta.n;
    let width = n + 1;
    let c = traj.meta.c;
    let k_tail = tail_len(traj.meta.m);
    let total = big_j + k_tail;

    let mut eta_times = Vec::with_capacity(total);
    let mut s = t;
    for k in 0..total {
        if !traj.contains(s) {
            return Err(Error::EtaDepth {
                depth: k.saturating_sub(1),
                time: s,
            });
        }
        eta_times.push(s);
        if k + 1 < total {
            s = traj.eta(s)?;
        }
    }

    let mut states = Vec::with_capacity(big_j * width);
    for &s in &eta_times[..big_j] {
        states.extend(traj.eval(s)?.into_iter().map(|v| Complex64::new(v, 0.0)));
    }
    let seq = scale(c, width, &states)?;

    // d/dt x(η^p(t)) = ẋ(η^p) ∏_{i<p} (1 - τ̇(η^i))
    let mut chain_factor = Vec::with_capacity(total);
    let mut acc = 1.0;
    for &s in &eta_times {
        chain_factor.push(acc);
        acc *= 1.0 - traj.eval_deriv(s)?[n];
    }
    let mut tail = Vec::with_capacity(k_tail * n);
    let mut tail_slope = Vec::with_capacity(k_tail * n);
    for p in big_j..total {
        let s = eta_times[p];
        let y = traj.eval(s)?;
        let d = traj.eval_deriv(s)?;
        tail.extend(y[..n].iter().map(|&v| Complex64::new(v, 0.0)));
        tail_slope.extend(
            d[..n]
                .iter()
                .map(|&v| Complex64::new(v * chain_factor[p], 0.0)),
        );
    }

    Ok(LiftedState {
        t,
        seq,
        n,
        tail,
        tail_slope,
        eta_times,
        achieved_depth: traj.eta_depth(t, 4 * big_j),
    })
}

/// `μ_i = (u_i, …, u_{i+M-1}, v_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPoint {
    pub x: Vec<Complex64>,
    pub v: Complex64,
}

/// Unscaled `x`-state with 1-based index `i`, reading the tail past `J`.
fn x_state<'a>(
    states: &'a [Complex64],
    tail: &'a [Complex64],
    n: usize,
    big_j: usize,
    i: usize,
) -> Result<&'a [Complex64]> {
    if i <= big_j {
        let start = (i - 1) * (n + 1);
        Ok(&states[start..start + n])
    } else {
        let k = i - big_j;
        let start = (k - 1) * n;
        if start + n > tail.len() {
            return Err(Error::MissingTail {
                needed: k,
                available: tail.len() / n,
            });
        }
        Ok(&tail[start..start + n])
    }
}

/// Chain points `μ_1..μ_J` of unscaled blocks plus tail.
pub fn chain_points(
    model: &ModelSpec,
    states: &[Complex64],
    tail: &[Complex64],
) -> Result<Vec<ChainPoint>> {
    let n = model.n;
    let big_j = states.len() / (n + 1);
    (1..=big_j)
        .map(|i| {
            let mut x = Vec::with_capacity(model.m * n);
            for k in 0..model.m {
                x.extend_from_slice(x_state(states, tail, n, big_j, i + k)?);
            }
            Ok(ChainPoint {
                x,
                v: states[(i - 1) * (n + 1) + n],
            })
        })
        .collect()
}

fn check_disk(model: &ModelSpec, g: Complex64, block: usize) -> Result<Complex64> {
    if !(g.re.is_finite() && g.im.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("g at block {block}"),
        });
    }
    if model.disk_margin(g) <= 0.0 {
        return Err(Error::DiskConditionViolated {
            block,
            one_minus_g: 1.0 - g,
        });
    }
    Ok(1.0 - g)
}

/// `c^{-j} ∏_{i=1}^{j} (1 - g(μ_i))`, accumulated as log-magnitude and phase.
pub fn product_weight(model: &ModelSpec, chain: &[ChainPoint], j: usize) -> Result<Complex64> {
    if chain.len() < j {
        return Err(Error::param(
            "chain",
            format!("need {j} chain points, have {}", chain.len()),
        ));
    }
    let mut log_mag = 0.0;
    let mut phase = 0.0;
    let ln_c = model.c.ln();
    for (i, mu) in chain[..j].iter().enumerate() {
        let w = check_disk(model, model.eval_g(&mu.x, mu.v), i + 1)?;
        log_mag += w.norm().ln() - ln_c;
        phase += w.arg();
    }
    Ok(Complex64::from_polar(log_mag.exp(), phase))
}

/// `F_j = (f(u_j, u_{j+1}), g(μ_j)) / (1 - g(μ_j))`.
pub fn map_f(
    model: &ModelSpec,
    mu_j: &ChainPoint,
    u_next: &[Complex64],
    block: usize,
) -> Result<Vec<Complex64>> {
    let n = model.n;
    let g = model.eval_g(&mu_j.x, mu_j.v);
    let w = check_disk(model, g, block)?;
    let mut out = model.eval_f(&mu_j.x[..n], u_next);
    out.iter_mut().for_each(|z| *z /= w);
    out.push(g / w);
    Ok(out)
}

/// Block-wise `H(ν)` on unscaled states, written into `out` (same layout as `states`).
///
/// Checks strip membership of every state and the disk condition at every block.
pub fn eval_h_into(
    model: &ModelSpec,
    states: &[Complex64],
    tail: &[Complex64],
    out: &mut [Complex64],
) -> Result<()> {
    let n = model.n;
    let width = n + 1;
    let big_j = states.len() / width;
    let ln_c = model.c.ln();
    let mut log_mag = 0.0;
    let mut phase = 0.0;
    let mut xs = vec![Complex64::new(0.0, 0.0); model.m * n];
    let mut fx = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..=big_j {
        let block = &states[(j - 1) * width..j * width];
        if !model.u.contains_complex(&block[..n], 1e-9)
            || !model.v.contains_complex(&block[n..], 1e-9)
        {
            return Err(Error::StripExit {
                location: format!("block {j}: {block:?}"),
            });
        }
        for k in 0..model.m {
            xs[k * n..(k + 1) * n].copy_from_slice(x_state(states, tail, n, big_j, j + k)?);
        }
        let v = block[n];
        let g = model.eval_g(&xs, v);
        let w = check_disk(model, g, j)?;
        log_mag += w.norm().ln() - ln_c;
        phase += w.arg();
        let weight = Complex64::from_polar(log_mag.exp(), phase) / w;
        let u_next = x_state(states, tail, n, big_j, j + 1)?;
        model.funcs.f(&xs[..n], u_next, &mut fx);
        let dst = &mut out[(j - 1) * width..j * width];
        for (d, &fv) in dst[..n].iter_mut().zip(&fx) {
            *d = weight * fv;
        }
        dst[n] = weight * g;
        if dst.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                location: format!("H at block {j}"),
            });
        }
    }
    Ok(())
}

/// Truncated right-hand side `H(T w)` of the lifted system.
pub fn rhs_h(w: &LiftedState, model: &ModelSpec) -> Result<WeightedSeq> {
    let states = w.unscaled();
    let mut out = vec![Complex64::new(0.0, 0.0); states.len()];
    eval_h_into(model, &states, &w.tail, &mut out)?;
    WeightedSeq::new(w.seq.base_c(), w.seq.width(), out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayProfile {
    pub m: u32,
    pub d: Vec<f64>,
    /// First index from which `d_j` is non-increasing up to `J`.
    pub eventually_decreasing_from: Option<usize>,
    pub last_below_first: bool,
    /// Sampled maximum of `|1 - g|` along the chain.
    pub max_one_minus_g: f64,
}

/// `d_j = (j^m / c^j) ∏_{i=1}^{j} |1 - g(μ_i)|`, `j = 1..J`.
pub fn decay_profile(w: &LiftedState, model: &ModelSpec, m: u32) -> Result<DecayProfile> {
    let states = w.unscaled();
    let chain = chain_points(model, &states, &w.tail)?;
    let ln_c = model.c.ln();
    let mut log_prod = 0.0;
    let mut d = Vec::with_capacity(chain.len());
    let mut max_w = 0.0_f64;
    for (i, mu) in chain.iter().enumerate() {
        let wv = check_disk(model, model.eval_g(&mu.x, mu.v), i + 1)?;
        max_w = max_w.max(wv.norm());
        log_prod += wv.norm().ln() - ln_c;
        let j = (i + 1) as f64;
        d.push((m as f64 * j.ln() + log_prod).exp());
    }
    let mut from = d.len();
    while from > 1 && d[from - 2] >= d[from - 1] {
        from -= 1;
    }
    let last_below_first = d.len() > 1 && d[d.len() - 1] < d[0];
    Ok(DecayProfile {
        m,
        eventually_decreasing_from: (from < d.len() || d.len() == 1).then_some(from),
        last_below_first,
        max_one_minus_g: max_w,
        d,
    })
}

/// Finite-difference check of `d/dt build_lift = H(T w)` at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub t: f64,
    pub deltas: Vec<f64>,
    /// `sup_j |D(Δ) - H|` for plain centered differences.
    pub raw_errors: Vec<f64>,
    /// Errors of the Richardson combinations `(4 D(Δ/2) - D(Δ))/3`.
    pub richardson_errors: Vec<f64>,
    /// `log2` of the ratio of successive Richardson errors.
    pub observed_order: f64,
    pub mismatch: f64,
}

/// Compares centered differences of the lift at `Δ, Δ/2, Δ/4` with `rhs_h`.
pub fn lift_consistency(
    traj: &Trajectory,
    model: &ModelSpec,
    t: f64,
    big_j: usize,
    delta: f64,
) -> Result<ConsistencyReport> {
    let h = rhs_h(&build_lift(traj, t, big_j)?, model)?;
    let deltas = vec![delta, delta / 2.0, delta / 4.0];
    let mut diffs = Vec::with_capacity(3);
    for &d in &deltas {
        let a = build_lift(traj, t + d, big_j)?;
        let b = build_lift(traj, t - d, big_j)?;
        let fd: Vec<Complex64> = a
            .seq
            .as_slice()
            .iter()
            .zip(b.seq.as_slice())
            .map(|(p, q)| (p - q) / (2.0 * d))
            .collect();
        diffs.push(fd);
    }
    let sup_err = |v: &[Complex64]| {
        v.iter()
            .zip(h.as_slice())
            .fold(0.0_f64, |acc, (p, q)| acc.max((p - q).norm()))
    };
    let richardson = |coarse: &[Complex64], fine: &[Complex64]| -> Vec<Complex64> {
        coarse
            .iter()
            .zip(fine)
            .map(|(c, f)| (4.0 * f - c) / 3.0)
            .collect()
    };
    let raw_errors: Vec<f64> = diffs.iter().map(|d| sup_err(d)).collect();
    let richardson_errors = vec![
        sup_err(&richardson(&diffs[0], &diffs[1])),
        sup_err(&richardson(&diffs[1], &diffs[2])),
    ];
    let observed_order = (richardson_errors[0] / richardson_errors[1]).log2();
    Ok(ConsistencyReport {
        t,
        deltas,
        raw_errors,
        mismatch: richardson_errors[1],
        richardson_errors,
        observed_order,
    })
}
