//! Grid checks of the disk condition (A2), a search for admissible `(l, c)`,
//! and the conditions (α1)–(α5) of the neural example.
//!
//! Everything here is sampling: a PASS means "verified at this density", not proved.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delaycore::{ModelSpec, StripBox};
use crate::error::{Error, Result};
use crate::example41::{alpha5_threshold, b_default, h_default, tau_upper, NeuralModelParams};

pub const DEFAULT_DENSITY: usize = 33;
pub const MAX_TENSOR_POINTS: u64 = 10_000_000;
/// Margins at or below this count as boundary contact.
pub const MARGIN_EPS: f64 = 1e-12;

pub const CLOSURE_NOTE: &str =
    "(A2) is required on the closure of U^M x V; a finite grid cannot certify behavior between samples";

/// `(c-l)/2 - |1 - g - (c+l)/2|`.
pub fn disk_margin(l: f64, c: f64, g: Complex64) -> f64 {
    0.5 * (c - l) - (Complex64::new(1.0 - 0.5 * (c + l), 0.0) - g).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct A2Options {
    pub density: usize,
    pub include_strip: bool,
    pub max_points: u64,
    /// Sample count when a lattice would exceed `max_points`.
    pub lhs_samples: usize,
    pub seed: u64,
}

impl Default for A2Options {
    fn default() -> Self {
        Self {
            density: DEFAULT_DENSITY,
            include_strip: true,
            max_points: MAX_TENSOR_POINTS,
            lhs_samples: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Axis {
    Real {
        lo: f64,
        hi: f64,
    },
    /// Boundary of `[lo, hi] × [-eps, eps]`.
    Perimeter {
        lo: f64,
        hi: f64,
        eps: f64,
    },
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

impl Axis {
    fn nodes(&self, d: usize) -> Vec<Complex64> {
        match *self {
            Axis::Real { lo, hi } => linspace(lo, hi, d)
                .into_iter()
                .map(|x| Complex64::new(x, 0.0))
                .collect(),
            Axis::Perimeter { lo, hi, eps } => {
                let mut out: Vec<Complex64> = Vec::new();
                for x in linspace(lo, hi, d) {
                    out.push(Complex64::new(x, -eps));
                    out.push(Complex64::new(x, eps));
                }
                let k = (d / 4).max(1);
                for y in linspace(-eps, eps, k + 2).into_iter().skip(1).take(k) {
                    out.push(Complex64::new(lo, y));
                    out.push(Complex64::new(hi, y));
                }
                out
            }
        }
    }

    fn at(&self, u: f64) -> Complex64 {
        match *self {
            Axis::Real { lo, hi } => Complex64::new(lo + u * (hi - lo), 0.0),
            Axis::Perimeter { lo, hi, eps } => {
                let w = hi - lo;
                let mut s = u * (2.0 * w + 4.0 * eps);
                if s < w {
                    return Complex64::new(lo + s, -eps);
                }
                s -= w;
                if s < 2.0 * eps {
                    return Complex64::new(hi, -eps + s);
                }
                s -= 2.0 * eps;
                if s < w {
                    return Complex64::new(hi - s, eps);
                }
                s -= w;
                Complex64::new(lo, eps - s.min(2.0 * eps))
            }
        }
    }
}

fn axes(model: &ModelSpec, strip: Option<f64>) -> Vec<Axis> {
    let mk = |bx: &StripBox, i: usize| match strip {
        None => Axis::Real {
            lo: bx.lo[i],
            hi: bx.hi[i],
        },
        Some(f) => Axis::Perimeter {
            lo: bx.lo[i],
            hi: bx.hi[i],
            eps: f * bx.strip,
        },
    };
    let mut out = Vec::new();
    for _ in 0..model.m {
        for i in 0..model.n {
            out.push(mk(&model.u, i));
        }
    }
    out.push(mk(&model.v, 0));
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSummary {
    pub method: String,
    pub n_points: u64,
    pub worst_margin: f64,
    pub worst_point: Vec<Complex64>,
    /// Extremes of `1 - g` (real parts) over the samples.
    pub min_one_minus_g: f64,
    pub max_one_minus_g: f64,
    pub max_abs_imag_g: f64,
}

#[derive(Clone, Copy)]
struct Acc {
    margin: f64,
    idx: u64,
    wmin: f64,
    wmax: f64,
    imag: f64,
}

impl Acc {
    fn empty() -> Self {
        Self {
            margin: f64::INFINITY,
            idx: u64::MAX,
            wmin: f64::INFINITY,
            wmax: f64::NEG_INFINITY,
            imag: 0.0,
        }
    }

    fn merge(a: Self, b: Self) -> Self {
        let (margin, idx) = if b.margin < a.margin || (b.margin == a.margin && b.idx < a.idx) {
            (b.margin, b.idx)
        } else {
            (a.margin, a.idx)
        };
        Self {
            margin,
            idx,
            wmin: a.wmin.min(b.wmin),
            wmax: a.wmax.max(b.wmax),
            imag: a.imag.max(b.imag),
        }
    }
}

/// Evaluates `g` at every sample of a lattice (or its Latin-hypercube stand-in) and
/// reduces deterministically.
fn sweep_g(
    model: &ModelSpec,
    ax: &[Axis],
    opts: &A2Options,
    l: f64,
    c: f64,
) -> Result<SampleSummary> {
    if opts.density < 2 {
        return Err(Error::param("density", "need at least two points per axis"));
    }
    let nodes: Vec<Vec<Complex64>> = ax.iter().map(|a| a.nodes(opts.density)).collect();
    let total = nodes
        .iter()
        .try_fold(1u64, |acc, v| acc.checked_mul(v.len() as u64));
    let mn = model.m * model.n;
    let eval_point = |pt: &[Complex64], idx: u64| -> Result<Acc> {
        let g = model.eval_g(&pt[..mn], pt[mn]);
        if !(g.re.is_finite() && g.im.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("g at {pt:?}"),
            });
        }
        let w = 1.0 - g.re;
        Ok(Acc {
            margin: disk_margin(l, c, g),
            idx,
            wmin: w,
            wmax: w,
            imag: g.im.abs(),
        })
    };

    match total {
        Some(total) if total <= opts.max_points => {
            let acc = (0..total)
                .into_par_iter()
                .map(|idx| {
                    let mut pt = vec![Complex64::new(0.0, 0.0); nodes.len()];
                    let mut rem = idx;
                    for (d, nd) in nodes.iter().enumerate().rev() {
                        let len = nd.len() as u64;
                        pt[d] = nd[(rem % len) as usize];
                        rem /= len;
                    }
                    eval_point(&pt, idx)
                })
                .try_reduce(Acc::empty, |a, b| Ok(Acc::merge(a, b)))?;
            let mut worst = vec![Complex64::new(0.0, 0.0); nodes.len()];
            let mut rem = acc.idx;
            for (d, nd) in nodes.iter().enumerate().rev() {
                let len = nd.len() as u64;
                worst[d] = nd[(rem % len) as usize];
                rem /= len;
            }
            Ok(SampleSummary {
                method: "tensor".into(),
                n_points: total,
                worst_margin: acc.margin,
                worst_point: worst,
                min_one_minus_g: acc.wmin,
                max_one_minus_g: acc.wmax,
                max_abs_imag_g: acc.imag,
            })
        }
        _ => {
            let n = opts.lhs_samples.max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let cols: Vec<Vec<f64>> = ax
                .iter()
                .map(|_| {
                    let mut perm: Vec<usize> = (0..n).collect();
                    perm.shuffle(&mut rng);
                    perm.into_iter()
                        .map(|k| (k as f64 + rng.gen_range(0.0..1.0)) / n as f64)
                        .collect()
                })
                .collect();
            let point = |i: usize| -> Vec<Complex64> {
                ax.iter().zip(&cols).map(|(a, col)| a.at(col[i])).collect()
            };
            let acc = (0..n)
                .into_par_iter()
                .map(|i| eval_point(&point(i), i as u64))
                .try_reduce(Acc::empty, |a, b| Ok(Acc::merge(a, b)))?;
            Ok(SampleSummary {
                method: "latin-hypercube".into(),
                n_points: n as u64,
                worst_margin: acc.margin,
                worst_point: point(acc.idx as usize),
                min_one_minus_g: acc.wmin,
                max_one_minus_g: acc.wmax,
                max_abs_imag_g: acc.imag,
            })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct A2Report {
    pub l: f64,
    pub c: f64,
    pub worst_margin: f64,
    pub worst_point: Vec<Complex64>,
    /// Points per axis for each of the `M N + 1` axes.
    pub grid_density: Vec<usize>,
    pub strip_width_tested: f64,
    pub real: SampleSummary,
    pub strip: Option<SampleSummary>,
    pub pass: bool,
    pub note: String,
}

/// Worst disk-condition margin over a tensor grid of the closed box `U^M × V`,
/// and optionally over the boundary lattice of its imaginary strip.
pub fn check_a2(model: &ModelSpec, opts: &A2Options) -> Result<A2Report> {
    check_a2_with(model, model.l, model.c, opts)
}

/// As [`check_a2`] with `(l, c)` supplied instead of taken from the model.
pub fn check_a2_with(model: &ModelSpec, l: f64, c: f64, opts: &A2Options) -> Result<A2Report> {
    let real = sweep_g(model, &axes(model, None), opts, l, c)?;
    let strip = if opts.include_strip {
        Some(sweep_g(model, &axes(model, Some(1.0)), opts, l, c)?)
    } else {
        None
    };
    let (worst_margin, worst_point) = match &strip {
        Some(s) if s.worst_margin < real.worst_margin => (s.worst_margin, s.worst_point.clone()),
        _ => (real.worst_margin, real.worst_point.clone()),
    };
    let strip_width_tested = if opts.include_strip {
        model.u.strip.max(model.v.strip)
    } else {
        0.0
    };
    let mut note = format!("verified at density {} per axis", opts.density);
    if strip.is_some() {
        note.push_str("; strip checked on its boundary lattice only (maximum-modulus heuristic)");
    }
    if real.method != "tensor" || strip.as_ref().is_some_and(|s| s.method != "tensor") {
        note.push_str(&format!(
            "; lattice exceeds {} points, Latin-hypercube sampling used",
            opts.max_points
        ));
    }
    note.push_str("; ");
    note.push_str(CLOSURE_NOTE);
    Ok(A2Report {
        l,
        c,
        worst_margin,
        worst_point,
        grid_density: vec![opts.density; model.m * model.n + 1],
        strip_width_tested,
        real,
        strip,
        pass: worst_margin > MARGIN_EPS,
        note,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LcReport {
    pub l: f64,
    pub c: f64,
    /// Real-grid margin of the returned pair.
    pub margin: f64,
    pub min_one_minus_g: f64,
    pub max_one_minus_g: f64,
    pub complex_g: bool,
}

pub const LC_PADDING: f64 = 0.05;

/// Finds `(l, c)` with `l < 1 < c` whose disk contains every sampled `1 - g`.
pub fn search_lc(model: &ModelSpec, density: usize) -> Result<LcReport> {
    let opts = A2Options {
        density,
        include_strip: false,
        ..A2Options::default()
    };
    let ax = axes(model, None);
    let nodes: Vec<Vec<Complex64>> = ax.iter().map(|a| a.nodes(density)).collect();
    let total = nodes.iter().map(|v| v.len() as u64).product::<u64>();
    if total > opts.max_points {
        return Err(Error::param(
            "density",
            format!("{total} grid points exceed {}", opts.max_points),
        ));
    }
    let mn = model.m * model.n;
    let ws: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut pt = vec![Complex64::new(0.0, 0.0); nodes.len()];
            let mut rem = idx;
            for (d, nd) in nodes.iter().enumerate().rev() {
                let len = nd.len() as u64;
                pt[d] = nd[(rem % len) as usize];
                rem /= len;
            }
            let g = model.eval_g(&pt[..mn], pt[mn]);
            if g.re.is_finite() && g.im.is_finite() {
                Ok(1.0 - g)
            } else {
                Err(Error::NonFinite {
                    location: format!("g at {pt:?}"),
                })
            }
        })
        .collect::<Result<_>>()?;
    let wmin = ws.iter().map(|w| w.re).fold(f64::INFINITY, f64::min);
    let wmax = ws.iter().map(|w| w.re).fold(f64::NEG_INFINITY, f64::max);
    let complex_g = ws.iter().any(|w| w.im.abs() > 1e-14);

    let (l, c) = if !complex_g {
        if ws.iter().all(|w| (w.re - 1.0).abs() < 1e-12) {
            // constant delay: any l < 1 < c works
            (0.5, 2.0)
        } else {
            if !(wmin > 0.0) {
                return Err(Error::Infeasible(format!(
                    "min of 1 - g is {wmin}, need > 0"
                )));
            }
            (wmin * (1.0 - LC_PADDING), wmax * (1.0 + LC_PADDING))
        }
    } else {
        // smallest enclosing disk with real center: R(m) = max |w - m| is convex in m
        let radius = |m: f64| ws.iter().map(|w| (w - m).norm()).fold(0.0, f64::max);
        let (mut a, mut b) = (wmin, wmax);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if radius(m1) < radius(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        let m = 0.5 * (a + b);
        let r = radius(m) * (1.0 + LC_PADDING);
        (m - r, m + r)
    };
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::Infeasible(format!("l = {l} not in (0, 1)")));
    }
    if !(c > 1.0) {
        return Err(Error::Infeasible(format!("c = {c} not above 1")));
    }
    let margin = ws
        .iter()
        .map(|w| disk_margin(l, c, 1.0 - w))
        .fold(f64::INFINITY, f64::min);
    Ok(LcReport {
        l,
        c,
        margin,
        min_one_minus_g: wmin,
        max_one_minus_g: wmax,
        complex_g,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaReport {
    pub conditions: Vec<ConditionResult>,
    pub all_pass: bool,
}

impl AlphaReport {
    pub fn get(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn first_failure(&self) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| !c.pass)
    }
}

/// Derivative at 0 by the 8th-order central stencil.
fn derivative_at_zero(b: &dyn Fn(Complex64) -> Complex64, step: f64) -> f64 {
    const W: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    W.iter()
        .enumerate()
        .map(|(k, w)| {
            let s = (k + 1) as f64 * step;
            w * (b(Complex64::new(s, 0.0)).re - b(Complex64::new(-s, 0.0)).re)
        })
        .sum::<f64>()
        / step
}

/// (α1)–(α5) for the default nonlinearities.
pub fn check_alpha(p: &NeuralModelParams) -> AlphaReport {
    let (h0, h1) = (p.h0, p.h1);
    check_alpha_with(
        p,
        &b_default,
        &move |x: &[Complex64]| h_default(h0, h1, x),
        401,
    )
}

/// (α1)–(α5) for user nonlinearities `b` and `h`, sampled with `n` points per axis.
pub fn check_alpha_with(
    p: &NeuralModelParams,
    b: &dyn Fn(Complex64) -> Complex64,
    h: &dyn Fn(&[Complex64]) -> Complex64,
    n: usize,
) -> AlphaReport {
    let n = n.max(3);
    let m = p.m_sigma;
    let re = |x: f64| b(Complex64::new(x, 0.0)).re;
    let mut out = Vec::new();

    let d0 = derivative_at_zero(b, 1e-2);
    out.push(ConditionResult {
        name: "alpha1".into(),
        pass: (d0 + 1.0).abs() < 1e-8,
        value: d0,
        detail: "b'(0) by 8th-order central differences, step 1e-2".into(),
    });

    let mut hmin = f64::INFINITY;
    let mut hmax = f64::NEG_INFINITY;
    // h is sampled well beyond the box since (α2) is a global bound
    let xs = linspace(-4.0 * m, 4.0 * m, n);
    for &a in &xs {
        for &bb in &xs {
            let v = h(&[Complex64::new(a, 0.0), Complex64::new(bb, 0.0)]).re;
            hmin = hmin.min(v);
            hmax = hmax.max(v);
        }
    }
    let order_ok = 0.5 < p.h0 && p.h0 < p.h1 && p.h1 < 1.0;
    out.push(ConditionResult {
        name: "alpha2".into(),
        pass: order_ok && hmin > p.h0 && hmax < p.h1,
        value: hmin - p.h0,
        detail: format!(
            "h sampled on [-{}, {}]^2 ({n}^2 points): min {hmin:.6}, max {hmax:.6}; need {} < h < {}",
            4.0 * m,
            4.0 * m,
            p.h0,
            p.h1
        ),
    });

    // ±2M keeps tanh-like saturation above f64 resolution
    let ys = linspace(-2.0 * m, 2.0 * m, 2 * n + 1);
    let decreasing = ys.windows(2).all(|w| re(w[1]) < re(w[0]));
    let yb: Vec<f64> = ys.iter().map(|&y| y * re(y)).collect();
    let pos: Vec<f64> = ys
        .iter()
        .zip(&yb)
        .filter(|(y, _)| **y >= 0.0)
        .map(|(_, v)| *v)
        .collect();
    let half_injective = pos.windows(2).all(|w| w[1] != w[0]) && {
        let inc = pos.windows(2).all(|w| w[1] > w[0]);
        let dec = pos.windows(2).all(|w| w[1] < w[0]);
        inc || dec
    };
    let full_injective = {
        let mut s = yb.clone();
        s.sort_by(f64::total_cmp);
        s.windows(2).all(|w| w[1] != w[0])
    };
    out.push(ConditionResult {
        name: "alpha3".into(),
        pass: decreasing && half_injective,
        value: if decreasing { 1.0 } else { 0.0 },
        detail: format!(
            "b decreasing: {decreasing}; y b(y) injective on [0, inf): {half_injective}; on all of R: {full_injective} \
             (an odd b makes y b(y) even, so only the half-line reading can hold)"
        ),
    });

    let sign_ok = ys.iter().filter(|y| **y != 0.0).all(|&y| y * re(y) < 0.0);
    let (tail_ok, worst_tail) = if p.sigma == 0.0 {
        (true, f64::INFINITY)
    } else {
        let bound = -p.mu / (2.0 * p.sigma.abs());
        let mut worst = f64::INFINITY;
        for &a in &linspace(m, 2.0 * m, n) {
            for y in [a, -a] {
                worst = worst.min(re(y) / y - bound);
            }
        }
        (worst > 0.0, worst)
    };
    out.push(ConditionResult {
        name: "alpha4".into(),
        pass: sign_ok && tail_ok,
        value: worst_tail,
        detail: format!(
            "y b(y) < 0 off 0: {sign_ok}; min of b(y)/y + mu/(2|sigma|) over |y| in [M, 2M] with M = {m}: {worst_tail:.6}"
        ),
    });

    let thr = alpha5_threshold();
    let eps = p.epsilon_strip;
    let mut finite = eps < 0.5 * PI;
    let tu = if p.h0 > 0.5 && p.h0 < 1.0 {
        tau_upper(p.h0)
    } else {
        f64::NAN
    };
    let k = 17;
    for &xr in &linspace(-m, m, k) {
        for &yi in &linspace(-eps, eps, 5) {
            let z = Complex64::new(xr, yi);
            let bv = b(z);
            let hv = h(&[z, Complex64::new(xr * 0.5, -yi)]);
            finite &=
                bv.re.is_finite() && bv.im.is_finite() && hv.re.is_finite() && hv.im.is_finite();
        }
    }
    if tu.is_finite() {
        for &tr in &linspace(0.0, tu, k) {
            for &yi in &linspace(-eps, eps, 5) {
                let t = (Complex64::new(1.0, 0.0) + Complex64::new(tr, yi).tanh()).norm();
                finite &= t.is_finite();
            }
        }
    }
    let below_pole = tu.is_finite() && tu < 0.5 * PI;
    out.push(ConditionResult {
        name: "alpha5".into(),
        pass: p.h0 > thr && finite && below_pole,
        value: p.h0 - thr,
        detail: format!(
            "h0 = {} vs (1 + e^-pi)/2 = {thr:.10}; b, h, 1 + tanh finite on the {eps}-strip: {finite}; tau upper {tu:.6} < pi/2: {below_pole}",
            p.h0
        ),
    });

    let all_pass = out.iter().all(|c| c.pass);
    AlphaReport {
        conditions: out,
        all_pass,
    }
}
