use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::delaycore::{ModelSpec, StripBox};
use crate::error::{Error, Result};
use crate::lift::{eval_h_into, LiftedState};

/// `h0 = r / M̃`, capped at `h_max` (also when `M̃` vanishes).
pub fn estimate_disk_radius(orbit_norm_bound: f64, boundary_gap_r: f64, h_max: f64) -> Result<f64> {
    if !(boundary_gap_r > 0.0) {
        return Err(Error::DegenerateRadius { r: boundary_gap_r });
    }
    if !(h_max > 0.0) {
        return Err(Error::param("h_max", "must be positive"));
    }
    if !(orbit_norm_bound >= 0.0) {
        return Err(Error::param(
            "orbit_norm_bound",
            "must be a nonnegative number",
        ));
    }
    let h = boundary_gap_r / orbit_norm_bound;
    Ok(if h.is_finite() { h.min(h_max) } else { h_max })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockRadius {
    pub block: usize,
    /// Sampled `sup |H_j|`.
    pub m_tilde: f64,
    /// Unscaled room `min(margin, distance to the strip boundary)`.
    pub gap: f64,
    /// `c^{-j} gap`.
    pub r: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskRadiusReport {
    pub margin: f64,
    pub h0: f64,
    pub h_max: f64,
    pub limiting_block: usize,
    pub blocks: Vec<BlockRadius>,
    pub n_samples: usize,
    /// Random samples discarded because they left the strip domain.
    pub n_rejected: usize,
    /// `(margin, h0)` at half, the chosen, and double margin.
    pub sensitivity: Vec<(f64, f64)>,
}

fn strip_gap(bx: &StripBox, z: &[Complex64]) -> f64 {
    z.iter()
        .enumerate()
        .map(|(i, zi)| {
            let re = (zi.re - (bx.lo[i] - bx.strip)).min(bx.hi[i] + bx.strip - zi.re);
            re.min(bx.strip - zi.im.abs())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Unscaled distance from each block of `anchor` to the boundary of the complex strip domain.
pub fn block_gaps(model: &ModelSpec, anchor: &LiftedState) -> Vec<f64> {
    let n = model.n;
    anchor
        .unscaled()
        .chunks(n + 1)
        .map(|b| strip_gap(&model.u, &b[..n]).min(strip_gap(&model.v, &b[n..])))
        .collect()
}

/// Smallest block gap, i.e. the largest admissible sup-norm neighborhood of `anchor`.
pub fn default_margin(model: &ModelSpec, anchor: &LiftedState) -> f64 {
    0.5 * block_gaps(model, anchor)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn radius_for_margin(
    model: &ModelSpec,
    anchor: &LiftedState,
    window: &[LiftedState],
    margin: f64,
    n_random: usize,
    seed: u64,
    h_max: f64,
) -> Result<(Vec<BlockRadius>, usize, usize)> {
    let width = model.width();
    let c = model.c;
    let base = anchor.unscaled();
    let big_j = anchor.depth();
    let mut m_tilde = vec![0.0_f64; big_j];
    let mut out = vec![Complex64::new(0.0, 0.0); base.len()];
    let mut record =
        |states: &[Complex64], tail: &[Complex64], m_tilde: &mut [f64]| -> Result<()> {
            eval_h_into(model, states, tail, &mut out)?;
            for (j, blk) in out.chunks(width).enumerate() {
                m_tilde[j] = m_tilde[j].max(blk.iter().fold(0.0_f64, |a, z| a.max(z.norm())));
            }
            Ok(())
        };
    record(&base, &anchor.tail, &mut m_tilde)?;
    let mut n_samples = 1;
    for w in window {
        if w.depth() != big_j {
            return Err(Error::param(
                "window",
                "lifted states must share the anchor depth",
            ));
        }
        record(&w.unscaled(), &w.tail, &mut m_tilde)?;
        n_samples += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejected = 0;
    let centers: Vec<(Vec<Complex64>, Vec<Complex64>)> =
        std::iter::once((base.clone(), anchor.tail.clone()))
            .chain(window.iter().map(|w| (w.unscaled(), w.tail.clone())))
            .collect();
    for s in 0..n_random {
        let (ctr, tail) = &centers[s % centers.len()];
        let p: Vec<Complex64> = ctr
            .iter()
            .map(|z| {
                z + Complex64::from_polar(
                    margin * rng.gen_range(0.0..1.0_f64).sqrt(),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        match record(&p, tail, &mut m_tilde) {
            Ok(()) => n_samples += 1,
            Err(Error::StripExit { .. }) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    let gaps = block_gaps(model, anchor);
    let blocks = (0..big_j)
        .map(|j| {
            let gap = gaps[j].min(margin);
            let r = gap * c.powi(-(j as i32 + 1));
            Ok(BlockRadius {
                block: j + 1,
                m_tilde: m_tilde[j],
                gap,
                r,
                h: estimate_disk_radius(m_tilde[j], r, h_max)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((blocks, n_samples, rejected))
}

/// Blockwise disk radius: block `j` of the orbit moves at most `h c^j M̃_j`, which
/// must stay within its own room `gap_j`. `Q` is the anchor plus `window`, inflated
/// by complex perturbations of size up to `margin`.
pub fn disk_radius_report(
    model: &ModelSpec,
    anchor: &LiftedState,
    window: &[LiftedState],
    margin: f64,
    n_random: usize,
    seed: u64,
    h_max: f64,
) -> Result<DiskRadiusReport> {
    if !(margin > 0.0) {
        return Err(Error::DegenerateRadius { r: margin });
    }
    let mut sensitivity = Vec::new();
    let mut main = None;
    for factor in [0.5, 1.0, 2.0] {
        let (blocks, n, rej) = radius_for_margin(
            model,
            anchor,
            window,
            factor * margin,
            n_random,
            seed,
            h_max,
        )?;
        let h0 = blocks.iter().map(|b| b.h).fold(h_max, f64::min);
        sensitivity.push((factor * margin, h0));
        if factor == 1.0 {
            main = Some((blocks, n, rej, h0));
        }
    }
    let (blocks, n_samples, n_rejected, h0) = main.expect("factor 1 is always evaluated");
    let limiting_block = blocks
        .iter()
        .min_by(|a, b| a.h.total_cmp(&b.h))
        .map_or(1, |b| b.block);
    Ok(DiskRadiusReport {
        margin,
        h0,
        h_max,
        limiting_block,
        blocks,
        n_samples,
        n_rejected,
        sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_and_caps() {
        assert_eq!(estimate_disk_radius(2.0, 0.5, 10.0).unwrap(), 0.25);
        assert_eq!(estimate_disk_radius(0.0, 0.5, 3.0).unwrap(), 3.0);
        assert!(matches!(
            estimate_disk_radius(1.0, 0.0, 1.0),
            Err(Error::DegenerateRadius { .. })
        ));
    }
}
