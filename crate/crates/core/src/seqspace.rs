//! Finite sections of the weighted sequence spaces `l_c^∞` and `l_m^∞` and
//! the diagonal operator algebra generated by the weighted shift `T`.
//!
//! A [`WeightedSeq`] holds blocks `v_1, …, v_J`, each a vector in `ℂ^{N+1}`.
//! Block norms are the max of the component moduli, so every norm below is a
//! sup of sups and the diagonal operators have closed-form finite-section
//! norms `max_j |φ_j|`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max-modulus norm of a single block.
pub fn block_norm(block: &[Complex64]) -> f64 {
    block.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Truncated element `(v_1, …, v_J)` of a weighted sequence space with base `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSeq {
    base_c: f64,
    width: usize,
    data: Vec<Complex64>,
}

impl WeightedSeq {
    /// Builds a sequence from flat block-major data (`J * width` entries).
    pub fn new(base_c: f64, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if !(base_c > 1.0) || !base_c.is_finite() {
            return Err(Error::param(
                "base_c",
                format!("must exceed 1, got {base_c}"),
            ));
        }
        if width == 0 {
            return Err(Error::param("width", "block width must be positive"));
        }
        if data.is_empty() || !data.len().is_multiple_of(width) {
            return Err(Error::param(
                "entries",
                format!(
                    "{} entries do not form whole blocks of width {width}",
                    data.len()
                ),
            ));
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite {
                location: format!("block {}", pos / width + 1),
            });
        }
        Ok(Self {
            base_c,
            width,
            data,
        })
    }

    pub fn from_blocks(base_c: f64, blocks: &[Vec<Complex64>]) -> Result<Self> {
        let width = blocks.first().map_or(0, Vec::len);
        if blocks.iter().any(|b| b.len() != width) {
            return Err(Error::param("entries", "blocks have unequal widths"));
        }
        Self::new(base_c, width, blocks.concat())
    }

    pub fn from_real_blocks(base_c: f64, blocks: &[Vec<f64>]) -> Result<Self> {
        let cblocks: Vec<Vec<Complex64>> = blocks
            .iter()
            .map(|b| b.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_blocks(base_c, &cblocks)
    }

    pub fn zeros(base_c: f64, width: usize, trunc_j: usize) -> Result<Self> {
        Self::new(
            base_c,
            width,
            vec![Complex64::new(0.0, 0.0); width * trunc_j],
        )
    }

    pub fn base_c(&self) -> f64 {
        self.base_c
    }

    /// Block width `N + 1`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn trunc_j(&self) -> usize {
        self.data.len() / self.width
    }

    /// Block `j`, 1-based as in the weights `c^j`.
    pub fn block(&self, j: usize) -> &[Complex64] {
        let start = (j - 1) * self.width;
        &self.data[start..start + self.width]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [Complex64] {
        let start = (j - 1) * self.width;
        &mut self.data[start..start + self.width]
    }

    pub fn blocks(&self) -> std::slice::Chunks<'_, Complex64> {
        self.data.chunks(self.width)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Plain `l^∞` norm: `max_j |v_j|`.
    pub fn norm_sup(&self) -> f64 {
        self.blocks().fold(0.0_f64, |acc, b| acc.max(block_norm(b)))
    }

    /// `l^∞` distance to another sequence of the same shape.
    pub fn sup_distance(&self, other: &WeightedSeq) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol)
    }
}

/// `‖v‖_{l_c^∞} = max_j c^j |v_j|`.
pub fn norm_lc(v: &WeightedSeq) -> f64 {
    let c = v.base_c;
    v.blocks().enumerate().fold(0.0_f64, |acc, (i, b)| {
        acc.max(c.powi(i as i32 + 1) * block_norm(b))
    })
}

/// `‖v‖_{l_m^∞} = max_j j^m |v_j|`.
pub fn norm_lm(v: &WeightedSeq, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::param(
            "m",
            "polynomial weight exponent must be at least 1",
        ));
    }
    Ok(v.blocks().enumerate().fold(0.0_f64, |acc, (i, b)| {
        acc.max(((i + 1) as f64).powi(m as i32) * block_norm(b))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `v_j ↦ c^j v_j`
    T,
    /// `v_j ↦ c^{-j} v_j`
    Tinv,
    /// `I - T^{-1}`
    IMinusTinv,
    /// `λI + T^{-1}`
    LambdaIPlusTinv,
    /// `(1 - λ)I - T^{-1}`; requires `λ ∈ (0, 1 - 1/c)`
    OneMinusLambdaIMinusTinv,
    /// `(λT + I)^{-1}`
    ResolventLambdaTPlusI,
}

/// A diagonal operator on a finite section, optionally parameterised by `λ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorTag {
    pub kind: OperatorKind,
    pub lambda: f64,
}

impl OperatorTag {
    pub fn new(kind: OperatorKind, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::param(
                "lambda",
                format!("must be finite and >= 0, got {lambda}"),
            ));
        }
        Ok(Self { kind, lambda })
    }

    pub fn plain(kind: OperatorKind) -> Self {
        Self { kind, lambda: 0.0 }
    }

    /// Checks the kind-specific range of `λ` against the base `c`.
    pub fn validate_for(&self, c: f64) -> Result<()> {
        if self.kind == OperatorKind::OneMinusLambdaIMinusTinv {
            let upper = 1.0 - 1.0 / c;
            if !(self.lambda > 0.0 && self.lambda < upper) {
                return Err(Error::param(
                    "lambda",
                    format!("(1-λ)I - T^-1 needs λ in (0, {upper}), got {}", self.lambda),
                ));
            }
        }
        Ok(())
    }

    /// Diagonal multiplier `φ_j` acting on block `j` (1-based).
    pub fn factor(&self, j: usize, c: f64) -> f64 {
        let cj = c.powi(j as i32);
        let lam = self.lambda;
        match self.kind {
            OperatorKind::T => cj,
            OperatorKind::Tinv => 1.0 / cj,
            OperatorKind::IMinusTinv => 1.0 - 1.0 / cj,
            OperatorKind::LambdaIPlusTinv => lam + 1.0 / cj,
            OperatorKind::OneMinusLambdaIMinusTinv => 1.0 - lam - 1.0 / cj,
            OperatorKind::ResolventLambdaTPlusI => 1.0 / (lam * cj + 1.0),
        }
    }
}

/// Applies a diagonal operator blockwise.
///
/// `T` multiplies by `c^j` and `T^{-1}` divides by it, so for `c` a power of
/// two the composition `T ∘ T^{-1}` is the identity bit for bit.
pub fn apply_operator(tag: OperatorTag, v: &WeightedSeq) -> Result<WeightedSeq> {
    let c = v.base_c;
    tag.validate_for(c)?;
    let mut out = v.clone();
    for (i, block) in out.data.chunks_mut(v.width).enumerate() {
        let j = i + 1;
        match tag.kind {
            OperatorKind::Tinv => {
                let cj = c.powi(j as i32);
                block.iter_mut().for_each(|z| *z /= cj);
            }
            OperatorKind::ResolventLambdaTPlusI => {
                let d = tag.lambda * c.powi(j as i32) + 1.0;
                block.iter_mut().for_each(|z| *z /= d);
            }
            _ => {
                let phi = tag.factor(j, c);
                block.iter_mut().for_each(|z| *z *= phi);
            }
        }
    }
    Ok(out)
}

/// Lower estimate of the `l^∞ → l^∞` norm of a diagonal operator on `J` blocks.
///
/// The supremum runs over `n_samples` random elements of the unit sphere plus
/// the deterministic test elements `e_1 ē`, the constant sequence `ē`,
/// `(j/(j+1)) ē` and `c^{-(j-1)} ē`. The constant sequence saturates every
/// coordinate, so the estimate equals the finite-section norm `max_j |φ_j|`.
pub fn estimate_operator_norm(
    tag: OperatorTag,
    c: f64,
    trunc_j: usize,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if trunc_j < 1 {
        return Err(Error::param("J", "truncation depth must be at least 1"));
    }
    if n_samples < 1 {
        return Err(Error::param("n_samples", "need at least one sample"));
    }
    if !(c > 1.0) {
        return Err(Error::param("c", format!("must exceed 1, got {c}")));
    }
    tag.validate_for(c)?;

    const WIDTH: usize = 2;
    let unit = Complex64::new(1.0, 0.0);
    let scalar_profile = |profile: &dyn Fn(usize) -> f64| -> Result<WeightedSeq> {
        let mut data = vec![Complex64::new(0.0, 0.0); WIDTH * trunc_j];
        for j in 1..=trunc_j {
            // ē = (1, 0, …): a unit vector of the block max-norm
            data[(j - 1) * WIDTH] = unit * profile(j);
        }
        WeightedSeq::new(c, WIDTH, data)
    };

    let mut candidates = vec![
        scalar_profile(&|j| if j == 1 { 1.0 } else { 0.0 })?,
        scalar_profile(&|_| 1.0)?,
        scalar_profile(&|j| j as f64 / (j as f64 + 1.0))?,
        scalar_profile(&|j| c.powi(-(j as i32 - 1)))?,
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let data: Vec<Complex64> = (0..WIDTH * trunc_j)
            .map(|_| {
                Complex64::from_polar(
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let mut v = WeightedSeq::new(c, WIDTH, data)?;
        let n = v.norm_sup();
        if n > 0.0 {
            v.data.iter_mut().for_each(|z| *z /= n);
            candidates.push(v);
        }
    }

    let mut best = 0.0_f64;
    for v in &candidates {
        let n = v.norm_sup();
        if n == 0.0 {
            continue;
        }
        let image = apply_operator(tag, v)?;
        best = best.max(image.norm_sup() / n);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(c: f64, xs: &[f64]) -> WeightedSeq {
        WeightedSeq::from_real_blocks(c, &xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lc_norm_geometric_cancellation() {
        assert_eq!(norm_lc(&scalar(2.0, &[1.0, 0.5, 0.25])), 2.0);
        assert_eq!(norm_lc(&scalar(2.0, &[0.0, 0.0, 0.0])), 0.0);
    }

    #[test]
    fn lc_norm_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let blocks: Vec<Vec<f64>> = (0..4)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let v = WeightedSeq::from_real_blocks(3.0, &blocks).unwrap();
        let mut scan = 0.0_f64;
        for (i, b) in blocks.iter().enumerate() {
            let m = b.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            scan = scan.max(3.0_f64.powi(i as i32 + 1) * m);
        }
        assert!((norm_lc(&v) - scan).abs() <= 1e-12 * scan);
    }

    #[test]
    fn lm_norm_examples() {
        assert_eq!(norm_lm(&scalar(2.0, &[1.0, 1.0, 1.0]), 2).unwrap(), 9.0);
        assert_eq!(norm_lm(&scalar(2.0, &[4.0, 1.0, 0.0]), 2).unwrap(), 4.0);
        assert!(norm_lm(&scalar(2.0, &[1.0]), 0).is_err());
    }

    #[test]
    fn lm_norm_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v = scalar(2.0, &xs);
        let scan = xs
            .iter()
            .enumerate()
            .map(|(i, x)| ((i + 1) as f64).powi(3) * x.abs())
            .fold(0.0_f64, f64::max);
        assert!((norm_lm(&v, 3).unwrap() - scan).abs() <= 1e-12 * scan);
    }

    #[test]
    fn resolvent_and_inverse_examples() {
        let tag = OperatorTag::new(OperatorKind::ResolventLambdaTPlusI, 0.25).unwrap();
        let out = apply_operator(tag, &scalar(2.0, &[1.0, 1.0])).unwrap();
        assert!((out.block(1)[0].re - 1.0 / 1.5).abs() < 1e-15);
        assert!((out.block(2)[0].re - 0.5).abs() < 1e-15);

        let out = apply_operator(
            OperatorTag::plain(OperatorKind::Tinv),
            &scalar(2.0, &[2.0, 4.0]),
        )
        .unwrap();
        assert_eq!(out, scalar(2.0, &[1.0, 1.0]));
    }

    #[test]
    fn shift_roundtrip_is_exact_for_binary_base() {
        let v = scalar(2.0, &[0.3, -1.7, 5.5, 1e-9]);
        let back = apply_operator(
            OperatorTag::plain(OperatorKind::T),
            &apply_operator(OperatorTag::plain(OperatorKind::Tinv), &v).unwrap(),
        )
        .unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn one_minus_lambda_range_is_enforced() {
        let v = scalar(2.0, &[1.0]);
        for lam in [0.0, 0.5, 0.7] {
            let tag = OperatorTag::new(OperatorKind::OneMinusLambdaIMinusTinv, lam).unwrap();
            assert!(apply_operator(tag, &v).is_err(), "λ = {lam}");
        }
        let tag = OperatorTag::new(OperatorKind::OneMinusLambdaIMinusTinv, 0.3).unwrap();
        assert!(apply_operator(tag, &v).is_ok());
    }

    #[test]
    fn norm_estimate_examples() {
        let tinv = OperatorTag::plain(OperatorKind::Tinv);
        for j in [1, 5, 40] {
            assert_eq!(estimate_operator_norm(tinv, 2.0, j, 8, 1).unwrap(), 0.5);
        }
        let tag = OperatorTag::new(OperatorKind::LambdaIPlusTinv, 0.3).unwrap();
        assert!((estimate_operator_norm(tag, 2.0, 20, 16, 2).unwrap() - 0.8).abs() < 1e-9);

        let tag = OperatorTag::plain(OperatorKind::IMinusTinv);
        let est = estimate_operator_norm(tag, 2.0, 50, 16, 3).unwrap();
        assert!(est >= (50.0 / 51.0) * (1.0 - 2f64.powi(-50)));
        assert!(est <= 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(WeightedSeq::new(1.0, 1, vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(WeightedSeq::new(2.0, 2, vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(WeightedSeq::new(2.0, 1, vec![Complex64::new(f64::NAN, 0.0)]).is_err());
        let tag = OperatorTag::plain(OperatorKind::T);
        assert!(estimate_operator_norm(tag, 2.0, 0, 1, 0).is_err());
    }
}
