//! Observation models: a pre-change density `f` and `K` post-change
//! alternatives `g_1..g_K`, with log-likelihood ratios and KL numbers.
//!
//! Observations are real vectors of a fixed length (`dim`). Scalar models
//! use `dim == 1`; the multichannel constructors use one coordinate per
//! channel, with channels independent by construction.
//!
//! Indices of alternatives are 0-based throughout the library API.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of samples used when a KL divergence has no closed form.
pub const KL_MC_SAMPLES: usize = 100_000;
const KL_MC_SEED: u64 = 0x6b6c_5f6d_6300_0001;

/// A user-supplied density. Both the log-density and the sampler must
/// describe the same distribution; nothing checks that beyond the tests a
/// caller chooses to run.
pub trait CustomDensity: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    /// Natural log of the density at `x` (`x.len() == self.dim()`).
    fn log_density(&self, x: &[f64]) -> f64;
    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]);
}

#[derive(Clone, Debug)]
pub enum Density {
    /// Scalar normal density.
    Gaussian { mean: f64, sd: f64 },
    /// Independent components laid out one after another.
    Product(Vec<Density>),
    Custom(Arc<dyn CustomDensity>),
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

impl Density {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::param("mean", format!("must be finite, got {mean}")));
        }
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::param("sd", format!("must be positive and finite, got {sd}")));
        }
        Ok(Density::Gaussian { mean, sd })
    }

    pub fn standard_normal() -> Self {
        Density::Gaussian { mean: 0.0, sd: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            Density::Gaussian { .. } => 1,
            Density::Product(parts) => parts.iter().map(Density::dim).sum(),
            Density::Custom(c) => c.dim(),
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            Density::Gaussian { mean, sd } => {
                let z = (x[0] - mean) / sd;
                -0.5 * z * z - sd.ln() - HALF_LN_2PI
            }
            Density::Product(parts) => {
                let mut offset = 0;
                let mut total = 0.0;
                for part in parts {
                    let d = part.dim();
                    total += part.log_density(&x[offset..offset + d]);
                    offset += d;
                }
                total
            }
            Density::Custom(c) => c.log_density(x),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Density::Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                out[0] = mean + sd * z;
            }
            Density::Product(parts) => {
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    part.sample(rng, &mut out[offset..offset + d]);
                    offset += d;
                }
            }
            Density::Custom(c) => c.sample(&mut DynRng(rng), out),
        }
    }

    /// Flattened list of scalar Gaussian factors, if the density is a
    /// (possibly nested) product of scalar Gaussians.
    fn gaussian_factors(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Density::Gaussian { mean, sd } => Some(vec![(*mean, *sd)]),
            Density::Product(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.gaussian_factors()?);
                }
                Some(out)
            }
            Density::Custom(_) => None,
        }
    }
}

struct DynRng<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// `Div(N(m1, s1²) ‖ N(m2, s2²))` in nats.
pub fn gaussian_kl(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let d = m1 - m2;
    (s2 / s1).ln() + (s1 * s1 + d * d) / (2.0 * s2 * s2) - 0.5
}

/// A KL divergence value; `se` is set when it was estimated by Monte Carlo.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Divergence {
    pub value: f64,
    pub se: Option<f64>,
}

/// `Div(p ‖ q)`: closed form for products of scalar Gaussians, otherwise a
/// Monte Carlo average of `log p − log q` over samples from `p`.
pub fn divergence(p: &Density, q: &Density) -> Divergence {
    if let (Some(a), Some(b)) = (p.gaussian_factors(), q.gaussian_factors()) {
        if a.len() == b.len() {
            let value = a
                .iter()
                .zip(&b)
                .map(|(&(m1, s1), &(m2, s2))| gaussian_kl(m1, s1, m2, s2))
                .sum();
            return Divergence { value, se: None };
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(KL_MC_SEED);
    let mut x = vec![0.0; p.dim()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..KL_MC_SAMPLES {
        p.sample(&mut rng, &mut x);
        let v = p.log_density(&x) - q.log_density(&x);
        sum += v;
        sum_sq += v * v;
    }
    let n = KL_MC_SAMPLES as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Divergence {
        value: mean,
        se: Some((var / n).sqrt()),
    }
}

/// KL numbers of a model, in nats.
#[derive(Clone, Debug, Serialize)]
pub struct KlTable {
    k: usize,
    /// `I_i = Div(g_i ‖ f)`.
    pub to_pre: Vec<Divergence>,
    /// Row-major `K×K`; entry `(i, j)` is `I_ij = Div(g_i ‖ g_j)`. The
    /// diagonal is unused and stored as zero.
    pub pair: Vec<Divergence>,
    /// `I*_i = min_{j≠i} I_ij`; `+∞` when `K == 1`.
    pub min_pair: Vec<f64>,
}

impl KlTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn to_pre(&self, i: usize) -> f64 {
        self.to_pre[i].value
    }

    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pair[i * self.k + j].value
    }

    pub fn min_pair(&self, i: usize) -> f64 {
        self.min_pair[i]
    }
}

/// Computes the KL table of `pre` against `alternatives`, rejecting any
/// entry that is not strictly positive and finite.
pub fn kl_table(pre: &Density, alternatives: &[Density]) -> Result<KlTable> {
    let k = alternatives.len();
    let check = |d: Divergence, what: String| -> Result<Divergence> {
        if d.value.is_finite() && d.value > 0.0 {
            Ok(d)
        } else {
            Err(Error::InvalidModel(format!(
                "{what} = {} must be positive and finite",
                d.value
            )))
        }
    };
    let mut to_pre = Vec::with_capacity(k);
    for (i, g) in alternatives.iter().enumerate() {
        to_pre.push(check(divergence(g, pre), format!("Div(g_{} ‖ f)", i + 1))?);
    }
    let zero = Divergence { value: 0.0, se: None };
    let mut pair = vec![zero; k * k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                pair[i * k + j] = check(
                    divergence(&alternatives[i], &alternatives[j]),
                    format!("Div(g_{} ‖ g_{})", i + 1, j + 1),
                )?;
            }
        }
    }
    let min_pair = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| pair[i * k + j].value)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(KlTable {
        k,
        to_pre,
        pair,
        min_pair,
    })
}

/// Pre-change density, post-change alternatives, and their KL numbers.
/// Immutable once built; share it freely between threads.
#[derive(Clone, Debug)]
pub struct ChangeModel {
    pre: Density,
    alternatives: Vec<Density>,
    kl: KlTable,
    dim: usize,
    /// `mirror[j]` is the smallest index whose alternative is a
    /// coordinate permutation of alternative `j` under an exchangeable
    /// pre-change density (used to skip symmetric scenarios).
    mirror: Vec<usize>,
}

impl ChangeModel {
    pub fn new(pre: Density, alternatives: Vec<Density>) -> Result<Self> {
        if alternatives.is_empty() {
            return Err(Error::InvalidModel("at least one post-change alternative is required".into()));
        }
        let dim = pre.dim();
        if dim == 0 {
            return Err(Error::InvalidModel("observation dimension must be positive".into()));
        }
        for (i, g) in alternatives.iter().enumerate() {
            if g.dim() != dim {
                return Err(Error::InvalidModel(format!(
                    "alternative {} has dimension {}, pre-change density has {dim}",
                    i + 1,
                    g.dim()
                )));
            }
        }
        let kl = kl_table(&pre, &alternatives)?;
        let mirror = (0..alternatives.len()).collect();
        Ok(ChangeModel {
            pre,
            alternatives,
            kl,
            dim,
            mirror,
        })
    }

    /// Number of post-change alternatives `K`.
    pub fn k(&self) -> usize {
        self.alternatives.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pre(&self) -> &Density {
        &self.pre
    }

    pub fn alternative(&self, i: usize) -> &Density {
        &self.alternatives[i]
    }

    pub fn kl(&self) -> &KlTable {
        &self.kl
    }

    /// Index of the canonical alternative that `j` mirrors (itself when
    /// there is no symmetry).
    pub fn mirror_of(&self, j: usize) -> usize {
        self.mirror[j]
    }

    /// `ℓ_i(x) = log g_i(x) − log f(x)`.
    pub fn llr_vs_f(&self, i: usize, x: &[f64]) -> Result<f64> {
        let v = self.alternatives[i].log_density(x) - self.pre.log_density(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ModelSupport {
                alternative: i,
                observation: x.to_vec(),
            })
        }
    }

    /// `ℓ_ij(x) = log g_i(x) − log g_j(x)`, computed as
    /// `ℓ_i(x) − ℓ_j(x)` so the two routes agree exactly.
    pub fn llr_pair(&self, i: usize, j: usize, x: &[f64]) -> Result<f64> {
        Ok(self.llr_vs_f(i, x)? - self.llr_vs_f(j, x)?)
    }

    /// Fills `out[i] = ℓ_i(x)` for every alternative.
    pub fn llrs_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let lf = self.pre.log_density(x);
        for (i, (g, o)) in self.alternatives.iter().zip(out.iter_mut()).enumerate() {
            let v = g.log_density(x) - lf;
            if !v.is_finite() {
                return Err(Error::ModelSupport {
                    alternative: i,
                    observation: x.to_vec(),
                });
            }
            *o = v;
        }
        Ok(())
    }

    pub fn sample_pre<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.pre.sample(rng, out)
    }

    pub fn sample_post<R: RngCore + ?Sized>(&self, j: usize, rng: &mut R, out: &mut [f64]) {
        self.alternatives[j].sample(rng, out)
    }
}

/// Scalar Gaussian mean-shift model: `f = N(0,1)`, `g_i = N(θ_i, 1)`.
pub fn gaussian_mean_shift(thetas: &[f64]) -> Result<ChangeModel> {
    if thetas.is_empty() {
        return Err(Error::param("thetas", "at least one post-change mean is required"));
    }
    for &t in thetas {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::param("thetas", format!("post-change means must be positive and finite, got {t}")));
        }
    }
    if thetas.windows(2).any(|w| w[0] >= w[1]) {
        log::warn!("post-change means {thetas:?} are not strictly increasing; continuing");
    }
    let alternatives = thetas
        .iter()
        .map(|&t| Density::Gaussian { mean: t, sd: 1.0 })
        .collect();
    ChangeModel::new(Density::standard_normal(), alternatives)
}

/// Multichannel model with `d` independent channels. Channel `c` has
/// pre-change density `pre[c]` and post-change density `post[c]`.
///
/// Single-fault mode has `K = d` alternatives where only channel `i`
/// changes. Simultaneous mode (only `d == 2`) adds a third alternative in
/// which both channels change.
pub fn multichannel(
    d: usize,
    pre: Vec<Density>,
    post: Vec<Density>,
    simultaneous: bool,
) -> Result<ChangeModel> {
    if d == 0 {
        return Err(Error::param("channels", "must be at least 1"));
    }
    if simultaneous && d != 2 {
        return Err(Error::Unsupported(format!(
            "simultaneous faults are supported for 2 channels, got {d}"
        )));
    }
    if pre.len() != d || post.len() != d {
        return Err(Error::param(
            "channels",
            format!("expected {d} pre and post densities, got {} and {}", pre.len(), post.len()),
        ));
    }
    if pre.iter().chain(&post).any(|p| p.dim() != 1) {
        return Err(Error::InvalidModel("channel densities must be scalar".into()));
    }
    let single = |i: usize| {
        Density::Product(
            (0..d)
                .map(|c| if c == i { post[c].clone() } else { pre[c].clone() })
                .collect(),
        )
    };
    let mut alternatives: Vec<Density> = (0..d).map(single).collect();
    if simultaneous {
        alternatives.push(Density::Product(post.clone()));
    }
    let exchangeable = {
        let same = |v: &[Density]| {
            v.iter()
                .map(Density::gaussian_factors)
                .collect::<Option<Vec<_>>>()
                .is_some_and(|f| f.windows(2).all(|w| w[0] == w[1]))
        };
        same(&pre) && same(&post)
    };
    let mut model = ChangeModel::new(Density::Product(pre), alternatives)?;
    if exchangeable {
        for j in 1..d {
            model.mirror[j] = 0;
        }
    }
    Ok(model)
}

/// Convenience: `d` channels, each `N(pre_mean, pre_sd²)` before the change
/// and `N(post_mean, post_sd²)` after.
pub fn gaussian_multichannel(
    d: usize,
    pre_mean: f64,
    pre_sd: f64,
    post_mean: f64,
    post_sd: f64,
    simultaneous: bool,
) -> Result<ChangeModel> {
    let p = Density::gaussian(pre_mean, pre_sd)?;
    let q = Density::gaussian(post_mean, post_sd)?;
    multichannel(d, vec![p; d], vec![q; d], simultaneous)
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

/// Model section of a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    GaussianMeanShift {
        thetas: Vec<f64>,
    },
    MultichannelSingle {
        #[serde(default = "two")]
        channels: usize,
        #[serde(default)]
        pre_mean: f64,
        #[serde(default = "one")]
        pre_sd: f64,
        #[serde(default = "one")]
        post_mean: f64,
        #[serde(default = "one")]
        post_sd: f64,
    },
    MultichannelSimultaneous {
        #[serde(default = "two")]
        channels: usize,
        #[serde(default)]
        pre_mean: f64,
        #[serde(default = "one")]
        pre_sd: f64,
        #[serde(default = "one")]
        post_mean: f64,
        #[serde(default = "one")]
        post_sd: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<ChangeModel> {
        match *self {
            ModelSpec::GaussianMeanShift { ref thetas } => gaussian_mean_shift(thetas),
            ModelSpec::MultichannelSingle {
                channels,
                pre_mean,
                pre_sd,
                post_mean,
                post_sd,
            } => gaussian_multichannel(channels, pre_mean, pre_sd, post_mean, post_sd, false),
            ModelSpec::MultichannelSimultaneous {
                channels,
                pre_mean,
                pre_sd,
                post_mean,
                post_sd,
            } => gaussian_multichannel(channels, pre_mean, pre_sd, post_mean, post_sd, true),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_channel(simultaneous: bool) -> ChangeModel {
        gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, simultaneous).unwrap()
    }

    #[test]
    fn llr_scalar_mean_shift() {
        let m = gaussian_mean_shift(&[1.0]).unwrap();
        // θx − θ²/2 with θ = 1
        assert!((m.llr_vs_f(0, &[2.0]).unwrap() - 1.5).abs() < 1e-12);
        assert!(m.llr_vs_f(0, &[0.5]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn llr_simultaneous_channel_sum() {
        let m = two_channel(true);
        assert!((m.llr_vs_f(2, &[0.0, 0.0]).unwrap() + 1.0).abs() < 1e-12);
        for a in [-3.0, 0.0, 0.7, 5.0] {
            assert!((m.llr_pair(2, 0, &[a, 1.0]).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn llr_pair_midpoint_and_antisymmetry() {
        let m = gaussian_mean_shift(&[1.0, 2.0]).unwrap();
        assert!(m.llr_pair(1, 0, &[1.5]).unwrap().abs() < 1e-12);
        for x in [-2.0, 0.1, 3.3] {
            let a = m.llr_pair(0, 1, &[x]).unwrap();
            let b = m.llr_pair(1, 0, &[x]).unwrap();
            assert_eq!(a, -b);
        }
    }

    #[test]
    fn kl_closed_forms() {
        let m = gaussian_mean_shift(&[1.0]).unwrap();
        assert_eq!(m.kl().to_pre(0), 0.5);
        assert!(m.kl().min_pair(0).is_infinite());

        let m = gaussian_mean_shift(&[1.0, 2.0]).unwrap();
        assert_eq!(m.kl().pair(0, 1), 0.5);

        let m = two_channel(true);
        assert_eq!(m.k(), 3);
        assert_eq!(m.kl().to_pre(2), 1.0);
        assert_eq!(m.kl().pair(2, 0), 0.5);
        assert_eq!(m.kl().pair(2, 1), 0.5);
        assert_eq!(m.kl().pair(0, 2), 0.5);
        assert_eq!(m.kl().min_pair(2), 0.5);

        let m = two_channel(false);
        assert_eq!(m.k(), 2);
        assert_eq!(m.kl().to_pre(0), 0.5);
        assert_eq!(m.kl().to_pre(1), 0.5);
    }

    #[test]
    fn pre_change_mean_of_pair_llr() {
        // E_f[ℓ_12] for θ = (1, 2): ((0−2)² − (0−1)²)/2 = 1.5
        let m = gaussian_mean_shift(&[1.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let mut x = [0.0];
            m.sample_pre(&mut rng, &mut x);
            let v = m.llr_pair(0, 1, &x).unwrap();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 1.5).abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn constructor_errors() {
        assert!(gaussian_mean_shift(&[]).is_err());
        assert!(gaussian_mean_shift(&[1.0, 1.0]).is_err());
        assert!(gaussian_mean_shift(&[0.0]).is_err());
        // unordered is accepted
        assert!(gaussian_mean_shift(&[2.0, 1.0]).is_ok());
        assert!(matches!(
            gaussian_multichannel(3, 0.0, 1.0, 1.0, 1.0, true),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn support_error_is_reported() {
        #[derive(Debug)]
        struct HalfLine;
        impl CustomDensity for HalfLine {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, x: &[f64]) -> f64 {
                if x[0] >= 0.0 {
                    -x[0]
                } else {
                    f64::NEG_INFINITY
                }
            }
            fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
                let u: f64 = rng.random();
                out[0] = -(1.0 - u).ln();
            }
        }
        let g = Density::Custom(Arc::new(HalfLine));
        let f = Density::gaussian(2.0, 1.0).unwrap();
        // Div(g ‖ f) is finite, Div computed by MC.
        let kl = divergence(&g, &f);
        assert!(kl.se.is_some() && kl.value > 0.0);
        let model = ChangeModel::new(f, vec![g]).unwrap();
        assert!(matches!(
            model.llr_vs_f(0, &[-1.0]),
            Err(Error::ModelSupport { alternative: 0, .. })
        ));
    }

    #[test]
    fn mirror_classes() {
        let m = two_channel(true);
        assert_eq!((m.mirror_of(0), m.mirror_of(1), m.mirror_of(2)), (0, 0, 2));
        let m = gaussian_mean_shift(&[1.0, 2.0]).unwrap();
        assert_eq!(m.mirror_of(1), 1);
    }
}
