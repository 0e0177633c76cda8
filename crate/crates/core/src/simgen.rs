//! Synthetic two-group corpora.
//!
//! Each document draws a latent Gaussian vector `x* ~ N(0, Σ)` of length `T`.
//! Position `t` then emits one word from the softmax of `β_l x*_t` over the
//! `V` content words. The first `⌊0.2 V⌋` coefficients are the fixed
//! high-frequency weight `S` and the rest are Uniform(0, 1), drawn once per
//! replication and shared by both groups. Groups differ only through the
//! dependence parameter θ of Σ.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, rng_from_seed, uniform01};
use crate::text::{Corpus, Document, Group, TokenId, Vocabulary};

/// Id of content word `l` (0-based) in [`Vocabulary::synthetic`].
pub const FIRST_CONTENT_ID: TokenId = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovType {
    Ar,
    Cs,
}

impl core::fmt::Display for CovType {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            CovType::Ar => "ar",
            CovType::Cs => "cs",
        })
    }
}

impl core::str::FromStr for CovType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ar" => Ok(Self::Ar),
            "cs" => Ok(Self::Cs),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown covariance type {other:?} (expected ar or cs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub v: usize,
    pub t_len: usize,
    pub n_docs: usize,
    pub s_high: f64,
    pub theta_a: f64,
    pub theta_b: f64,
    pub cov_type: CovType,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            v: 25,
            t_len: 25,
            n_docs: 100,
            s_high: 2.0,
            theta_a: 0.5,
            theta_b: 0.5,
            cov_type: CovType::Ar,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// θ_A = 0.5 + δ/2 and θ_B = 0.5 − δ/2.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.theta_a = 0.5 + delta / 2.0;
        self.theta_b = 0.5 - delta / 2.0;
        self
    }

    pub fn delta(&self) -> f64 {
        self.theta_a - self.theta_b
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.v < 5 {
            return fail("v must be >= 5");
        }
        if self.t_len < 2 {
            return fail("t_len must be >= 2");
        }
        if self.n_docs < 2 {
            return fail("n_docs must be >= 2");
        }
        if !(self.s_high > 1.0 && self.s_high.is_finite()) {
            return fail("s_high must be > 1");
        }
        for theta in [self.theta_a, self.theta_b] {
            if !(theta > 0.0 && theta < 1.0) {
                return fail("theta must lie in (0, 1)");
            }
        }
        Ok(())
    }

    /// Vocabulary size including the reserved ids.
    pub fn v_size(&self) -> usize {
        self.v + 2
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::synthetic(self.v)
    }
}

/// Symmetric positive-definite correlation matrix with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    dim: usize,
    sigma: Vec<f64>,
    chol: Vec<f64>,
}

impl CovMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.sigma[p * self.dim + q]
    }

    /// Row-major lower-triangular factor `L` with `L Lᵀ = Σ`.
    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }

    /// Max-abs entry of `L Lᵀ − Σ`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..=i.min(j)).map(|k| self.chol[i * n + k] * self.chol[j * n + k]).sum();
                worst = worst.max((s - self.sigma[i * n + j]).abs());
            }
        }
        worst
    }

    /// `x = L z`.
    pub fn correlate(&self, z: &[f64], x: &mut [f64]) {
        let n = self.dim;
        for (i, xi) in x.iter_mut().enumerate().take(n) {
            *xi = self.chol[i * n..i * n + i + 1]
                .iter()
                .zip(z)
                .map(|(l, z)| l * z)
                .sum();
        }
    }
}

fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if d <= 0.0 || !d.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * n + i] = libm::sqrt(d);
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// AR: `Σ_pq = θ^|p−q|`. CS: unit diagonal, `θ` elsewhere.
pub fn make_cov(cov_type: CovType, theta: f64, t_len: usize) -> Result<CovMatrix> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidConfig("theta must lie in (0, 1)".into()));
    }
    if t_len < 2 {
        return Err(Error::InvalidConfig("t_len must be >= 2".into()));
    }
    let n = t_len;
    let mut sigma = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..n {
            sigma[p * n + q] = match cov_type {
                CovType::Ar => libm::pow(theta, p.abs_diff(q) as f64),
                CovType::Cs if p == q => 1.0,
                CovType::Cs => theta,
            };
        }
    }
    let chol = cholesky(&sigma, n)?;
    Ok(CovMatrix { dim: n, sigma, chol })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaVector(pub Vec<f64>);

impl BetaVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn high_frequency_count(v: usize) -> usize {
    v / 5
}

/// `⌊0.2 v⌋` coefficients equal to `s_high`, then Uniform(0, 1) draws.
pub fn gen_betas<R: Rng + ?Sized>(v: usize, s_high: f64, rng: &mut R) -> BetaVector {
    let fixed = high_frequency_count(v);
    let mut beta = vec![s_high; fixed];
    beta.extend((fixed..v).map(|_| uniform01(rng)));
    BetaVector(beta)
}

/// Softmax of `β_l x*` over the content words.
pub fn word_probs(beta: &BetaVector, x_star: f64) -> Vec<f64> {
    let mut out = vec![0.0; beta.len()];
    word_probs_into(beta, x_star, &mut out);
    out
}

fn word_probs_into(beta: &BetaVector, x_star: f64, out: &mut [f64]) {
    let m = beta
        .0
        .iter()
        .map(|b| b * x_star)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, b) in out.iter_mut().zip(&beta.0) {
        *o = libm::exp(b * x_star - m);
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Inverse-CDF draw of a 0-based word index from `probs`.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u = uniform01(rng);
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave the cumulative sum just under u.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draw the latent vector for one document.
pub fn sample_latent<R: Rng + ?Sized>(cov: &CovMatrix, rng: &mut R) -> Vec<f64> {
    let mut z = vec![0.0; cov.dim()];
    fill_standard_normal(rng, &mut z);
    let mut x = vec![0.0; cov.dim()];
    cov.correlate(&z, &mut x);
    x
}

pub fn sample_document<R: Rng + ?Sized>(beta: &BetaVector, cov: &CovMatrix, rng: &mut R) -> Document {
    let x = sample_latent(cov, rng);
    let mut probs = vec![0.0; beta.len()];
    let ids = x
        .iter()
        .map(|&xt| {
            word_probs_into(beta, xt, &mut probs);
            sample_categorical(&probs, rng) as TokenId + FIRST_CONTENT_ID
        })
        .collect();
    Document::new(ids).expect("t_len >= 2")
}

/// Both groups for one replication, drawn from `rng`: the shared β first,
/// then the `N` documents of group A, then those of group B.
pub fn gen_pair<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<(Corpus, Corpus)> {
    cfg.validate()?;
    let beta = gen_betas(cfg.v, cfg.s_high, rng);
    let cov_a = make_cov(cfg.cov_type, cfg.theta_a, cfg.t_len)?;
    let cov_b = make_cov(cfg.cov_type, cfg.theta_b, cfg.t_len)?;
    let docs_a = (0..cfg.n_docs).map(|_| sample_document(&beta, &cov_a, rng)).collect();
    let docs_b = (0..cfg.n_docs).map(|_| sample_document(&beta, &cov_b, rng)).collect();
    Ok((Corpus::new(Group::A, docs_a)?, Corpus::new(Group::B, docs_b)?))
}

/// [`gen_pair`] with a stream seeded from `cfg.seed`.
pub fn gen_pair_seeded(cfg: &SimConfig) -> Result<(Corpus, Corpus)> {
    gen_pair(cfg, &mut rng_from_seed(cfg.seed))
}
