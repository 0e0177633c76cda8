//! Single-split two-sample entropy test.
//!
//! Each group is split into an estimation half and an inference half. One
//! language model is trained on the pooled estimation halves; its
//! per-document log-likelihoods on each inference half give a mean entropy
//! estimate and a variance, and the standardized difference of the two means
//! is compared against the standard normal.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dist::normal_sf;
use crate::error::{Error, Result};
use crate::nnlm::{self, NnlmConfig, NnlmParams, TrainReport};
use crate::rng::{mix_seed, rng_from_seed};
use crate::text::{build_vocab, Corpus, Document, TokenizedCorpus};

/// Disjoint estimation/inference index sets over `0..n`, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub est_indices: Vec<usize>,
    pub inf_indices: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    pub fn len(&self) -> usize {
        self.est_indices.len() + self.inf_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when the two sets partition `0..n` and neither is empty.
    pub fn is_partition_of(&self, n: usize) -> bool {
        if self.est_indices.is_empty() || self.inf_indices.is_empty() || self.len() != n {
            return false;
        }
        let mut seen = alloc::vec![false; n];
        for &i in self.est_indices.iter().chain(&self.inf_indices) {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }
}

/// Estimation-set size for `n` items: `round(fraction * n)` kept within `[1, n - 1]`.
pub fn estimation_size(n: usize, fraction: f64) -> usize {
    let k = libm::round(fraction * n as f64) as usize;
    k.clamp(1, n - 1)
}

/// Uniformly random partition of `0..n` driven by `seed`.
pub fn split(n: usize, fraction: f64, seed: u64) -> Result<SplitPlan> {
    if n < 2 {
        return Err(Error::TooSmallToSplit(n));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig("split fraction must lie in (0, 1)".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let k = estimation_size(n, fraction);
    let mut est_indices = order[..k].to_vec();
    let mut inf_indices = order[k..].to_vec();
    est_indices.sort_unstable();
    inf_indices.sort_unstable();
    Ok(SplitPlan {
        est_indices,
        inf_indices,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Mean negative normalized log-likelihood, nats per token.
    pub mu_hat: f64,
    /// Variance of the per-document values with divisor `n_inf`.
    pub sigma2_hat: f64,
    pub n_inf: usize,
}

impl EntropyEstimate {
    /// From per-document normalized log-likelihoods `ℓ_j`.
    pub fn from_logliks(logliks: &[f64]) -> Result<Self> {
        if logliks.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let n = logliks.len() as f64;
        let mu_hat = -logliks.iter().sum::<f64>() / n;
        let sigma2_hat = logliks
            .iter()
            .map(|&l| {
                let d = -l - mu_hat;
                d * d
            })
            .sum::<f64>()
            / n;
        Ok(Self {
            mu_hat,
            sigma2_hat,
            n_inf: logliks.len(),
        })
    }
}

pub fn estimate_entropy(params: &NnlmParams, inf_docs: &[Document], trunc_b: f64) -> Result<EntropyEstimate> {
    EntropyEstimate::from_logliks(&nnlm::doc_logliks(params, inf_docs, trunc_b))
}

/// `(μ̂_A − μ̂_B) / sqrt(σ̂²_A / n_A + σ̂²_B / n_B)`.
pub fn test_statistic(est_a: &EntropyEstimate, est_b: &EntropyEstimate) -> Result<f64> {
    if est_a.n_inf == 0 || est_b.n_inf == 0 {
        return Err(Error::EmptyCorpus);
    }
    let var = est_a.sigma2_hat / est_a.n_inf as f64 + est_b.sigma2_hat / est_b.n_inf as f64;
    if var.is_nan() || var <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok((est_a.mu_hat - est_b.mu_hat) / libm::sqrt(var))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sidedness {
    /// `1 − Φ(|Λ|)`.
    #[serde(rename = "paper")]
    PaperExact,
    /// `2(1 − Φ(|Λ|))`.
    #[default]
    #[serde(rename = "two")]
    TwoSided,
}

impl core::str::FromStr for Sidedness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::PaperExact),
            "two" => Ok(Self::TwoSided),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown sidedness {other:?} (expected paper or two)"
            ))),
        }
    }
}

pub fn p_value(lambda: f64, sided: Sidedness) -> f64 {
    let tail = normal_sf(lambda.abs());
    match sided {
        Sidedness::PaperExact => tail,
        Sidedness::TwoSided => (2.0 * tail).min(1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub nnlm: NnlmConfig,
    pub split_fraction: f64,
    pub alpha: f64,
    pub sided: Sidedness,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            nnlm: NnlmConfig::default(),
            split_fraction: 0.5,
            alpha: 0.05,
            sided: Sidedness::TwoSided,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        self.nnlm.validate()?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidConfig("split fraction must lie in (0, 1)".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// The four document sets of one split, encoded against one vocabulary.
#[derive(Debug, Clone)]
pub struct Materialized {
    pub v_size: usize,
    pub est_a: Vec<Document>,
    pub est_b: Vec<Document>,
    pub inf_a: Vec<Document>,
    pub inf_b: Vec<Document>,
}

/// A pair of corpora that can be cut along two split plans.
pub trait SplitData {
    fn group_sizes(&self) -> (usize, usize);

    fn materialize(&self, plan_a: &SplitPlan, plan_b: &SplitPlan) -> Result<Materialized>;
}

fn select<T: Clone>(items: &[T], indices: &[usize]) -> Vec<T> {
    indices.iter().map(|&i| items[i].clone()).collect()
}

/// Corpora already encoded against a fixed vocabulary of `v_size` ids.
#[derive(Debug, Clone)]
pub struct EncodedPair {
    pub a: Corpus,
    pub b: Corpus,
    pub v_size: usize,
}

impl EncodedPair {
    pub fn new(a: Corpus, b: Corpus, v_size: usize) -> Result<Self> {
        let bound = a.id_bound().max(b.id_bound());
        if bound > v_size {
            return Err(Error::TokenOutOfRange {
                id: (bound - 1) as u32,
                v_size,
            });
        }
        Ok(Self { a, b, v_size })
    }
}

impl SplitData for EncodedPair {
    fn group_sizes(&self) -> (usize, usize) {
        (self.a.len(), self.b.len())
    }

    fn materialize(&self, plan_a: &SplitPlan, plan_b: &SplitPlan) -> Result<Materialized> {
        Ok(Materialized {
            v_size: self.v_size,
            est_a: select(self.a.docs(), &plan_a.est_indices),
            est_b: select(self.b.docs(), &plan_b.est_indices),
            inf_a: select(self.a.docs(), &plan_a.inf_indices),
            inf_b: select(self.b.docs(), &plan_b.inf_indices),
        })
    }
}

/// Raw tokenized corpora; each split builds its vocabulary from the two
/// estimation halves only.
#[derive(Debug, Clone)]
pub struct TextPair {
    pub a: TokenizedCorpus,
    pub b: TokenizedCorpus,
    pub min_freq: usize,
}

impl SplitData for TextPair {
    fn group_sizes(&self) -> (usize, usize) {
        (self.a.len(), self.b.len())
    }

    fn materialize(&self, plan_a: &SplitPlan, plan_b: &SplitPlan) -> Result<Materialized> {
        let est_tokens = plan_a
            .est_indices
            .iter()
            .map(|&i| self.a.docs()[i].as_slice())
            .chain(plan_b.est_indices.iter().map(|&i| self.b.docs()[i].as_slice()));
        let vocab = build_vocab(est_tokens, self.min_freq)?;
        let enc = |docs: &[Vec<alloc::string::String>], idx: &[usize]| -> Result<Vec<Document>> {
            idx.iter().map(|&i| crate::text::encode(&docs[i], &vocab)).collect()
        };
        Ok(Materialized {
            v_size: vocab.len(),
            est_a: enc(self.a.docs(), &plan_a.est_indices)?,
            est_b: enc(self.b.docs(), &plan_b.est_indices)?,
            inf_a: enc(self.a.docs(), &plan_a.inf_indices)?,
            inf_b: enc(self.b.docs(), &plan_b.inf_indices)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub lambda: f64,
    pub p_value: f64,
    pub reject: bool,
    pub est_a: EntropyEstimate,
    pub est_b: EntropyEstimate,
    pub seed: u64,
    pub split_a: SplitPlan,
    pub split_b: SplitPlan,
    pub train: TrainReport,
}

/// Sub-seeds used by one split: (split A, split B, weight init, shuffling).
pub fn split_seeds(seed: u64) -> [u64; 4] {
    [mix_seed(seed, 0), mix_seed(seed, 1), mix_seed(seed, 2), mix_seed(seed, 3)]
}

/// Split, train on the pooled estimation halves, estimate entropies on the
/// inference halves, and test.
pub fn single_split_test<D: SplitData + ?Sized>(data: &D, cfg: &TestConfig, seed: u64) -> Result<TestOutcome> {
    single_split_fit(data, cfg, seed).map(|(outcome, _)| outcome)
}

/// [`single_split_test`], also returning the trained model.
pub fn single_split_fit<D: SplitData + ?Sized>(
    data: &D,
    cfg: &TestConfig,
    seed: u64,
) -> Result<(TestOutcome, NnlmParams)> {
    cfg.validate()?;
    let (n_a, n_b) = data.group_sizes();
    let [seed_a, seed_b, seed_init, seed_train] = split_seeds(seed);
    let split_a = split(n_a, cfg.split_fraction, seed_a)?;
    let split_b = split(n_b, cfg.split_fraction, seed_b)?;
    let sets = data.materialize(&split_a, &split_b)?;

    let params = nnlm::init_params(&cfg.nnlm, sets.v_size, seed_init)?;
    let train_cfg = NnlmConfig {
        seed: seed_train,
        ..cfg.nnlm.clone()
    };
    let (params, train) = nnlm::train(params, &sets.est_a, &sets.est_b, &train_cfg)?;

    let est_a = estimate_entropy(&params, &sets.inf_a, cfg.nnlm.trunc_b)?;
    let est_b = estimate_entropy(&params, &sets.inf_b, cfg.nnlm.trunc_b)?;
    let lambda = test_statistic(&est_a, &est_b)?;
    let p = p_value(lambda, cfg.sided);
    let outcome = TestOutcome {
        lambda,
        p_value: p,
        reject: p <= cfg.alpha,
        est_a,
        est_b,
        seed,
        split_a,
        split_b,
        train,
    };
    Ok((outcome, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn split_sizes_and_determinism() {
        let p = split(100, 0.5, 9).unwrap();
        assert_eq!(p.est_indices.len(), 50);
        assert_eq!(p.inf_indices.len(), 50);
        assert!(p.is_partition_of(100));
        assert_eq!(p, split(100, 0.5, 9).unwrap());
        assert_ne!(p, split(100, 0.5, 10).unwrap());

        let small = split(3, 0.5, 1).unwrap();
        assert_eq!((small.est_indices.len(), small.inf_indices.len()), (2, 1));
        let edge = split(2, 0.01, 1).unwrap();
        assert_eq!((edge.est_indices.len(), edge.inf_indices.len()), (1, 1));
    }

    #[test]
    fn split_errors() {
        assert_eq!(split(1, 0.5, 0), Err(Error::TooSmallToSplit(1)));
        assert!(split(10, 0.0, 0).is_err());
        assert!(split(10, 1.0, 0).is_err());
    }

    #[test]
    fn entropy_estimate_arithmetic() {
        let e = EntropyEstimate::from_logliks(&[-1.0, -3.0]).unwrap();
        assert_eq!(e.mu_hat, 2.0);
        assert_eq!(e.sigma2_hat, 1.0);
        assert_eq!(e.n_inf, 2);
        let single = EntropyEstimate::from_logliks(&[-2.5]).unwrap();
        assert_eq!(single.sigma2_hat, 0.0);
    }

    #[test]
    fn uniform_model_entropy() {
        let cfg = NnlmConfig::default();
        let p = NnlmParams::zeros(&cfg, 25).unwrap();
        let docs: Vec<Document> = (0..4)
            .map(|i| Document::new(vec![2 + i, 5, 7, 9, 11]).unwrap())
            .collect();
        let e = estimate_entropy(&p, &docs, 10.0).unwrap();
        assert!((e.mu_hat - libm::log(25.0)).abs() < 1e-12);
        assert!(e.sigma2_hat < 1e-28);
    }

    #[test]
    fn statistic_cases() {
        let est = |mu, s2, n| EntropyEstimate {
            mu_hat: mu,
            sigma2_hat: s2,
            n_inf: n,
        };
        let a = est(3.0, 1.0, 100);
        let b = est(2.5, 1.0, 100);
        let lam = test_statistic(&a, &b).unwrap();
        assert!((lam - 3.535_533_905_932_737_6).abs() < 1e-12);
        assert_eq!(test_statistic(&b, &a).unwrap(), -lam);
        assert_eq!(test_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(
            test_statistic(&est(1.0, 0.0, 3), &est(2.0, 0.0, 3)),
            Err(Error::DegenerateDenominator)
        );
        // Four times the inference sizes halves the standard error.
        let a4 = est(3.0, 1.0, 400);
        let b4 = est(2.5, 1.0, 400);
        assert!((test_statistic(&a4, &b4).unwrap() - 2.0 * lam).abs() < 1e-12);
    }

    #[test]
    fn p_value_sidedness() {
        assert_eq!(p_value(0.0, Sidedness::PaperExact), 0.5);
        assert_eq!(p_value(0.0, Sidedness::TwoSided), 1.0);
        let p = p_value(1.6449, Sidedness::PaperExact);
        assert!((p - 0.049_995_217_468_346_3).abs() < 1e-12);
        assert_eq!(p, p_value(-1.6449, Sidedness::PaperExact));
        assert!((p_value(1.6449, Sidedness::TwoSided) - 2.0 * p).abs() < 1e-15);
    }
}
