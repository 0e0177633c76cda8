//! Repeated data splitting and p-value combination.

use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use crate::dist::{chi2_quantile, normal_quantile};
use crate::entropy_test::{single_split_test, SplitData, TestConfig, TestOutcome};
use crate::error::{Error, Result};
use crate::rng::{mix_seed, splitmix64};

/// Lower and upper clamp applied to p-values before any quantile transform.
pub const P_CLAMP: f64 = 1e-15;

/// Default β of the second MPT correlation estimator.
pub const DEFAULT_MPT_BETA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Single,
    Cauchy,
    Mpt1,
    Mpt2,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Single, Method::Cauchy, Method::Mpt1, Method::Mpt2];

    pub fn name(self) -> &'static str {
        match self {
            Method::Single => "single",
            Method::Cauchy => "cauchy",
            Method::Mpt1 => "mpt1",
            Method::Mpt2 => "mpt2",
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSplitResult {
    pub p_values: Vec<f64>,
    pub method: Method,
    pub statistic: f64,
    /// Rejection threshold the statistic is compared against.
    pub threshold: f64,
    pub rho_hat: Option<f64>,
    pub reject: bool,
    pub alpha: f64,
    pub m: usize,
}

fn check_inputs(p_values: &[f64], alpha: f64) -> Result<()> {
    if p_values.is_empty() {
        return Err(Error::InvalidConfig("no p-values to combine".into()));
    }
    if let Some(&p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(p));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(alpha));
    }
    Ok(())
}

#[inline]
pub fn clamp_p(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// Rejects when `Σ tan[(0.5 − p_i)π] ≥ M tan[(0.5 − α)π]`.
pub fn cauchy_combine(p_values: &[f64], alpha: f64) -> Result<MultiSplitResult> {
    check_inputs(p_values, alpha)?;
    let m = p_values.len();
    let statistic: f64 = p_values
        .iter()
        .map(|&p| libm::tan((0.5 - clamp_p(p)) * PI))
        .sum();
    let threshold = m as f64 * libm::tan((0.5 - alpha) * PI);
    Ok(MultiSplitResult {
        p_values: p_values.to_vec(),
        method: Method::Cauchy,
        statistic,
        threshold,
        rho_hat: None,
        reject: statistic >= threshold,
        alpha,
        m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MptVariant {
    /// `ρ̂ = max{0, 1 − S²}`.
    One,
    /// `ρ̂ = max{0, 1 − (M − 1) S² / χ²_{M−1}(1 − β)}`.
    Two,
}

/// Normal-score combination with an estimated exchangeable correlation.
///
/// `Z_i = Φ⁻¹(1 − p_i)`, so small p-values give large scores. The
/// standardized mean `Z̄ / sqrt((1 + (M − 1)ρ̂) / M)` is compared with
/// `Φ⁻¹(1 − α/2)`.
pub fn mpt_combine(p_values: &[f64], alpha: f64, variant: MptVariant, beta: f64) -> Result<MultiSplitResult> {
    check_inputs(p_values, alpha)?;
    let m = p_values.len();
    if m < 2 {
        return Err(Error::MptNeedsMultipleSplits);
    }
    let z: Vec<f64> = p_values
        .iter()
        .map(|&p| normal_quantile(1.0 - clamp_p(p)))
        .collect::<Result<_>>()?;
    let mf = m as f64;
    let mean = z.iter().sum::<f64>() / mf;
    let s2 = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (mf - 1.0);
    let rho_hat = match variant {
        MptVariant::One => (1.0 - s2).max(0.0),
        MptVariant::Two => {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Domain(beta));
            }
            let q = chi2_quantile(mf - 1.0, 1.0 - beta)?;
            (1.0 - (mf - 1.0) * s2 / q).max(0.0)
        }
    };
    let statistic = mean / libm::sqrt((1.0 + (mf - 1.0) * rho_hat) / mf);
    let threshold = normal_quantile(1.0 - alpha / 2.0)?;
    Ok(MultiSplitResult {
        p_values: p_values.to_vec(),
        method: match variant {
            MptVariant::One => Method::Mpt1,
            MptVariant::Two => Method::Mpt2,
        },
        statistic,
        threshold,
        rho_hat: Some(rho_hat),
        reject: statistic >= threshold,
        alpha,
        m,
    })
}

/// First split only: rejects when `p_1 ≤ α`.
pub fn single_decision(p_values: &[f64], alpha: f64) -> Result<MultiSplitResult> {
    check_inputs(p_values, alpha)?;
    Ok(MultiSplitResult {
        p_values: p_values.to_vec(),
        method: Method::Single,
        statistic: p_values[0],
        threshold: alpha,
        rho_hat: None,
        reject: p_values[0] <= alpha,
        alpha,
        m: p_values.len(),
    })
}

pub fn combine(method: Method, p_values: &[f64], alpha: f64, mpt_beta: f64) -> Result<MultiSplitResult> {
    match method {
        Method::Single => single_decision(p_values, alpha),
        Method::Cauchy => cauchy_combine(p_values, alpha),
        Method::Mpt1 => mpt_combine(p_values, alpha, MptVariant::One, mpt_beta),
        Method::Mpt2 => mpt_combine(p_values, alpha, MptVariant::Two, mpt_beta),
    }
}

/// `p'_i = min(1, m p_i)`.
pub fn bonferroni_adjust(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < p_values.len() || m == 0 {
        return Err(Error::InvalidConfig(
            "Bonferroni m must be at least the number of p-values".into(),
        ));
    }
    if let Some(&p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(p));
    }
    Ok(p_values.iter().map(|&p| (m as f64 * p).min(1.0)).collect())
}

/// Seed of split `index` in a run seeded by `base_seed`.
pub fn split_seed(base_seed: u64, index: usize) -> u64 {
    mix_seed(base_seed, index as u64)
}

/// Run split `index`, retrying once with a perturbed seed on failure.
pub fn run_split<D: SplitData + ?Sized>(
    data: &D,
    cfg: &TestConfig,
    base_seed: u64,
    index: usize,
) -> Result<TestOutcome> {
    let seed = split_seed(base_seed, index);
    single_split_test(data, cfg, seed).or_else(|first| {
        single_split_test(data, cfg, splitmix64(seed ^ 0xa5a5_a5a5_a5a5_a5a5)).map_err(|_| Error::SplitFailed {
            index,
            reason: alloc::string::ToString::to_string(&first),
        })
    })
}

/// Sequential multiple splitting; outcomes come back in split order.
pub fn multi_split<D: SplitData + ?Sized>(
    data: &D,
    cfg: &TestConfig,
    m: usize,
    base_seed: u64,
) -> Result<Vec<TestOutcome>> {
    if m == 0 {
        return Err(Error::InvalidConfig("M must be >= 1".into()));
    }
    (0..m).map(|i| run_split(data, cfg, base_seed, i)).collect()
}
