//! Monte Carlo size and power cells.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::entropy_test::{EncodedPair, TestConfig, TestOutcome};
use crate::error::{Error, Result};
use crate::multisplit::{combine, run_split, Method};
use crate::rng::{mix_seed, rng_from_seed, splitmix64};
use crate::simgen::{gen_pair, SimConfig};

/// One grid point of a size/power study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    /// Generator settings; `seed` is ignored, replication seeds are derived.
    pub sim: SimConfig,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub m: usize,
    pub alpha: f64,
    pub mpt_beta: f64,
}

impl ExperimentCell {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.reps == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("reps and M must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.m < 2 && self.methods.iter().any(|m| matches!(m, Method::Mpt1 | Method::Mpt2)) {
            return Err(Error::MptNeedsMultipleSplits);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Canonical description of the generator settings; cell seeds derive from it.
    pub fn key(&self) -> String {
        let s = &self.sim;
        alloc::format!(
            "cov={}|S={}|V={}|T={}|N={}|theta_a={}|theta_b={}",
            s.cov_type,
            s.s_high,
            s.v,
            s.t_len,
            s.n_docs,
            s.theta_a,
            s.theta_b
        )
    }

    /// Base seed of this cell in a grid run seeded by `base_seed`.
    pub fn seed(&self, base_seed: u64) -> u64 {
        mix_seed(base_seed, fnv1a64(self.key().as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Result of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub seed: u64,
    pub p_values: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub decisions: BTreeMap<Method, bool>,
}

/// Seed of replication `rep` in a cell seeded by `cell_seed`.
pub fn replication_seed(cell_seed: u64, rep: usize) -> u64 {
    mix_seed(cell_seed, rep as u64)
}

/// Base seed for the splits of a replication, distinct from the generator stream.
pub fn replication_split_seed(rep_seed: u64) -> u64 {
    splitmix64(rep_seed ^ 0x5eed_5eed_5eed_5eed)
}

/// Generate a corpus pair for `rep_seed`.
pub fn replication_data(cell: &ExperimentCell, rep_seed: u64) -> Result<EncodedPair> {
    let (a, b) = gen_pair(&cell.sim, &mut rng_from_seed(rep_seed))?;
    EncodedPair::new(a, b, cell.sim.v_size())
}

/// Apply every requested combiner to the split outcomes of one replication.
pub fn decide(cell: &ExperimentCell, rep_seed: u64, outcomes: &[TestOutcome]) -> Result<Replication> {
    let p_values: Vec<f64> = outcomes.iter().map(|o| o.p_value).collect();
    let mut decisions = BTreeMap::new();
    for &method in &cell.methods {
        decisions.insert(method, combine(method, &p_values, cell.alpha, cell.mpt_beta)?.reject);
    }
    Ok(Replication {
        seed: rep_seed,
        lambdas: outcomes.iter().map(|o| o.lambda).collect(),
        p_values,
        decisions,
    })
}

/// Generate data, run `M` splits sequentially and combine.
pub fn run_replication(cell: &ExperimentCell, test: &TestConfig, rep_seed: u64) -> Result<Replication> {
    let data = replication_data(cell, rep_seed)?;
    let split_base = replication_split_seed(rep_seed);
    let outcomes = (0..cell.m)
        .map(|i| run_split(&data, test, split_base, i))
        .collect::<Result<Vec<_>>>()?;
    decide(cell, rep_seed, &outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    /// `sqrt(r(1 − r)/reps)`.
    pub se: f64,
}

impl RateEstimate {
    pub fn new(rejections: usize, reps: usize) -> Self {
        if reps == 0 {
            return Self { rate: 0.0, se: 0.0 };
        }
        let rate = rejections as f64 / reps as f64;
        Self {
            rate,
            se: libm::sqrt(rate * (1.0 - rate) / reps as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: ExperimentCell,
    pub seed: u64,
    pub rates: BTreeMap<Method, RateEstimate>,
    /// Replications that completed and enter the denominators.
    pub reps: usize,
    pub failures: usize,
    pub failure_reasons: Vec<String>,
    pub wall_time_secs: f64,
}

/// Count rejections over completed replications; failures are excluded
/// from the denominator and listed.
pub fn tally(cell: &ExperimentCell, seed: u64, reps: &[Result<Replication>]) -> CellResult {
    let ok: Vec<&Replication> = reps.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failure_reasons: Vec<String> = reps
        .iter()
        .filter_map(|r| r.as_ref().err())
        .map(alloc::string::ToString::to_string)
        .collect();
    let rates = cell
        .methods
        .iter()
        .map(|&m| {
            let hits = ok.iter().filter(|r| r.decisions.get(&m) == Some(&true)).count();
            (m, RateEstimate::new(hits, ok.len()))
        })
        .collect();
    CellResult {
        cell: cell.clone(),
        seed,
        rates,
        reps: ok.len(),
        failures: failure_reasons.len(),
        failure_reasons,
        wall_time_secs: 0.0,
    }
}
