//! Two-sample testing for document collections.
//!
//! A shared feedforward n-gram language model is trained on estimation
//! halves of two corpora. Per-document entropy estimates on the held-out
//! inference halves feed an asymptotically normal statistic, and p-values
//! from repeated random splits are combined with the Cauchy or MPT rules.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! parallel drivers live in the `textsplit` crate.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`text`] | tokenizer, vocabulary, encoded corpora |
//! | [`nnlm`] | language model, training, gradient check, document log-likelihood |
//! | [`entropy_test`] | splits, entropy estimates, the standardized statistic |
//! | [`multisplit`] | multiple splitting, Cauchy/MPT combiners, Bonferroni |
//! | [`dist`] | normal, chi-square and Cauchy numerics |
//! | [`simgen`] | latent-Gaussian synthetic corpora |
//! | [`experiment`] | Monte Carlo replications and rejection-rate tallies |
#![no_std]

extern crate alloc;

pub mod dist;
pub mod entropy_test;
pub mod error;
pub mod experiment;
pub mod multisplit;
pub mod nnlm;
pub mod rng;
pub mod simgen;
pub mod text;

pub use entropy_test::{
    single_split_test, EncodedPair, EntropyEstimate, Sidedness, SplitData, SplitPlan, TestConfig, TestOutcome,
    TextPair,
};
pub use error::{Error, Result};
pub use multisplit::{Method, MultiSplitResult};
pub use nnlm::{NnlmConfig, NnlmParams, TrainReport};
pub use simgen::{CovType, SimConfig};
pub use text::{Corpus, Document, Group, TokenizedCorpus, TokenizerConfig, Vocabulary};
