//! Command-line surface: `test`, `simulate` and `bench`.
//!
//! Each command accepts `--config FILE`, a JSON object whose keys are the
//! long flag names without dashes (`"n-ctx": 3`). Flags given on the command
//! line override the file; anything unset falls back to the defaults below.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use textsplit_core::entropy_test::{Sidedness, TestConfig, TextPair};
use textsplit_core::experiment::ExperimentCell;
use textsplit_core::multisplit::{combine, Method, DEFAULT_MPT_BETA};
use textsplit_core::nnlm::NnlmConfig;
use textsplit_core::simgen::{gen_pair_seeded, CovType, SimConfig};
use textsplit_core::text::{Group, TokenizerConfig};

use crate::corpus_io::{load_corpus, write_jsonl, CorpusFormat};
use crate::model_io::save_model;
use crate::report::{BenchReport, ReportFormat, TestReport};
use crate::runner::{multi_split_par, run_grid, split_model, thread_pool};

#[derive(Debug, Parser)]
#[command(name = "textsplit", version, about = "Two-sample testing for text corpora via language-model entropy")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether two corpora share the same entropy.
    Test(TestArgs),
    /// Generate a synthetic pair of corpora.
    Simulate(SimulateArgs),
    /// Run a size/power grid on synthetic data.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct TestArgs {
    /// Corpus of group A
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Corpus of group B
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// txt (one document per line) or jsonl; inferred from the extension of --a
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    /// Number of splits
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// single, cauchy, mpt1 or mpt2
    #[arg(long)]
    pub method: Option<Method>,
    /// paper or two
    #[arg(long)]
    pub sided: Option<Sidedness>,
    /// Fraction of each corpus used for estimation
    #[arg(long)]
    pub frac: Option<f64>,
    /// Minimum token count to enter the vocabulary
    #[arg(long)]
    pub min_freq: Option<usize>,
    /// Tail level of the projection-test correlation estimate
    #[arg(long)]
    pub mpt_beta: Option<f64>,
    #[arg(long)]
    pub no_lowercase: bool,
    #[arg(long)]
    pub no_nfc: bool,
    #[arg(long)]
    pub keep_punct: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub nnlm: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Save the model of the first split
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ModelArgs {
    /// n-gram order
    #[arg(long)]
    pub n_ctx: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Hidden widths, comma separated
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Truncation level B of predicted probabilities
    #[arg(long)]
    pub trunc_b: Option<f64>,
}

const MODEL_KEYS: [&str; 8] = [
    "n-ctx",
    "embed-dim",
    "hidden",
    "epochs",
    "batch-size",
    "lr",
    "momentum",
    "trunc-b",
];

impl ModelArgs {
    fn from_config(c: &NnlmConfig) -> Self {
        Self {
            n_ctx: Some(c.n_ctx),
            embed_dim: Some(c.embed_dim),
            hidden: c.hidden_widths.clone(),
            epochs: Some(c.epochs),
            batch_size: Some(c.batch_size),
            lr: Some(c.step_size),
            momentum: Some(c.momentum),
            trunc_b: Some(c.trunc_b),
        }
    }

    fn resolve(&self) -> NnlmConfig {
        let d = NnlmConfig::default();
        NnlmConfig {
            n_ctx: self.n_ctx.unwrap_or(d.n_ctx),
            embed_dim: self.embed_dim.unwrap_or(d.embed_dim),
            hidden_widths: if self.hidden.is_empty() { d.hidden_widths } else { self.hidden.clone() },
            trunc_b: self.trunc_b.unwrap_or(d.trunc_b),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            step_size: self.lr.unwrap_or(d.step_size),
            momentum: self.momentum.unwrap_or(d.momentum),
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SimulateArgs {
    /// Content vocabulary size
    #[arg(long)]
    pub v: Option<usize>,
    /// Document length
    #[arg(long)]
    pub t: Option<usize>,
    /// Documents per group
    #[arg(long)]
    pub n: Option<usize>,
    /// High-frequency word weight
    #[arg(long)]
    pub s: Option<f64>,
    /// θ_A − θ_B around 0.5
    #[arg(long)]
    pub delta: Option<f64>,
    /// θ for both groups
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub theta_a: Option<f64>,
    #[arg(long)]
    pub theta_b: Option<f64>,
    /// ar or cs
    #[arg(long)]
    pub cov: Option<CovType>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct BenchArgs {
    /// Vocabulary sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub v: Vec<usize>,
    /// High-frequency weights
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub cov: Vec<CovType>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub mpt_beta: Option<f64>,
    #[arg(long)]
    pub sided: Option<Sidedness>,
    #[arg(long)]
    pub frac: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub nnlm: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json; inferred from the extension of --out, csv otherwise
    #[arg(long)]
    pub format: Option<ReportFormat>,
    /// Include summed replication time per cell
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub quiet: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Grid file (same keys as the flags)
    #[arg(long, visible_alias = "grid")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Drop unset flags so they do not mask values from the config file.
fn strip_unset(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m
            .into_iter()
            .filter(|(_, v)| match v {
                Value::Null | Value::Bool(false) => false,
                Value::Array(a) => !a.is_empty(),
                _ => true,
            })
            .collect(),
        _ => Map::new(),
    }
}

/// Overlay command-line flags on the config file.
fn merge_config<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Path>, extra_keys: &[&str]) -> Result<T> {
    let Some(path) = file else {
        return Ok(serde_json::from_value(Value::Object(strip_unset(serde_json::to_value(flags)?)))?);
    };
    let raw = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut base = match serde_json::from_str::<Value>(&raw).with_context(|| format!("{}: invalid JSON", path.display()))? {
        Value::Object(m) => m,
        _ => bail!("{}: config must be a JSON object", path.display()),
    };
    base.extend(strip_unset(serde_json::to_value(flags)?));
    // Flattened model keys bypass deny_unknown_fields; check them here.
    let probe = serde_json::to_value(T::deserialize(Value::Object(Map::new()))?)?;
    if let Value::Object(known) = probe {
        for k in base.keys() {
            if !known.contains_key(k) && !extra_keys.contains(&k.as_str()) {
                bail!("{}: unknown key {k:?}", path.display());
            }
        }
    }
    serde_json::from_value(Value::Object(base)).with_context(|| format!("{}: invalid config", path.display()))
}

/// Resolved inputs of a `test` run, echoed into its report.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
struct TestEcho<'a> {
    a: &'a Path,
    b: &'a Path,
    format: CorpusFormat,
    m: usize,
    alpha: f64,
    method: Method,
    sided: Sidedness,
    frac: f64,
    min_freq: usize,
    mpt_beta: f64,
    no_lowercase: bool,
    no_nfc: bool,
    keep_punct: bool,
    n_ctx: usize,
    embed_dim: usize,
    hidden: &'a [usize],
    epochs: usize,
    batch_size: usize,
    lr: f64,
    momentum: f64,
    trunc_b: f64,
    seed: u64,
}

fn infer_format(path: &Path) -> CorpusFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
        _ => CorpusFormat::Txt,
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    if threads == Some(0) {
        bail!("--threads must be >= 1");
    }
    thread_pool(threads).map_err(|e| anyhow!("thread pool: {e}"))
}

pub fn cmd_test(args: &TestArgs) -> Result<()> {
    let args = merge_config(args, args.config.as_deref(), &MODEL_KEYS)?;
    let a = args.a.as_deref().ok_or_else(|| anyhow!("--a is required"))?;
    let b = args.b.as_deref().ok_or_else(|| anyhow!("--b is required"))?;
    let format = args.format.unwrap_or_else(|| infer_format(a));
    let tokenizer = TokenizerConfig {
        nfc: !args.no_nfc,
        lowercase: !args.no_lowercase,
        strip_punctuation: !args.keep_punct,
    };
    let seed = args.seed.unwrap_or(0);
    let mut nnlm = args.nnlm.resolve();
    nnlm.seed = seed;
    let cfg = TestConfig {
        nnlm,
        split_fraction: args.frac.unwrap_or(0.5),
        alpha: args.alpha.unwrap_or(0.05),
        sided: args.sided.unwrap_or(Sidedness::TwoSided),
    };
    cfg.validate()?;
    let m = args.m.unwrap_or(10);
    let method = args.method.unwrap_or(Method::Cauchy);
    let mpt_beta = args.mpt_beta.unwrap_or(DEFAULT_MPT_BETA);
    let min_freq = args.min_freq.unwrap_or(1);
    if m == 0 {
        bail!("--m must be >= 1");
    }
    if matches!(method, Method::Mpt1 | Method::Mpt2) && m < 2 {
        bail!("{method} needs --m >= 2");
    }

    let data = TextPair {
        a: load_corpus(a, format, &tokenizer, Group::A)?,
        b: load_corpus(b, format, &tokenizer, Group::B)?,
        min_freq,
    };
    let pool = pool(args.threads)?;
    let outcomes = pool.install(|| multi_split_par(&data, &cfg, m, seed))?;
    let p: Vec<f64> = outcomes.iter().map(|o| o.p_value).collect();
    let combined = combine(method, &p, cfg.alpha, mpt_beta)?;

    let echo = TestEcho {
        a,
        b,
        format,
        m,
        alpha: cfg.alpha,
        method,
        sided: cfg.sided,
        frac: cfg.split_fraction,
        min_freq,
        mpt_beta,
        no_lowercase: args.no_lowercase,
        no_nfc: args.no_nfc,
        keep_punct: args.keep_punct,
        n_ctx: cfg.nnlm.n_ctx,
        embed_dim: cfg.nnlm.embed_dim,
        hidden: &cfg.nnlm.hidden_widths,
        epochs: cfg.nnlm.epochs,
        batch_size: cfg.nnlm.batch_size,
        lr: cfg.nnlm.step_size,
        momentum: cfg.nnlm.momentum,
        trunc_b: cfg.nnlm.trunc_b,
        seed,
    };
    let report = TestReport::new(serde_json::to_value(&echo)?, &outcomes, &combined);
    write_output(args.out.as_deref(), &report.to_json())?;

    if let Some(path) = &args.save_model {
        let params = split_model(&data, &cfg, seed, 0)?;
        save_model(path, &params, cfg.nnlm.trunc_b).with_context(|| format!("cannot save {}", path.display()))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub sim: SimConfig,
    pub delta: f64,
    pub seed: u64,
    pub a: String,
    pub b: String,
    pub vocabulary: Vec<String>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let args = merge_config(args, args.config.as_deref(), &[])?;
    let out = args.out.as_deref().ok_or_else(|| anyhow!("--out is required"))?;
    let d = SimConfig::default();
    let mut sim = SimConfig {
        v: args.v.unwrap_or(d.v),
        t_len: args.t.unwrap_or(d.t_len),
        n_docs: args.n.unwrap_or(d.n_docs),
        s_high: args.s.unwrap_or(d.s_high),
        cov_type: args.cov.unwrap_or(d.cov_type),
        seed: args.seed.unwrap_or(0),
        ..d
    }
    .with_delta(args.delta.unwrap_or(0.0));
    if let Some(theta) = args.theta {
        sim.theta_a = theta;
        sim.theta_b = theta;
    }
    if let Some(t) = args.theta_a {
        sim.theta_a = t;
    }
    if let Some(t) = args.theta_b {
        sim.theta_b = t;
    }
    sim.validate()?;

    let (ca, cb) = gen_pair_seeded(&sim)?;
    let vocab = sim.vocabulary();
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    for (name, corpus, prefix) in [("a.jsonl", &ca, "a"), ("b.jsonl", &cb, "b")] {
        let path = out.join(name);
        write_jsonl(&path, corpus, &vocab, prefix).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let manifest = Manifest {
        delta: sim.delta(),
        seed: sim.seed,
        a: "a.jsonl".into(),
        b: "b.jsonl".into(),
        vocabulary: vocab.tokens().to_vec(),
        sim,
    };
    let path = out.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))
}

/// Grid cells in (cov, S, V, δ) order.
pub fn bench_cells(args: &BenchArgs) -> Result<Vec<ExperimentCell>> {
    let or = |v: &[f64], d: &[f64]| if v.is_empty() { d.to_vec() } else { v.to_vec() };
    let vs = if args.v.is_empty() { vec![25] } else { args.v.clone() };
    let ss = or(&args.s, &[2.0, 4.0]);
    let deltas = or(&args.delta, &[0.0, 0.2, 0.4]);
    let covs = if args.cov.is_empty() { vec![CovType::Ar, CovType::Cs] } else { args.cov.clone() };
    let methods = if args.methods.is_empty() { Method::ALL.to_vec() } else { args.methods.clone() };
    let d = SimConfig::default();
    let mut cells = Vec::new();
    for &cov_type in &covs {
        for &s_high in &ss {
            for &v in &vs {
                for &delta in &deltas {
                    let cell = ExperimentCell {
                        sim: SimConfig {
                            v,
                            t_len: args.t.unwrap_or(d.t_len),
                            n_docs: args.n.unwrap_or(d.n_docs),
                            s_high,
                            cov_type,
                            ..d.clone()
                        }
                        .with_delta(delta),
                        methods: methods.clone(),
                        reps: args.reps.unwrap_or(200),
                        m: args.m.unwrap_or(5),
                        alpha: args.alpha.unwrap_or(0.05),
                        mpt_beta: args.mpt_beta.unwrap_or(DEFAULT_MPT_BETA),
                    };
                    cell.validate()?;
                    cells.push(cell);
                }
            }
        }
    }
    Ok(cells)
}

fn push_unique<T: PartialEq>(mut acc: Vec<T>, x: T) -> Vec<T> {
    if !acc.contains(&x) {
        acc.push(x);
    }
    acc
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let args = merge_config(args, args.config.as_deref(), &MODEL_KEYS)?;
    let cells = bench_cells(&args)?;
    let mut nnlm = args.nnlm.resolve();
    nnlm.seed = args.seed.unwrap_or(0);
    let test = TestConfig {
        nnlm,
        split_fraction: args.frac.unwrap_or(0.5),
        alpha: args.alpha.unwrap_or(0.05),
        sided: args.sided.unwrap_or(Sidedness::TwoSided),
    };
    test.validate()?;
    let format = args.format.unwrap_or(match args.out.as_deref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => ReportFormat::Json,
        _ => ReportFormat::Csv,
    });
    let seed = args.seed.unwrap_or(0);

    let quiet = args.quiet;
    let progress = move |done: usize, total: usize| {
        if !quiet {
            eprint!("\r{done}/{total}");
            if done == total {
                eprintln!();
            }
        }
    };
    let pool = pool(args.threads)?;
    let results = pool.install(|| run_grid(&cells, &test, seed, Some(&progress)))?;

    let c0 = &cells[0];
    let resolved = BenchArgs {
        v: cells.iter().map(|c| c.sim.v).fold(Vec::new(), push_unique),
        s: cells.iter().map(|c| c.sim.s_high).fold(Vec::new(), push_unique),
        delta: if args.delta.is_empty() { vec![0.0, 0.2, 0.4] } else { args.delta.clone() },
        cov: cells.iter().map(|c| c.sim.cov_type).fold(Vec::new(), push_unique),
        t: Some(c0.sim.t_len),
        n: Some(c0.sim.n_docs),
        reps: Some(c0.reps),
        m: Some(c0.m),
        methods: c0.methods.clone(),
        alpha: Some(test.alpha),
        mpt_beta: Some(c0.mpt_beta),
        sided: Some(test.sided),
        frac: Some(test.split_fraction),
        nnlm: ModelArgs::from_config(&test.nnlm),
        seed: Some(seed),
        ..BenchArgs::default()
    };
    let mut echo = serde_json::to_value(&resolved)?;
    if let Value::Object(m) = &mut echo {
        for k in ["out", "format", "timings", "quiet", "threads"] {
            m.remove(k);
        }
    }
    let report = BenchReport::new(&results, Some(echo), args.timings);
    let body = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    write_output(args.out.as_deref(), &body)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}
