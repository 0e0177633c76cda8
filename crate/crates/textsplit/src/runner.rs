//! Parallel drivers for multiple splitting and Monte Carlo grids.
//!
//! Work items carry derived seeds and results are reassembled by index, so
//! output never depends on the thread count or on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use textsplit_core::entropy_test::{single_split_fit, SplitData, TestConfig, TestOutcome};
use textsplit_core::experiment::{
    replication_seed, run_replication, tally, CellResult, ExperimentCell, Replication,
};
use textsplit_core::multisplit::{run_split, split_seed};
use textsplit_core::nnlm::NnlmParams;
use textsplit_core::{Error, Result};

/// A pool with `threads` workers, or rayon's default when `None`.
pub fn thread_pool(threads: Option<usize>) -> std::result::Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    builder.build()
}

fn first_error<T>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

/// Multiple splitting with the `M` splits run in parallel; outcomes in split order.
pub fn multi_split_par<D: SplitData + Sync + ?Sized>(
    data: &D,
    cfg: &TestConfig,
    m: usize,
    base_seed: u64,
) -> Result<Vec<TestOutcome>> {
    if m == 0 {
        return Err(Error::InvalidConfig("M must be >= 1".into()));
    }
    let outcomes: Vec<Result<TestOutcome>> = (0..m)
        .into_par_iter()
        .map(|i| run_split(data, cfg, base_seed, i))
        .collect();
    first_error(outcomes)
}

/// Refit split `index` of a run and return its model.
pub fn split_model<D: SplitData + ?Sized>(
    data: &D,
    cfg: &TestConfig,
    base_seed: u64,
    index: usize,
) -> Result<NnlmParams> {
    single_split_fit(data, cfg, split_seed(base_seed, index)).map(|(_, p)| p)
}

fn run_rep(cell: &ExperimentCell, test: &TestConfig, cell_seed: u64, rep: usize) -> Result<Replication> {
    run_replication(cell, test, replication_seed(cell_seed, rep))
}

/// Every replication of a cell in order, as [`run_grid`] would run them.
pub fn replications(cell: &ExperimentCell, test: &TestConfig, cell_seed: u64) -> Vec<Result<Replication>> {
    (0..cell.reps)
        .into_par_iter()
        .map(|r| run_rep(cell, test, cell_seed, r))
        .collect()
}

/// Run all replications of one cell seeded by `base_seed`.
pub fn run_cell(cell: &ExperimentCell, test: &TestConfig, base_seed: u64) -> Result<CellResult> {
    cell.validate()?;
    test.validate()?;
    let start = Instant::now();
    let reps = replications(cell, test, base_seed);
    let mut result = tally(cell, base_seed, &reps);
    result.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Every replication of every cell as one parallel job list. Each cell is
/// seeded from its own parameters, so reordering the grid changes nothing.
/// `progress` is called with (finished, total) replication counts.
pub fn run_grid(
    cells: &[ExperimentCell],
    test: &TestConfig,
    base_seed: u64,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<Vec<CellResult>> {
    if cells.is_empty() {
        return Err(Error::EmptyGrid);
    }
    test.validate()?;
    for c in cells {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..c.reps).map(move |r| (ci, r)))
        .collect();
    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let finished: Vec<(Result<Replication>, f64)> = jobs
        .par_iter()
        .map(|&(ci, r)| {
            let t0 = Instant::now();
            let cell = &cells[ci];
            let out = run_rep(cell, test, cell.seed(base_seed), r);
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if let Some(cb) = progress {
                cb(n, total);
            }
            (out, t0.elapsed().as_secs_f64())
        })
        .collect();

    let mut results = Vec::with_capacity(cells.len());
    let mut it = finished.into_iter();
    for cell in cells {
        let chunk: Vec<(Result<Replication>, f64)> = it.by_ref().take(cell.reps).collect();
        let busy: f64 = chunk.iter().map(|(_, t)| t).sum();
        let reps: Vec<Result<Replication>> = chunk.into_iter().map(|(r, _)| r).collect();
        let mut res = tally(cell, cell.seed(base_seed), &reps);
        // Summed replication time; cells overlap in wall-clock terms.
        res.wall_time_secs = busy;
        results.push(res);
    }
    Ok(results)
}
