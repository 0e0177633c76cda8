use textsplit::report::{emit_report, BenchReport, ReportFormat};
use textsplit::runner::{run_cell, run_grid, thread_pool};
use textsplit_core::entropy_test::TestConfig;
use textsplit_core::experiment::ExperimentCell;
use textsplit_core::multisplit::Method;
use textsplit_core::nnlm::NnlmConfig;
use textsplit_core::simgen::{CovType, SimConfig};

fn test_cfg() -> TestConfig {
    TestConfig {
        nnlm: NnlmConfig {
            n_ctx: 2,
            embed_dim: 4,
            hidden_widths: vec![4],
            epochs: 1,
            ..NnlmConfig::default()
        },
        ..TestConfig::default()
    }
}

fn cell(delta: f64, cov: CovType, reps: usize) -> ExperimentCell {
    ExperimentCell {
        sim: SimConfig {
            v: 10,
            t_len: 6,
            n_docs: 10,
            cov_type: cov,
            ..SimConfig::default()
        }
        .with_delta(delta),
        methods: Method::ALL.to_vec(),
        reps,
        m: 2,
        alpha: 0.05,
        mpt_beta: 0.05,
    }
}

fn strip_time(mut v: Vec<textsplit_core::experiment::CellResult>) -> Vec<textsplit_core::experiment::CellResult> {
    v.iter_mut().for_each(|c| c.wall_time_secs = 0.0);
    v
}

#[test]
fn grid_results_ignore_order_and_thread_count() {
    let cells = vec![cell(0.0, CovType::Ar, 3), cell(0.4, CovType::Cs, 3), cell(0.2, CovType::Ar, 2)];
    let one = thread_pool(Some(1)).unwrap().install(|| run_grid(&cells, &test_cfg(), 11, None)).unwrap();
    let four = thread_pool(Some(4)).unwrap().install(|| run_grid(&cells, &test_cfg(), 11, None)).unwrap();
    assert_eq!(strip_time(one.clone()), strip_time(four));

    let mut reversed = cells.clone();
    reversed.reverse();
    let mut back = strip_time(run_grid(&reversed, &test_cfg(), 11, None).unwrap());
    back.reverse();
    assert_eq!(strip_time(one), back);
}

#[test]
fn one_replication_gives_a_degenerate_rate() {
    let r = run_cell(&cell(0.2, CovType::Ar, 1), &test_cfg(), 4).unwrap();
    assert_eq!(r.reps + r.failures, 1);
    for e in r.rates.values() {
        assert!(e.rate == 0.0 || e.rate == 1.0);
        assert_eq!(e.se, 0.0);
    }
}

#[test]
fn report_formats() {
    let results = run_grid(&[cell(0.4, CovType::Ar, 2)], &test_cfg(), 0, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("r.csv");
    emit_report(&results, &csv_path, ReportFormat::Csv, None, false).unwrap();
    let body = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(body.lines().count(), 2);
    assert!(body.lines().next().unwrap().starts_with("cov,s,v,t,n,delta"));

    let json_path = dir.path().join("r.json");
    emit_report(&results, &json_path, ReportFormat::Json, None, false).unwrap();
    let parsed: BenchReport = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(parsed, BenchReport::new(&results, None, false));
    assert_eq!(parsed.cells[0].params.delta, 0.4);

    let err = emit_report(&results, &dir.path().join("missing/dir/r.csv"), ReportFormat::Csv, None, false);
    assert!(err.is_err());
    assert!(emit_report(&[], &csv_path, ReportFormat::Csv, None, false).is_err());
}
