use elmdoc_core::dataset::{make_partitions, DEFAULT_REPETITIONS, DEFAULT_SIZES};
use elmdoc_core::evaluation::{emit_report, parse_json_report, run_grid, EvalError, CSV_COLUMNS};
use elmdoc_core::synthetic::corner_blobs;
use elmdoc_core::{ElmConfig, GridReport, LabeledFeatureSet, ReportFormat};

fn small_config() -> ElmConfig {
    ElmConfig {
        hidden: 20,
        seed: 5,
        ..ElmConfig::default()
    }
}

fn default_grid(data: &LabeledFeatureSet, repeats: usize) -> GridReport {
    let plan = make_partitions(
        data.labels(),
        data.class_names(),
        &DEFAULT_SIZES,
        DEFAULT_REPETITIONS,
        1,
    )
    .unwrap();
    run_grid(data, &plan, &small_config(), repeats).unwrap()
}

fn strip_timing(mut r: GridReport) -> GridReport {
    for c in &mut r.cells {
        c.train_seconds = 0.0;
        c.predict_seconds = 0.0;
    }
    r.total_train_seconds = 0.0;
    r.total_predict_seconds = 0.0;
    r
}

#[test]
fn default_grid_cells_and_aggregates() {
    let data = corner_blobs(10, 10, 110, 5.0, 3);
    let report = default_grid(&data, 2);
    assert_eq!(report.cells.len(), 100);
    assert_eq!(report.sizes.len(), 10);
    for cell in &report.cells {
        assert_eq!(cell.n_train, cell.size * 10);
        assert_eq!(cell.n_test, 1100 - cell.size * 10);
        assert_eq!(cell.elm_accuracies.len(), 2);
        assert_eq!(cell.confusion.total(), (cell.n_test * 2) as u64);
        let pooled = cell.confusion.accuracy().unwrap();
        assert!((pooled - cell.accuracy).abs() < 1e-12);
    }
    for agg in &report.sizes {
        assert_eq!(agg.reps, 10);
        assert!(agg.min <= agg.median && agg.median <= agg.max);
        assert!(agg.min <= agg.mean && agg.mean <= agg.max);
    }
    let largest = report.confusion_for_size(100).unwrap();
    assert_eq!(largest.total(), 10 * 100 * 2);
}

#[test]
fn grid_is_reproducible() {
    let data = corner_blobs(3, 4, 40, 3.0, 9);
    let plan = make_partitions(data.labels(), data.class_names(), &[5, 10], 3, 8).unwrap();
    let a = run_grid(&data, &plan, &small_config(), 2).unwrap();
    let b = run_grid(&data, &plan, &small_config(), 2).unwrap();
    assert_eq!(strip_timing(a), strip_timing(b));
}

#[test]
fn degenerate_grid_runs() {
    let data = corner_blobs(2, 2, 2, 4.0, 1);
    let plan = make_partitions(data.labels(), data.class_names(), &[1], 1, 0).unwrap();
    let report = run_grid(&data, &plan, &small_config(), 1).unwrap();
    assert_eq!(report.cells.len(), 1);
    assert_eq!(report.cells[0].n_test, 2);
    let agg = &report.sizes[0];
    assert_eq!(agg.stddev, 0.0);
    assert_eq!(agg.mean, agg.median);
}

#[test]
fn empty_test_split_is_reported_with_coordinates() {
    let data = corner_blobs(2, 2, 5, 4.0, 1);
    let plan = make_partitions(data.labels(), data.class_names(), &[2, 5], 1, 0).unwrap();
    match run_grid(&data, &plan, &small_config(), 1) {
        Err(EvalError::Cell {
            size: 5, rep: 0, ..
        }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn zero_repeats_rejected() {
    let data = corner_blobs(2, 2, 5, 4.0, 1);
    let plan = make_partitions(data.labels(), data.class_names(), &[2], 1, 0).unwrap();
    assert!(matches!(
        run_grid(&data, &plan, &small_config(), 0),
        Err(EvalError::InvalidConfig(_))
    ));
}

#[test]
fn reports_round_trip_and_have_expected_rows() {
    let data = corner_blobs(3, 4, 40, 3.0, 9);
    let plan = make_partitions(data.labels(), data.class_names(), &[5, 10, 20], 4, 8).unwrap();
    let report = run_grid(&data, &plan, &small_config(), 1).unwrap();

    let json = emit_report(&report, ReportFormat::Json);
    assert_eq!(parse_json_report(&json).unwrap(), report);

    let csv = emit_report(&report, ReportFormat::Csv);
    let mut reader = csv::Reader::from_reader(csv.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        CSV_COLUMNS
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12 + 3);
    assert_eq!(rows.iter().filter(|r| &r[0] == "cell").count(), 12);
    let agg: Vec<_> = rows.iter().filter(|r| &r[0] == "aggregate").collect();
    assert_eq!(agg.len(), 3);
    let mean: f64 = agg[0][6].parse().unwrap();
    assert_eq!(mean, report.sizes[0].mean);
}

#[test]
fn documented_example_reports_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples");
    let report = parse_json_report(&std::fs::read(dir.join("toy-report.json")).unwrap()).unwrap();
    assert_eq!(report.cells.len(), 4);
    for cell in &report.cells {
        assert_eq!(
            cell.confusion.total(),
            (cell.n_test * report.elm_repeats) as u64
        );
    }
    let csv = std::fs::read(dir.join("toy-report.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        CSV_COLUMNS
    );
    assert_eq!(
        reader.records().count(),
        report.cells.len() + report.sizes.len()
    );
}
