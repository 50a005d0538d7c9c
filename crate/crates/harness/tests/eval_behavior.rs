//! Evaluation-protocol behavior on real (tiny) models and datasets.

use std::path::PathBuf;

use iso3d_harness::{
    compare, drop_csv_column, evaluate, parse_curve_csv, write_curve_csv, write_inputs_csv,
    Method, RunConfig,
};
use iso3d_nn::{accuracy, dataset_inputs, train, ModelSpec, TrainConfig};
use iso3d_shapes::{synth_dataset, Dataset};

fn tiny_dataset() -> Dataset {
    synth_dataset(6, 4, 24, 0.02, 41).unwrap()
}

fn tiny_model(ds: &Dataset, seed: u64) -> iso3d_nn::Model {
    let spec = ModelSpec::desk_point(ds.classes.len());
    let cfg = TrainConfig { epochs: 6, batch_size: 6, learning_rate: 0.08, seed };
    train(&spec, ds, &cfg).unwrap().0
}

fn config(method: Method, sample: usize, seed: u64) -> RunConfig {
    RunConfig {
        model: PathBuf::from("tiny.w3dr"),
        dataset: PathBuf::from("tinydata"),
        sample_size: sample,
        method,
        goal: iso3d_attack::GoalKind::Untargeted,
        checkpoints: vec![0, 25, 50, 75, 95],
        time_budget_secs: None,
        query_budget: Some(200),
        seed,
        out_dir: PathBuf::from("out"),
    }
}

#[test]
fn checkpoint_zero_accuracy_is_clean_accuracy() {
    let ds = tiny_dataset();
    let model = tiny_model(&ds, 7);
    let sample = ds.test.len();
    let curve = evaluate(&model, &ds, &config(Method::Iso, sample, 3)).unwrap();

    let inputs = dataset_inputs(model.spec(), &ds.test).unwrap();
    let clean = accuracy(&model, &inputs).unwrap();
    let row0 = &curve.checkpoints[0];
    assert_eq!(row0.checkpoint_pct, 0);
    assert_eq!(row0.n_errors, 0);
    assert_eq!(row0.n_evaluated, sample);
    assert!((row0.accuracy - clean).abs() < 1e-12, "{} vs {clean}", row0.accuracy);
}

#[test]
fn accuracy_never_increases_with_occlusion_allowance() {
    let ds = tiny_dataset();
    let model = tiny_model(&ds, 7);
    for method in [Method::Iso, Method::IsoBlackbox, Method::Random] {
        let curve = evaluate(&model, &ds, &config(method, ds.test.len(), 3)).unwrap();
        let accs: Vec<f64> = curve.checkpoints.iter().map(|c| c.accuracy).collect();
        for w in accs.windows(2) {
            assert!(w[0] >= w[1], "{method:?}: {accs:?}");
        }
    }
}

#[test]
fn reruns_are_identical_apart_from_timings() {
    let ds = tiny_dataset();
    let model = tiny_model(&ds, 7);
    let cfg = config(Method::IsoBlackbox, 10, 99);

    let mut csvs = Vec::new();
    for _ in 0..2 {
        let curve = evaluate(&model, &ds, &cfg).unwrap();
        let mut curve_csv = Vec::new();
        write_curve_csv(&mut curve_csv, &curve).unwrap();
        let mut inputs_csv = Vec::new();
        write_inputs_csv(&mut inputs_csv, &curve).unwrap();
        csvs.push((
            drop_csv_column(&String::from_utf8(curve_csv).unwrap(), "mean_seconds"),
            drop_csv_column(&String::from_utf8(inputs_csv).unwrap(), "seconds"),
        ));
    }
    assert_eq!(csvs[0].0, csvs[1].0);
    assert_eq!(csvs[0].1, csvs[1].1);
}

#[test]
fn per_input_accounting_is_complete() {
    let ds = tiny_dataset();
    let model = tiny_model(&ds, 7);
    let cfg = config(Method::Iso, 12, 5);
    let curve = evaluate(&model, &ds, &cfg).unwrap();

    assert_eq!(curve.per_input.len(), 12);
    let indices: Vec<usize> = curve.per_input.iter().map(|p| p.dataset_index).collect();
    let mut sorted = indices.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(indices, sorted, "per-input rows sorted by dataset index, no repeats");

    for row in &curve.checkpoints {
        assert_eq!(row.n_evaluated + row.n_errors, 12);
    }
    for p in &curve.per_input {
        assert!(p.error.is_none());
        assert!(p.queries > 0);
        // a flip fraction exists exactly when an occlusion size does
        assert_eq!(p.occlusion_size.is_some(), p.flip_fraction.is_some());
        if let (Some(size), Some(frac)) = (p.occlusion_size, p.flip_fraction) {
            assert!((frac - size as f64 / p.element_count as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn curve_csv_round_trips() {
    let ds = tiny_dataset();
    let model = tiny_model(&ds, 7);
    let curve = evaluate(&model, &ds, &config(Method::Random, 8, 21)).unwrap();

    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &curve).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let records = parse_curve_csv(&text).unwrap();
    assert_eq!(records.len(), curve.checkpoints.len());
    for (rec, row) in records.iter().zip(&curve.checkpoints) {
        assert_eq!(rec.model, curve.model);
        assert_eq!(rec.dataset, curve.dataset);
        assert_eq!(rec.method, "random");
        assert_eq!(rec.checkpoint_pct, row.checkpoint_pct);
        assert!((rec.accuracy - row.accuracy).abs() < 1e-9);
        assert_eq!(rec.n_evaluated, row.n_evaluated);
        assert_eq!(rec.n_errors, row.n_errors);
    }
}

#[test]
fn comparing_a_curve_with_itself_gives_zero_gap() {
    let ds = tiny_dataset();
    let model = tiny_model(&ds, 7);
    let curve = evaluate(&model, &ds, &config(Method::Iso, 10, 2)).unwrap();
    let report = compare(&curve, &curve).unwrap();
    assert_eq!(report.paired.len(), 10);
    assert!(report.deltas.iter().all(|&d| d == 0.0));
    assert_eq!(report.mean_gap, 0.0);
}

#[test]
fn comparing_mismatched_samples_is_refused() {
    let ds = tiny_dataset();
    let model = tiny_model(&ds, 7);
    let a = evaluate(&model, &ds, &config(Method::Iso, 10, 2)).unwrap();
    let b = evaluate(&model, &ds, &config(Method::Random, 10, 3)).unwrap();
    // different seeds sample different test inputs, so pairing is impossible
    let err = compare(&a, &b).unwrap_err();
    assert!(matches!(err, iso3d_harness::Error::NotComparable(_)), "{err}");
}

#[test]
fn whitebox_and_blackbox_methods_agree_per_input() {
    let ds = tiny_dataset();
    let model = tiny_model(&ds, 7);
    // generous budget so neither mode is truncated mid-run
    let mut cfg = config(Method::Iso, 10, 13);
    cfg.query_budget = Some(60_000);
    let white = evaluate(&model, &ds, &cfg).unwrap();
    cfg.method = Method::IsoBlackbox;
    let black = evaluate(&model, &ds, &cfg).unwrap();

    for (w, b) in white.per_input.iter().zip(&black.per_input) {
        assert_eq!(w.dataset_index, b.dataset_index);
        assert_eq!(w.occlusion_size, b.occlusion_size, "input {}", w.dataset_index);
        assert_eq!(w.flip_fraction, b.flip_fraction);
    }
}
