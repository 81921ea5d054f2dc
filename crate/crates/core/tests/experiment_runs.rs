use robustmsc::cv::HyperGrid;
use robustmsc::experiment::{
    classify, label_sweep, noise_test, run_classify, ExperimentConfig, Method, NoiseGrid, ResultsTable,
    TemperatureSetting,
};
use robustmsc::graph::{Adjacency, LabelVector, MultiGraph};
use robustmsc::io::{write_labels, write_manifest};
use robustmsc::noise::{Intensity, NoiseModel};
use robustmsc::synthetic::{generate, SyntheticSpec};

fn small_config(methods: &[Method], repeats: usize) -> ExperimentConfig {
    ExperimentConfig {
        methods: methods.to_vec(),
        repeats,
        folds: 2,
        cv_repeats: 4,
        temperature: TemperatureSetting::Fixed(0.6),
        hyper_grid: HyperGrid { c: vec![0.01, 1.0], c0: vec![1.0] },
        ..ExperimentConfig::default()
    }
}

fn two_cliques(n: usize) -> (MultiGraph, LabelVector) {
    let half = n / 2;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if (i < half) == (j < half) {
                edges.push((i, j, 1.0));
            }
        }
    }
    let truth = LabelVector::new((0..n).map(|i| if i < half { 1 } else { -1 }).collect()).unwrap();
    (MultiGraph::new(vec![Adjacency::from_edges(n, edges).unwrap()]).unwrap(), truth)
}

#[test]
fn equal_weights_on_two_cliques_is_perfect() {
    let (g, truth) = two_cliques(20);
    let out = classify(&small_config(&[Method::Eql], 1), &g, &truth).unwrap();
    assert_eq!(out.table.rows.len(), 1);
    assert_eq!(out.table.rows[0].ap, Some(1.0));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let d = generate(&SyntheticSpec::figure_one(5)).unwrap();
    let data = tempfile::tempdir().unwrap();
    let manifest = write_manifest(data.path(), &d.graph).unwrap();
    let labels = data.path().join("labels.txt");
    write_labels(&labels, &d.truth).unwrap();
    let mut read = Vec::new();
    for run in 0..2 {
        let mut cfg = small_config(&Method::ALL, 2);
        cfg.manifest_path = Some(manifest.clone());
        cfg.labels_path = Some(labels.clone());
        cfg.workers = run + 1;
        cfg.output_dir = data.path().join(format!("out{run}"));
        run_classify(&cfg).unwrap();
        let mut files = Vec::new();
        for name in ["results.csv", "summary.csv", "weights.csv", "removal_log.csv", "scores.csv", "selection.csv"] {
            files.push(std::fs::read(cfg.output_dir.join(name)).unwrap());
        }
        read.push(files);
    }
    assert_eq!(read[0], read[1]);
}

#[test]
fn robust_weights_drop_intrusive_views() {
    let d = generate(&SyntheticSpec::figure_one(0)).unwrap();
    let out = classify(&small_config(&[Method::Robust], 1), &d.graph, &d.truth).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write(dir.path()).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("weights.csv")).unwrap();
    let rows: Vec<robustmsc::experiment::WeightRow> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    for r in rows.iter().filter(|r| d.intrusive.contains(&r.graph_id)) {
        assert_eq!(r.weight, 0.0);
    }
    assert!(!out.removals.is_empty());
    assert!(out.table.rows[0].ap.unwrap() > 0.9);
}

#[test]
fn single_noise_cell() {
    let d = generate(&SyntheticSpec::figure_one(1).informative_only()).unwrap();
    let mut cfg = small_config(&[Method::Eql, Method::Tss], 1);
    cfg.noise_grid = NoiseGrid { models: vec![NoiseModel::Rewire], intensities: vec![Intensity::High], counts: vec![2] };
    let table = noise_test(&cfg, &d.graph, &d.truth).unwrap();
    // Clean cell plus the single noisy one, per method.
    assert_eq!(table.rows.len(), 4);
    let noisy: Vec<_> = table.rows.iter().filter(|r| r.noise_model != "none").collect();
    assert_eq!(noisy.len(), 2);
    assert!(noisy.iter().all(|r| r.injected == 2 && r.ap.is_some()));
    let hashes: std::collections::HashSet<_> = table.rows.iter().map(|r| r.sample_hash.clone()).collect();
    assert_eq!(hashes.len(), 1);
}

#[test]
fn robust_beats_tss_under_adversarial_noise() {
    let d = generate(&SyntheticSpec::figure_one(2).informative_only()).unwrap();
    let mut cfg = small_config(&[Method::Robust, Method::Tss], 10);
    cfg.cv_repeats = 8;
    cfg.noise_grid = NoiseGrid { models: vec![NoiseModel::Adversarial], intensities: vec![Intensity::High], counts: vec![6] };
    let table = noise_test(&cfg, &d.graph, &d.truth).unwrap();
    let robust = table.mean_ap("robust", "AV", "high", 6).unwrap();
    let tss = table.mean_ap("tss", "AV", "high", 6).unwrap();
    assert!(robust > tss, "robust {robust:.4} vs tss {tss:.4}");
}

#[test]
fn label_sweep_trend() {
    let d = generate(&SyntheticSpec::figure_one(3).informative_only()).unwrap();
    let mut cfg = small_config(&[Method::Eql], 3);
    cfg.fractions = vec![0.05, 0.3, 0.9];
    let table = label_sweep(&cfg, &d.graph, &d.truth).unwrap();
    let mean = |f: f64| {
        let v: Vec<f64> = table.rows.iter().filter(|r| r.label_fraction == f).filter_map(|r| r.ap).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(0.9) > 0.95);
    assert!(mean(0.9) >= mean(0.3) - 0.02);
    cfg.fractions.clear();
    assert!(label_sweep(&cfg, &d.graph, &d.truth).is_err());
    cfg.fractions = vec![1.5];
    assert!(label_sweep(&cfg, &d.graph, &d.truth).is_err());
}

#[test]
fn results_round_trip_through_csv() {
    let (g, truth) = two_cliques(16);
    let mut table = classify(&small_config(&[Method::Eql, Method::Tss], 2), &g, &truth).unwrap().table;
    table.sort();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    table.write_csv(&p).unwrap();
    assert_eq!(ResultsTable::read_csv(&p).unwrap(), table);
}

#[test]
fn config_round_trip() {
    let mut cfg = small_config(&[Method::Robust, Method::Perf], 3);
    cfg.set("temperature", "calibrated:-0.2,0.05,4,8").unwrap();
    cfg.set("noise", "AV,high,6,1").unwrap();
    cfg.set("max_removed", "3").unwrap();
    let back = ExperimentConfig::from_kv_str(&cfg.to_kv_string()).unwrap();
    assert_eq!(back, cfg);
    assert!(cfg.set("no_such_key", "1").is_err());
    assert!(ExperimentConfig::from_kv_str("repeats = 0").and_then(|c| c.validate()).is_err());
}
