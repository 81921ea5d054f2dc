mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use robustmsc::baselines::{baseline_equal_weights, baseline_perf_weights, baseline_tss};
use robustmsc::cv::CvMetric;
use robustmsc::dual::DualConfig;
use robustmsc::graph::{Adjacency, LabelVector, MultiGraph};
use robustmsc::metrics::{average_precision, precision_recall_curve};
use robustmsc::noise::{edge_class_counts, gen_adversarial, gen_erdos_renyi, inject, rewire_graph, Intensity, NoiseModel, NoiseSpec};
use robustmsc::params::{class_penalty_matrix, temperature_range, PenaltyParams, PenaltyScheme};
use robustmsc::sampling::{sample_labeled_set, stratified_folds};
use robustmsc::synthetic::{generate, SyntheticSpec};

fn halves(n: usize) -> LabelVector {
    LabelVector::new((0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()).unwrap()
}

#[test]
fn erdos_renyi_counts() {
    assert_eq!(gen_erdos_renyi(10, 1.0, 0).unwrap().edge_count(), 45);
    let a = gen_erdos_renyi(100, 0.05, 9).unwrap();
    assert_eq!(a.edges().collect::<Vec<_>>(), gen_erdos_renyi(100, 0.05, 9).unwrap().edges().collect::<Vec<_>>());
    let sigma = (4950.0f64 * 0.05 * 0.95).sqrt();
    for seed in 0..50 {
        let e = gen_erdos_renyi(100, 0.05, seed).unwrap().edge_count() as f64;
        assert!((e - 247.5).abs() <= 4.0 * sigma, "seed {seed}: {e} edges");
    }
    assert!(gen_erdos_renyi(10, 0.0, 0).is_err());
}

#[test]
fn rewire_counts() {
    let truth = halves(100);
    let base = gen_erdos_renyi(100, 0.1, 3).unwrap();
    assert_eq!(rewire_graph(&base, &truth, 0.0, 1).unwrap(), base);
    let (within, cross) = edge_class_counts(&base, &truth);
    let out = rewire_graph(&base, &truth, 0.6, 1).unwrap();
    assert_eq!(out.edge_count(), base.edge_count());
    let moved = (0.6 * within as f64).floor() as usize;
    assert_eq!(edge_class_counts(&out, &truth), (within - moved, cross + moved));
    let all = rewire_graph(&base, &truth, 1.0, 1).unwrap();
    assert_eq!(edge_class_counts(&all, &truth).0, 0);
    assert!(rewire_graph(&Adjacency::empty(100), &truth, 0.5, 1).is_err());
}

#[test]
fn adversarial_counts() {
    let truth = halves(100);
    let a = gen_adversarial(100, &truth, 0.8, 500, 4).unwrap();
    assert_eq!(a.edge_count(), 500);
    assert_eq!(edge_class_counts(&a, &truth), (100, 400));
    assert_eq!(edge_class_counts(&gen_adversarial(100, &truth, 1.0, 300, 4).unwrap(), &truth), (0, 300));
    assert_eq!(a, gen_adversarial(100, &truth, 0.8, 500, 4).unwrap());
    assert!(gen_adversarial(6, &halves(6), 1.0, 10, 0).is_err());
}

#[test]
fn injection_appends_views() {
    let mut r = rng(41);
    let g = random_multigraph(&mut r, 50, 4);
    let truth = halves(50);
    let spec = |model, count| NoiseSpec { model, intensity: Intensity::High, count, seed: 2 };
    assert_eq!(inject(&g, &spec(NoiseModel::Adversarial, 0), &truth).unwrap().m(), 4);
    for model in NoiseModel::ALL {
        let out = inject(&g, &spec(model, 6), &truth).unwrap();
        assert_eq!(out.m(), 10);
        for k in 0..4 {
            assert_eq!(out.view(k).adjacency(), g.view(k).adjacency());
        }
        let again = inject(&g, &spec(model, 6), &truth).unwrap();
        for k in 4..10 {
            assert_eq!(out.view(k).adjacency(), again.view(k).adjacency());
            let d = out.view(k).adjacency().to_dense();
            for i in 0..50 {
                assert_eq!(d[i][i], 0.0);
                for j in 0..50 {
                    assert_eq!(d[i][j], d[j][i]);
                    assert!(d[i][j] >= 0.0);
                }
            }
        }
    }
    let mean_edges = (g.total_edges() as f64 / 4.0).round() as usize;
    let av = inject(&g, &spec(NoiseModel::Adversarial, 2), &truth).unwrap();
    assert_eq!(av.view(4).adjacency().edge_count(), mean_edges);
    let rw = inject(&g, &spec(NoiseModel::Rewire, 2), &truth).unwrap();
    assert_eq!(rw.view(5).adjacency().edge_count(), g.view(1).adjacency().edge_count());
}

#[test]
fn noise_levels() {
    let level = |model, intensity| NoiseSpec { model, intensity, count: 1, seed: 0 }.level();
    assert_eq!(level(NoiseModel::ErdosRenyi, Intensity::Low), 0.05);
    assert_eq!(level(NoiseModel::ErdosRenyi, Intensity::High), 0.5);
    assert_eq!(level(NoiseModel::Rewire, Intensity::Low), 0.6);
    assert_eq!(level(NoiseModel::Adversarial, Intensity::High), 0.8);
    assert_eq!("AV".parse::<NoiseModel>().unwrap(), NoiseModel::Adversarial);
    assert_eq!("high".parse::<Intensity>().unwrap(), Intensity::High);
    assert!("XX".parse::<NoiseModel>().is_err());
}

#[test]
fn synthetic_dataset_shape() {
    let d = generate(&SyntheticSpec::figure_one(3)).unwrap();
    assert_eq!((d.graph.n(), d.graph.m()), (100, 5));
    assert_eq!(d.truth.count(1), 30);
    assert_eq!(d.intrusive, vec![3, 4]);
    let (within, cross) = edge_class_counts(d.graph.view(4).adjacency(), &d.truth);
    assert!(cross > within);
    let clean = generate(&SyntheticSpec::figure_one(3).informative_only()).unwrap();
    assert_eq!(clean.graph.m(), 3);
    assert!(clean.intrusive.is_empty());
}

#[test]
fn sampling_rules() {
    let truth = LabelVector::new((0..1000).map(|i| if i % 4 == 0 { 1 } else { -1 }).collect()).unwrap();
    for seed in 0..10 {
        let s = sample_labeled_set(&truth, 0.05, seed).unwrap();
        assert_eq!(s.labeled_set().len(), 50);
        assert!(s.labeled_set().iter().all(|&i| s.get(i) == truth.get(i)));
    }
    assert_eq!(sample_labeled_set(&truth, 0.3, 7).unwrap(), sample_labeled_set(&truth, 0.3, 7).unwrap());
    assert_eq!(sample_labeled_set(&truth, 1.0, 7).unwrap(), truth);
    assert!(sample_labeled_set(&truth, 0.0, 7).is_err());
    let lonely = LabelVector::new([vec![1i8], vec![-1; 99]].concat()).unwrap();
    assert!(sample_labeled_set(&lonely, 0.01, 0).is_err());
}

#[test]
fn folds_are_stratified() {
    let truth = LabelVector::new((0..40).map(|i| if i % 4 == 0 { 1 } else { -1 }).collect()).unwrap();
    let folds = stratified_folds(&truth, 5, 3).unwrap();
    assert_eq!(folds.len(), 5);
    let mut all: Vec<usize> = folds.concat();
    all.sort();
    assert_eq!(all, (0..40).collect::<Vec<_>>());
    for f in &folds {
        assert_eq!(f.iter().filter(|&&i| truth.get(i) == 1).count(), 2);
    }
}

#[test]
fn penalty_examples() {
    let p = PenaltyParams::from_fraction(0.5, 0.7).unwrap();
    assert_eq!((p.c_plus, p.c_minus), (1.0, 1.0));
    let p = PenaltyParams::from_fraction(0.1, 0.7).unwrap();
    assert!((p.c_plus - 1.63).abs() < 1e-12 && (p.c_minus - 0.37).abs() < 1e-12);
    assert!(class_penalty_matrix(&LabelVector::unlabeled(4), 0.7).is_err());
    assert!(PenaltyParams::from_fraction(0.2, 1.0).is_err());
    assert_eq!(PenaltyScheme::Identity.diagonal(&halves(3)).unwrap(), vec![1.0; 3]);
}

#[test]
fn temperature_examples() {
    let t = temperature_range(-0.1, 0.01, 5, 10).unwrap();
    let b = 0.1 / 100f64.ln();
    assert!((b - 0.0217).abs() < 1e-4);
    assert!((t.lo - b.powf(0.2)).abs() < 1e-15 && (t.hi - b.powf(0.1)).abs() < 1e-15);
    assert!((t.lo - 0.4648).abs() < 1e-4 && (t.hi - 0.6818).abs() < 1e-4);
    let d = temperature_range(-0.1, 0.01, 7, 7).unwrap();
    assert_eq!(d.lo, d.hi);
    assert_eq!(d.sample(&mut rng(0)), d.lo);
    assert!(temperature_range(0.1, 0.01, 5, 10).is_err());
    assert!(temperature_range(-0.1, 1.5, 5, 10).is_err());
    assert!(temperature_range(-0.1, 0.01, 6, 5).is_err());
    let mut r = rng(1);
    for _ in 0..100 {
        let v = t.sample(&mut r);
        assert!(v >= t.lo && v <= t.hi);
    }
}

proptest! {
    #[test]
    fn penalty_invariants(f in 0.0f64..=1.0, s in 0.0f64..0.999) {
        let p = PenaltyParams::from_fraction(f, s).unwrap();
        prop_assert_eq!(p.c_u, 1.0);
        prop_assert!((p.c_plus + p.c_minus - 2.0).abs() < 1e-12);
        prop_assert!(p.c_plus > 0.0 && p.c_minus > 0.0);
    }

    #[test]
    fn temperature_invariants(d in -2.0f64..-1e-3, p in 1e-4f64..0.5, ml in 1usize..8, extra in 0usize..8) {
        let base = d / p.ln();
        prop_assume!(base < 1.0);
        let t = temperature_range(d, p, ml, ml + extra).unwrap();
        prop_assert!(t.lo > 0.0 && t.hi < 1.0 && t.lo <= t.hi);
    }

    #[test]
    fn ap_is_invariant_under_monotone_maps(seed in any::<u64>(), n in 2usize..40) {
        let mut r = rng(seed);
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let mut truth: Vec<i8> = (0..n).map(|_| if r.gen_bool(0.3) { 1 } else { -1 }).collect();
        truth[0] = 1;
        let ap = average_precision(&scores, &truth).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|s| (2.0 * s).exp() + 5.0).collect();
        prop_assert_eq!(ap, average_precision(&mapped, &truth).unwrap());
        prop_assert_eq!(ap.to_bits(), brute_force_ap(&scores, &truth).to_bits());
        prop_assert!(ap > 0.0 && ap <= 1.0);
    }
}

#[test]
fn metric_examples_and_errors() {
    assert_eq!(average_precision(&[0.9, 0.8, 0.7, 0.6], &[1, 1, -1, -1]).unwrap(), 1.0);
    assert!((average_precision(&[0.9, 0.8, 0.7, 0.6], &[1, -1, 1, -1]).unwrap() - 0.8333).abs() < 1e-4);
    assert_eq!(average_precision(&[0.9, 0.8, 0.7, 0.6], &[-1, -1, -1, 1]).unwrap(), 0.25);
    // Ties keep index order.
    assert_eq!(average_precision(&[0.5, 0.5], &[-1, 1]).unwrap(), 0.5);
    assert!(average_precision(&[0.1, 0.2], &[-1, -1]).is_err());
    assert!(average_precision(&[0.1], &[1, -1]).is_err());
    assert!(average_precision(&[f64::NAN], &[1]).is_err());
    let curve = precision_recall_curve(&[0.9, 0.8, 0.7, 0.6], &[1, -1, 1, -1]).unwrap();
    assert_eq!(curve.len(), 4);
    assert_eq!(curve.last().unwrap().recall, 1.0);
    assert_eq!(curve[1].precision, 0.5);
}

#[test]
fn equal_weights_baseline() {
    let mut r = rng(42);
    for _ in 0..10 {
        let n = r.gen_range(3..=20);
        let m = r.gen_range(1..=4);
        let g = random_multigraph(&mut r, n, m);
        let y = random_labels(&mut r, n);
        let c = class_penalty_matrix(&y, 0.7).unwrap();
        let fit = baseline_equal_weights(&g, &y, &c).unwrap();
        let oracle = dense_estimate(&g, &c, &vec![1.0 / m as f64; m], &y);
        for i in 0..n {
            assert!((fit.estimate[i] - oracle[i]).abs() < 1e-8);
        }
    }
    let one = random_multigraph(&mut r, 15, 1);
    let y = random_labels(&mut r, 15);
    let c = vec![1.0; 15];
    let single = baseline_equal_weights(&one, &y, &c).unwrap();
    let direct = robustmsc::solver::estimate_labels(&c, &[1.0], &one.laplacians(), &y).unwrap();
    assert_eq!(single.estimate, direct);
    let dup = MultiGraph::new(vec![one.view(0).adjacency().clone(); 3]).unwrap();
    let tripled = baseline_equal_weights(&dup, &y, &c).unwrap();
    for i in 0..15 {
        assert!((tripled.estimate[i] - direct[i]).abs() < 1e-12);
    }
}

#[test]
fn perf_weights_baseline() {
    let n = 40;
    let mut truth: Vec<i8> = (0..n).map(|i| if i < 16 { 1 } else { -1 }).collect();
    truth.shuffle(&mut rng(43));
    let truth = LabelVector::new(truth).unwrap();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if truth.get(i) == truth.get(j) {
                edges.push((i, j, 1.0));
            }
        }
    }
    let separating = Adjacency::from_edges(n, edges).unwrap();
    let labels = sample_labeled_set(&truth, 0.5, 1).unwrap();
    let g = MultiGraph::new(vec![separating.clone(), Adjacency::empty(n)]).unwrap();
    let fit = baseline_perf_weights(&g, &labels, PenaltyScheme::default(), 2, 2, 0, CvMetric::AveragePrecision).unwrap();
    assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(fit.weights[1] <= fit.weights[0]);

    let same = MultiGraph::new(vec![separating; 3]).unwrap();
    let fit = baseline_perf_weights(&same, &labels, PenaltyScheme::default(), 2, 2, 0, CvMetric::Accuracy).unwrap();
    assert!(fit.weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-12));
    let c = PenaltyScheme::default().diagonal(&labels).unwrap();
    let eql = baseline_equal_weights(&same, &labels, &c).unwrap();
    for i in 0..n {
        assert!((fit.estimate[i] - eql.estimate[i]).abs() < 1e-12);
    }
}

#[test]
fn tss_baseline() {
    let mut r = rng(44);
    let g = random_multigraph(&mut r, 20, 3);
    let y = random_labels(&mut r, 20);
    let c = class_penalty_matrix(&y, 0.7).unwrap();
    let cfg = DualConfig { c: 0.05, c0: 2.0, ..DualConfig::default() };
    let fit = baseline_tss(&g, &y, &c, &cfg).unwrap();
    assert!(fit.weights.iter().all(|w| (0.0..=2.0).contains(w)));

    // One view whose weight saturates at c0: TSS then equals Eql-Wght with
    // the same effective weight.
    let one = random_multigraph(&mut r, 12, 1);
    let y = random_labels(&mut r, 12);
    let c = vec![1.0; 12];
    let tss = baseline_tss(&one, &y, &c, &DualConfig { c: 1e-3, c0: 1.0, ..DualConfig::default() }).unwrap();
    if tss.weights[0] == 1.0 {
        let eql = baseline_equal_weights(&one, &y, &c).unwrap();
        for i in 0..12 {
            assert!((tss.estimate[i] - eql.estimate[i]).abs() < 1e-10);
        }
    }
}
