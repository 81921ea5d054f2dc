//! Comparison methods that keep every graph.

use crate::cv::{CrossValidator, CvMetric};
use crate::dual::{optimize_weights, DualConfig};
use crate::error::Result;
use crate::graph::{LabelVector, MultiGraph};
use crate::params::PenaltyScheme;
use crate::search::GraphSet;
use crate::solver::estimate_labels;

/// Label estimate plus the length-`m` weights that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodFit {
    pub estimate: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Every graph weighted `1/m`.
pub fn baseline_equal_weights(
    graph: &MultiGraph,
    labels: &LabelVector,
    penalty: &[f64],
) -> Result<MethodFit> {
    let m = graph.m();
    let weights = vec![1.0 / m as f64; m];
    let estimate = estimate_labels(penalty, &weights, &graph.laplacians(), labels)?;
    Ok(MethodFit { estimate, weights })
}

/// Weights proportional to each graph's own cross-validated score
/// (single-graph regularization with unit weight). Falls back to equal
/// weights if every score is zero.
pub fn baseline_perf_weights(
    graph: &MultiGraph,
    labels: &LabelVector,
    penalty: PenaltyScheme,
    folds: usize,
    repeats: usize,
    seed: u64,
    metric: CvMetric,
) -> Result<MethodFit> {
    let cv = CrossValidator::repeated(graph, labels, folds, repeats, seed, penalty)?.with_metric(metric);
    let scores = (0..graph.m())
        .map(|k| cv.score_with_weights(&GraphSet::new(vec![k])?, &[1.0]))
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = scores.iter().sum();
    let weights = if total > 0.0 {
        scores.iter().map(|s| s / total).collect()
    } else {
        vec![1.0 / graph.m() as f64; graph.m()]
    };
    let estimate = estimate_labels(&penalty.diagonal(labels)?, &weights, &graph.laplacians(), labels)?;
    Ok(MethodFit { estimate, weights })
}

/// One dual solve over all graphs; the weights are used as-is.
pub fn baseline_tss(
    graph: &MultiGraph,
    labels: &LabelVector,
    penalty: &[f64],
    cfg: &DualConfig,
) -> Result<MethodFit> {
    let fit = optimize_weights(&graph.laplacians(), labels, penalty, cfg)?;
    Ok(MethodFit {
        estimate: fit.estimate,
        weights: fit.weights.into_values(),
    })
}
