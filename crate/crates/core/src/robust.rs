//! Robust classification: the annealed graph-set search driven by
//! cross-validated AP on the labeled nodes.

use crate::cv::{CrossValidator, HyperGrid};
use crate::dual::{optimize_weights, DualConfig};
use crate::error::{Error, Result};
use crate::graph::{LabelVector, Laplacian, MultiGraph};
use crate::params::PenaltyScheme;
use crate::search::{anneal, CandidateEvaluator, CandidateFit, GraphSet, SearchConfig, SearchRecord};

/// Two large folds give held-out sets big enough that AP rarely saturates
/// on small label budgets; repeats average out the split.
pub const DEFAULT_FOLDS: usize = 2;
pub const DEFAULT_CV_REPEATS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustConfig {
    pub penalty: PenaltyScheme,
    pub dual: DualConfig,
    pub folds: usize,
    /// Independent fold partitions averaged into each score.
    pub cv_repeats: usize,
    /// Seed for the fold assignment shared by every candidate set.
    pub cv_seed: u64,
    pub search: SearchConfig,
}

impl Default for RobustConfig {
    fn default() -> Self {
        RobustConfig {
            penalty: PenaltyScheme::default(),
            dual: DualConfig::default(),
            folds: DEFAULT_FOLDS,
            cv_repeats: DEFAULT_CV_REPEATS,
            cv_seed: 0,
            search: SearchConfig::default(),
        }
    }
}

/// Scores sets by per-fold weight optimization and fits them on all labels.
pub struct CvEvaluator<'a> {
    graph: &'a MultiGraph,
    labels: &'a LabelVector,
    penalty: Vec<f64>,
    cv: CrossValidator<'a>,
    dual: DualConfig,
}

impl<'a> CvEvaluator<'a> {
    pub fn new(graph: &'a MultiGraph, labels: &'a LabelVector, cfg: &RobustConfig) -> Result<Self> {
        labels.require_both_classes()?;
        cfg.dual.validate()?;
        let cv = CrossValidator::repeated(graph, labels, cfg.folds, cfg.cv_repeats, cfg.cv_seed, cfg.penalty)?;
        Ok(CvEvaluator {
            graph,
            labels,
            penalty: cfg.penalty.diagonal(labels)?,
            cv,
            dual: cfg.dual,
        })
    }

    pub fn cross_validator(&self) -> &CrossValidator<'a> {
        &self.cv
    }

    fn laplacians(&self, set: &GraphSet) -> Vec<&'a Laplacian> {
        set.indices()
            .iter()
            .map(|&k| self.graph.view(k).laplacian())
            .collect()
    }
}

impl CandidateEvaluator for CvEvaluator<'_> {
    fn score(&self, set: &GraphSet) -> Result<f64> {
        self.cv.score_optimized(set, &self.dual)
    }

    fn fit(&self, set: &GraphSet) -> Result<CandidateFit> {
        let laps = self.laplacians(set);
        let fit = optimize_weights(&laps, self.labels, &self.penalty, &self.dual)?;
        Ok(CandidateFit {
            weights: fit.weights.into_values(),
            estimate: fit.estimate,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustSolution {
    pub estimate: Vec<f64>,
    pub set: GraphSet,
    /// Length-`m` weights; views outside `set` get 0.
    pub weights: Vec<f64>,
    pub score: f64,
    pub records: Vec<SearchRecord>,
}

/// Searches graph subsets for the best cross-validated solution and returns
/// its label estimate, graph-set, weights and the full search log.
pub fn robust_multi_sc(
    graph: &MultiGraph,
    labels: &LabelVector,
    cfg: &RobustConfig,
) -> Result<RobustSolution> {
    let evaluator = CvEvaluator::new(graph, labels, cfg)?;
    let outcome = anneal(graph.m(), &evaluator, &cfg.search)?;
    Ok(RobustSolution {
        weights: outcome.full_weights(graph.m()),
        estimate: outcome.best_estimate,
        set: outcome.best_set,
        score: outcome.best_score,
        records: outcome.records,
    })
}

/// Runs the search once per `(c, c0)` grid point and keeps the run with the
/// highest best score; ties go to the earlier grid point (c-major order).
/// Returns the winning solution and the dual settings that produced it.
pub fn robust_multi_sc_grid(
    graph: &MultiGraph,
    labels: &LabelVector,
    cfg: &RobustConfig,
    grid: &HyperGrid,
) -> Result<(RobustSolution, DualConfig)> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyper-parameter grid".into()));
    }
    let mut best: Option<(RobustSolution, DualConfig)> = None;
    for &c in &grid.c {
        for &c0 in &grid.c0 {
            let dual = DualConfig { c, c0, ..cfg.dual };
            let run = robust_multi_sc(graph, labels, &RobustConfig { dual, ..*cfg })?;
            if best.as_ref().is_none_or(|(b, _)| run.score > b.score) {
                best = Some((run, dual));
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}
