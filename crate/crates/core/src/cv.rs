//! Cross-validated scoring of graph-sets on the labeled nodes.

use crate::dual::{optimize_weights, DualConfig};
use crate::error::Result;
use crate::graph::{LabelVector, Laplacian, MultiGraph};
use crate::metrics::{accuracy, average_precision};
use crate::params::PenaltyScheme;
use crate::sampling::stratified_folds;
use crate::search::GraphSet;
use crate::solver::estimate_labels_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvMetric {
    #[default]
    AveragePrecision,
    Accuracy,
}

const REPEAT_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

struct Fold {
    held_out: Vec<usize>,
    truth: Vec<i8>,
    train: LabelVector,
    penalty: Vec<f64>,
}

/// Fixed stratified folds over one labeled set. Every graph-set scored by
/// the same validator sees the same folds, so scores are comparable.
pub struct CrossValidator<'a> {
    graph: &'a MultiGraph,
    folds: Vec<Fold>,
    metric: CvMetric,
    solver_tol: f64,
}

impl<'a> CrossValidator<'a> {
    pub fn new(
        graph: &'a MultiGraph,
        labels: &LabelVector,
        folds: usize,
        seed: u64,
        penalty: PenaltyScheme,
    ) -> Result<Self> {
        Self::repeated(graph, labels, folds, 1, seed, penalty)
    }

    /// `repeats` independent stratified partitions, each split into `folds`
    /// folds. The score is the mean over all `repeats * folds` folds.
    pub fn repeated(
        graph: &'a MultiGraph,
        labels: &LabelVector,
        folds: usize,
        repeats: usize,
        seed: u64,
        penalty: PenaltyScheme,
    ) -> Result<Self> {
        crate::graph::check_len(graph.n(), labels.len())?;
        if repeats == 0 {
            return Err(crate::error::Error::Config("need at least 1 CV repeat".into()));
        }
        let mut held = Vec::new();
        for r in 0..repeats as u64 {
            held.extend(stratified_folds(labels, folds, seed.wrapping_add(r.wrapping_mul(REPEAT_STRIDE)))?);
        }
        let folds = held
            .into_iter()
            .map(|held_out| {
                let train = labels.hide(&held_out);
                let penalty = penalty.diagonal(&train)?;
                let truth = held_out.iter().map(|&i| labels.get(i)).collect();
                Ok(Fold {
                    held_out,
                    truth,
                    train,
                    penalty,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CrossValidator {
            graph,
            folds,
            metric: CvMetric::AveragePrecision,
            solver_tol: crate::solver::DEFAULT_TOLERANCE,
        })
    }

    pub fn with_metric(mut self, metric: CvMetric) -> Self {
        self.metric = metric;
        self
    }

    pub fn fold_count(&self) -> usize {
        self.folds.len()
    }

    /// Held-out node lists, one per fold.
    pub fn folds(&self) -> impl Iterator<Item = &[usize]> {
        self.folds.iter().map(|f| f.held_out.as_slice())
    }

    fn laplacians(&self, set: &GraphSet) -> Vec<&'a Laplacian> {
        set.indices()
            .iter()
            .map(|&k| self.graph.view(k).laplacian())
            .collect()
    }

    fn fold_score(&self, fold: &Fold, estimate: &[f64]) -> Result<f64> {
        let scores: Vec<f64> = fold.held_out.iter().map(|&i| estimate[i]).collect();
        match self.metric {
            CvMetric::AveragePrecision => average_precision(&scores, &fold.truth),
            CvMetric::Accuracy => accuracy(&scores, &fold.truth),
        }
    }

    /// Mean held-out score when each fold optimizes its own weights.
    pub fn score_optimized(&self, set: &GraphSet, cfg: &DualConfig) -> Result<f64> {
        let laps = self.laplacians(set);
        let mut total = 0.0;
        for fold in &self.folds {
            let fit = optimize_weights(&laps, &fold.train, &fold.penalty, cfg)?;
            total += self.fold_score(fold, &fit.estimate)?;
        }
        Ok(total / self.folds.len() as f64)
    }

    /// Mean held-out score with the given per-member weights held fixed.
    pub fn score_with_weights(&self, set: &GraphSet, weights: &[f64]) -> Result<f64> {
        let laps = self.laplacians(set);
        let mut total = 0.0;
        for fold in &self.folds {
            let f = estimate_labels_with(&fold.penalty, weights, &laps, &fold.train, self.solver_tol)?;
            total += self.fold_score(fold, &f)?;
        }
        Ok(total / self.folds.len() as f64)
    }
}

/// One-shot cross-validated AP of `set` with per-fold weight optimization.
pub fn cross_val_score(
    set: &GraphSet,
    graph: &MultiGraph,
    labels: &LabelVector,
    folds: usize,
    penalty: PenaltyScheme,
    cfg: &DualConfig,
    seed: u64,
) -> Result<f64> {
    CrossValidator::new(graph, labels, folds, seed, penalty)?.score_optimized(set, cfg)
}

/// Candidate values for the dual's hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub c: Vec<f64>,
    pub c0: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            c: vec![1e-3, 1e-2, 1e-1, 1.0],
            c0: vec![1.0, 10.0, 100.0],
        }
    }
}

impl HyperGrid {
    pub fn single(c: f64, c0: f64) -> Self {
        HyperGrid {
            c: vec![c],
            c0: vec![c0],
        }
    }

    pub fn len(&self) -> usize {
        self.c.len() * self.c0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Picks `(c, c0)` from the grid by cross-validated score on `set`. Ties go
/// to the earlier grid point (c-major order).
pub fn select_hyperparameters(
    cv: &CrossValidator<'_>,
    set: &GraphSet,
    base: &DualConfig,
    grid: &HyperGrid,
) -> Result<(DualConfig, f64)> {
    if grid.is_empty() {
        return Err(crate::error::Error::Config("empty hyper-parameter grid".into()));
    }
    if grid.len() == 1 {
        let cfg = DualConfig {
            c: grid.c[0],
            c0: grid.c0[0],
            ..*base
        };
        let score = cv.score_optimized(set, &cfg)?;
        return Ok((cfg, score));
    }
    let mut best: Option<(DualConfig, f64)> = None;
    for &c in &grid.c {
        for &c0 in &grid.c0 {
            let cfg = DualConfig { c, c0, ..*base };
            let score = cv.score_optimized(set, &cfg)?;
            if best.as_ref().is_none_or(|(_, s)| score > *s) {
                best = Some((cfg, score));
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}
