//! Ranking metrics for binary node classification.

use crate::error::{Error, Result};

/// Node indices ordered by descending score; equal scores keep index order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

fn validate(scores: &[f64], truth: &[i8]) -> Result<usize> {
    if scores.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("scores"));
    }
    if let Some(i) = truth.iter().position(|t| *t != 1 && *t != -1) {
        return Err(Error::Validation(format!(
            "truth at position {i} is {}, expected +1 or -1",
            truth[i]
        )));
    }
    let positives = truth.iter().filter(|t| **t == 1).count();
    if positives == 0 {
        return Err(Error::Validation(
            "average precision is undefined without positives".into(),
        ));
    }
    Ok(positives)
}

/// Mean of precision@k over the ranks k of the positives.
///
/// `scores[i]` and `truth[i]` describe the same evaluated node; ties are
/// broken by position, earlier first.
pub fn average_precision(scores: &[f64], truth: &[i8]) -> Result<f64> {
    let positives = validate(scores, truth)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, idx) in ranking(scores).into_iter().enumerate() {
        if truth[idx] == 1 {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// AP of `scores` restricted to `nodes`, with `truth` indexed by node id.
pub fn average_precision_on(scores: &[f64], truth: &[i8], nodes: &[usize]) -> Result<f64> {
    let s: Vec<f64> = nodes.iter().map(|&i| scores[i]).collect();
    let t: Vec<i8> = nodes.iter().map(|&i| truth[i]).collect();
    average_precision(&s, &t)
}

/// Fraction of nodes whose score sign matches the truth; a zero score
/// counts as a negative prediction.
pub fn accuracy(scores: &[f64], truth: &[i8]) -> Result<f64> {
    if scores.len() != truth.len() || scores.is_empty() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: scores.len(),
        });
    }
    let correct = scores
        .iter()
        .zip(truth)
        .filter(|(s, t)| (**s > 0.0) == (**t == 1))
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Precision and recall after each position of the ranking.
pub fn precision_recall_curve(scores: &[f64], truth: &[i8]) -> Result<Vec<PrPoint>> {
    let positives = validate(scores, truth)? as f64;
    let mut hits = 0usize;
    Ok(ranking(scores)
        .into_iter()
        .enumerate()
        .map(|(rank, idx)| {
            if truth[idx] == 1 {
                hits += 1;
            }
            PrPoint {
                recall: hits as f64 / positives,
                precision: hits as f64 / (rank + 1) as f64,
            }
        })
        .collect())
}
