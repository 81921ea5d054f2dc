//! Labeled-set sampling and stratified fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::LabelVector;

const MAX_SAMPLING_ATTEMPTS: u64 = 100;

/// Labels a uniform random subset of `floor(fraction * n)` nodes with their
/// ground truth. Redraws (up to a fixed budget) until both classes appear.
pub fn sample_labeled_set(truth: &LabelVector, fraction: f64, seed: u64) -> Result<LabelVector> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("label fraction {fraction} outside (0, 1]")));
    }
    let n = truth.len();
    let size = (fraction * n as f64).floor() as usize;
    let candidates = truth.labeled_set();
    if size > candidates.len() {
        return Err(Error::Config(format!(
            "cannot label {size} nodes: ground truth covers only {}",
            candidates.len()
        )));
    }
    for attempt in 0..MAX_SAMPLING_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let chosen: Vec<usize> = candidates.choose_multiple(&mut rng, size).copied().collect();
        let mut values = vec![0i8; n];
        for i in chosen {
            values[i] = truth.get(i);
        }
        let labels = LabelVector::new(values)?;
        if labels.require_both_classes().is_ok() {
            return Ok(labels);
        }
    }
    Err(Error::Config(format!(
        "no labeled sample of size {size} containing both classes after {MAX_SAMPLING_ATTEMPTS} attempts"
    )))
}

/// Splits the labeled nodes into `folds` groups with classes dealt
/// round-robin after a seeded shuffle, so every fold gets its share of each
/// class.
///
/// The fold count drops to the size of the smaller class when that is
/// smaller than requested; fewer than two usable folds is an error.
pub fn stratified_folds(labels: &LabelVector, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for i in labels.labeled_set() {
        if labels.get(i) > 0 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    let k = folds.min(pos.len()).min(neg.len());
    if k < 2 {
        return Err(Error::Config(format!(
            "too few labels to stratify: {} positive, {} negative",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut out = vec![Vec::new(); k];
    for (slot, &i) in pos.iter().enumerate() {
        out[slot % k].push(i);
    }
    // Negatives continue the round-robin where positives stopped so fold
    // sizes stay balanced.
    let offset = pos.len();
    for (slot, &i) in neg.iter().enumerate() {
        out[(offset + slot) % k].push(i);
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(n: usize, pos: usize) -> LabelVector {
        LabelVector::new((0..n).map(|i| if i < pos { 1 } else { -1 }).collect()).unwrap()
    }

    #[test]
    fn full_fraction_returns_truth() {
        let t = truth(20, 5);
        assert_eq!(sample_labeled_set(&t, 1.0, 3).unwrap(), t);
    }

    #[test]
    fn deterministic_and_sized() {
        let t = truth(1000, 100);
        for seed in 0..10 {
            let a = sample_labeled_set(&t, 0.05, seed).unwrap();
            assert_eq!(a.labeled_set().len(), 50);
            assert_eq!(a, sample_labeled_set(&t, 0.05, seed).unwrap());
        }
    }

    #[test]
    fn impossible_sample_errors() {
        let t = truth(10, 1);
        assert!(sample_labeled_set(&t, 0.1, 0).is_err());
        assert!(sample_labeled_set(&t, 0.0, 0).is_err());
    }

    #[test]
    fn folds_are_stratified_and_partition() {
        let y = truth(30, 10);
        let folds = stratified_folds(&y, 5, 7).unwrap();
        assert_eq!(folds.len(), 5);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.iter().filter(|&&i| y.get(i) == 1).count(), 2);
        }
    }

    #[test]
    fn folds_shrink_to_minority_count() {
        let y = truth(30, 3);
        assert_eq!(stratified_folds(&y, 5, 0).unwrap().len(), 3);
        let y = truth(30, 1);
        assert!(stratified_folds(&y, 5, 0).is_err());
    }
}
