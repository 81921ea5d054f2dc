//! Annealed search over graph subsets for intrusive-graph removal.
//!
//! Starting from the full set, each dequeued graph-set is scored by
//! cross-validation and, with probability
//! `min(1, exp((score - best) / t^(removed + 1)))`, processed: its weights
//! are fitted, split into small and large groups by exact 1-D 2-means, and
//! one child per large-weight member (the set without that member) is queued
//! unless some removal path already queued it. The best processed score wins.
//!
//! Workers share the queue, the visited table and the incumbent. With one
//! worker the traversal is FIFO and fully reproducible for a given seed;
//! with several, the visiting order may vary between runs.

use std::collections::{HashSet, VecDeque};
use std::sync::{Condvar, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sorted, duplicate-free, non-empty set of view ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphSet(Vec<usize>);

impl GraphSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::Validation("a graph-set cannot be empty".into()));
        }
        Ok(GraphSet(indices))
    }

    /// `{0, .., m-1}`. Panics if `m == 0`.
    pub fn full(m: usize) -> Self {
        assert!(m > 0, "graph-set over zero views");
        GraphSet((0..m).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    /// The set minus view `k`, or `None` if that would leave it empty or `k`
    /// is not a member.
    pub fn without(&self, k: usize) -> Option<GraphSet> {
        if self.0.len() <= 1 || !self.contains(k) {
            return None;
        }
        Some(GraphSet(self.0.iter().copied().filter(|&i| i != k).collect()))
    }
}

impl std::fmt::Display for GraphSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

/// Stable 64-bit FNV-1a digest of the sorted members. Equal sets give equal
/// keys however they were reached.
pub fn canonical_hash(set: &GraphSet) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &k in set.indices() {
        for byte in (k as u64).to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

/// `exp((score - best) / t^(removed + 1))`, capped at 1 so that any
/// `score >= best` is accepted with probability exactly 1.
pub fn acceptance_probability(score: f64, best: f64, t: f64, removed: usize) -> f64 {
    let exponent = removed as i32 + 1;
    ((score - best) / t.powi(exponent)).exp().min(1.0)
}

/// Positions of the small- and large-weight groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSplit {
    pub small: Vec<usize>,
    pub large: Vec<usize>,
}

/// Exact two-cluster split of 1-D values minimizing within-cluster sum of
/// squares, by scanning every boundary between distinct sorted values.
///
/// A single value, or all-equal values, put everything in `large`. Among
/// equally good boundaries the lowest one wins.
pub fn split_weights_2means(weights: &[f64]) -> WeightSplit {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
    let n = sorted.len();

    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, &v) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    let sse = |lo: usize, hi: usize| {
        let cnt = (hi - lo) as f64;
        let s = prefix[hi] - prefix[lo];
        (prefix_sq[hi] - prefix_sq[lo]) - s * s / cnt
    };

    let mut best: Option<(usize, f64)> = None;
    for cut in 1..n {
        if sorted[cut - 1] == sorted[cut] {
            continue;
        }
        let cost = sse(0, cut) + sse(cut, n);
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((cut, cost));
        }
    }
    let cut = best.map_or(0, |(c, _)| c);
    let mut small: Vec<usize> = order[..cut].to_vec();
    let mut large: Vec<usize> = order[cut..].to_vec();
    small.sort_unstable();
    large.sort_unstable();
    WeightSplit { small, large }
}

/// Weights and label estimate of a processed graph-set.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFit {
    /// One weight per member, in the set's index order.
    pub weights: Vec<f64>,
    pub estimate: Vec<f64>,
}

/// Scoring and fitting of graph-sets; implemented by the cross-validated
/// evaluator and by test doubles.
pub trait CandidateEvaluator: Sync {
    fn score(&self, set: &GraphSet) -> Result<f64>;
    fn fit(&self, set: &GraphSet) -> Result<CandidateFit>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Initial temperature, in `(0, 1]`.
    pub temperature: f64,
    /// Optional cap on removed graphs; deeper children are not queued.
    pub max_removed: Option<usize>,
    pub workers: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            temperature: 0.5,
            max_removed: None,
            workers: 1,
            seed: 0,
        }
    }
}

/// One dequeued graph-set.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRecord {
    /// Dequeue order, from 0.
    pub step: usize,
    pub set: GraphSet,
    pub parent: Option<GraphSet>,
    pub removed_graph: Option<usize>,
    pub cv_score: f64,
    /// Incumbent score when the acceptance draw was made.
    pub best_before: f64,
    pub accepted: bool,
    /// Present iff the set was processed successfully.
    pub weights: Option<Vec<f64>>,
    pub failure: Option<String>,
}

impl SearchRecord {
    pub fn processed(&self) -> bool {
        self.weights.is_some()
    }

    pub fn removed_count(&self, m: usize) -> usize {
        m - self.set.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best_set: GraphSet,
    pub best_score: f64,
    /// Per-member weights of `best_set`.
    pub best_weights: Vec<f64>,
    pub best_estimate: Vec<f64>,
    /// All dequeued sets, ordered by step.
    pub records: Vec<SearchRecord>,
}

impl SearchOutcome {
    /// Length-`m` weights with zeros for views outside the best set.
    pub fn full_weights(&self, m: usize) -> Vec<f64> {
        let mut w = vec![0.0; m];
        for (&k, &v) in self.best_set.indices().iter().zip(&self.best_weights) {
            w[k] = v;
        }
        w
    }
}

struct Pending {
    set: GraphSet,
    parent: Option<(GraphSet, usize)>,
}

struct Incumbent {
    set: GraphSet,
    score: f64,
    fit: CandidateFit,
}

struct Shared {
    queue: VecDeque<Pending>,
    visited: HashSet<GraphSet>,
    in_flight: usize,
    next_step: usize,
    best: Option<Incumbent>,
    records: Vec<SearchRecord>,
}

impl Shared {
    fn best_score(&self) -> f64 {
        self.best.as_ref().map_or(0.0, |b| b.score)
    }
}

fn acceptance_draw(seed: u64, set: &GraphSet) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ canonical_hash(set).rotate_left(17));
    rng.gen::<f64>()
}

/// Runs the search over views `0..m`.
pub fn anneal<E: CandidateEvaluator>(m: usize, evaluator: &E, cfg: &SearchConfig) -> Result<SearchOutcome> {
    if m == 0 {
        return Err(Error::Validation("nothing to search: zero views".into()));
    }
    if !(cfg.temperature > 0.0 && cfg.temperature <= 1.0) {
        return Err(Error::Config(format!(
            "temperature must lie in (0, 1], got {}",
            cfg.temperature
        )));
    }
    if cfg.workers == 0 {
        return Err(Error::Config("at least one worker is required".into()));
    }
    let root = GraphSet::full(m);
    let mut visited = HashSet::new();
    visited.insert(root.clone());
    let state = Mutex::new(Shared {
        queue: VecDeque::from([Pending {
            set: root,
            parent: None,
        }]),
        visited,
        in_flight: 0,
        next_step: 0,
        best: None,
        records: Vec::new(),
    });
    let wake = Condvar::new();

    if cfg.workers == 1 {
        worker(m, evaluator, cfg, &state, &wake);
    } else {
        std::thread::scope(|scope| {
            for _ in 0..cfg.workers {
                scope.spawn(|| worker(m, evaluator, cfg, &state, &wake));
            }
        });
    }

    let mut shared = state.into_inner().expect("search state poisoned");
    shared.records.sort_by_key(|r| r.step);
    let best = shared.best.ok_or_else(|| {
        Error::Validation("no graph-set was processed with a positive score".into())
    })?;
    Ok(SearchOutcome {
        best_set: best.set,
        best_score: best.score,
        best_weights: best.fit.weights,
        best_estimate: best.fit.estimate,
        records: shared.records,
    })
}

fn worker<E: CandidateEvaluator>(
    m: usize,
    evaluator: &E,
    cfg: &SearchConfig,
    state: &Mutex<Shared>,
    wake: &Condvar,
) {
    loop {
        let (pending, step) = {
            let mut s = state.lock().expect("search state poisoned");
            loop {
                if let Some(p) = s.queue.pop_front() {
                    s.in_flight += 1;
                    let step = s.next_step;
                    s.next_step += 1;
                    break (p, step);
                }
                if s.in_flight == 0 {
                    wake.notify_all();
                    return;
                }
                s = wake.wait(s).expect("search state poisoned");
            }
        };

        let set = pending.set;
        let removed = m - set.len();
        let (score, mut failure) = match evaluator.score(&set) {
            Ok(v) if v.is_finite() => (v, None),
            Ok(v) => (0.0, Some(format!("non-finite score {v}"))),
            Err(e) => (0.0, Some(e.to_string())),
        };

        let best_before = state.lock().expect("search state poisoned").best_score();
        let accepted = failure.is_none()
            && acceptance_draw(cfg.seed, &set)
                <= acceptance_probability(score, best_before, cfg.temperature, removed);

        let mut fit = None;
        let mut children = Vec::new();
        if accepted {
            match evaluator.fit(&set) {
                Ok(f) if f.weights.len() == set.len() => {
                    let split = split_weights_2means(&f.weights);
                    if cfg.max_removed.is_none_or(|cap| removed < cap) {
                        for pos in split.large {
                            let k = set.indices()[pos];
                            if let Some(child) = set.without(k) {
                                children.push((child, k));
                            }
                        }
                    }
                    fit = Some(f);
                }
                Ok(f) => {
                    failure = Some(format!(
                        "fit returned {} weights for a set of {}",
                        f.weights.len(),
                        set.len()
                    ))
                }
                Err(e) => failure = Some(e.to_string()),
            }
        }

        let mut s = state.lock().expect("search state poisoned");
        for (child, k) in children {
            if s.visited.insert(child.clone()) {
                s.queue.push_back(Pending {
                    set: child,
                    parent: Some((set.clone(), k)),
                });
            }
        }
        let weights = fit.as_ref().map(|f| f.weights.clone());
        if let Some(f) = fit {
            if score > s.best_score() {
                s.best = Some(Incumbent {
                    set: set.clone(),
                    score,
                    fit: f,
                });
            }
        }
        let (parent, removed_graph) = match pending.parent {
            Some((p, k)) => (Some(p), Some(k)),
            None => (None, None),
        };
        s.records.push(SearchRecord {
            step,
            set,
            parent,
            removed_graph,
            cv_score: score,
            best_before,
            accepted,
            weights,
            failure,
        });
        s.in_flight -= 1;
        wake.notify_all();
    }
}
