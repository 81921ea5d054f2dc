//! Intrusive-graph generators: Erdős–Rényi noise, label-aware rewiring of an
//! existing view, and adversarial graphs dominated by cross-class edges.
//!
//! All generators are deterministic in their seed and emit unit weights
//! (rewiring keeps each moved edge's weight).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, LabelVector, MultiGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseModel {
    ErdosRenyi,
    Rewire,
    Adversarial,
}

impl NoiseModel {
    pub const ALL: [NoiseModel; 3] = [NoiseModel::ErdosRenyi, NoiseModel::Rewire, NoiseModel::Adversarial];

    pub fn code(&self) -> &'static str {
        match self {
            NoiseModel::ErdosRenyi => "ER",
            NoiseModel::Rewire => "RW",
            NoiseModel::Adversarial => "AV",
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "er" | "erdos-renyi" | "erdos_renyi" => Ok(NoiseModel::ErdosRenyi),
            "rw" | "rewire" => Ok(NoiseModel::Rewire),
            "av" | "adversarial" => Ok(NoiseModel::Adversarial),
            other => Err(Error::Config(format!("unknown noise model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Intensity {
    Low,
    High,
}

impl Intensity {
    pub const ALL: [Intensity; 2] = [Intensity::Low, Intensity::High];
}

impl fmt::Display for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Intensity::Low => "low",
            Intensity::High => "high",
        })
    }
}

impl FromStr for Intensity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Intensity::Low),
            "high" => Ok(Intensity::High),
            other => Err(Error::Config(format!("unknown noise intensity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub intensity: Intensity,
    pub count: usize,
    pub seed: u64,
}

impl NoiseSpec {
    /// Edge density (ER), within-class rewire ratio (RW) or cross-edge
    /// ratio (AV) for this model and intensity.
    pub fn level(&self) -> f64 {
        match (self.model, self.intensity) {
            (NoiseModel::ErdosRenyi, Intensity::Low) => 0.05,
            (NoiseModel::ErdosRenyi, Intensity::High) => 0.5,
            (NoiseModel::Rewire | NoiseModel::Adversarial, Intensity::Low) => 0.6,
            (NoiseModel::Rewire | NoiseModel::Adversarial, Intensity::High) => 0.8,
        }
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each unordered pair is an edge with probability `density`.
pub fn gen_erdos_renyi(n: usize, density: f64, seed: u64) -> Result<Adjacency> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Generation(format!("density {density} outside (0, 1]")));
    }
    let mut rng = rng_for(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if density >= 1.0 || rng.gen::<f64>() < density {
                edges.push((i, j, 1.0));
            }
        }
    }
    Adjacency::from_edges(n, edges)
}

fn class_members(truth: &LabelVector) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &y) in truth.values().iter().enumerate() {
        match y {
            1 => pos.push(i),
            -1 => neg.push(i),
            _ => {}
        }
    }
    (pos, neg)
}

/// Pair `t` of the strict upper triangle over `s` items, row-major.
fn triangular_pair(t: usize, s: usize) -> (usize, usize) {
    // Row i holds s - 1 - i pairs, starting at i*s - i*(i+1)/2.
    let start = |i: usize| i * s - i * (i + 1) / 2;
    let (mut lo, mut hi) = (0usize, s - 1);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if start(mid) <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = lo;
    (i, i + 1 + (t - start(i)))
}

fn choose2(s: usize) -> usize {
    s * s.saturating_sub(1) / 2
}

/// `k` distinct cross-class pairs and `within` distinct same-class pairs.
fn sample_pairs(
    pos: &[usize],
    neg: &[usize],
    cross: usize,
    within: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>> {
    let cross_total = pos.len() * neg.len();
    let (pp, nn) = (choose2(pos.len()), choose2(neg.len()));
    if cross > cross_total || within > pp + nn {
        return Err(Error::Generation(format!(
            "cannot place {cross} cross and {within} within-class edges \
             ({cross_total} and {} pairs available)",
            pp + nn
        )));
    }
    let mut out = Vec::with_capacity(cross + within);
    for t in index::sample(rng, cross_total, cross) {
        out.push((pos[t / neg.len()], neg[t % neg.len()]));
    }
    for t in index::sample(rng, pp + nn, within) {
        let (members, t) = if t < pp { (pos, t) } else { (neg, t - pp) };
        let (a, b) = triangular_pair(t, members.len());
        out.push((members[a], members[b]));
    }
    Ok(out)
}

/// Moves `floor(ratio * #within-class edges)` uniformly chosen within-class
/// edges onto fresh cross-class pairs, keeping their weights. The edge count
/// is unchanged.
pub fn rewire_graph(base: &Adjacency, truth: &LabelVector, ratio: f64, seed: u64) -> Result<Adjacency> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Generation(format!("rewire ratio {ratio} outside [0, 1]")));
    }
    if truth.len() != base.n() {
        return Err(Error::Dimension {
            expected: base.n(),
            got: truth.len(),
        });
    }
    if base.edge_count() == 0 {
        return Err(Error::Generation("cannot rewire an empty graph".into()));
    }
    let (pos, neg) = class_members(truth);
    let same_class = |i: usize, j: usize| truth.get(i) != 0 && truth.get(i) == truth.get(j);
    let edges: Vec<(usize, usize, f64)> = base.edges().collect();
    let within: Vec<usize> = (0..edges.len())
        .filter(|&e| same_class(edges[e].0, edges[e].1))
        .collect();
    let k = (ratio * within.len() as f64).floor() as usize;
    if k == 0 {
        return Ok(base.clone());
    }

    let mut rng = rng_for(seed);
    let moved: HashSet<usize> = within.choose_multiple(&mut rng, k).copied().collect();
    let mut occupied: HashSet<(usize, usize)> = edges.iter().map(|&(i, j, _)| (i, j)).collect();
    let cross_total = pos.len() * neg.len();
    let existing_cross = edges
        .iter()
        .filter(|&&(i, j, _)| {
            let (a, b) = (truth.get(i), truth.get(j));
            a != 0 && b != 0 && a != b
        })
        .count();
    let free = cross_total - existing_cross;
    if k > free {
        return Err(Error::Generation(format!(
            "need {k} free cross-class pairs, only {free} available"
        )));
    }

    let mut targets: Vec<(usize, usize)> = Vec::with_capacity(k);
    if 2 * k > free {
        let mut free_pairs: Vec<(usize, usize)> = Vec::with_capacity(free);
        for &p in &pos {
            for &q in &neg {
                let key = (p.min(q), p.max(q));
                if !occupied.contains(&key) {
                    free_pairs.push(key);
                }
            }
        }
        targets.extend(free_pairs.choose_multiple(&mut rng, k).copied());
    } else {
        while targets.len() < k {
            let p = pos[rng.gen_range(0..pos.len())];
            let q = neg[rng.gen_range(0..neg.len())];
            let key = (p.min(q), p.max(q));
            if occupied.insert(key) {
                targets.push(key);
            }
        }
    }

    let mut out = Vec::with_capacity(edges.len());
    let mut next_target = targets.into_iter();
    for (e, &(i, j, w)) in edges.iter().enumerate() {
        if moved.contains(&e) {
            let (a, b) = next_target.next().expect("one target per moved edge");
            out.push((a, b, w));
        } else {
            out.push((i, j, w));
        }
    }
    Adjacency::from_edges(base.n(), out)
}

/// `edge_count` unit edges, `floor(cross_ratio * edge_count)` of them
/// between classes and the rest within classes, all distinct.
pub fn gen_adversarial(
    n: usize,
    truth: &LabelVector,
    cross_ratio: f64,
    edge_count: usize,
    seed: u64,
) -> Result<Adjacency> {
    if !(0.0..=1.0).contains(&cross_ratio) {
        return Err(Error::Generation(format!("cross ratio {cross_ratio} outside [0, 1]")));
    }
    if truth.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: truth.len(),
        });
    }
    let (pos, neg) = class_members(truth);
    let cross = (cross_ratio * edge_count as f64).floor() as usize;
    let mut rng = rng_for(seed);
    let pairs = sample_pairs(&pos, &neg, cross, edge_count - cross, &mut rng)?;
    Adjacency::from_edges(n, pairs.into_iter().map(|(i, j)| (i, j, 1.0)))
}

fn view_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (k as u64).wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Appends `spec.count` intrusive views. RW rewires the original views in
/// turn; AV uses the mean edge count of the original views.
pub fn inject(graph: &MultiGraph, spec: &NoiseSpec, truth: &LabelVector) -> Result<MultiGraph> {
    if spec.count == 0 {
        return Ok(graph.clone());
    }
    let n = graph.n();
    let m = graph.m();
    let mean_edges = (graph.total_edges() as f64 / m as f64).round() as usize;
    let level = spec.level();
    let mut extra = Vec::with_capacity(spec.count);
    for j in 0..spec.count {
        let seed = view_seed(spec.seed, j);
        let adj = match spec.model {
            NoiseModel::ErdosRenyi => gen_erdos_renyi(n, level, seed)?,
            NoiseModel::Rewire => rewire_graph(graph.view(j % m).adjacency(), truth, level, seed)?,
            NoiseModel::Adversarial => gen_adversarial(n, truth, level, mean_edges, seed)?,
        };
        extra.push(adj);
    }
    graph.extended(extra)
}

/// Counts `(within-class, cross-class)` edges under `truth`.
pub fn edge_class_counts(adj: &Adjacency, truth: &LabelVector) -> (usize, usize) {
    adj.edges().fold((0, 0), |(w, c), (i, j, _)| {
        if truth.get(i) == truth.get(j) {
            (w + 1, c)
        } else {
            (w, c + 1)
        }
    })
}
