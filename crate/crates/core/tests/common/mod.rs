//! Shared builders and dense oracles for the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustmsc::{Adjacency, LabelVector, MultiGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weighted Erdős–Rényi view; each pair appears at most once.
pub fn random_adjacency(r: &mut ChaCha8Rng, n: usize, p: f64) -> Adjacency {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen::<f64>() < p {
                edges.push((i, j, r.gen_range(0.1..1.0)));
            }
        }
    }
    Adjacency::from_edges(n, edges).unwrap()
}

pub fn random_multigraph(r: &mut ChaCha8Rng, n: usize, m: usize) -> MultiGraph {
    let views = (0..m)
        .map(|_| {
            let p = r.gen_range(0.1..0.6);
            random_adjacency(r, n, p)
        })
        .collect();
    MultiGraph::new(views).unwrap()
}

/// Partial labels with at least one of each class.
pub fn random_labels(r: &mut ChaCha8Rng, n: usize) -> LabelVector {
    assert!(n >= 2);
    let mut v: Vec<i8> = (0..n)
        .map(|_| match r.gen_range(0..3) {
            0 => 1,
            1 => -1,
            _ => 0,
        })
        .collect();
    let a = r.gen_range(0..n);
    let b = (a + 1 + r.gen_range(0..n - 1)) % n;
    v[a] = 1;
    v[b] = -1;
    LabelVector::new(v).unwrap()
}

/// `D^{-1/2}(D - W)D^{-1/2}` from the dense adjacency, zero rows for
/// isolated nodes.
pub fn dense_laplacian(adj: &Adjacency) -> DMatrix<f64> {
    let w = adj.to_dense();
    let n = w.len();
    let d: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if d[i] == 0.0 || d[j] == 0.0 {
            return 0.0;
        }
        let dij = if i == j { d[i] } else { 0.0 };
        (dij - w[i][j]) / (d[i].sqrt() * d[j].sqrt())
    })
}

/// `(C + sum_k w_k L_k)^{-1} C y` by dense LU.
pub fn dense_estimate(graph: &MultiGraph, penalty: &[f64], weights: &[f64], y: &LabelVector) -> Vec<f64> {
    let n = graph.n();
    let mut a = DMatrix::from_diagonal(&DVector::from_column_slice(penalty));
    for (k, w) in weights.iter().enumerate() {
        a += dense_laplacian(graph.view(k).adjacency()) * *w;
    }
    let rhs = DVector::from_iterator(n, (0..n).map(|i| penalty[i] * f64::from(y.get(i))));
    a.lu().solve(&rhs).expect("oracle system is nonsingular").iter().copied().collect()
}

/// `(Cy)'(C + sum w L)^{-1}(Cy) + c sum w` by dense LU.
pub fn dense_objective(graph: &MultiGraph, penalty: &[f64], weights: &[f64], y: &LabelVector, c: f64) -> f64 {
    let f = dense_estimate(graph, penalty, weights, y);
    let fit: f64 = (0..graph.n()).map(|i| penalty[i] * f64::from(y.get(i)) * f[i]).sum();
    fit + c * weights.iter().sum::<f64>()
}

/// Brute-force AP: precision at the rank of every positive, ties by index.
pub fn brute_force_ap(scores: &[f64], truth: &[i8]) -> f64 {
    let n = scores.len();
    let above = |a: usize, b: usize| scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    let mut terms: Vec<(usize, f64)> = Vec::new();
    for i in (0..n).filter(|&i| truth[i] == 1) {
        let rank = 1 + (0..n).filter(|&j| j != i && above(j, i)).count();
        let hits = 1 + (0..n).filter(|&j| j != i && truth[j] == 1 && above(j, i)).count();
        terms.push((rank, hits as f64 / rank as f64));
    }
    // Summed in rank order so the result is comparable bit for bit.
    terms.sort_by_key(|t| t.0);
    terms.iter().map(|t| t.1).sum::<f64>() / terms.len() as f64
}
