//! Planted-partition multi-graphs with known intrusive views, used for the
//! noise-robustness experiments and the `gen-synthetic` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, LabelVector, MultiGraph};
use crate::noise::{gen_adversarial, gen_erdos_renyi};

/// Edge probabilities of one planted two-block view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedView {
    pub within: f64,
    pub cross: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub positives: usize,
    /// Informative views, most informative first.
    pub informative: Vec<PlantedView>,
    /// Density of the Erdős–Rényi noise view, if any.
    pub random_density: Option<f64>,
    /// Cross-edge ratio of the adversarial view, if any. Its edge count is
    /// the mean over the informative views.
    pub adversarial_cross_ratio: Option<f64>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 100 nodes, three informative views of decreasing quality, one random
    /// view and one adversarial view.
    pub fn figure_one(seed: u64) -> Self {
        SyntheticSpec {
            n: 100,
            positives: 30,
            informative: vec![
                PlantedView { within: 0.10, cross: 0.01 },
                PlantedView { within: 0.07, cross: 0.012 },
                PlantedView { within: 0.05, cross: 0.015 },
            ],
            random_density: Some(0.05),
            adversarial_cross_ratio: Some(0.8),
            seed,
        }
    }

    /// The same dataset without its intrusive views.
    pub fn informative_only(&self) -> Self {
        SyntheticSpec {
            random_density: None,
            adversarial_cross_ratio: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub graph: MultiGraph,
    pub truth: LabelVector,
    /// Ids of the intrusive views.
    pub intrusive: Vec<usize>,
}

fn planted(n: usize, truth: &LabelVector, view: PlantedView, rng: &mut ChaCha8Rng) -> Result<Adjacency> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if truth.get(i) == truth.get(j) {
                view.within
            } else {
                view.cross
            };
            if rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    Adjacency::from_edges(n, edges)
}

/// Generates the dataset. Class membership is a seeded random permutation,
/// so node order carries no label information.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    if spec.positives == 0 || spec.positives >= spec.n {
        return Err(Error::Config(format!(
            "need 0 < positives < n, got {} of {}",
            spec.positives, spec.n
        )));
    }
    if spec.informative.is_empty() && spec.random_density.is_none() && spec.adversarial_cross_ratio.is_none() {
        return Err(Error::Config("synthetic dataset has no views".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut nodes: Vec<usize> = (0..spec.n).collect();
    nodes.shuffle(&mut rng);
    let mut values = vec![-1i8; spec.n];
    for &i in &nodes[..spec.positives] {
        values[i] = 1;
    }
    let truth = LabelVector::new(values)?;

    let mut views = Vec::new();
    for &v in &spec.informative {
        views.push(planted(spec.n, &truth, v, &mut rng)?);
    }
    let mean_edges = if views.is_empty() {
        spec.n
    } else {
        (views.iter().map(Adjacency::edge_count).sum::<usize>() as f64 / views.len() as f64).round() as usize
    };
    let mut intrusive = Vec::new();
    if let Some(d) = spec.random_density {
        intrusive.push(views.len());
        views.push(gen_erdos_renyi(spec.n, d, rng.gen())?);
    }
    if let Some(r) = spec.adversarial_cross_ratio {
        intrusive.push(views.len());
        views.push(gen_adversarial(spec.n, &truth, r, mean_edges, rng.gen())?);
    }
    Ok(SyntheticDataset {
        graph: MultiGraph::new(views)?,
        truth,
        intrusive,
    })
}
