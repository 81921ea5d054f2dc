//! Sparse multi-relational graph storage and the symmetric normalized
//! Laplacian `L = D^{-1/2} (D - W) D^{-1/2}`.
//!
//! Adjacency is kept as the strict upper triangle in CSR form; every stored
//! entry `(i, j, w)` with `i < j` stands for both `W(i,j)` and `W(j,i)`.
//! Matrix-vector products symmetrize implicitly.
//!
//! Isolated nodes (degree zero) get an all-zero row and column in `L`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Symmetric nonnegative adjacency with zero diagonal, upper triangle only.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl Adjacency {
    /// Empty graph on `n` nodes.
    pub fn empty(n: usize) -> Self {
        Adjacency {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds from undirected edges. Each pair may be listed once, in either
    /// orientation; listing both `(i, j)` and `(j, i)` is a duplicate.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut canonical: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::OutOfBounds { index: idx, n });
                }
            }
            if i == j {
                return Err(Error::Validation(format!("self-loop on node {i}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Validation(format!(
                    "edge ({i}, {j}) has nonpositive or non-finite weight {w}"
                )));
            }
            let key = (i.min(j), i.max(j));
            if canonical.insert(key, w).is_some() {
                return Err(Error::Validation(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self::from_sorted_upper(n, canonical))
    }

    fn from_sorted_upper(n: usize, upper: BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(upper.len());
        let mut weights = Vec::with_capacity(upper.len());
        for (&(i, j), &w) in &upper {
            row_ptr[i + 1] += 1;
            cols.push(j);
            weights.push(w);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Adjacency {
            n,
            row_ptr,
            cols,
            weights,
        }
    }

    /// Builds from a dense square matrix. The matrix must be symmetric,
    /// nonnegative, and have a zero diagonal; zeros are not stored.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            if row[i] != 0.0 {
                return Err(Error::Validation(format!("nonzero diagonal at node {i}")));
            }
        }
        let mut upper = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                let w = rows[i][j];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Validation(format!(
                        "entry ({i}, {j}) = {w} is negative or non-finite"
                    )));
                }
                if w != rows[j][i] {
                    return Err(Error::Validation(format!(
                        "adjacency is not symmetric at ({i}, {j})"
                    )));
                }
                if j > i && w > 0.0 {
                    upper.insert((i, j), w);
                }
            }
        }
        Ok(Self::from_sorted_upper(n, upper))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.cols.len()
    }

    /// Upper-triangle edges `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |e| (i, self.cols[e], self.weights[e]))
        })
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j || i >= self.n || j >= self.n {
            return 0.0;
        }
        let (a, b) = (i.min(j), i.max(j));
        let row = &self.cols[self.row_ptr[a]..self.row_ptr[a + 1]];
        match row.binary_search(&b) {
            Ok(pos) => self.weights[self.row_ptr[a] + pos],
            Err(_) => 0.0,
        }
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for (i, j, w) in self.edges() {
            deg[i] += w;
            deg[j] += w;
        }
        deg
    }

    /// Same structure with every weight multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= alpha);
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, j, w) in self.edges() {
            dense[i][j] = w;
            dense[j][i] = w;
        }
        dense
    }
}

/// Symmetric normalized Laplacian sharing the adjacency's sparsity pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// Adjacency weights, kept for the edge-wise quadratic form.
    weights: Vec<f64>,
    /// `-W(i,j) / sqrt(D(i,i) D(j,j))`.
    offdiag: Vec<f64>,
    /// `D(i,i)^{-1/2}`, or 0 for isolated nodes.
    inv_sqrt_deg: Vec<f64>,
}

/// `D^{-1/2} (D - W) D^{-1/2}` with zero rows for isolated nodes.
pub fn normalized_laplacian(adjacency: &Adjacency) -> Laplacian {
    let inv_sqrt_deg: Vec<f64> = adjacency
        .degrees()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut offdiag = Vec::with_capacity(adjacency.edge_count());
    for (i, j, w) in adjacency.edges() {
        offdiag.push(-w * inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    Laplacian {
        n: adjacency.n,
        row_ptr: adjacency.row_ptr.clone(),
        cols: adjacency.cols.clone(),
        weights: adjacency.weights.clone(),
        offdiag,
        inv_sqrt_deg,
    }
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_offdiag(&self) -> usize {
        self.cols.len()
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        if self.inv_sqrt_deg[i] > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal(i);
        }
        let (a, b) = (i.min(j), i.max(j));
        let row = &self.cols[self.row_ptr[a]..self.row_ptr[a + 1]];
        match row.binary_search(&b) {
            Ok(pos) => self.offdiag[self.row_ptr[a] + pos],
            Err(_) => 0.0,
        }
    }

    /// `out += scale * L x`. Lengths are the caller's responsibility.
    pub(crate) fn mul_add(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        for i in 0..self.n {
            if self.inv_sqrt_deg[i] == 0.0 {
                continue;
            }
            let xi = x[i];
            let mut acc = xi;
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[e];
                let v = self.offdiag[e];
                acc += v * x[j];
                out[j] += scale * v * xi;
            }
            out[i] += scale * acc;
        }
    }

    /// `out += scale * L` on a dense row-major `n x n` buffer.
    pub(crate) fn add_dense(&self, scale: f64, out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            if self.inv_sqrt_deg[i] == 0.0 {
                continue;
            }
            out[i * n + i] += scale;
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[e];
                let v = scale * self.offdiag[e];
                out[i * n + j] += v;
                out[j * n + i] += v;
            }
        }
    }

    /// `L x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        self.mul_add(x, 1.0, &mut out);
        Ok(out)
    }

    /// `f' L f`, evaluated edge-wise as
    /// `sum_{i<j} W(i,j) (f_i / sqrt(D_i) - f_j / sqrt(D_j))^2`
    /// so the result is a sum of nonnegative terms.
    pub fn quadratic_form(&self, f: &[f64]) -> Result<f64> {
        check_len(self.n, f.len())?;
        Ok(self.quadratic_form_unchecked(f))
    }

    pub(crate) fn quadratic_form_unchecked(&self, f: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let gi = f[i] * self.inv_sqrt_deg[i];
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[e];
                let d = gi - f[j] * self.inv_sqrt_deg[j];
                total += self.weights[e] * d * d;
            }
        }
        total
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, row) in dense.iter_mut().enumerate() {
            row[i] = self.diagonal(i);
        }
        for i in 0..self.n {
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[e];
                dense[i][j] = self.offdiag[e];
                dense[j][i] = self.offdiag[e];
            }
        }
        dense
    }
}

/// `f' L f` for a cached Laplacian.
pub fn quadratic_form(laplacian: &Laplacian, f: &[f64]) -> Result<f64> {
    laplacian.quadratic_form(f)
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// One relation over the shared node set, with its Laplacian built once.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphView {
    id: usize,
    adjacency: Adjacency,
    laplacian: Laplacian,
}

impl GraphView {
    pub fn new(id: usize, adjacency: Adjacency) -> Self {
        let laplacian = normalized_laplacian(&adjacency);
        GraphView {
            id,
            adjacency,
            laplacian,
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn n(&self) -> usize {
        self.adjacency.n
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }
}

/// Ordered views over one node set. View `k` has id `k`.
#[derive(Debug, Clone)]
pub struct MultiGraph {
    n: usize,
    views: Vec<Arc<GraphView>>,
    node_names: Option<Vec<String>>,
}

impl MultiGraph {
    pub fn new(adjacencies: Vec<Adjacency>) -> Result<Self> {
        let n = adjacencies
            .first()
            .map(Adjacency::n)
            .ok_or_else(|| Error::Validation("a multi-graph needs at least one view".into()))?;
        let mut views = Vec::with_capacity(adjacencies.len());
        for (id, adj) in adjacencies.into_iter().enumerate() {
            check_len(n, adj.n())?;
            views.push(Arc::new(GraphView::new(id, adj)));
        }
        Ok(MultiGraph {
            n,
            views,
            node_names: None,
        })
    }

    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self> {
        check_len(self.n, names.len())?;
        self.node_names = Some(names);
        Ok(self)
    }

    /// A new multi-graph with `extra` appended after the existing views,
    /// which are shared rather than copied.
    pub fn extended(&self, extra: Vec<Adjacency>) -> Result<Self> {
        let mut views = self.views.clone();
        for adj in extra {
            check_len(self.n, adj.n())?;
            let id = views.len();
            views.push(Arc::new(GraphView::new(id, adj)));
        }
        Ok(MultiGraph {
            n: self.n,
            views,
            node_names: self.node_names.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.views.len()
    }

    pub fn view(&self, k: usize) -> &GraphView {
        &self.views[k]
    }

    pub fn views(&self) -> impl Iterator<Item = &GraphView> {
        self.views.iter().map(|v| v.as_ref())
    }

    pub fn laplacians(&self) -> Vec<&Laplacian> {
        self.views().map(GraphView::laplacian).collect()
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    pub fn total_edges(&self) -> usize {
        self.views().map(|v| v.adjacency().edge_count()).sum()
    }
}

/// Per-node training labels in `{+1, 0, -1}`; 0 means unlabeled.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector {
    values: Vec<i8>,
}

impl LabelVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !matches!(v, -1..=1)) {
            return Err(Error::Validation(format!(
                "label {} at node {i} is not in {{+1, 0, -1}}",
                values[i]
            )));
        }
        Ok(LabelVector { values })
    }

    pub fn unlabeled(n: usize) -> Self {
        LabelVector { values: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, i: usize) -> i8 {
        self.values[i]
    }

    /// Indices with a nonzero label, ascending.
    pub fn labeled_set(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, class: i8) -> usize {
        self.values.iter().filter(|v| **v == class).count()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }

    /// Copy with the given nodes set to unlabeled.
    pub fn hide(&self, nodes: &[usize]) -> Self {
        let mut values = self.values.clone();
        for &i in nodes {
            values[i] = 0;
        }
        LabelVector { values }
    }

    /// Fails unless at least one `+1` and one `-1` are present.
    pub fn require_both_classes(&self) -> Result<()> {
        if self.count(1) == 0 || self.count(-1) == 0 {
            return Err(Error::Validation(
                "labels must contain at least one positive and one negative node".into(),
            ));
        }
        Ok(())
    }
}
