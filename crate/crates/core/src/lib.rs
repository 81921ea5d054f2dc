//! Robust semi-supervised node classification on multi-relational graphs.
//!
//! A multi-graph is a set of views (relations) over one node set. Given a few
//! labeled nodes, the library infers per-view weights by solving a convex
//! dual over the views' normalized Laplacians and estimates labels for the
//! remaining nodes. Views that are noisy or irrelevant tend to receive large
//! weights in that dual, so [`robust::robust_multi_sc`] searches over view
//! subsets with simulated annealing, removing large-weight views one at a
//! time and keeping the subset with the best cross-validated average
//! precision.
//!
//! Module map:
//!
//! | module | contents |
//! |---|---|
//! | [`graph`] | sparse views, normalized Laplacians, label vectors |
//! | [`solver`] | matrix-free conjugate gradients on `C + sum w_k L_k` |
//! | [`dual`] | dual objective, gradient, projected gradient descent |
//! | [`search`], [`robust`], [`cv`] | annealed graph-set search and its scorer |
//! | [`noise`], [`synthetic`] | intrusive-graph generators and test datasets |
//! | [`metrics`], [`params`], [`sampling`], [`baselines`] | evaluation and comparison methods |
//! | [`experiment`] | experiment runners and CSV outputs |

pub mod baselines;
pub mod cv;
pub mod dual;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod params;
pub mod robust;
pub mod sampling;
pub mod search;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};
pub use graph::{Adjacency, GraphView, LabelVector, Laplacian, MultiGraph};
