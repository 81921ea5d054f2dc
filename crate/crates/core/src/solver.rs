//! Solves of `(C + sum_k w_k L_k) x = b`.
//!
//! Large systems are solved matrix-free: each operator application runs one
//! sparse product per view with nonzero weight, so cost is linear in the
//! total number of stored edges, and conjugate gradients use the operator's
//! diagonal as a Jacobi preconditioner. Systems with at most
//! [`DENSE_LIMIT`] nodes are assembled and factored by Cholesky instead,
//! which is faster at that size.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{check_len, LabelVector, Laplacian};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Largest node count routed to the dense factorization by [`solve_auto`].
pub const DENSE_LIMIT: usize = 256;

/// `C + sum_k w_k L_k` for a positive diagonal `C` and nonnegative `w`.
#[derive(Debug, Clone)]
pub struct CompositeOperator<'a> {
    penalty: &'a [f64],
    weights: &'a [f64],
    laplacians: &'a [&'a Laplacian],
}

impl<'a> CompositeOperator<'a> {
    pub fn new(
        penalty: &'a [f64],
        weights: &'a [f64],
        laplacians: &'a [&'a Laplacian],
    ) -> Result<Self> {
        check_len(laplacians.len(), weights.len())?;
        let n = penalty.len();
        for lap in laplacians {
            check_len(n, lap.n())?;
        }
        if let Some(i) = penalty.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Validation(format!(
                "penalty diagonal entry {i} = {} is not strictly positive",
                penalty[i]
            )));
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation(format!(
                "weight {k} = {} is negative or non-finite",
                weights[k]
            )));
        }
        Ok(CompositeOperator {
            penalty,
            weights,
            laplacians,
        })
    }

    pub fn n(&self) -> usize {
        self.penalty.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, c), xi) in out.iter_mut().zip(self.penalty).zip(x) {
            *o = c * xi;
        }
        for (lap, &w) in self.laplacians.iter().zip(self.weights) {
            if w != 0.0 {
                lap.mul_add(x, w, out);
            }
        }
    }

    /// `C x + sum_k w_k L_k x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), x.len())?;
        let mut out = vec![0.0; self.n()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// The assembled `n x n` matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut buf = vec![0.0; n * n];
        for (i, c) in self.penalty.iter().enumerate() {
            buf[i * n + i] = *c;
        }
        for (lap, &w) in self.laplacians.iter().zip(self.weights) {
            if w != 0.0 {
                lap.add_dense(w, &mut buf);
            }
        }
        // Symmetric, so row-major and column-major layouts coincide.
        DMatrix::from_vec(n, n, buf)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = self.penalty.to_vec();
        for (lap, &w) in self.laplacians.iter().zip(self.weights) {
            if w != 0.0 {
                for (i, d) in diag.iter_mut().enumerate() {
                    *d += w * lap.diagonal(i);
                }
            }
        }
        diag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `||b - A x|| / ||b||`, recomputed from the returned solution.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Default iteration budget for an `n`-node system.
pub fn default_max_iter(n: usize) -> usize {
    (10 * n).max(50)
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Returns `converged = false` rather than an error when `max_iter` runs out.
pub fn solve(
    op: &CompositeOperator<'_>,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let n = op.n();
    check_len(n, rhs.len())?;
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance must be positive, got {tol}")));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("right-hand side"));
    }
    let b_norm = norm(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(SolveReport {
            solution: x,
            residual_norm: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut rel = 1.0;

    while iterations < max_iter {
        op.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || pap <= 0.0 {
            if rel <= tol {
                break;
            }
            return Err(Error::Numeric("conjugate gradient curvature"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        rel = norm(&r) / b_norm;
        if !rel.is_finite() {
            return Err(Error::Numeric("conjugate gradient residual"));
        }
        if rel <= tol {
            // Guard against drift between the recurrence and the true residual.
            op.apply_into(&x, &mut ap);
            for i in 0..n {
                r[i] = rhs[i] - ap[i];
            }
            rel = norm(&r) / b_norm;
            if rel <= tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
                p[i] = z[i];
            }
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    op.apply_into(&x, &mut ap);
    let residual: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let residual_norm = norm(&residual) / b_norm;
    Ok(SolveReport {
        solution: x,
        residual_norm,
        iterations,
        converged: residual_norm <= tol,
    })
}

/// Direct solve by dense Cholesky factorization.
pub fn solve_dense(op: &CompositeOperator<'_>, rhs: &[f64]) -> Result<Vec<f64>> {
    check_len(op.n(), rhs.len())?;
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("right-hand side"));
    }
    let chol = op
        .to_dense()
        .cholesky()
        .ok_or(Error::Numeric("composite matrix is not positive definite"))?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("dense solution"));
    }
    Ok(x.as_slice().to_vec())
}

/// Dense Cholesky up to [`DENSE_LIMIT`] nodes, conjugate gradients above,
/// failing with [`Error::NotConverged`] if CG exhausts its budget.
pub fn solve_auto(op: &CompositeOperator<'_>, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if op.n() <= DENSE_LIMIT {
        return solve_dense(op, rhs);
    }
    let report = solve(op, rhs, tol, default_max_iter(op.n()))?;
    if !report.converged {
        return Err(Error::NotConverged {
            residual: report.residual_norm,
            iterations: report.iterations,
        });
    }
    Ok(report.solution)
}

/// `f = (C + sum_k w_k L_k)^{-1} C y` at the default tolerance.
pub fn estimate_labels(
    penalty: &[f64],
    weights: &[f64],
    laplacians: &[&Laplacian],
    y: &LabelVector,
) -> Result<Vec<f64>> {
    estimate_labels_with(penalty, weights, laplacians, y, DEFAULT_TOLERANCE)
}

pub fn estimate_labels_with(
    penalty: &[f64],
    weights: &[f64],
    laplacians: &[&Laplacian],
    y: &LabelVector,
    tol: f64,
) -> Result<Vec<f64>> {
    let op = CompositeOperator::new(penalty, weights, laplacians)?;
    check_len(op.n(), y.len())?;
    let rhs: Vec<f64> = y
        .values()
        .iter()
        .zip(penalty)
        .map(|(&yi, c)| c * f64::from(yi))
        .collect();
    solve_auto(&op, &rhs, tol)
}
