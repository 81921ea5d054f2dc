//! Per-graph weight inference through the convex dual
//!
//! ```text
//! min_w  (Cy)' (C + sum_k w_k L_k)^{-1} (Cy) + c * sum_k w_k
//! s.t.   0 <= w_k <= c0
//! ```
//!
//! With `f = (C + sum_k w_k L_k)^{-1} C y` the objective is `(Cy)' f + c |w|_1`
//! and its partial derivatives are `-f' L_k f + c`, so one composite solve
//! yields both the value and the full gradient.

use crate::error::{Error, Result};
use crate::graph::{check_len, LabelVector, Laplacian};
use crate::solver::{solve_auto, CompositeOperator, DEFAULT_TOLERANCE};

/// Per-graph weights inside the box `[0, c0]^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    c0: f64,
}

impl WeightVector {
    pub fn new(values: Vec<f64>, c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::Validation(format!("box bound c0 = {c0} must be positive")));
        }
        if let Some(k) = values.iter().position(|w| !(0.0..=c0).contains(w)) {
            return Err(Error::Validation(format!(
                "weight {k} = {} outside [0, {c0}]",
                values[k]
            )));
        }
        Ok(WeightVector { values, c0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Clamps every component into `[0, c0]`. NaN components map to 0.
pub fn project_box(w: &[f64], c0: f64) -> WeightVector {
    let values = w
        .iter()
        .map(|&v| if v.is_nan() { 0.0 } else { v.clamp(0.0, c0) })
        .collect();
    WeightVector { values, c0 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConfig {
    /// Coefficient of the L1 term; the per-graph smoothness budget.
    pub c: f64,
    /// Upper bound on each weight.
    pub c0: f64,
    /// Trial step of the first iteration.
    pub step_size: f64,
    pub max_iter: usize,
    /// Stop once the projected gradient's max-norm falls to this value.
    pub grad_tol: f64,
    /// Relative residual for the inner linear solves.
    pub solver_tol: f64,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig {
            c: 0.01,
            c0: 10.0,
            step_size: 1.0,
            max_iter: 300,
            grad_tol: 1e-6,
            solver_tol: DEFAULT_TOLERANCE,
        }
    }
}

impl DualConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.c) || !positive(self.c0) || !positive(self.step_size) {
            return Err(Error::Config(format!(
                "c, c0 and step_size must be positive (got {}, {}, {})",
                self.c, self.c0, self.step_size
            )));
        }
        if !(self.grad_tol >= 0.0) || !positive(self.solver_tol) {
            return Err(Error::Config("grad_tol and solver_tol must be nonnegative/positive".into()));
        }
        Ok(())
    }
}

/// Value, gradient and label estimate at one weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub estimate: Vec<f64>,
}

/// The dual for a fixed set of Laplacians, labels and penalty diagonal.
pub struct DualProblem<'a> {
    penalty: &'a [f64],
    laplacians: &'a [&'a Laplacian],
    rhs: Vec<f64>,
    c: f64,
    solver_tol: f64,
}

impl<'a> DualProblem<'a> {
    pub fn new(
        penalty: &'a [f64],
        laplacians: &'a [&'a Laplacian],
        y: &LabelVector,
        c: f64,
    ) -> Result<Self> {
        check_len(penalty.len(), y.len())?;
        let rhs = y
            .values()
            .iter()
            .zip(penalty)
            .map(|(&yi, ci)| ci * f64::from(yi))
            .collect();
        Ok(DualProblem {
            penalty,
            laplacians,
            rhs,
            c,
            solver_tol: DEFAULT_TOLERANCE,
        })
    }

    pub fn with_solver_tol(mut self, tol: f64) -> Self {
        self.solver_tol = tol;
        self
    }

    pub fn m(&self) -> usize {
        self.laplacians.len()
    }

    fn solve_estimate(&self, w: &[f64]) -> Result<Vec<f64>> {
        let op = CompositeOperator::new(self.penalty, w, self.laplacians)?;
        solve_auto(&op, &self.rhs, self.solver_tol)
    }

    pub fn objective(&self, w: &[f64]) -> Result<f64> {
        let f = self.solve_estimate(w)?;
        Ok(self.objective_from(w, &f))
    }

    fn objective_from(&self, w: &[f64], f: &[f64]) -> f64 {
        let fit: f64 = self.rhs.iter().zip(f).map(|(a, b)| a * b).sum();
        fit + self.c * w.iter().sum::<f64>()
    }

    pub fn evaluate(&self, w: &[f64]) -> Result<DualPoint> {
        let f = self.solve_estimate(w)?;
        let objective = self.objective_from(w, &f);
        let gradient = self
            .laplacians
            .iter()
            .map(|lap| self.c - lap.quadratic_form_unchecked(&f))
            .collect();
        Ok(DualPoint {
            objective,
            gradient,
            estimate: f,
        })
    }
}

/// `(Cy)' (C + sum_k w_k L_k)^{-1} (Cy) + c |w|_1`.
pub fn dual_objective(
    w: &WeightVector,
    penalty: &[f64],
    laplacians: &[&Laplacian],
    y: &LabelVector,
    c: f64,
) -> Result<f64> {
    check_len(laplacians.len(), w.len())?;
    DualProblem::new(penalty, laplacians, y, c)?.objective(w.values())
}

/// `g_k = c - f' L_k f`, sharing one solve across all components.
pub fn dual_gradient(
    w: &WeightVector,
    penalty: &[f64],
    laplacians: &[&Laplacian],
    y: &LabelVector,
    c: f64,
) -> Result<Vec<f64>> {
    check_len(laplacians.len(), w.len())?;
    Ok(DualProblem::new(penalty, laplacians, y, c)?
        .evaluate(w.values())?
        .gradient)
}

/// Output of [`optimize_weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFit {
    pub weights: WeightVector,
    /// Objective at the start point and after every accepted step.
    pub trace: Vec<f64>,
    /// Label estimate at the returned weights.
    pub estimate: Vec<f64>,
    pub iterations: usize,
    /// Projected-gradient norm reached `grad_tol`.
    pub converged: bool,
    /// Backtracking failed to find a decrease; the returned point is the
    /// last accepted iterate.
    pub stagnated: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

fn projected_gradient_norm(w: &[f64], g: &[f64], c0: f64) -> f64 {
    w.iter()
        .zip(g)
        .map(|(&wk, &gk)| (wk - (wk - gk).clamp(0.0, c0)).abs())
        .fold(0.0, f64::max)
}

/// Minimizes the dual over `[0, c0]^m` by projected gradient descent with
/// Armijo backtracking, starting from the box center.
///
/// The first trial step is `cfg.step_size`; later iterations start from the
/// Barzilai-Borwein step of the previous move (or double the last accepted
/// step when curvature is not positive). Backtracking halves the trial until
/// sufficient decrease holds, so the objective trace never increases.
pub fn optimize_weights(
    laplacians: &[&Laplacian],
    y: &LabelVector,
    penalty: &[f64],
    cfg: &DualConfig,
) -> Result<WeightFit> {
    cfg.validate()?;
    let problem = DualProblem::new(penalty, laplacians, y, cfg.c)?.with_solver_tol(cfg.solver_tol);
    let m = problem.m();
    let mut w = vec![cfg.c0 / 2.0; m];
    let mut point = problem.evaluate(&w)?;
    let mut trace = vec![point.objective];
    let mut step = cfg.step_size;
    let mut converged = false;
    let mut stagnated = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        if projected_gradient_norm(&w, &point.gradient, cfg.c0) <= cfg.grad_tol {
            converged = true;
            break;
        }
        let mut trial = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate: Vec<f64> = w
                .iter()
                .zip(&point.gradient)
                .map(|(&wk, &gk)| (wk - trial * gk).clamp(0.0, cfg.c0))
                .collect();
            let decrease: f64 = point
                .gradient
                .iter()
                .zip(candidate.iter().zip(&w))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            if decrease == 0.0 {
                break;
            }
            let next = problem.evaluate(&candidate)?;
            if next.objective <= point.objective + ARMIJO * decrease {
                accepted = Some((candidate, next));
                break;
            }
            trial *= 0.5;
        }
        let Some((candidate, next)) = accepted else {
            stagnated = true;
            break;
        };
        iterations += 1;

        let s: Vec<f64> = candidate.iter().zip(&w).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = next
            .gradient
            .iter()
            .zip(&point.gradient)
            .map(|(a, b)| a - b)
            .collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s.iter().zip(&yk).map(|(a, b)| a * b).sum();
        step = if sy > 0.0 && ss > 0.0 {
            (ss / sy).clamp(1e-10, 1e10)
        } else {
            (trial * 2.0).min(1e10)
        };

        w = candidate;
        point = next;
        trace.push(point.objective);
    }
    if !converged && !stagnated {
        converged = projected_gradient_norm(&w, &point.gradient, cfg.c0) <= cfg.grad_tol;
    }

    Ok(WeightFit {
        weights: WeightVector { values: w, c0: cfg.c0 },
        trace,
        estimate: point.estimate,
        iterations,
        converged,
        stagnated,
    })
}
