use serde::{Deserialize, Serialize};

use crate::problem::LpProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
}

/// Optimal vertex of an [`LpProblem`].
///
/// `duals` satisfy `objective == rhs · duals`. `reduced_costs` are
/// nonnegative at optimality for both senses: `A^T y - c` when maximizing,
/// `c - A^T y` when minimizing. Basic columns carry a reduced cost of zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Structural columns in the final basis, ascending.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn dual_objective(&self, problem: &LpProblem) -> f64 {
        problem.rhs.iter().zip(&self.duals).map(|(b, y)| b * y).sum()
    }

    /// Largest `|A x - b|` entry.
    pub fn primal_residual(&self, problem: &LpProblem) -> f64 {
        problem
            .residual(&self.x)
            .into_iter()
            .fold(0.0, |acc, r| acc.max(r.abs()))
    }

    /// Largest `x_j * reduced_cost_j` product.
    pub fn complementarity_gap(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.reduced_costs)
            .fold(0.0, |acc, (x, d)| acc.max((x * d).abs()))
    }
}
