//! Compressed-row transition matrices.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::qa::PolicyMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds from per-row `(col, value)` lists; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let start = col_idx.len();
            for (j, v) in row {
                assert!(j < n_cols, "column {j} out of range");
                if col_idx.len() > start && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            // drop entries that cancelled or were zero to begin with
            let mut k = start;
            for t in start..col_idx.len() {
                if values[t] != 0.0 {
                    col_idx[k] = col_idx[t];
                    values[k] = values[t];
                    k += 1;
                }
            }
            col_idx.truncate(k);
            values.truncate(k);
            row_ptr.push(k);
        }
        Self {
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v >= 0.0) && self.row_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows()];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// `C ⊗ P` for a dense channel matrix `C` and a 0/1 policy matrix `P`.
    pub fn kron_policy(channel: &[Vec<f64>], policy: &PolicyMatrix) -> Self {
        let b = policy.dim();
        let n = channel.len();
        let mut rows = Vec::with_capacity(n * b);
        for ci in channel {
            for i in 0..b {
                let j = policy.targets[i];
                rows.push(
                    ci.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(cj, &p)| (cj * b + j, p))
                        .collect(),
                );
            }
        }
        Self::from_rows(n * b, rows)
    }

    /// Block matrix whose `(ci, cj)` block is `C[ci][cj] * P(ci)`.
    pub fn block_policy(channel: &[Vec<f64>], policies: &[PolicyMatrix]) -> Result<Self> {
        let n = channel.len();
        if policies.len() != n {
            return Err(ModelError::Dimension(format!(
                "{} policy matrices for {n} channel states",
                policies.len()
            )));
        }
        let b = policies.first().map_or(0, PolicyMatrix::dim);
        if policies.iter().any(|p| p.dim() != b) {
            return Err(ModelError::Dimension("policy matrices differ in size".into()));
        }
        let mut rows = Vec::with_capacity(n * b);
        for (ci, row) in channel.iter().enumerate() {
            for i in 0..b {
                let j = policies[ci].targets[i];
                rows.push(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(cj, &p)| (cj * b + j, p))
                        .collect(),
                );
            }
        }
        Ok(Self::from_rows(n * b, rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_rows_merges_and_drops() {
        let m = TransitionMatrix::from_rows(3, vec![vec![(2, 0.5), (0, 0.25), (2, 0.25)], vec![(1, 0.0)]]);
        assert_eq!(m.row(0).collect::<Vec<_>>(), vec![(0, 0.25), (2, 0.75)]);
        assert_eq!(m.row(1).count(), 0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn kron_with_scalar_is_identity_map() {
        let p = PolicyMatrix { targets: vec![0, 0, 1] };
        let m = TransitionMatrix::kron_policy(&[vec![1.0]], &p);
        assert_eq!(m.to_dense(), p.to_transition().to_dense());
    }

    #[test]
    fn kron_matches_dense_definition() {
        let c = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
        let p = PolicyMatrix { targets: vec![1, 1, 0] };
        let pd = p.to_transition().to_dense();
        let m = TransitionMatrix::kron_policy(&c, &p).to_dense();
        for a in 0..2 {
            for i in 0..3 {
                for bb in 0..2 {
                    for j in 0..3 {
                        assert_eq!(m[a * 3 + i][bb * 3 + j], c[a][bb] * pd[i][j]);
                    }
                }
            }
        }
    }

    #[test]
    fn block_policy_rejects_missing_state() {
        let c = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let p = PolicyMatrix { targets: vec![0] };
        assert!(TransitionMatrix::block_policy(&c, &[p]).is_err());
    }
}
