//! Finite-state Markov channel: validation, stationary statistics, sampling
//! and fixture generators.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    /// Rate of each state, strictly increasing.
    pub states: Vec<f64>,
    /// Row-stochastic `states.len() x states.len()` matrix.
    pub transition: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelDiagnostic {
    Empty,
    NotSquare { row: usize, len: usize },
    NegativeRate { state: usize },
    NotIncreasing { state: usize },
    BadEntry { row: usize, col: usize, value: f64 },
    NotStochastic { row: usize, sum: f64 },
    Reducible { unreachable_from_0: Vec<usize> },
}

impl fmt::Display for ChannelDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "no channel states"),
            Self::NotSquare { row, len } => write!(f, "row {row} has {len} entries"),
            Self::NegativeRate { state } => write!(f, "state {state} has a negative rate"),
            Self::NotIncreasing { state } => write!(f, "state {state} is not above its predecessor"),
            Self::BadEntry { row, col, value } => write!(f, "entry ({row}, {col}) = {value} outside [0, 1]"),
            Self::NotStochastic { row, sum } => write!(f, "row {row} sums to {sum}, not stochastic"),
            Self::Reducible { unreachable_from_0 } => {
                write!(f, "reducible: states {unreachable_from_0:?} unreachable from state 0")
            }
        }
    }
}

impl ChannelModel {
    pub fn new(states: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let model = Self { states, transition };
        model.validate().map_err(ModelError::InvalidChannel)?;
        Ok(model)
    }

    pub fn constant(rate: f64) -> Self {
        Self {
            states: vec![rate],
            transition: vec![vec![1.0]],
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn max_rate(&self) -> f64 {
        self.states.iter().copied().fold(0.0, f64::max)
    }

    /// Lists every violated property; `Ok` only for a sorted, row-stochastic,
    /// irreducible chain.
    pub fn validate(&self) -> std::result::Result<(), Vec<ChannelDiagnostic>> {
        let n = self.states.len();
        if n == 0 {
            return Err(vec![ChannelDiagnostic::Empty]);
        }
        let mut diags = Vec::new();
        for (i, &c) in self.states.iter().enumerate() {
            if !(c >= 0.0) || !c.is_finite() {
                diags.push(ChannelDiagnostic::NegativeRate { state: i });
            }
            if i > 0 && !(c > self.states[i - 1]) {
                diags.push(ChannelDiagnostic::NotIncreasing { state: i });
            }
        }
        if self.transition.len() != n {
            diags.push(ChannelDiagnostic::NotSquare {
                row: self.transition.len(),
                len: 0,
            });
            return Err(diags);
        }
        let mut shape_ok = true;
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != n {
                diags.push(ChannelDiagnostic::NotSquare { row: i, len: row.len() });
                shape_ok = false;
                continue;
            }
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    diags.push(ChannelDiagnostic::BadEntry {
                        row: i,
                        col: j,
                        value: p,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                diags.push(ChannelDiagnostic::NotStochastic { row: i, sum });
            }
        }
        if shape_ok {
            let unreachable = self.unreachable_sets();
            if !unreachable.is_empty() {
                diags.push(ChannelDiagnostic::Reducible {
                    unreachable_from_0: unreachable,
                });
            }
        }
        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }

    /// States not reachable from state 0, or (if all are) the states that
    /// cannot reach back to 0.
    fn unreachable_sets(&self) -> Vec<usize> {
        let n = self.states.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let p = if forward {
                        self.transition[i][j]
                    } else {
                        self.transition[j][i]
                    };
                    if p > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen
        };
        let fwd = reach(true);
        let missing: Vec<usize> = (0..n).filter(|&i| !fwd[i]).collect();
        if !missing.is_empty() {
            return missing;
        }
        let back = reach(false);
        (0..n).filter(|&i| !back[i]).collect()
    }

    /// Solves `pi^T P = pi^T`, `sum(pi) = 1` by Gaussian elimination.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        self.validate().map_err(ModelError::InvalidChannel)?;
        let n = self.states.len();
        // rows of (P^T - I) with the last equation replaced by normalization
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = (0..n).map(|j| self.transition[j][i]).collect();
                row[i] -= 1.0;
                row.push(0.0);
                row
            })
            .collect();
        a[n - 1] = vec![1.0; n + 1];
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, piv);
            let p = a[col][col];
            if p.abs() < 1e-300 {
                return Err(ModelError::InvalidArgument("singular balance equations".into()));
            }
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / p;
                    if f != 0.0 {
                        for k in col..=n {
                            a[r][k] -= f * a[col][k];
                        }
                    }
                }
            }
        }
        Ok((0..n).map(|i| (a[i][n] / a[i][i]).max(0.0)).collect())
    }

    /// `c_avg = sum_i pi_i C_i`.
    pub fn avg_rate(&self) -> Result<f64> {
        let pi = self.stationary_distribution()?;
        Ok(pi.iter().zip(&self.states).map(|(p, c)| p * c).sum())
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> usize {
        sample_discrete(&self.transition[current], rng)
    }

    /// Symmetric birth-death chain: each state moves to each neighbour with
    /// probability `mix`. The matrix is doubly stochastic, so the stationary
    /// distribution is uniform and `c_avg` is the plain mean of `states`.
    pub fn birth_death(states: Vec<f64>, mix: f64) -> Result<Self> {
        Self::tilted_birth_death(states, mix, 1.0)
    }

    /// Reversible birth-death chain whose stationary law is proportional to
    /// `tilt^i`: up-moves have probability `2 mix tilt / (1 + tilt)`, down-moves
    /// `2 mix / (1 + tilt)`. `tilt = 1` is [`ChannelModel::birth_death`].
    pub fn tilted_birth_death(states: Vec<f64>, mix: f64, tilt: f64) -> Result<Self> {
        if !(mix > 0.0 && mix <= 0.5) || !(tilt > 0.0) || !tilt.is_finite() {
            return Err(ModelError::InvalidArgument(format!(
                "birth-death parameters out of range (mix {mix}, tilt {tilt})"
            )));
        }
        let n = states.len();
        let up = 2.0 * mix * tilt / (1.0 + tilt);
        let down = 2.0 * mix / (1.0 + tilt);
        let mut p = vec![vec![0.0; n]; n];
        for i in 0..n {
            if i + 1 < n {
                p[i][i + 1] = up;
            }
            if i > 0 {
                p[i][i - 1] = down;
            }
            let off: f64 = p[i].iter().sum();
            p[i][i] = 1.0 - off;
        }
        Self::new(states, p)
    }

    /// Birth-death chain over `states` with average rate `target`, found by
    /// bisection on the tilt. `target` must lie strictly between the lowest
    /// and highest rate.
    pub fn with_average_rate(states: Vec<f64>, mix: f64, target: f64) -> Result<Self> {
        let lo_rate = states.first().copied().unwrap_or(0.0);
        let hi_rate = states.last().copied().unwrap_or(0.0);
        if !(target > lo_rate && target < hi_rate) {
            return Err(ModelError::InvalidArgument(format!(
                "target average {target} outside ({lo_rate}, {hi_rate})"
            )));
        }
        let avg = |log_tilt: f64| -> Result<f64> {
            Self::tilted_birth_death(states.clone(), mix, log_tilt.exp())?.avg_rate()
        };
        let (mut lo, mut hi) = (-30.0f64, 30.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if avg(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        Self::tilted_birth_death(states, mix, (0.5 * (lo + hi)).exp())
    }
}

/// Draws an index from a probability row using one uniform variate.
pub fn sample_discrete<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

/// Whole sub-segments of size `layer_rate` that fit in one slot of length
/// `slot` at rate `rate`. Leftover capacity is discarded.
pub fn sub_segments_deliverable(rate: f64, slot: f64, layer_rate: f64) -> usize {
    if !(rate > 0.0 && slot > 0.0 && layer_rate > 0.0) {
        return 0;
    }
    let x = rate * slot / layer_rate;
    // absorb round-off such as 0.3 * 10 / 1 = 2.9999999999999996
    (x * (1.0 + 1e-12)).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_reducible() {
        let m = ChannelModel {
            states: vec![1.0, 2.0],
            transition: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        let d = m.validate().unwrap_err();
        assert!(matches!(d[0], ChannelDiagnostic::Reducible { .. }));
    }

    #[test]
    fn short_row_sum_is_flagged() {
        let m = ChannelModel {
            states: vec![1.0, 2.0],
            transition: vec![vec![0.5, 0.49], vec![0.5, 0.5]],
        };
        let d = m.validate().unwrap_err();
        assert!(d
            .iter()
            .any(|x| matches!(x, ChannelDiagnostic::NotStochastic { row: 0, .. })));
    }

    #[test]
    fn every_violation_is_listed() {
        let m = ChannelModel {
            states: vec![2.0, 1.0],
            transition: vec![vec![1.5, -0.5], vec![0.5, 0.6]],
        };
        let d = m.validate().unwrap_err();
        assert!(d
            .iter()
            .any(|x| matches!(x, ChannelDiagnostic::NotIncreasing { state: 1 })));
        assert!(d
            .iter()
            .any(|x| matches!(x, ChannelDiagnostic::BadEntry { row: 0, col: 0, .. })));
        assert!(d
            .iter()
            .any(|x| matches!(x, ChannelDiagnostic::NotStochastic { row: 1, .. })));
    }

    #[test]
    fn doubly_stochastic_fixture_is_uniform() {
        let m = ChannelModel::birth_death(vec![1.0, 2.0, 5.0, 10.0], 0.25).unwrap();
        let pi = m.stationary_distribution().unwrap();
        for p in &pi {
            assert!((p - 0.25).abs() < 1e-12);
        }
        assert!((m.avg_rate().unwrap() - 4.5).abs() < 1e-12);
        for j in 0..4 {
            let col: f64 = (0..4).map(|i| m.transition[i][j]).sum();
            assert!((col - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_state_balance_by_hand() {
        let m = ChannelModel::new(vec![1.0, 2.0], vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let pi = m.stationary_distribution().unwrap();
        assert!((pi[0] - 0.75).abs() < 1e-12 && (pi[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn single_state() {
        let m = ChannelModel::constant(10.0);
        assert_eq!(m.stationary_distribution().unwrap(), vec![1.0]);
        assert_eq!(m.avg_rate().unwrap(), 10.0);
    }

    #[test]
    fn tilted_chain_hits_target_average() {
        for target in [2.55, 3.0, 4.5, 7.0] {
            let m = ChannelModel::with_average_rate(vec![1.0, 2.0, 5.0, 10.0], 0.25, target).unwrap();
            assert!((m.avg_rate().unwrap() - target).abs() < 1e-9);
        }
        assert!(ChannelModel::with_average_rate(vec![1.0, 2.0], 0.25, 2.0).is_err());
    }

    #[test]
    fn deliverable_sub_segments() {
        assert_eq!(sub_segments_deliverable(1.0, 1.0, 1.0), 1);
        assert_eq!(sub_segments_deliverable(10.0, 1.0, 1.0), 10);
        assert_eq!(sub_segments_deliverable(1.0, 0.5, 1.0), 0);
        assert_eq!(sub_segments_deliverable(0.3, 10.0, 1.0), 3);
    }

    #[test]
    fn deterministic_rows_sample_deterministically() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let id = ChannelModel {
            states: vec![1.0, 2.0, 3.0],
            transition: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        };
        for _ in 0..100 {
            assert_eq!(id.sample_next(2, &mut rng), 2);
        }
        for _ in 0..100 {
            assert_eq!(sample_discrete(&[0.0, 1.0, 0.0, 0.0], &mut rng), 1);
        }
    }

    #[test]
    fn fair_row_splits_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let ones = (0..n).filter(|_| sample_discrete(&[0.5, 0.5], &mut rng) == 1).count();
        assert!(((ones as f64 / n as f64) - 0.5).abs() < 0.01);
    }
}
