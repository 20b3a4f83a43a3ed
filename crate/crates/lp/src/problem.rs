//! Equality-form linear programs: `opt c·x  s.t.  A x = b,  x >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::LpError;

/// Schema tag written into every serialized problem.
pub const PROBLEM_SCHEMA: &str = "svcrb.lp/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

/// One sparse column of the constraint matrix, entries sorted by row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseColumn {
    pub rows: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseColumn {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(r, v)| v * dense[r]).sum()
    }

    pub fn nnz(&self) -> usize {
        self.rows.len()
    }
}

/// A linear program in standard equality form with nonnegative variables.
///
/// Columns are stored sparsely. `crash_basis` optionally names columns that
/// form a good starting basis; the solver completes it with artificial
/// columns and discards it if it is not primal feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub columns: Vec<SparseColumn>,
    pub rhs: Vec<f64>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
    pub crash_basis: Vec<usize>,
}

impl LpProblem {
    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseColumn::nnz).sum()
    }

    /// Checks dimensions, finiteness and index ranges.
    pub fn validate(&self) -> Result<(), LpError> {
        let m = self.num_rows();
        let n = self.num_cols();
        if self.columns.len() != n {
            return Err(LpError::InvalidProblem(format!(
                "{} objective coefficients but {} columns",
                n,
                self.columns.len()
            )));
        }
        if self.col_names.len() != n || self.row_names.len() != m {
            return Err(LpError::InvalidProblem("name table size mismatch".into()));
        }
        if let Some(i) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::InvalidProblem(format!("objective[{i}] is not finite")));
        }
        if let Some(i) = self.rhs.iter().position(|b| !b.is_finite()) {
            return Err(LpError::InvalidProblem(format!("rhs[{i}] is not finite")));
        }
        for (j, col) in self.columns.iter().enumerate() {
            if col.rows.len() != col.values.len() {
                return Err(LpError::InvalidProblem(format!("column {j} is ragged")));
            }
            for w in col.rows.windows(2) {
                if w[0] >= w[1] {
                    return Err(LpError::InvalidProblem(format!(
                        "column {j} rows not strictly increasing"
                    )));
                }
            }
            if let Some(&r) = col.rows.last() {
                if r >= m {
                    return Err(LpError::InvalidProblem(format!("column {j} references row {r} >= {m}")));
                }
            }
            if col.values.iter().any(|v| !v.is_finite()) {
                return Err(LpError::InvalidProblem(format!("column {j} has a non-finite entry")));
            }
        }
        if let Some(&j) = self.crash_basis.iter().find(|&&j| j >= n) {
            return Err(LpError::InvalidProblem(format!("crash basis column {j} out of range")));
        }
        Ok(())
    }

    /// `A x - b`, for residual checks that do not trust the solve path.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for (col, &xj) in self.columns.iter().zip(x) {
            if xj != 0.0 {
                for (i, v) in col.iter() {
                    r[i] += v * xj;
                }
            }
        }
        r
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// `A^T y`, one entry per column.
    pub fn transpose_product(&self, y: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| c.dot(y)).collect()
    }

    /// LP dual with free row multipliers split as `y = y_plus - y_minus`.
    ///
    /// For `max c·x, A x = b, x >= 0` this is `min b·y, A^T y >= c`, written
    /// in equality form with one surplus column per primal column. Columns
    /// are `y_plus` (one per row), then `y_minus`, then the surpluses.
    pub fn dual(&self) -> LpProblem {
        let m = self.num_rows();
        let n = self.num_cols();
        let (sense, surplus) = match self.sense {
            Sense::Maximize => (Sense::Minimize, -1.0),
            Sense::Minimize => (Sense::Maximize, 1.0),
        };
        let mut b = LpBuilder::new(sense);
        for i in 0..m {
            b.add_var(format!("{}+", self.row_names[i]), self.rhs[i]);
        }
        for i in 0..m {
            b.add_var(format!("{}-", self.row_names[i]), -self.rhs[i]);
        }
        for j in 0..n {
            b.add_var(format!("slack[{}]", self.col_names[j]), 0.0);
        }
        for (j, col) in self.columns.iter().enumerate() {
            let r = b.add_row(self.col_names[j].clone(), self.objective[j]);
            for (i, v) in col.iter() {
                b.add_coefficient(r, i, v);
                b.add_coefficient(r, m + i, -v);
            }
            b.add_coefficient(r, 2 * m + j, surplus);
        }
        b.build()
    }

    pub fn to_json(&self) -> LpProblemJson {
        let mut triplets = Vec::with_capacity(self.nnz());
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col.iter() {
                triplets.push((i, j, v));
            }
        }
        LpProblemJson {
            schema: PROBLEM_SCHEMA.to_string(),
            sense: self.sense,
            num_rows: self.num_rows(),
            num_cols: self.num_cols(),
            objective: self.objective.clone(),
            rhs: self.rhs.clone(),
            triplets,
            col_names: self.col_names.clone(),
            row_names: self.row_names.clone(),
            crash_basis: self.crash_basis.clone(),
        }
    }

    pub fn from_json(doc: LpProblemJson) -> Result<Self, LpError> {
        check_schema(&doc.schema, PROBLEM_SCHEMA)?;
        let mut b = LpBuilder::new(doc.sense);
        for (j, c) in doc.objective.iter().enumerate() {
            let name = doc.col_names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
            b.add_var(name, *c);
        }
        for (i, r) in doc.rhs.iter().enumerate() {
            let name = doc.row_names.get(i).cloned().unwrap_or_else(|| format!("r{i}"));
            b.add_row(name, *r);
        }
        if doc.num_rows != doc.rhs.len() || doc.num_cols != doc.objective.len() {
            return Err(LpError::InvalidProblem("declared dimensions disagree with data".into()));
        }
        for &(i, j, v) in &doc.triplets {
            if i >= doc.num_rows || j >= doc.num_cols {
                return Err(LpError::InvalidProblem(format!("triplet ({i}, {j}) out of range")));
            }
            b.add_coefficient(i, j, v);
        }
        let mut p = b.build();
        p.crash_basis = doc.crash_basis;
        p.validate()?;
        Ok(p)
    }
}

/// Documented JSON interchange form: objective, sparse `(row, col, value)`
/// triplets and right-hand side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpProblemJson {
    pub schema: String,
    pub sense: Sense,
    pub num_rows: usize,
    pub num_cols: usize,
    pub objective: Vec<f64>,
    pub rhs: Vec<f64>,
    pub triplets: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub col_names: Vec<String>,
    #[serde(default)]
    pub row_names: Vec<String>,
    #[serde(default)]
    pub crash_basis: Vec<usize>,
}

/// Accepts `name/MAJOR` tags whose name and major version match `expected`.
pub fn check_schema(found: &str, expected: &str) -> Result<(), LpError> {
    let split = |s: &str| -> Option<(String, u32)> {
        let (name, ver) = s.rsplit_once('/')?;
        let major = ver.split('.').next()?.parse().ok()?;
        Some((name.to_string(), major))
    };
    match (split(found), split(expected)) {
        (Some(f), Some(e)) if f == e => Ok(()),
        _ => Err(LpError::Schema {
            found: found.to_string(),
            expected: expected.to_string(),
        }),
    }
}

/// Incremental construction of an [`LpProblem`]; repeated coefficients for
/// the same `(row, col)` are summed.
#[derive(Debug, Clone)]
pub struct LpBuilder {
    sense: Sense,
    objective: Vec<f64>,
    col_names: Vec<String>,
    rhs: Vec<f64>,
    row_names: Vec<String>,
    entries: Vec<Vec<(usize, f64)>>,
}

impl LpBuilder {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            col_names: Vec::new(),
            rhs: Vec::new(),
            row_names: Vec::new(),
            entries: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, objective: f64) -> usize {
        self.objective.push(objective);
        self.col_names.push(name.into());
        self.entries.push(Vec::new());
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, rhs: f64) -> usize {
        self.rhs.push(rhs);
        self.row_names.push(name.into());
        self.rhs.len() - 1
    }

    pub fn add_coefficient(&mut self, row: usize, col: usize, value: f64) {
        self.entries[col].push((row, value));
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn build(self) -> LpProblem {
        let columns = self
            .entries
            .into_iter()
            .map(|mut e| {
                e.sort_by_key(|&(r, _)| r);
                let mut col = SparseColumn::default();
                for (r, v) in e {
                    if col.rows.last() == Some(&r) {
                        *col.values.last_mut().unwrap() += v;
                    } else {
                        col.rows.push(r);
                        col.values.push(v);
                    }
                }
                // exact cancellations leave structural zeros behind
                let keep: Vec<bool> = col.values.iter().map(|v| *v != 0.0).collect();
                if keep.iter().any(|k| !k) {
                    let mut it = keep.iter();
                    col.rows.retain(|_| *it.next().unwrap());
                    col.values.retain(|v| *v != 0.0);
                }
                col
            })
            .collect();
        LpProblem {
            sense: self.sense,
            objective: self.objective,
            columns,
            rhs: self.rhs,
            col_names: self.col_names,
            row_names: self.row_names,
            crash_basis: Vec::new(),
        }
    }
}
