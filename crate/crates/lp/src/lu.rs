//! Sparse LU factorization of simplex bases with Markowitz pivot selection
//! and threshold partial pivoting.
//!
//! The factorization is stored as a sequence of elimination steps. Step `k`
//! pivots on row `p_k`, column `q_k`; its `L` part holds the multipliers used
//! to eliminate column `q_k` from the remaining rows, and its `U` part holds
//! the off-diagonal entries of row `p_k` at the time it was pivoted.

/// Pivot candidates must satisfy `|a_pq| >= THRESHOLD * max_i |a_iq|`.
const THRESHOLD: f64 = 0.1;
/// Entries at or below this magnitude are treated as structurally zero.
const DROP_TOL: f64 = 1e-14;
/// Columns whose largest active entry is below this are declared dependent.
const PIVOT_TOL: f64 = 1e-10;
/// Number of shortest columns examined per Markowitz search.
const SEARCH_COLUMNS: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct SparseLu {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    pivot_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

/// Rank deficiency report: which input columns could not be pivoted and
/// which rows were left without a pivot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Singular {
    pub dependent_cols: Vec<usize>,
    pub free_rows: Vec<usize>,
}

impl SparseLu {
    /// Factorizes the `m x k` matrix given by `columns` (`k <= m`). Succeeds
    /// only when the matrix is square and numerically nonsingular.
    pub(crate) fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        let k = columns.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut col_rows: Vec<Vec<usize>> = Vec::with_capacity(k);
        let mut col_count = vec![0usize; k];
        for (j, col) in columns.iter().enumerate() {
            let mut pattern = Vec::with_capacity(col.len());
            for &(i, v) in col {
                if v.abs() > DROP_TOL {
                    rows[i].push((j, v));
                    pattern.push(i);
                    col_count[j] += 1;
                }
            }
            col_rows.push(pattern);
        }

        let mut row_active = vec![true; m];
        let mut col_active = vec![true; k];
        let mut dependent = Vec::new();

        let mut lu = SparseLu {
            m,
            pivot_row: Vec::with_capacity(m),
            pivot_col: Vec::with_capacity(m),
            pivot_val: Vec::with_capacity(m),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
        };

        // dense scatter of the pivot row plus per-row visit stamps
        let mut work = vec![0.0f64; k];
        let mut work_mark = vec![usize::MAX; k];
        let mut seen = vec![usize::MAX; k];
        let mut row_stamp = vec![usize::MAX; m];
        let mut stamp = 0usize;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut remaining = k;

        while remaining > 0 {
            // shortest active columns first
            let mut best: Vec<(usize, usize)> = Vec::with_capacity(SEARCH_COLUMNS + 1);
            for j in 0..k {
                if !col_active[j] {
                    continue;
                }
                let c = col_count[j];
                if best.len() < SEARCH_COLUMNS || c < best[best.len() - 1].0 {
                    let pos = best.partition_point(|&(bc, _)| bc <= c);
                    best.insert(pos, (c, j));
                    best.truncate(SEARCH_COLUMNS);
                }
            }

            let mut choice: Option<(usize, usize, f64, usize)> = None; // (row, col, val, cost)
            let mut zero_col = None;
            for &(count, j) in &best {
                stamp += 1;
                entries.clear();
                let mut col_max = 0.0f64;
                for &i in &col_rows[j] {
                    if !row_active[i] || row_stamp[i] == stamp {
                        continue;
                    }
                    row_stamp[i] = stamp;
                    if let Some(&(_, v)) = rows[i].iter().find(|&&(c, _)| c == j) {
                        col_max = col_max.max(v.abs());
                        entries.push((i, v));
                    }
                }
                if col_max <= PIVOT_TOL {
                    zero_col = Some(j);
                    break;
                }
                for &(i, v) in &entries {
                    if v.abs() < THRESHOLD * col_max {
                        continue;
                    }
                    let cost = (rows[i].len() - 1) * (count.max(1) - 1);
                    let better = match choice {
                        None => true,
                        Some((_, _, bv, bc)) => cost < bc || (cost == bc && v.abs() > bv.abs()),
                    };
                    if better {
                        choice = Some((i, j, v, cost));
                    }
                }
                if matches!(choice, Some((_, _, _, 0))) {
                    break;
                }
            }

            if let Some(j) = zero_col {
                col_active[j] = false;
                dependent.push(j);
                remaining -= 1;
                // drop its leftover tiny entries from the active rows
                for &i in &col_rows[j] {
                    if row_active[i] {
                        rows[i].retain(|&(c, _)| c != j);
                    }
                }
                continue;
            }

            let (p, q, piv, _) = choice.expect("an active column always yields a candidate");

            // scatter pivot row
            for &(j, v) in &rows[p] {
                work[j] = v;
                work_mark[j] = p;
            }

            let pivot_entries = std::mem::take(&mut rows[p]);
            stamp += 1;
            let col_q = std::mem::take(&mut col_rows[q]);
            for &i in &col_q {
                if i == p || !row_active[i] || row_stamp[i] == stamp {
                    continue;
                }
                row_stamp[i] = stamp;
                let Some(a_iq) = rows[i].iter().find(|&&(c, _)| c == q).map(|&(_, v)| v) else {
                    continue;
                };
                let mult = a_iq / piv;
                lu.l_idx.push(i);
                lu.l_val.push(mult);

                let row = &mut rows[i];
                let mut w = 0;
                for r in 0..row.len() {
                    let (j, v) = row[r];
                    if j == q {
                        continue;
                    }
                    let nv = if work_mark[j] == p {
                        seen[j] = i;
                        v - mult * work[j]
                    } else {
                        v
                    };
                    if nv.abs() <= DROP_TOL {
                        col_count[j] -= 1;
                        continue;
                    }
                    row[w] = (j, nv);
                    w += 1;
                }
                row.truncate(w);
                for &(j, pv) in &pivot_entries {
                    if j == q || seen[j] == i {
                        continue;
                    }
                    let nv = -mult * pv;
                    if nv.abs() > DROP_TOL {
                        row.push((j, nv));
                        col_rows[j].push(i);
                        col_count[j] += 1;
                    }
                }
                // reset seen marks touched by this row
                for &(j, _) in &pivot_entries {
                    if seen[j] == i {
                        seen[j] = usize::MAX;
                    }
                }
            }

            for &(j, v) in &pivot_entries {
                work_mark[j] = usize::MAX;
                if j != q {
                    col_count[j] -= 1;
                    lu.u_idx.push(j);
                    lu.u_val.push(v);
                }
            }
            lu.l_start.push(lu.l_idx.len());
            lu.u_start.push(lu.u_idx.len());
            lu.pivot_row.push(p);
            lu.pivot_col.push(q);
            lu.pivot_val.push(piv);
            row_active[p] = false;
            col_active[q] = false;
            remaining -= 1;
        }

        if lu.pivot_row.len() == m && k == m {
            Ok(lu)
        } else {
            dependent.sort_unstable();
            let free_rows = (0..m).filter(|&i| row_active[i]).collect();
            Err(Singular {
                dependent_cols: dependent,
                free_rows,
            })
        }
    }

    /// Solves `B x = rhs` in place: `rhs` is indexed by row on entry and by
    /// basis position on exit.
    pub(crate) fn solve(&self, rhs: &mut Vec<f64>) {
        let y = rhs;
        for k in 0..self.pivot_row.len() {
            let v = y[self.pivot_row[k]];
            if v != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    y[self.l_idx[t]] -= self.l_val[t] * v;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for k in (0..self.pivot_row.len()).rev() {
            let mut s = y[self.pivot_row[k]];
            for t in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[t] * x[self.u_idx[t]];
            }
            x[self.pivot_col[k]] = s / self.pivot_val[k];
        }
        *y = x;
    }

    /// Solves `B^T y = c` in place: `c` is indexed by basis position on entry
    /// and by row on exit.
    pub(crate) fn solve_transpose(&self, c: &mut Vec<f64>) {
        let w = c;
        let mut z = vec![0.0; self.m];
        for k in 0..self.pivot_row.len() {
            let zk = w[self.pivot_col[k]] / self.pivot_val[k];
            z[self.pivot_row[k]] = zk;
            if zk != 0.0 {
                for t in self.u_start[k]..self.u_start[k + 1] {
                    w[self.u_idx[t]] -= self.u_val[t] * zk;
                }
            }
        }
        for k in (0..self.pivot_row.len()).rev() {
            let mut s = 0.0;
            for t in self.l_start[k]..self.l_start[k + 1] {
                s += self.l_val[t] * z[self.l_idx[t]];
            }
            z[self.pivot_row[k]] -= s;
        }
        *w = z;
    }

    #[cfg(test)]
    pub(crate) fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.pivot_row.len()
    }
}
