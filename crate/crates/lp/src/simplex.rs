//! Two-phase revised simplex over a sparse LU basis factorization with a
//! product-form eta file between refactorizations.
//!
//! Pricing is Dantzig's rule with a Harris two-pass ratio test. After a run
//! of consecutive degenerate pivots the solver switches to Bland's rule with
//! a textbook ratio test until a pivot makes progress again.

use serde::{Deserialize, Serialize};

use crate::error::LpError;
use crate::lu::SparseLu;
use crate::problem::{LpProblem, Sense};
use crate::solution::{LpSolution, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Consecutive degenerate pivots tolerated before Bland's rule kicks in.
    pub degenerate_pivot_limit: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// `None` picks `max(10_000, 20 * (rows + cols))`.
    pub max_iterations: Option<usize>,
    /// Eta updates accumulated before the basis is refactorized.
    pub refactor_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            degenerate_pivot_limit: 50,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            max_iterations: None,
            refactor_interval: 64,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), LpError> {
        if !(self.feasibility_tol > 0.0) || !(self.optimality_tol > 0.0) {
            return Err(LpError::InvalidOptions("tolerances must be positive".into()));
        }
        if self.refactor_interval == 0 {
            return Err(LpError::InvalidOptions("refactor_interval must be >= 1".into()));
        }
        Ok(())
    }
}

const PIVOT_TOL: f64 = 1e-7;
const MAX_RESTARTS: usize = 5;
/// Relative size of the right-hand-side lift used against degeneracy.
const PERTURBATION: f64 = 1e-8;

/// Deterministic value in `[0, 1)` derived from `i` (splitmix64 finalizer).
fn unit_hash(i: u64) -> f64 {
    let mut z = i.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone)]
struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

struct Simplex<'a> {
    lp: &'a LpProblem,
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    row_sign: Vec<f64>,
    b: Vec<f64>,
    art_sign: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<usize>,
    xb: Vec<f64>,
    lu: SparseLu,
    etas: Vec<Eta>,
    iterations: usize,
    max_iterations: usize,
    cost_scale: f64,
    phase_two: bool,
    repaired: bool,
}

enum PhaseOutcome {
    Optimal,
    Restart,
    Unbounded(usize, Vec<f64>),
}

/// Solves `problem` to optimality, returning the primal vertex, duals and
/// reduced costs.
pub fn solve(problem: &LpProblem, options: &SolverOptions) -> Result<LpSolution, LpError> {
    problem.validate()?;
    options.validate()?;
    let m = problem.num_rows();
    let n = problem.num_cols();
    let sense_sign = match problem.sense {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };

    if m == 0 {
        // every variable is free to grow; only a nonimproving objective is bounded
        if let Some(j) = (0..n).find(|&j| sense_sign * problem.objective[j] < 0.0) {
            let mut ray = vec![0.0; n];
            ray[j] = 1.0;
            return Err(LpError::Unbounded { entering: j, ray });
        }
        return Ok(LpSolution {
            status: SolveStatus::Optimal,
            objective: 0.0,
            x: vec![0.0; n],
            duals: Vec::new(),
            reduced_costs: problem.objective.iter().map(|c| sense_sign * c).collect(),
            basis: Vec::new(),
            iterations: 0,
        });
    }

    let row_sign: Vec<f64> = problem.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let b: Vec<f64> = problem.rhs.iter().zip(&row_sign).map(|(b, s)| b * s).collect();
    let max_iterations = options.max_iterations.unwrap_or_else(|| (20 * (m + n)).max(10_000));
    let cost_scale = problem.objective.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));

    let identity: Vec<Vec<(usize, f64)>> = (0..m).map(|i| vec![(i, 1.0)]).collect();
    let lu = SparseLu::factorize(m, &identity).expect("identity is nonsingular");
    let mut s = Simplex {
        lp: problem,
        opts: options,
        m,
        n,
        row_sign,
        b,
        art_sign: vec![1.0; m],
        cost: vec![0.0; n + m],
        basis: (n..n + m).collect(),
        position: (0..n).map(|_| usize::MAX).chain(0..m).collect(),
        xb: Vec::new(),
        lu,
        etas: Vec::new(),
        iterations: 0,
        max_iterations,
        cost_scale,
        phase_two: false,
        repaired: false,
    };
    // Degenerate vertices stall the primal simplex, so the first pass runs on
    // a slightly lifted right-hand side. The lift is removed afterwards and a
    // few dual simplex pivots restore primal feasibility if needed.
    let b_orig = s.b.clone();
    let lift: Vec<f64> = b_orig
        .iter()
        .enumerate()
        .map(|(i, &bi)| PERTURBATION * (1.0 + bi.abs()) * (0.5 + 0.5 * unit_hash(i as u64)))
        .collect();
    let lift_total: f64 = lift.iter().sum();
    s.b = b_orig.iter().zip(&lift).map(|(b, d)| b + d).collect();
    s.xb = s.b.clone();
    if !problem.crash_basis.is_empty() {
        s.try_crash_basis();
    }

    let bscale = b_orig.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let mut perturbed = true;
    for _attempt in 0..MAX_RESTARTS {
        // phase one: minimize the sum of artificials
        if s.artificials_positive() {
            for j in 0..n + m {
                s.cost[j] = if j >= n { 1.0 } else { 0.0 };
            }
            s.cost_scale = 1.0;
            s.phase_two = false;
            match s.run_phase()? {
                PhaseOutcome::Optimal => {}
                PhaseOutcome::Unbounded(..) | PhaseOutcome::Restart => {
                    return Err(LpError::Numerical("phase one lost track of its objective".into()))
                }
            }
            s.refactor()?;
            let residual: f64 = (0..m).filter(|&i| s.basis[i] >= n).map(|i| s.xb[i].max(0.0)).sum();
            let mut tol = options.feasibility_tol * bscale * (m as f64).sqrt().max(1.0);
            if perturbed {
                tol += 2.0 * lift_total;
            }
            if residual > tol {
                let y = s.btran(s.basis.iter().map(|&j| s.cost[j]).collect());
                let certificate = (0..m).map(|i| y[i] * s.row_sign[i]).collect();
                return Err(LpError::Infeasible { residual, certificate });
            }
        }
        s.drive_out_artificials();

        // phase two
        for j in 0..n {
            s.cost[j] = sense_sign * problem.objective[j];
        }
        for j in n..n + m {
            s.cost[j] = 0.0;
        }
        s.cost_scale = cost_scale;
        s.phase_two = true;
        s.repaired = false;
        match s.run_phase()? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Restart => continue,
            PhaseOutcome::Unbounded(entering, ray) => {
                return Err(LpError::Unbounded { entering, ray });
            }
        }
        if perturbed {
            perturbed = false;
            s.b = b_orig.clone();
        }
        s.refactor()?;
        if !s.artificials_positive() {
            s.dual_cleanup()?;
        }
        if s.repaired || s.artificials_positive() {
            continue;
        }
        return Ok(s.extract(sense_sign));
    }
    Err(LpError::Numerical("basis repairs kept breaking feasibility".into()))
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            self.lp.columns[j]
                .iter()
                .map(|(i, v)| (i, v * self.row_sign[i]))
                .collect()
        } else {
            let i = j - self.n;
            vec![(i, self.art_sign[i])]
        }
    }

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            self.lp.columns[j]
                .iter()
                .map(|(i, v)| v * self.row_sign[i] * y[i])
                .sum()
        } else {
            let i = j - self.n;
            self.art_sign[i] * y[i]
        }
    }

    fn ftran(&self, rhs: Vec<f64>) -> Vec<f64> {
        let mut v = rhs;
        self.lu.solve(&mut v);
        for eta in &self.etas {
            let xr = v[eta.row] / eta.pivot;
            if xr != 0.0 {
                for &(i, a) in &eta.entries {
                    v[i] -= a * xr;
                }
            }
            v[eta.row] = xr;
        }
        v
    }

    fn btran(&self, c: Vec<f64>) -> Vec<f64> {
        let mut w = c;
        for eta in self.etas.iter().rev() {
            let mut s = w[eta.row];
            for &(i, a) in &eta.entries {
                s -= a * w[i];
            }
            w[eta.row] = s / eta.pivot;
        }
        self.lu.solve_transpose(&mut w);
        w
    }

    fn dense_column(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        for (i, a) in self.column(j) {
            v[i] = a;
        }
        v
    }

    /// Refactorizes the basis and recomputes the basic levels. A numerically
    /// singular basis is repaired by swapping the dependent columns for
    /// artificials on the uncovered rows.
    fn refactor(&mut self) -> Result<(), LpError> {
        let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column(j)).collect();
        self.lu = match SparseLu::factorize(self.m, &cols) {
            Ok(lu) => lu,
            Err(sing) => {
                for (&k, &i) in sing.dependent_cols.iter().zip(&sing.free_rows) {
                    self.position[self.basis[k]] = usize::MAX;
                    self.art_sign[i] = 1.0;
                    self.basis[k] = self.n + i;
                    self.position[self.n + i] = k;
                }
                self.repaired = true;
                let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column(j)).collect();
                SparseLu::factorize(self.m, &cols).map_err(|_| LpError::Numerical("basis repair failed".into()))?
            }
        };
        self.etas.clear();
        let mut xb = self.ftran(self.b.clone());
        let mut flipped = false;
        for (k, v) in xb.iter_mut().enumerate() {
            if self.basis[k] >= self.n && *v < 0.0 {
                let i = self.basis[k] - self.n;
                self.art_sign[i] = -self.art_sign[i];
                *v = -*v;
                flipped = true;
            }
        }
        if flipped {
            let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column(j)).collect();
            self.lu = SparseLu::factorize(self.m, &cols)
                .map_err(|_| LpError::Numerical("sign flip broke the basis".into()))?;
        }
        for v in xb.iter_mut() {
            if *v < 0.0 && *v > -self.opts.feasibility_tol * 1e3 {
                *v = 0.0;
            }
        }
        self.xb = xb;
        Ok(())
    }

    /// True when a repair left an artificial above zero, so feasibility has
    /// to be restored by another phase one.
    fn artificials_positive(&self) -> bool {
        let tol = self.opts.feasibility_tol;
        self.basis.iter().zip(&self.xb).any(|(&j, &v)| j >= self.n && v > tol)
    }

    /// Installs the problem's crash basis completed with artificials when it
    /// is primal feasible; otherwise keeps the all-artificial start.
    fn try_crash_basis(&mut self) {
        let mut hint: Vec<usize> = Vec::new();
        for &j in &self.lp.crash_basis {
            if !hint.contains(&j) && hint.len() < self.m {
                hint.push(j);
            }
        }
        let cols: Vec<Vec<(usize, f64)>> = hint.iter().map(|&j| self.column(j)).collect();
        let mut basis: Vec<usize> = match SparseLu::factorize(self.m, &cols) {
            Ok(_) => hint.clone(),
            Err(sing) => {
                let mut keep: Vec<usize> = hint
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| !sing.dependent_cols.contains(k))
                    .map(|(_, &j)| j)
                    .collect();
                keep.extend(sing.free_rows.iter().map(|&i| self.n + i));
                keep
            }
        };
        if basis.len() != self.m {
            return;
        }
        basis.sort_unstable();
        let cols: Vec<Vec<(usize, f64)>> = basis.iter().map(|&j| self.column(j)).collect();
        let Ok(lu) = SparseLu::factorize(self.m, &cols) else {
            return;
        };
        let mut xb = self.b.clone();
        lu.solve(&mut xb);
        let tol = self.opts.feasibility_tol;
        if basis.iter().zip(&xb).any(|(&j, &v)| j < self.n && v < -tol) {
            return;
        }
        let mut flipped = false;
        for (k, &j) in basis.iter().enumerate() {
            if j < self.n {
                xb[k] = xb[k].max(0.0);
            } else if xb[k] < 0.0 {
                self.art_sign[j - self.n] = -1.0;
                xb[k] = -xb[k];
                flipped = true;
            }
        }
        self.position.iter_mut().for_each(|p| *p = usize::MAX);
        for (k, &j) in basis.iter().enumerate() {
            self.position[j] = k;
        }
        self.basis = basis;
        self.etas.clear();
        if flipped {
            let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column(j)).collect();
            self.lu = SparseLu::factorize(self.m, &cols).expect("sign flips keep the basis nonsingular");
        } else {
            self.lu = lu;
        }
        self.xb = xb;
    }

    fn run_phase(&mut self) -> Result<PhaseOutcome, LpError> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let dtol = self.opts.optimality_tol * self.cost_scale;
        loop {
            if self.phase_two && self.repaired {
                self.repaired = false;
                if self.artificials_positive() {
                    return Ok(PhaseOutcome::Restart);
                }
            }
            if self.iterations >= self.max_iterations {
                let objective = self.basis.iter().zip(&self.xb).map(|(&j, &x)| self.cost[j] * x).sum();
                return Err(LpError::IterationLimit {
                    iterations: self.iterations,
                    objective,
                    basis: self.basis.clone(),
                });
            }
            let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
            let y = self.btran(cb);

            // pricing over nonbasic structural columns
            let mut entering = None;
            let mut best = -dtol;
            for j in 0..self.n {
                if self.position[j] != usize::MAX {
                    continue;
                }
                let d = self.cost[j] - self.column_dot(j, &y);
                if bland {
                    if d < -dtol {
                        entering = Some(j);
                        break;
                    }
                } else if d < best {
                    best = d;
                    entering = Some(j);
                }
            }
            let Some(q) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            let alpha = self.ftran(self.dense_column(q));
            let leave = if bland {
                self.ratio_test_bland(&alpha)
            } else {
                self.ratio_test_harris(&alpha)
            };
            let Some((r, theta)) = leave else {
                let mut ray = vec![0.0; self.n];
                ray[q] = 1.0;
                for (k, &j) in self.basis.iter().enumerate() {
                    if j < self.n {
                        ray[j] = -alpha[k];
                    }
                }
                return Ok(PhaseOutcome::Unbounded(q, ray));
            };

            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= self.opts.degenerate_pivot_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            self.pivot(q, r, theta, &alpha)?;
        }
    }

    fn ratio_test_harris(&self, alpha: &[f64]) -> Option<(usize, f64)> {
        let tol = self.opts.feasibility_tol;
        let mut theta_max = f64::INFINITY;
        let mut forced = None;
        for (i, &a) in alpha.iter().enumerate() {
            if self.basis[i] >= self.n {
                // artificials are pinned at zero once feasibility is reached
                if self.cost[self.basis[i]] == 0.0 && a.abs() > PIVOT_TOL {
                    let better = forced.is_none_or(|(_, fa): (usize, f64)| a.abs() > fa);
                    if better {
                        forced = Some((i, a.abs()));
                    }
                    continue;
                }
            }
            if a > PIVOT_TOL {
                theta_max = theta_max.min((self.xb[i].max(0.0) + tol) / a);
            }
        }
        if let Some((i, _)) = forced {
            return Some((i, 0.0));
        }
        if theta_max.is_infinite() {
            return None;
        }
        let mut pick: Option<(usize, f64)> = None;
        for (i, &a) in alpha.iter().enumerate() {
            if a > PIVOT_TOL && self.xb[i].max(0.0) / a <= theta_max && pick.is_none_or(|(_, pa)| a > pa) {
                pick = Some((i, a));
            }
        }
        pick.map(|(i, a)| (i, self.xb[i].max(0.0) / a))
    }

    fn ratio_test_bland(&self, alpha: &[f64]) -> Option<(usize, f64)> {
        let mut forced: Option<usize> = None;
        let mut best: Option<(usize, f64)> = None;
        for (i, &a) in alpha.iter().enumerate() {
            if self.basis[i] >= self.n && self.cost[self.basis[i]] == 0.0 && a.abs() > PIVOT_TOL {
                if forced.is_none_or(|f| self.basis[i] < self.basis[f]) {
                    forced = Some(i);
                }
                continue;
            }
            if a > PIVOT_TOL {
                let ratio = self.xb[i].max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        if let Some(i) = forced {
            return Some((i, 0.0));
        }
        best
    }

    fn pivot(&mut self, q: usize, r: usize, theta: f64, alpha: &[f64]) -> Result<(), LpError> {
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a != 0.0 {
                self.xb[i] -= theta * a;
                if self.xb[i] < 0.0 && self.xb[i] > -self.opts.feasibility_tol {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;
        let leaving = self.basis[r];
        self.position[leaving] = usize::MAX;
        self.position[q] = r;
        self.basis[r] = q;
        self.etas.push(Eta {
            row: r,
            pivot: alpha[r],
            entries: alpha
                .iter()
                .enumerate()
                .filter(|&(i, a)| i != r && a.abs() > 1e-14)
                .map(|(i, &a)| (i, a))
                .collect(),
        });
        self.iterations += 1;
        if self.etas.len() >= self.opts.refactor_interval {
            self.refactor()?;
        }
        Ok(())
    }

    /// Pivots basic artificials (all at zero after phase one) out of the
    /// basis wherever a structural column can replace them. Rows where none
    /// can are redundant and keep their artificial.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.n {
                continue;
            }
            let mut unit = vec![0.0; self.m];
            unit[r] = 1.0;
            let rho = self.btran(unit);
            let mut pick: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.position[j] != usize::MAX {
                    continue;
                }
                let a = self.column_dot(j, &rho);
                if a.abs() > 1e-7 && pick.is_none_or(|(_, pa)| a.abs() > pa.abs()) {
                    pick = Some((j, a));
                }
            }
            if let Some((q, _)) = pick {
                let alpha = self.ftran(self.dense_column(q));
                let theta = self.xb[r] / alpha[r];
                if self.pivot(q, r, theta, &alpha).is_err() {
                    return;
                }
            }
        }
        for r in 0..self.m {
            if self.basis[r] >= self.n {
                self.xb[r] = 0.0;
            }
        }
    }

    /// Dual simplex pivots from an optimal but slightly primal infeasible
    /// basis, as left behind when the right-hand-side lift is removed.
    fn dual_cleanup(&mut self) -> Result<(), LpError> {
        let tol = self.opts.feasibility_tol;
        loop {
            let mut leave: Option<(usize, f64)> = None;
            for (k, &v) in self.xb.iter().enumerate() {
                if self.basis[k] < self.n && v < -tol && leave.is_none_or(|(_, lv)| v < lv) {
                    leave = Some((k, v));
                }
            }
            let Some((r, _)) = leave else {
                for v in self.xb.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                return Ok(());
            };
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit {
                    iterations: self.iterations,
                    objective: f64::NAN,
                    basis: self.basis.clone(),
                });
            }
            let mut unit = vec![0.0; self.m];
            unit[r] = 1.0;
            let rho = self.btran(unit);
            let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
            let y = self.btran(cb);
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.position[j] != usize::MAX {
                    continue;
                }
                let a = self.column_dot(j, &rho);
                if a < -PIVOT_TOL {
                    let d = (self.cost[j] - self.column_dot(j, &y)).max(0.0);
                    let ratio = d / -a;
                    if entering.is_none_or(|(_, br)| ratio < br) {
                        entering = Some((j, ratio));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Err(LpError::Numerical(
                    "removing the right-hand-side lift left an infeasible basis".into(),
                ));
            };
            let alpha = self.ftran(self.dense_column(q));
            let theta = self.xb[r] / alpha[r];
            self.pivot(q, r, theta, &alpha)?;
        }
    }

    fn extract(&self, sense_sign: f64) -> LpSolution {
        let mut x = vec![0.0; self.n];
        for (k, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[k].max(0.0);
            }
        }
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        let y = self.btran(cb);
        let reduced_costs: Vec<f64> = (0..self.n)
            .map(|j| {
                if self.position[j] != usize::MAX {
                    0.0
                } else {
                    self.cost[j] - self.column_dot(j, &y)
                }
            })
            .collect();
        let duals: Vec<f64> = (0..self.m).map(|i| sense_sign * self.row_sign[i] * y[i]).collect();
        let objective = self.lp.objective_value(&x);
        let mut basis: Vec<usize> = self.basis.iter().copied().filter(|&j| j < self.n).collect();
        basis.sort_unstable();
        LpSolution {
            status: SolveStatus::Optimal,
            objective,
            x,
            duals,
            reduced_costs,
            basis,
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::LpBuilder;

    #[test]
    fn two_variable_simplex_face() {
        let mut b = LpBuilder::new(Sense::Maximize);
        let x1 = b.add_var("x1", 1.0);
        let x2 = b.add_var("x2", 1.0);
        let r = b.add_row("sum", 1.0);
        b.add_coefficient(r, x1, 1.0);
        b.add_coefficient(r, x2, 1.0);
        let sol = solve(&b.build(), &SolverOptions::default()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
        assert!(sol.reduced_costs.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn negative_rhs_rows_are_flipped_back_in_duals() {
        // min x + 2y  s.t. -x - y = -3
        let mut b = LpBuilder::new(Sense::Minimize);
        let x = b.add_var("x", 1.0);
        let y = b.add_var("y", 2.0);
        let r = b.add_row("neg", -3.0);
        b.add_coefficient(r, x, -1.0);
        b.add_coefficient(r, y, -1.0);
        let sol = solve(&b.build(), &SolverOptions::default()).unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-12);
        // dual objective b^T y must match
        assert!((sol.duals[0] * -3.0 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility_with_certificate() {
        // x + y = 1, x + y = 2
        let mut b = LpBuilder::new(Sense::Maximize);
        let x = b.add_var("x", 1.0);
        let y = b.add_var("y", 0.0);
        for (k, rhs) in [1.0, 2.0].into_iter().enumerate() {
            let r = b.add_row(format!("r{k}"), rhs);
            b.add_coefficient(r, x, 1.0);
            b.add_coefficient(r, y, 1.0);
        }
        let p = b.build();
        match solve(&p, &SolverOptions::default()) {
            Err(LpError::Infeasible { certificate, .. }) => {
                let ya = p.transpose_product(&certificate);
                assert!(ya.iter().all(|v| *v <= 1e-9));
                let yb: f64 = certificate.iter().zip(&p.rhs).map(|(y, b)| y * b).sum();
                assert!(yb > 1e-9);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn detects_unboundedness_with_ray() {
        // max x  s.t. x - y = 0
        let mut b = LpBuilder::new(Sense::Maximize);
        let x = b.add_var("x", 1.0);
        let y = b.add_var("y", 0.0);
        let r = b.add_row("r", 0.0);
        b.add_coefficient(r, x, 1.0);
        b.add_coefficient(r, y, -1.0);
        let p = b.build();
        match solve(&p, &SolverOptions::default()) {
            Err(LpError::Unbounded { ray, .. }) => {
                assert!(ray.iter().all(|v| *v >= 0.0));
                assert!(p.residual(&ray).iter().zip(&p.rhs).all(|(r, b)| (r + b).abs() < 1e-12));
                assert!(p.objective_value(&ray) > 0.0);
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut b = LpBuilder::new(Sense::Maximize);
        let vars: Vec<usize> = (0..4).map(|k| b.add_var(format!("x{k}"), k as f64)).collect();
        let r = b.add_row("r", 1.0);
        for &v in &vars {
            b.add_coefficient(r, v, 1.0);
        }
        let opts = SolverOptions {
            max_iterations: Some(0),
            ..Default::default()
        };
        assert!(matches!(solve(&b.build(), &opts), Err(LpError::IterationLimit { .. })));
    }

    #[test]
    fn crash_basis_is_used_when_feasible() {
        // x1 + x2 = 2, x2 + x3 = 1; crash on {x1, x3} is feasible
        let mut b = LpBuilder::new(Sense::Minimize);
        let x1 = b.add_var("x1", 1.0);
        let x2 = b.add_var("x2", 1.0);
        let x3 = b.add_var("x3", 1.0);
        let r0 = b.add_row("r0", 2.0);
        let r1 = b.add_row("r1", 1.0);
        b.add_coefficient(r0, x1, 1.0);
        b.add_coefficient(r0, x2, 1.0);
        b.add_coefficient(r1, x2, 1.0);
        b.add_coefficient(r1, x3, 1.0);
        let mut p = b.build();
        p.crash_basis = vec![x1, x3];
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_options() {
        let opts = SolverOptions {
            feasibility_tol: 0.0,
            ..Default::default()
        };
        let p = LpBuilder::new(Sense::Maximize).build();
        assert!(matches!(solve(&p, &opts), Err(LpError::InvalidOptions(_))));
    }
}
