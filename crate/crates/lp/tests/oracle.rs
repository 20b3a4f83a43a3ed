//! Cross-checks the revised simplex against a dense full-tableau simplex that
//! shares no code with it.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svcrb_lp::{solve, LpBuilder, LpError, LpProblem, Sense, SolverOptions};

/// Two-phase tableau simplex with Bland's rule. Returns the optimal objective
/// in the problem's own sense, or `None` when infeasible.
fn tableau_objective(p: &LpProblem) -> Option<f64> {
    let m = p.num_rows();
    let n = p.num_cols();
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m];
    for (j, col) in p.columns.iter().enumerate() {
        for (i, v) in col.iter() {
            t[i][j] = v;
        }
    }
    for i in 0..m {
        t[i][width - 1] = p.rhs[i];
        if p.rhs[i] < 0.0 {
            for v in t[i].iter_mut() {
                *v = -*v;
            }
        }
        t[i][n + i] = 1.0;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, r: usize, c: usize| {
        let pv = t[r][c];
        for v in t[r].iter_mut() {
            *v /= pv;
        }
        for i in 0..t.len() {
            if i != r {
                let f = t[i][c];
                if f != 0.0 {
                    for k in 0..width {
                        t[i][k] -= f * t[r][k];
                    }
                }
            }
        }
    };
    // minimizes cost over allowed columns; false if unbounded
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| -> bool {
        loop {
            let mut enter = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
                if d < -1e-11 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if t[i][c] > 1e-11 {
                    let ratio = t[i][width - 1] / t[i][c];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && basis[i] < basis[li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            pivot(t, r, c);
            basis[r] = c;
        }
    };

    let mut phase1 = vec![0.0; n + m];
    for c in phase1.iter_mut().skip(n) {
        *c = 1.0;
    }
    run(&mut t, &mut basis, &phase1, n + m);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][width - 1]).sum();
    if infeas > 1e-8 {
        return None;
    }
    // drive out zero-level artificials where possible
    for r in 0..m {
        if basis[r] >= n {
            if let Some(c) = (0..n).find(|&j| !basis.contains(&j) && t[r][j].abs() > 1e-9) {
                pivot(&mut t, r, c);
                basis[r] = c;
            }
        }
    }
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; n + m];
    for j in 0..n {
        cost[j] = sign * p.objective[j];
    }
    // artificials stuck in the basis sit on redundant rows; keep them out of pricing
    assert!(
        run(&mut t, &mut basis, &cost, n),
        "tableau oracle met an unbounded fixture"
    );
    let z: f64 = (0..m)
        .filter(|&i| basis[i] < n)
        .map(|i| cost[basis[i]] * t[i][width - 1])
        .sum();
    Some(sign * z)
}

/// Random feasible, bounded LP: `b = A x0` for a nonnegative `x0`, plus a
/// budget row over all variables with a slack.
fn random_lp(seed: u64, m: usize, n: usize, density: f64, maximize: bool) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
    let mut b = LpBuilder::new(sense);
    let vars: Vec<usize> = (0..n)
        .map(|j| b.add_var(format!("x{j}"), rng.random_range(-5.0..5.0)))
        .collect();
    let slack = b.add_var("slack", 0.0);
    let x0: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.4 {
                0.0
            } else {
                rng.random_range(0.0..3.0)
            }
        })
        .collect();
    for i in 0..m {
        let mut coeffs = Vec::new();
        for &j in &vars {
            if rng.random::<f64>() < density {
                // small integers make ties and degeneracy common
                coeffs.push((j, rng.random_range(-3i32..=3) as f64));
            }
        }
        let rhs: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let r = b.add_row(format!("r{i}"), rhs);
        for (j, a) in coeffs {
            b.add_coefficient(r, j, a);
        }
    }
    let total: f64 = x0.iter().sum::<f64>() + 10.0;
    let r = b.add_row("budget", total);
    for &j in &vars {
        b.add_coefficient(r, j, 1.0);
    }
    b.add_coefficient(r, slack, 1.0);
    b.build()
}

fn check_certified(p: &LpProblem, tol: f64) -> f64 {
    let sol = solve(p, &SolverOptions::default()).expect("feasible bounded LP");
    assert!(sol.primal_residual(p) <= 1e-8, "residual {}", sol.primal_residual(p));
    assert!(sol.x.iter().all(|v| *v >= 0.0));
    let dual = sol.dual_objective(p);
    assert!(
        (sol.objective - dual).abs() <= tol * (1.0 + sol.objective.abs()),
        "primal {} dual {}",
        sol.objective,
        dual
    );
    assert!(sol.reduced_costs.iter().all(|d| *d >= -1e-7), "dual infeasible");
    assert!(sol.complementarity_gap() <= 1e-6);
    // reduced costs recomputed from the problem data, not the solver's basis
    let aty = p.transpose_product(&sol.duals);
    let sign = if p.sense == Sense::Maximize { 1.0 } else { -1.0 };
    for j in 0..p.num_cols() {
        let d = sign * (aty[j] - p.objective[j]);
        assert!((d - sol.reduced_costs[j]).abs() <= 1e-7 * (1.0 + d.abs()));
    }
    sol.objective
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn revised_simplex_matches_tableau(seed in any::<u64>(), m in 1usize..8, n in 1usize..12,
                                       density in 0.2f64..0.9, maximize in any::<bool>()) {
        let p = random_lp(seed, m, n, density, maximize);
        let ours = check_certified(&p, 1e-6);
        let oracle = tableau_objective(&p).expect("fixture is feasible");
        prop_assert!((ours - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "ours {} oracle {}", ours, oracle);
    }
}

#[test]
fn larger_sparse_instances_agree_with_tableau() {
    for seed in 0..6 {
        let p = random_lp(1000 + seed, 40, 70, 0.08, seed % 2 == 0);
        let ours = check_certified(&p, 1e-6);
        let oracle = tableau_objective(&p).unwrap();
        assert!((ours - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()));
    }
}

#[test]
fn redundant_constraint_is_tolerated() {
    // x + y + z = 2 appears twice and once scaled; degenerate vertex at the optimum
    let mut b = LpBuilder::new(Sense::Maximize);
    let x = b.add_var("x", 1.0);
    let y = b.add_var("y", 1.0);
    let z = b.add_var("z", 0.0);
    for (k, scale) in [1.0, 1.0, 2.0].into_iter().enumerate() {
        let r = b.add_row(format!("r{k}"), 2.0 * scale);
        for v in [x, y, z] {
            b.add_coefficient(r, v, scale);
        }
    }
    let r = b.add_row("xy", 0.0);
    b.add_coefficient(r, x, 1.0);
    b.add_coefficient(r, y, -1.0);
    let p = b.build();
    let obj = check_certified(&p, 1e-9);
    assert!((obj - 2.0).abs() < 1e-12);
}

#[test]
fn beale_cycling_example_terminates() {
    let mut b = LpBuilder::new(Sense::Minimize);
    let cost = [0.0, 0.0, 0.0, -0.75, 150.0, -0.02, 6.0];
    let v: Vec<usize> = cost
        .iter()
        .enumerate()
        .map(|(j, c)| b.add_var(format!("x{}", j + 1), *c))
        .collect();
    let rows = [
        (0.0, vec![(0, 1.0), (3, 0.25), (4, -60.0), (5, -0.04), (6, 9.0)]),
        (0.0, vec![(1, 1.0), (3, 0.5), (4, -90.0), (5, -0.02), (6, 3.0)]),
        (1.0, vec![(2, 1.0), (5, 1.0)]),
    ];
    for (i, (rhs, coeffs)) in rows.into_iter().enumerate() {
        let r = b.add_row(format!("r{i}"), rhs);
        for (j, a) in coeffs {
            b.add_coefficient(r, v[j], a);
        }
    }
    let mut p = b.build();
    p.crash_basis = vec![v[0], v[1], v[2]];
    let opts = SolverOptions {
        degenerate_pivot_limit: 1,
        ..Default::default()
    };
    let sol = solve(&p, &opts).unwrap();
    assert!((sol.objective + 0.05).abs() < 1e-12);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert!((sol.objective + 0.05).abs() < 1e-12);
}

#[test]
fn solve_is_bitwise_deterministic() {
    let p = random_lp(7, 30, 50, 0.1, true);
    let a = solve(&p, &SolverOptions::default()).unwrap();
    let b = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn infeasible_fixture_matches_oracle() {
    let mut b = LpBuilder::new(Sense::Minimize);
    let x = b.add_var("x", 1.0);
    let r = b.add_row("neg", -1.0);
    b.add_coefficient(r, x, 1.0);
    let p = b.build();
    assert!(tableau_objective(&p).is_none());
    assert!(matches!(
        solve(&p, &SolverOptions::default()),
        Err(LpError::Infeasible { .. })
    ));
}

#[test]
fn explicit_dual_attains_primal_objective() {
    for seed in 0..10 {
        let p = random_lp(500 + seed, 6, 9, 0.5, seed % 2 == 0);
        let primal = solve(&p, &SolverOptions::default()).unwrap();
        let dual = solve(&p.dual(), &SolverOptions::default()).unwrap();
        assert!((primal.objective - dual.objective).abs() <= 1e-7 * (1.0 + primal.objective.abs()));
    }
}
