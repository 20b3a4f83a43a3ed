//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Tolerances are pinned below.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svcrb_core::analysis::{critical_load, layer_time_shares, load_sweep, mu_avg, spearman};
use svcrb_core::channel::ChannelModel;
use svcrb_core::musmdp::*;
use svcrb_core::qa::{build_policy_matrix, qa_decide, QaSpec};
use svcrb_core::rb::*;
use svcrb_core::schedulers::{prune_unreachable, qaa_rank, qaa_rank_raw, reachable_states, BeasParams};
use svcrb_core::sim::{prepare, run_batch, BatchMetrics, SchedulerSpec, SimConfig};
use svcrb_core::video::{index_buffer, playback_reward, unindex_buffer, BufferState, VideoConfig};
use svcrb_lp::SolverOptions;

const REWARD_TOL: f64 = 1e-5;
const DECOMPOSITION_RTOL: f64 = 1e-6;
const GAP_RTOL: f64 = 1e-6;
const SLACKNESS_TOL: f64 = 1e-6;
const MASS_TOL: f64 = 1e-9;
const DOMINANCE_TOL: f64 = 1e-6;
const SHAPE_RATIO: f64 = 0.7;
const UPPER_BOUND_SLACK: f64 = 1.02;
const CRITICAL_LOAD_RANGE: (f64, f64) = (1.9, 2.7);
const MIN_CORRELATION: f64 = 0.2;
const SHARES_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn check_solution(sol: &RbSolution, what: &str) -> Result<(), String> {
    let gap = (sol.objective - sol.dual_objective).abs();
    ensure(
        gap <= GAP_RTOL * (1.0 + sol.objective.abs()),
        format!(
            "{what}: primal {} dual {} gap {gap:e}",
            sol.objective, sol.dual_objective
        ),
    )?;
    let mut slack: f64 = 0.0;
    for g in &sol.groups {
        for s in 0..g.x0.len() {
            slack = slack
                .max((g.x0[s] * g.gamma0[s]).abs())
                .max((g.x1[s] * g.gamma1[s]).abs());
        }
    }
    ensure(slack <= SLACKNESS_TOL, format!("{what}: max x*gamma {slack:e}"))
}

// ---------------------------------------------------------------------------
// fixtures

fn small_video() -> VideoConfig {
    VideoConfig {
        layer_rates: vec![1.0, 1.0],
        buffer_limit: 3,
        ..Default::default()
    }
}

fn small_channel() -> ChannelModel {
    ChannelModel::new(vec![1.0, 2.0], vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
}

fn small_group(count: usize) -> UserGroup {
    UserGroup {
        count,
        qa: QaSpec::dbp(2.0),
        channel: small_channel(),
        video: small_video(),
        initial_distribution: None,
    }
}

/// Rates (1, 2, 5, 10) with symmetric mixing; doubly stochastic, so the
/// average rate is 4.5.
fn wide_channel() -> ChannelModel {
    ChannelModel::birth_death(vec![1.0, 2.0, 5.0, 10.0], 0.25).unwrap()
}

fn wide_group(qa: QaSpec) -> UserGroup {
    UserGroup {
        count: 20,
        qa,
        channel: wide_channel(),
        video: VideoConfig::default(),
        initial_distribution: None,
    }
}

// ---------------------------------------------------------------------------
// criteria

fn c1() -> Outcome {
    let v = VideoConfig::default();
    let top = playback_reward(v.r_max(), &v, false).map_err(|e| e.to_string())?;
    ensure(top == 1.0, format!("R(R_max) = {top}"))?;
    let half = playback_reward(0.5 * v.r_max(), &v, false).map_err(|e| e.to_string())?;
    // 60-digit evaluation of exp(0.16 - 0.16 * 2^0.66)
    let reference = 0.911_363_709_099_076_2;
    ensure((half - reference).abs() <= REWARD_TOL, format!("R(0.5) = {half}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ratios: Vec<f64> = (0..1000)
        .map(|_| rand::Rng::random_range(&mut rng, 1e-6..1.0))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let vals: Vec<f64> = ratios
        .iter()
        .map(|r| playback_reward(r * v.r_max(), &v, false).unwrap())
        .collect();
    ensure(vals.windows(2).all(|w| w[0] <= w[1]), "not monotone")?;
    Ok(format!("R(R_max)=1, R(0.5)={half:.12}, monotone over 1000 ratios"))
}

fn c2() -> Outcome {
    let v = VideoConfig {
        layer_rates: vec![1.0; 3],
        buffer_limit: 20,
        ..Default::default()
    };
    let i = BufferState(vec![6, 4, 1]);
    let d = qa_decide(&QaSpec::dbp(2.0), &v, &BufferState(vec![5, 3, 0]), 0, 1, 1);
    let pm = build_policy_matrix(&QaSpec::dbp(2.0), &v, &ChannelModel::constant(1.0), 0).map_err(|e| e.to_string())?;
    let j = unindex_buffer(pm.targets[index_buffer(&i, &v).unwrap()], &v).unwrap();
    ensure(j == BufferState(vec![5, 3, 1]), format!("j = {:?}", j.0))?;
    Ok(format!("(6,4,1) -> {:?} with request {:?}", j.0, d))
}

fn c3() -> Outcome {
    let one = GroupModel::build(&small_group(1)).map_err(|e| e.to_string())?;
    let four: Vec<GroupModel> = (0..4).map(|_| one.clone()).collect();
    let joint = solve_rb(&build_rb_lp(&four, 2.0, 0.95).unwrap(), &opts()).map_err(|e| e.to_string())?;
    let rep = solve_rb(&build_homogeneous_lp(&one, 4, 2.0, 0.95).unwrap(), &opts()).map_err(|e| e.to_string())?;
    let rel = (joint.objective - 4.0 * rep.objective).abs() / joint.objective.abs();
    ensure(rel <= DECOMPOSITION_RTOL, format!("rel diff {rel:e}"))?;
    Ok(format!(
        "4 groups {:.9} vs 4 x {:.9} (rel {rel:.1e})",
        joint.objective, rep.objective
    ))
}

fn c4() -> Outcome {
    let mut n = 0;
    for qa in [QaSpec::dbp(2.0), QaSpec::cbp(), QaSpec::bpp(50.0)] {
        let mut g = small_group(4);
        g.qa = qa.clone();
        let m = GroupModel::build(&g).unwrap();
        for sub in [1.0, 2.0, 3.0] {
            let sol = solve_rb(&build_rb_lp(std::slice::from_ref(&m), sub, 0.95).unwrap(), &opts())
                .map_err(|e| e.to_string())?;
            check_solution(&sol, &format!("{} M={sub}", qa.label()))?;
            n += 1;
        }
    }
    let models: Vec<GroupModel> = [QaSpec::dbp(2.0), QaSpec::bpp(50.0)]
        .into_iter()
        .map(|qa| {
            let mut g = small_group(3);
            g.qa = qa;
            GroupModel::build(&g).unwrap()
        })
        .collect();
    let sol = solve_rb(&build_rb_lp(&models, 2.0, 0.95).unwrap(), &opts()).map_err(|e| e.to_string())?;
    check_solution(&sol, "two groups")?;
    n += 1;
    let big = GroupModel::build(&wide_group(QaSpec::dbp(20.0))).unwrap();
    for sub in [8.0, 12.0] {
        let sol = solve_rb(&build_rb_lp(std::slice::from_ref(&big), sub, 0.99).unwrap(), &opts())
            .map_err(|e| e.to_string())?;
        check_solution(&sol, &format!("20 users M={sub}"))?;
        n += 1;
    }
    Ok(format!("{n} instances within gap and slackness tolerances"))
}

fn c5() -> Outcome {
    let model = GroupModel::build(&small_group(4)).unwrap();
    let sol =
        solve_rb(&build_rb_lp(std::slice::from_ref(&model), 2.0, 0.95).unwrap(), &opts()).map_err(|e| e.to_string())?;
    let g = &sol.groups[0];
    let kept = prune_unreachable(&g.x0, &g.x1);
    let reach = reachable_states(&model.h0, &model.h1, &g.x0, &g.x1, &model.alpha);
    ensure(kept == reach, "zero-occupancy set differs from the unreachable set")?;
    let pruned = kept.iter().filter(|k| !**k).count();
    Ok(format!("{pruned} of {} states unreachable, sets equal", kept.len()))
}

fn c6() -> Outcome {
    let space = StateSpace {
        num_channel_states: 1,
        num_buffer_states: 3,
    };
    let r = qaa_rank_raw(
        space,
        &[0.2, 0.1, 0.0],
        &[1.0, 0.0, 0.5],
        &[0.0, 0.0, 20.0],
        &[0.0, 10.0, 0.0],
    );
    ensure(r.order == vec![2, 0, 1], format!("order {:?}", r.order))?;
    Ok("ranking (s3, s1, s2)".into())
}

fn c7() -> Outcome {
    let ch = small_channel();
    let tau = 0.5;
    let mut worst_mass: f64 = 0.0;
    for q in [1.0, 1.7, 3.0] {
        let fp = first_passage(q, &ch, tau, TAIL_TOL).map_err(|e| e.to_string())?;
        for c in 0..2 {
            worst_mass = worst_mass.max((fp.total_mass(c) - 1.0).abs());
        }
    }
    let fp = first_passage(1.0, &wide_channel(), 0.1, TAIL_TOL).map_err(|e| e.to_string())?;
    for c in 0..4 {
        worst_mass = worst_mass.max((fp.total_mass(c) - 1.0).abs());
    }
    ensure(worst_mass <= MASS_TOL, format!("mass off by {worst_mass:e}"))?;

    let (q, disc) = (1.7, 0.95f64);
    let fp = first_passage(q, &ch, tau, TAIL_TOL).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 100_000;
    let mut worst_z: f64 = 0.0;
    for start in 0..2 {
        let pmf = fp.duration_pmf(start);
        let (_, tau_bar) = expected_reward_and_duration(&pmf, &vec![0.0; pmf.len()], disc);
        let samples: Vec<f64> = (0..trials)
            .map(|_| {
                let (mut c, mut acc, mut t) = (start, 0.0, 0i32);
                while acc < q * (1.0 - 1e-9) {
                    acc += ch.states[c] * tau;
                    t += 1;
                    c = ch.sample_next(c, &mut rng);
                }
                (1.0 - disc.powi(t)) / (1.0 - disc)
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        let z = (mean - tau_bar).abs() / (var / trials as f64).sqrt();
        worst_z = worst_z.max(z);
    }
    ensure(
        worst_z <= 3.0,
        format!("Monte Carlo off by {worst_z:.2} standard errors"),
    )?;

    for (q, c, t) in [(1.0, 1.0, 0.25), (3.0, 2.0, 0.5), (0.9, 1.0, 0.2)] {
        let pmf = first_passage(q, &ChannelModel::constant(c), t, TAIL_TOL)
            .unwrap()
            .duration_pmf(0);
        let want = (q / (c * t) * (1.0 - 1e-9)).ceil() as usize;
        ensure(
            pmf.len() == want && pmf[want - 1] == 1.0,
            format!("constant channel q={q} c={c}"),
        )?;
    }
    Ok(format!(
        "mass error {worst_mass:.1e}, Monte Carlo within {worst_z:.2} SE, ceilings exact"
    ))
}

/// Per-slot mixing whose square is the per-segment kernel.
fn slot_mix(p: f64) -> f64 {
    (1.0 - (1.0 - 2.0 * p).sqrt()) / 2.0
}

fn c8() -> Outcome {
    let p = 0.3;
    let (n, m, beta) = (4, 2.0, 0.95);
    let smdp = SmdpGroupModel::build(
        &SmdpGroup {
            count: n,
            channel: ChannelModel::birth_death(vec![1.0, 2.0], slot_mix(p)).unwrap(),
            video: small_video(),
        },
        beta,
        TAIL_TOL,
    )
    .map_err(|e| e.to_string())?;
    ensure(smdp.space.slots_per_segment == 2, "expected two slots per segment")?;
    let joint = solve_musmdp(&build_musmdp_lp(&[smdp], m).unwrap(), &opts()).map_err(|e| e.to_string())?;
    let mut best: f64 = 0.0;
    let mut parts = Vec::new();
    for qa in [QaSpec::dbp(3.0), QaSpec::cbp(), QaSpec::bpp(50.0)] {
        let label = qa.label();
        let model = GroupModel::build(&UserGroup {
            count: n,
            qa,
            channel: ChannelModel::birth_death(vec![1.0, 2.0], p).unwrap(),
            video: small_video(),
            initial_distribution: None,
        })
        .unwrap();
        let rb = solve_rb(&build_rb_lp(&[model], m, beta).unwrap(), &opts()).map_err(|e| e.to_string())?;
        ensure(
            joint.objective >= rb.objective - DOMINANCE_TOL,
            format!("{label} {} above joint {}", rb.objective, joint.objective),
        )?;
        best = best.max(rb.objective);
        parts.push(format!("{label} {:.3}", rb.objective));
    }
    let ratio = best / joint.objective;
    ensure(ratio >= SHAPE_RATIO, format!("best fixed QA only {ratio:.3} of joint"))?;
    Ok(format!(
        "joint {:.3} >= {}; best/joint {ratio:.3}",
        joint.objective,
        parts.join(", ")
    ))
}

fn sim_config(scheduler: SchedulerSpec, m: usize) -> SimConfig {
    SimConfig {
        groups: vec![wide_group(QaSpec::dbp(20.0))],
        subchannels: m,
        scheduler,
        horizon: 600,
        discount: 0.99,
        seed: 0,
        warmup: 0,
        record_trace: false,
    }
}

/// `h(x) = x / L - 1`: the net change of the buffer in segments when `x`
/// sub-segments arrive and one segment plays.
fn calibrated_beas() -> SchedulerSpec {
    SchedulerSpec::Beas {
        params: BeasParams {
            h_slope: 0.5,
            h_intercept: -1.0,
            ..BeasParams::default()
        },
    }
}

fn pooled(a: &BatchMetrics, b: &BatchMetrics) -> f64 {
    let sa = a.discounted_reward.std_err.unwrap_or(0.0);
    let sb = b.discounted_reward.std_err.unwrap_or(0.0);
    (sa * sa + sb * sb).sqrt()
}

/// Batches per scheduler label, with the relaxation bound per user.
struct AtLoad {
    m: usize,
    rows: Vec<(&'static str, BatchMetrics)>,
    bound: f64,
}

struct SimResults {
    by_m: Vec<AtLoad>,
}

fn simulate_all() -> Result<SimResults, String> {
    let seeds: Vec<u64> = (0..20).collect();
    let mut by_m = Vec::new();
    for m in [8usize, 12] {
        let mut rows = Vec::new();
        let mut bound = 0.0;
        for spec in [
            SchedulerSpec::Qaa,
            calibrated_beas(),
            SchedulerSpec::Pf { time_constant: 50.0 },
            SchedulerSpec::Bcf,
            SchedulerSpec::Lbf,
        ] {
            let label = spec.label();
            let prepared = prepare(&sim_config(spec, m), &opts()).map_err(|e| e.to_string())?;
            if let Some(sol) = &prepared.rb_solution {
                bound = sol.objective / 20.0;
            }
            rows.push((label, run_batch(&prepared, &seeds).map_err(|e| e.to_string())?));
        }
        by_m.push(AtLoad { m, rows, bound });
    }
    Ok(SimResults { by_m })
}

fn c9(res: &SimResults) -> Outcome {
    let mut notes = Vec::new();
    for AtLoad { m, rows, .. } in &res.by_m {
        let get = |l: &str| &rows.iter().find(|(k, _)| *k == l).unwrap().1;
        let (qaa, beas) = (get("QAA"), get("BEAS"));
        let best = ["PF", "BCF", "LBF"]
            .into_iter()
            .max_by(|a, b| get(a).discounted_reward.mean.total_cmp(&get(b).discounted_reward.mean))
            .unwrap();
        let base = get(best);
        let d1 = qaa.discounted_reward.mean - beas.discounted_reward.mean;
        let d2 = beas.discounted_reward.mean - base.discounted_reward.mean;
        ensure(
            d1 > pooled(qaa, beas),
            format!("M={m}: QAA - BEAS = {d1:.3}, SE {:.3}", pooled(qaa, beas)),
        )?;
        ensure(
            d2 > pooled(beas, base),
            format!("M={m}: BEAS - {best} = {d2:.3}, SE {:.3}", pooled(beas, base)),
        )?;
        if *m == 8 {
            for l in ["PF", "BCF"] {
                ensure(
                    get(l).rebuffer_fraction.mean >= qaa.rebuffer_fraction.mean,
                    format!("{l} stalls less than QAA at M=8"),
                )?;
            }
        }
        notes.push(format!(
            "M={m}: QAA {:.3} > BEAS {:.3} > {best} {:.3}",
            qaa.discounted_reward.mean, beas.discounted_reward.mean, base.discounted_reward.mean
        ));
    }
    Ok(notes.join("; "))
}

fn c10(res: &SimResults) -> Outcome {
    let mut notes = Vec::new();
    for AtLoad { m, rows, bound } in &res.by_m {
        let qaa = &rows.iter().find(|(k, _)| *k == "QAA").unwrap().1;
        let worst = qaa
            .per_seed
            .iter()
            .map(|s| s.mean_discounted_reward)
            .fold(f64::NEG_INFINITY, f64::max);
        ensure(
            worst <= UPPER_BOUND_SLACK * bound,
            format!("M={m}: seed reward {worst} vs bound {bound}"),
        )?;
        notes.push(format!("M={m}: max seed {worst:.3} <= {bound:.3}"));
    }
    Ok(notes.join("; "))
}

fn c11() -> Outcome {
    let group = wide_group(QaSpec::dbp(10.0));
    let ms: Vec<usize> = (4..=18).step_by(2).collect();
    let sweep = load_sweep(&group, &ms, 0.99, &opts()).map_err(|e| e.to_string())?;
    for sol in &sweep.solutions {
        check_solution(sol, "sweep")?;
    }
    let crit = critical_load(&sweep.points).map_err(|e| e.to_string())?;
    ensure(
        crit.load >= CRITICAL_LOAD_RANGE.0 && crit.load <= CRITICAL_LOAD_RANGE.1,
        format!("rho* = {:.3}", crit.load),
    )?;
    let space = StateSpace::new(&group.channel, &group.video);
    let corr = |m: usize, by_channel: bool| -> Result<f64, String> {
        let k = ms.iter().position(|&x| x == m).unwrap();
        let rank = qaa_rank(&sweep.solutions[k].groups[0], space);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for s in 0..space.size() {
            if rank.is_pruned(s) {
                continue;
            }
            let (c, b) = space.split(s);
            xs.push(rank.normalized_index(s));
            ys.push(if by_channel {
                c as f64
            } else {
                unindex_buffer(b, &group.video).unwrap().total() as f64
            });
        }
        spearman(&xs, &ys).ok_or_else(|| "constant sample".to_string())
    };
    let ch = corr(8, true)?;
    let buf = corr(10, false)?;
    ensure(
        ch < 0.0 && ch.abs() > MIN_CORRELATION,
        format!("channel correlation {ch:.3} at rho 2.5"),
    )?;
    ensure(
        buf > 0.0 && buf.abs() > MIN_CORRELATION,
        format!("buffer correlation {buf:.3} at rho 2.0"),
    )?;
    Ok(format!(
        "rho* = {:.3} in ({:.2}, {:.2}); spearman channel {ch:.3} @2.5, buffer {buf:.3} @2.0",
        crit.load, crit.bracket.0, crit.bracket.1
    ))
}

fn c12() -> Outcome {
    let model = GroupModel::build(&wide_group(QaSpec::dbp(20.0))).unwrap();
    let sol =
        solve_rb(&build_rb_lp(std::slice::from_ref(&model), 8.0, 0.99).unwrap(), &opts()).map_err(|e| e.to_string())?;
    let video = VideoConfig::default();
    let shares = layer_time_shares(&sol.groups[0], &model.space, &video);
    let total: f64 = shares.iter().sum();
    ensure((total - 1.0).abs() <= SHARES_TOL, format!("shares sum to {total}"))?;

    let v = VideoConfig {
        layer_rates: vec![1.0, 1.0],
        buffer_limit: 1,
        ..Default::default()
    };
    let space = StateSpace::new(&ChannelModel::constant(1.0), &v);
    let put = |mass: &[(usize, f64)]| {
        let mut x0 = vec![0.0; 4];
        for &(s, m) in mass {
            x0[s] = m;
        }
        GroupSolution {
            x0,
            x1: vec![0.0; 4],
            gamma0: vec![0.0; 4],
            gamma1: vec![0.0; 4],
            lambda_s: vec![0.0; 4],
        }
    };
    // buffer indices: (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3
    let full = mu_avg(&put(&[(3, 5.0)]), &space, &v);
    let empty = mu_avg(&put(&[(0, 5.0)]), &space, &v);
    let split = mu_avg(&put(&[(2, 1.0), (3, 1.0)]), &space, &v);
    ensure(
        full == 2.0 && empty == 0.0 && split == 1.5,
        format!("mu = {full}, {empty}, {split}"),
    )?;
    Ok(format!("shares sum {total:.12}; mu examples 2, 0, 1.5"))
}

fn cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_svcrb"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove(svcrb_cli::OUT_ENV)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        status.status.success(),
        format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)),
    )
}

fn c13() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let twenty = root.join("twenty_users.json");
    let desk = root.join("desk.json");
    let (t1, d1) = (twenty.to_str().unwrap(), desk.to_str().unwrap());
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let a = d.path().join("twenty");
        let b = d.path().join("desk");
        for cmd in ["solve-rb", "rank", "sweep", "analyze"] {
            cli(&[cmd, "--config", t1], &a)?;
        }
        cli(&["simulate", "--config", t1, "--seed", "3"], &a)?;
        for cmd in ["solve-musmdp", "solve-rb", "sweep", "analyze"] {
            cli(&[cmd, "--config", d1], &b)?;
        }
        cli(&["simulate", "--config", d1, "--threads", "2"], &b)?;
    }
    let mut compared = 0;
    for sub in ["twenty", "desk"] {
        let left = dirs[0].path().join(sub);
        let mut names: Vec<_> = std::fs::read_dir(&left)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n != "resolved_config.json")
            .collect();
        names.sort();
        for name in names {
            let a = std::fs::read(left.join(&name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(sub).join(&name)).map_err(|e| e.to_string())?;
            ensure(a == b, format!("{sub}/{} differs between runs", name.to_string_lossy()))?;
            compared += 1;
        }
    }
    Ok(format!("{compared} artifacts byte-identical across repeated runs"))
}

fn main() {
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |id: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {id:>2} {tag} {title}: {detail} [{:.1}s]",
            t.elapsed().as_secs_f64()
        );
    };
    report(1, "QoE curve", &mut c1);
    report(2, "DBP policy-matrix row", &mut c2);
    report(3, "homogeneous decomposition", &mut c3);
    report(4, "duality and slackness", &mut c4);
    report(5, "zero occupancy equals unreachability", &mut c5);
    report(6, "worked ranking example", &mut c6);
    report(7, "passage-time laws", &mut c7);
    report(8, "joint model dominance", &mut c8);
    let t = Instant::now();
    let sims = simulate_all();
    let sim_secs = t.elapsed().as_secs_f64();
    report(9, "simulation ordering", &mut || {
        let d = sims.as_ref().map_err(Clone::clone).and_then(c9)?;
        Ok(format!("{d} (200 runs of 600 slots in {sim_secs:.1}s)"))
    });
    report(10, "relaxation upper bound", &mut || {
        sims.as_ref().map_err(Clone::clone).and_then(c10)
    });
    report(11, "critical load and heatmap trends", &mut c11);
    report(12, "playback-rate shares", &mut c12);
    report(13, "CLI determinism", &mut c13);
    println!(
        "acceptance: {} of 13 passed in {:.1}s",
        13 - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
