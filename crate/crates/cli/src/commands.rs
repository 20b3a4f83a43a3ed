use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use svcrb_core::analysis::{critical_load, heatmap, layer_time_shares, load_sweep, mu_avg, CriticalLoad, SweepPoint};
use svcrb_core::musmdp::{build_musmdp_lp, solve_musmdp, MusmdpSolution, SmdpGroup, SmdpGroupModel, SmdpStateSpace};
use svcrb_core::rb::{build_rb_lp, solve_rb, GroupModel, RbSolution, StateSpace};
use svcrb_core::schedulers::{qaa_rank, PriorityRanking};
use svcrb_core::sim::{prepare, run, BatchMetrics, SimTrace};

use crate::artifact::{self, read_json, write_csv, write_json};
use crate::config::ExperimentConfig;
use crate::error::{CliError, ErrorKind};

pub const RESOLVED_CONFIG: &str = "resolved_config.json";
pub const RB_SOLUTION_FILE: &str = "rb_solution.json";
pub const MUSMDP_SOLUTION_FILE: &str = "musmdp_solution.json";
pub const RANKING_FILE: &str = "ranking.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const SWEEP_JSON_FILE: &str = "sweep.json";
pub const SWEEP_CSV_FILE: &str = "sweep.csv";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const MU_LAMBDA_FILE: &str = "mu_lambda.csv";
pub const HEATMAP_FILE: &str = "heatmap.csv";

/// Saves the config with every default spelled out; feeding it back with
/// `--config` reproduces the run.
pub fn write_resolved(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(cfg).map_err(|e| CliError::new(ErrorKind::Artifact, e.to_string()))?;
    bytes.push(b'\n');
    artifact::write_atomic(&out.join(RESOLVED_CONFIG), &bytes)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbArtifact {
    pub subchannels: usize,
    /// Per-segment discount the program was solved with.
    pub discount: f64,
    pub group_sizes: Vec<usize>,
    pub spaces: Vec<StateSpace>,
    pub solution: RbSolution,
}

pub fn solve_rb_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<RbArtifact, CliError> {
    let m = cfg.subchannels()?;
    let models: Vec<GroupModel> = cfg.groups.iter().map(GroupModel::build).collect::<Result<_, _>>()?;
    let rb = build_rb_lp(&models, m as f64, cfg.slot_discount())?;
    let solution = solve_rb(&rb, &cfg.solver)?;
    let art = RbArtifact {
        subchannels: m,
        discount: cfg.slot_discount(),
        group_sizes: cfg.groups.iter().map(|g| g.count).collect(),
        spaces: models.iter().map(|g| g.space).collect(),
        solution,
    };
    write_json(&out.join(RB_SOLUTION_FILE), artifact::RB_SOLUTION, &art)?;
    Ok(art)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MusmdpArtifact {
    pub subchannels: usize,
    pub spaces: Vec<SmdpStateSpace>,
    pub slot_durations: Vec<f64>,
    pub solution: MusmdpSolution,
}

pub fn solve_musmdp_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<MusmdpArtifact, CliError> {
    let m = cfg.subchannels()?;
    let models: Vec<SmdpGroupModel> = cfg
        .groups
        .iter()
        .map(|g| {
            let group = SmdpGroup {
                count: g.count,
                channel: g.channel.clone(),
                video: g.video.clone(),
            };
            SmdpGroupModel::build(&group, cfg.discount, cfg.tail_tol)
        })
        .collect::<Result<_, _>>()?;
    let lp = build_musmdp_lp(&models, m as f64)?;
    let solution = solve_musmdp(&lp, &cfg.solver)?;
    let art = MusmdpArtifact {
        subchannels: m,
        spaces: models.iter().map(|g| g.space).collect(),
        slot_durations: models.iter().map(|g| g.tau_slot).collect(),
        solution,
    };
    write_json(&out.join(MUSMDP_SOLUTION_FILE), artifact::MUSMDP_SOLUTION, &art)?;
    Ok(art)
}

fn load_rb(cfg: &ExperimentConfig, out: &Path) -> Result<RbArtifact, CliError> {
    let art: RbArtifact = read_json(&out.join(RB_SOLUTION_FILE), artifact::RB_SOLUTION, "solve-rb")?;
    let spaces: Vec<StateSpace> = cfg
        .groups
        .iter()
        .map(|g| StateSpace::new(&g.channel, &g.video))
        .collect();
    if art.spaces != spaces {
        return Err(CliError::new(
            ErrorKind::Dependency,
            "rb_solution.json was produced from a different model; rerun `solve-rb`",
        )
        .at(out.join(RB_SOLUTION_FILE).display().to_string()));
    }
    Ok(art)
}

pub fn rank_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PriorityRanking>, CliError> {
    let art = load_rb(cfg, out)?;
    let rankings: Vec<PriorityRanking> = art
        .solution
        .groups
        .iter()
        .zip(&art.spaces)
        .map(|(g, s)| qaa_rank(g, *s))
        .collect();
    write_json(&out.join(RANKING_FILE), artifact::RANKING, &rankings)?;
    Ok(rankings)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub scheduler: String,
    pub subchannels: usize,
    pub users: usize,
    pub metrics: BatchMetrics,
}

#[derive(Serialize)]
struct TraceRow {
    seed: u64,
    slot: usize,
    user: usize,
    channel_state: usize,
    scheduled: bool,
    downloads: String,
    buffer: String,
    rebuffered: bool,
    reward: f64,
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn simulate_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<MetricsArtifact, CliError> {
    let sim = cfg.sim_config()?;
    let prepared = prepare(&sim, &cfg.solver)?;
    let runs: Vec<(SimTrace, _)> = cfg.seeds.par_iter().map(|&s| run(&prepared, s)).collect();
    if cfg.record_trace {
        let rows = cfg.seeds.iter().zip(&runs).flat_map(|(&seed, (trace, _))| {
            trace.records.iter().map(move |r| TraceRow {
                seed,
                slot: r.slot,
                user: r.user,
                channel_state: r.channel_state,
                scheduled: r.scheduled,
                downloads: join(&r.downloads),
                buffer: join(&r.buffer),
                rebuffered: r.rebuffered,
                reward: r.reward,
            })
        });
        write_csv(&out.join(TRACE_FILE), rows)?;
    }
    let per_seed = runs.into_iter().map(|(_, m)| m).collect();
    let art = MetricsArtifact {
        scheduler: sim.scheduler.label().to_string(),
        subchannels: sim.subchannels,
        users: sim.num_users(),
        metrics: BatchMetrics::from_runs(&cfg.seeds, per_seed),
    };
    write_json(&out.join(METRICS_FILE), artifact::METRICS, &art)?;
    Ok(art)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepArtifact {
    pub users: usize,
    pub discount: f64,
    pub points: Vec<SweepPoint>,
}

pub fn sweep_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<SweepArtifact, CliError> {
    if cfg.groups.len() != 1 {
        return Err(CliError::config(
            "a load sweep needs exactly one homogeneous group",
            "groups",
        ));
    }
    let ms = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::config("required by this subcommand", "sweep"))?;
    if ms.is_empty() {
        return Err(CliError::config("needs at least one subchannel count", "sweep"));
    }
    let sweep = load_sweep(&cfg.groups[0], ms, cfg.slot_discount(), &cfg.solver)?;
    let art = SweepArtifact {
        users: sweep.users,
        discount: cfg.slot_discount(),
        points: sweep.points,
    };
    write_json(&out.join(SWEEP_JSON_FILE), artifact::SWEEP, &art)?;
    write_csv(&out.join(SWEEP_CSV_FILE), &art.points)?;
    Ok(art)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupAnalysis {
    pub group: usize,
    pub layer_time_shares: Vec<f64>,
    pub mu_avg: f64,
    pub lambda_avg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisArtifact {
    /// `None` when no sweep was found or its gap never changes sign.
    pub critical_load: Option<CriticalLoad>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_load_error: Option<String>,
    pub groups: Vec<GroupAnalysis>,
}

#[derive(Serialize)]
struct HeatmapCsvRow {
    group: usize,
    state: usize,
    channel_state: usize,
    buffer: String,
    index: f64,
    pruned: bool,
}

#[derive(Serialize)]
struct MuLambdaRow {
    subchannels: usize,
    load: f64,
    lambda_avg: f64,
    mu_avg: f64,
}

/// Critical load from `sweep.json`, and per-group rates and heatmaps from
/// `rb_solution.json`. Needs at least one of them.
pub fn analyze_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<AnalysisArtifact, CliError> {
    let sweep_path = out.join(SWEEP_JSON_FILE);
    let rb_path = out.join(RB_SOLUTION_FILE);
    if !sweep_path.exists() && !rb_path.exists() {
        return Err(CliError::new(
            ErrorKind::Dependency,
            "nothing to analyze; run `sweep` or `solve-rb` first",
        )
        .at(out.display().to_string()));
    }
    let mut art = AnalysisArtifact {
        critical_load: None,
        critical_load_error: None,
        groups: Vec::new(),
    };
    if sweep_path.exists() {
        let sweep: SweepArtifact = read_json(&sweep_path, artifact::SWEEP, "sweep")?;
        match critical_load(&sweep.points) {
            Ok(c) => art.critical_load = Some(c),
            Err(e) => art.critical_load_error = Some(e.to_string()),
        }
        let mut pts = sweep.points.clone();
        pts.sort_by(|a, b| a.load.total_cmp(&b.load));
        write_csv(
            &out.join(MU_LAMBDA_FILE),
            pts.iter().map(|p| MuLambdaRow {
                subchannels: p.subchannels,
                load: p.load,
                lambda_avg: p.lambda_avg,
                mu_avg: p.mu_avg,
            }),
        )?;
    }
    if rb_path.exists() {
        let rb = load_rb(cfg, out)?;
        let load = rb.group_sizes.iter().sum::<usize>() as f64 / rb.subchannels as f64;
        let mut rows = Vec::new();
        for (g, (sol, space)) in rb.solution.groups.iter().zip(&rb.spaces).enumerate() {
            let grp = &cfg.groups[g];
            art.groups.push(GroupAnalysis {
                group: g,
                layer_time_shares: layer_time_shares(sol, space, &grp.video),
                mu_avg: mu_avg(sol, space, &grp.video),
                lambda_avg: svcrb_core::analysis::lambda_avg(grp.channel.avg_rate()?, load)?,
            });
            for r in heatmap(&qaa_rank(sol, *space), &grp.video) {
                rows.push(HeatmapCsvRow {
                    group: g,
                    state: r.state,
                    channel_state: r.channel_state,
                    buffer: join(&r.buffer),
                    index: r.index,
                    pruned: r.pruned,
                });
            }
        }
        write_csv(&out.join(HEATMAP_FILE), rows)?;
    }
    write_json(&out.join(ANALYSIS_FILE), artifact::ANALYSIS, &art)?;
    Ok(art)
}

/// `--out`, then the environment override, then the config, then `out`.
pub fn resolve_out_dir(flag: Option<&Path>, env: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or(env)
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
