//! Slot-level multi-user streaming simulation. One slot is one segment
//! duration: the scheduler picks users, everyone plays a segment from the
//! start-of-slot buffer, served users download on top of what is left, and
//! the channels move on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use svcrb_lp::SolverOptions;

use crate::channel::sample_discrete;
use crate::error::{ModelError, Result};
use crate::qa::decide_with_capacity;
use crate::rb::{build_rb_lp, solve_rb, GroupModel, RbSolution, StateSpace, UserGroup};
use crate::schedulers::{
    qaa_rank, Baseline, BaselineKind, BeasParams, BeasState, PriorityRanking, Qaa, Scheduler, UserOutcome, UserView,
};
use crate::video::{index_buffer, playback_step, BufferState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SchedulerSpec {
    #[serde(rename = "QAA")]
    Qaa,
    #[serde(rename = "BEAS")]
    Beas {
        #[serde(default)]
        params: BeasParams,
    },
    #[serde(rename = "PF")]
    Pf {
        #[serde(default = "default_pf_window")]
        time_constant: f64,
    },
    #[serde(rename = "BCF")]
    Bcf,
    #[serde(rename = "LBF")]
    Lbf,
}

fn default_pf_window() -> f64 {
    50.0
}

impl SchedulerSpec {
    pub fn label(&self) -> &'static str {
        match self {
            SchedulerSpec::Qaa => "QAA",
            SchedulerSpec::Beas { .. } => "BEAS",
            SchedulerSpec::Pf { .. } => "PF",
            SchedulerSpec::Bcf => "BCF",
            SchedulerSpec::Lbf => "LBF",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub groups: Vec<UserGroup>,
    pub subchannels: usize,
    pub scheduler: SchedulerSpec,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Per-second discount.
    #[serde(default = "default_discount")]
    pub discount: f64,
    #[serde(default)]
    pub seed: u64,
    /// Leading slots left out of the metrics.
    #[serde(default)]
    pub warmup: usize,
    #[serde(default)]
    pub record_trace: bool,
}

fn default_horizon() -> usize {
    600
}

fn default_discount() -> f64 {
    0.99
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() || self.groups.iter().all(|g| g.count == 0) {
            return Err(ModelError::InvalidArgument("no users".into()));
        }
        if self.horizon == 0 || self.warmup >= self.horizon {
            return Err(ModelError::InvalidArgument(
                "need horizon >= 1 and warmup < horizon".into(),
            ));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(ModelError::InvalidArgument(format!(
                "discount {} outside (0, 1)",
                self.discount
            )));
        }
        let tau = self.groups[0].video.segment_duration;
        if self.groups.iter().any(|g| g.video.segment_duration != tau) {
            return Err(ModelError::InvalidArgument(
                "groups must share the segment duration".into(),
            ));
        }
        for g in &self.groups {
            g.video.validate()?;
            g.channel.validate().map_err(ModelError::InvalidChannel)?;
            g.qa.validate(&g.video, g.channel.num_states())?;
        }
        if let SchedulerSpec::Beas { params } = &self.scheduler {
            params.validate().map_err(ModelError::InvalidArgument)?;
        }
        if let SchedulerSpec::Pf { time_constant } = self.scheduler {
            if !(time_constant >= 1.0) {
                return Err(ModelError::InvalidArgument("PF time constant must be >= 1 slot".into()));
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn slot_discount(&self) -> f64 {
        self.discount.powf(self.groups[0].video.segment_duration)
    }
}

/// A validated configuration with the scheduler's offline part (the
/// relaxation and its ranking, for QAA) computed once.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: SimConfig,
    pub spaces: Vec<StateSpace>,
    pub rankings: Option<Vec<PriorityRanking>>,
    pub rb_solution: Option<RbSolution>,
}

pub fn prepare(config: &SimConfig, options: &SolverOptions) -> Result<Prepared> {
    config.validate()?;
    let spaces = config
        .groups
        .iter()
        .map(|g| StateSpace::new(&g.channel, &g.video))
        .collect();
    let (rankings, rb_solution) = if config.scheduler == SchedulerSpec::Qaa {
        let models: Vec<GroupModel> = config
            .groups
            .iter()
            .filter(|g| g.count > 0)
            .map(GroupModel::build)
            .collect::<Result<_>>()?;
        let rb = build_rb_lp(
            &models,
            config.subchannels.min(config.num_users()) as f64,
            config.slot_discount(),
        )?;
        let sol = solve_rb(&rb, options)?;
        let mut rankings = Vec::new();
        let mut k = 0;
        for g in &config.groups {
            let space = StateSpace::new(&g.channel, &g.video);
            if g.count > 0 {
                rankings.push(qaa_rank(&sol.groups[k], space));
                k += 1;
            } else {
                rankings.push(crate::schedulers::qaa_rank_raw(space, &[], &[], &[], &[]));
            }
        }
        (Some(rankings), Some(sol))
    } else {
        (None, None)
    };
    Ok(Prepared {
        config: config.clone(),
        spaces,
        rankings,
        rb_solution,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub user: usize,
    pub channel_state: usize,
    pub scheduled: bool,
    pub downloads: Vec<usize>,
    /// Buffer at the end of the slot.
    pub buffer: Vec<usize>,
    pub rebuffered: bool,
    pub reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub records: Vec<SlotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub discounted_reward: f64,
    pub rebuffer_fraction: f64,
    pub base_only_fraction: f64,
    /// Share of downloaded sub-segments per layer; all zero if none.
    pub layer_download_fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub users: Vec<UserMetrics>,
    pub mean_discounted_reward: f64,
    pub mean_rebuffer_fraction: f64,
    pub mean_base_only_fraction: f64,
}

impl Metrics {
    fn from_users(users: Vec<UserMetrics>) -> Self {
        let n = users.len() as f64;
        let mean = |f: fn(&UserMetrics) -> f64| users.iter().map(f).sum::<f64>() / n;
        Self {
            mean_discounted_reward: mean(|u| u.discounted_reward),
            mean_rebuffer_fraction: mean(|u| u.rebuffer_fraction),
            mean_base_only_fraction: mean(|u| u.base_only_fraction),
            users,
        }
    }
}

struct Tally {
    reward: f64,
    stalls: usize,
    played: usize,
    base_only: usize,
    downloads: Vec<usize>,
}

fn build_scheduler(prepared: &Prepared, users: usize) -> Box<dyn Scheduler> {
    let cfg = &prepared.config;
    match &cfg.scheduler {
        SchedulerSpec::Qaa => Box::new(Qaa {
            rankings: prepared.rankings.clone().expect("prepared with rankings"),
        }),
        SchedulerSpec::Beas { params } => Box::new(BeasState::new(params.clone(), users)),
        SchedulerSpec::Pf { time_constant } => {
            Box::new(Baseline::new(BaselineKind::ProportionalFair, *time_constant, users))
        }
        SchedulerSpec::Bcf => Box::new(Baseline::new(BaselineKind::BestChannelFirst, 1.0, users)),
        SchedulerSpec::Lbf => Box::new(Baseline::new(BaselineKind::LowestBufferFirst, 1.0, users)),
    }
}

/// Simulates one run with `seed`.
pub fn run(prepared: &Prepared, seed: u64) -> (SimTrace, Metrics) {
    let cfg = &prepared.config;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group_of: Vec<usize> = cfg
        .groups
        .iter()
        .enumerate()
        .flat_map(|(g, grp)| std::iter::repeat_n(g, grp.count))
        .collect();
    let n = group_of.len();
    let pis: Vec<Vec<f64>> = cfg
        .groups
        .iter()
        .map(|g| g.channel.stationary_distribution().expect("validated channel"))
        .collect();
    let mut channel: Vec<usize> = group_of.iter().map(|&g| sample_discrete(&pis[g], &mut rng)).collect();
    let mut buffers: Vec<BufferState> = group_of
        .iter()
        .map(|&g| BufferState::empty(cfg.groups[g].video.num_layers()))
        .collect();
    let mut tallies: Vec<Tally> = group_of
        .iter()
        .map(|&g| Tally {
            reward: 0.0,
            stalls: 0,
            played: 0,
            base_only: 0,
            downloads: vec![0; cfg.groups[g].video.num_layers()],
        })
        .collect();
    let mut scheduler = build_scheduler(prepared, n);
    let beta = cfg.slot_discount();
    let tau = cfg.groups[0].video.segment_duration;
    let mut trace = SimTrace::default();
    let mut weight = 1.0;

    for slot in 0..cfg.horizon {
        let views: Vec<UserView> = (0..n)
            .map(|i| {
                let g = group_of[i];
                let grp = &cfg.groups[g];
                let b = index_buffer(&buffers[i], &grp.video).expect("buffer within limits");
                UserView {
                    group: g,
                    state: prepared.spaces[g].full_index(channel[i], b),
                    channel_state: channel[i],
                    rate: grp.channel.states[channel[i]],
                    base_level: buffers[i].base(),
                }
            })
            .collect();
        let mut scheduled = vec![false; n];
        for i in scheduler.select(&views, cfg.subchannels) {
            scheduled[i] = true;
        }
        let mut outcomes = Vec::with_capacity(n);
        let counted = slot >= cfg.warmup;
        for i in 0..n {
            let grp = &cfg.groups[group_of[i]];
            let play = playback_step(&buffers[i], &grp.video);
            let mut next = play.next;
            let delivered = if scheduled[i] {
                decide_with_capacity(
                    &grp.qa,
                    &grp.video,
                    &next,
                    channel[i],
                    grp.channel.num_states(),
                    views[i].rate * tau,
                )
            } else {
                vec![0; next.0.len()]
            };
            for (v, d) in next.0.iter_mut().zip(&delivered) {
                *v += d;
            }
            let bits: f64 = delivered
                .iter()
                .zip(&grp.video.layer_rates)
                .map(|(d, q)| *d as f64 * q)
                .sum();
            if counted {
                let t = &mut tallies[i];
                t.reward += weight * play.reward;
                if play.rebuffered {
                    t.stalls += 1;
                } else {
                    t.played += 1;
                    if play.layers_played == 1 {
                        t.base_only += 1;
                    }
                }
                for (acc, d) in t.downloads.iter_mut().zip(&delivered) {
                    *acc += d;
                }
            }
            if cfg.record_trace {
                trace.records.push(SlotRecord {
                    slot,
                    user: i,
                    channel_state: channel[i],
                    scheduled: scheduled[i],
                    downloads: delivered.clone(),
                    buffer: next.0.clone(),
                    rebuffered: play.rebuffered,
                    reward: play.reward,
                });
            }
            buffers[i] = next;
            outcomes.push(UserOutcome {
                scheduled: scheduled[i],
                delivered,
                throughput: bits / tau,
            });
        }
        scheduler.observe(&outcomes);
        for i in 0..n {
            channel[i] = cfg.groups[group_of[i]].channel.sample_next(channel[i], &mut rng);
        }
        if counted {
            weight *= beta;
        }
    }

    let slots = (cfg.horizon - cfg.warmup) as f64;
    let users = tallies
        .into_iter()
        .map(|t| {
            let total: usize = t.downloads.iter().sum();
            UserMetrics {
                discounted_reward: t.reward,
                rebuffer_fraction: t.stalls as f64 / slots,
                base_only_fraction: if t.played == 0 {
                    0.0
                } else {
                    t.base_only as f64 / t.played as f64
                },
                layer_download_fractions: t
                    .downloads
                    .iter()
                    .map(|&d| if total == 0 { 0.0 } else { d as f64 / total as f64 })
                    .collect(),
            }
        })
        .collect();
    (trace, Metrics::from_users(users))
}

/// Mean and standard error of a statistic across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// `None` with a single seed.
    pub std_err: Option<f64>,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std_err = (xs.len() > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Self { mean, std_err }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    pub seeds: Vec<u64>,
    pub discounted_reward: Estimate,
    pub rebuffer_fraction: Estimate,
    pub base_only_fraction: Estimate,
    pub per_seed: Vec<Metrics>,
}

/// Runs every seed in parallel; results come back in seed order.
pub fn run_batch(prepared: &Prepared, seeds: &[u64]) -> Result<BatchMetrics> {
    if seeds.is_empty() {
        return Err(ModelError::InvalidArgument("need at least one seed".into()));
    }
    let per_seed: Vec<Metrics> = seeds.par_iter().map(|&s| run(prepared, s).1).collect();
    Ok(BatchMetrics::from_runs(seeds, per_seed))
}

impl BatchMetrics {
    /// Pools per-seed metrics given in the order of `seeds`.
    pub fn from_runs(seeds: &[u64], per_seed: Vec<Metrics>) -> Self {
        assert_eq!(seeds.len(), per_seed.len(), "one metrics record per seed");
        let pick = |f: fn(&Metrics) -> f64| Estimate::from_samples(&per_seed.iter().map(f).collect::<Vec<_>>());
        Self {
            seeds: seeds.to_vec(),
            discounted_reward: pick(|m| m.mean_discounted_reward),
            rebuffer_fraction: pick(|m| m.mean_rebuffer_fraction),
            base_only_fraction: pick(|m| m.mean_base_only_fraction),
            per_seed,
        }
    }
}
