//! Joint quality-adaptation and scheduling benchmark as a semi-Markov
//! decision process.
//!
//! Time runs in short slots `tau_slot = min q / max C`. A user's state is
//! `(channel, buffer, u)` where `u` counts slots since the playing segment
//! started. The active actions `1..=L` each fetch one sub-segment of that
//! layer and last until its bits have arrived; the passive action lasts one
//! slot. Random durations are folded into discounted transition matrices so
//! the whole thing is an ordinary discounted LP over occupancy measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use svcrb_lp::{solve, LpBuilder, LpProblem, Sense, SolverOptions};

use crate::channel::ChannelModel;
use crate::error::{ModelError, Result};
use crate::sparse::TransitionMatrix;
use crate::video::{prefix_reward, unindex_buffer, BufferState, VideoConfig};

/// Default truncation tolerance for first-passage tails.
pub const TAIL_TOL: f64 = 1e-9;
/// Durations longer than this many slots are treated as "never absorbs".
const MAX_HORIZON: usize = 1_000_000;

/// Channel-major encoding of `(channel, buffer, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmdpStateSpace {
    pub num_channel_states: usize,
    pub num_buffer_states: usize,
    pub slots_per_segment: usize,
}

impl SmdpStateSpace {
    pub fn size(&self) -> usize {
        self.num_channel_states * self.num_buffer_states * self.slots_per_segment
    }

    pub fn index(&self, channel: usize, buffer: usize, u: usize) -> usize {
        (channel * self.num_buffer_states + buffer) * self.slots_per_segment + u
    }

    pub fn split(&self, state: usize) -> (usize, usize, usize) {
        let k = self.slots_per_segment;
        let u = state % k;
        let rest = state / k;
        (rest / self.num_buffer_states, rest % self.num_buffer_states, u)
    }
}

/// Slot length and the number of slots per segment. Fails unless the
/// segment duration is an integer multiple of the slot.
pub fn slot_timing(video: &VideoConfig, channel: &ChannelModel) -> Result<(f64, usize)> {
    let c_max = channel.max_rate();
    if !(c_max > 0.0) {
        return Err(ModelError::InvalidArgument("every channel rate is zero".into()));
    }
    let q_min = video.layer_rates.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_slot = q_min / c_max;
    let ratio = video.segment_duration / tau_slot;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
        return Err(ModelError::InvalidArgument(format!(
            "segment duration {} is not an integer multiple of the slot {tau_slot}",
            video.segment_duration
        )));
    }
    Ok((tau_slot, k as usize))
}

/// `dist[c][t - 1][j] = P(duration = t, next channel = j | first channel = c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstPassage {
    pub dist: Vec<Vec<Vec<f64>>>,
    /// Mass past the horizon, folded into the last slot of `dist`.
    pub tail_mass: Vec<f64>,
}

impl FirstPassage {
    /// Marginal law of the duration from channel state `c`, indexed by `t - 1`.
    pub fn duration_pmf(&self, c: usize) -> Vec<f64> {
        self.dist[c].iter().map(|row| row.iter().sum()).collect()
    }

    pub fn total_mass(&self, c: usize) -> f64 {
        self.dist[c].iter().flatten().sum()
    }

    pub fn mean_duration(&self, c: usize) -> f64 {
        self.duration_pmf(c)
            .iter()
            .enumerate()
            .map(|(t, p)| (t + 1) as f64 * p)
            .sum()
    }
}

/// Joint law of the time to deliver `q` bits and the channel state in the
/// slot after delivery, by forward recursion over (bits so far, channel).
pub fn first_passage(q: f64, channel: &ChannelModel, tau_slot: f64, tail_tol: f64) -> Result<FirstPassage> {
    if !(q > 0.0) || !(tau_slot > 0.0) || !(tail_tol > 0.0) {
        return Err(ModelError::InvalidArgument(
            "first passage needs positive size, slot and tolerance".into(),
        ));
    }
    if !(channel.max_rate() > 0.0) {
        return Err(ModelError::InvalidArgument(
            "a channel with only zero rates never delivers".into(),
        ));
    }
    let n = channel.num_states();
    let target = q * (1.0 - 1e-9);
    let per_slot: Vec<f64> = channel.states.iter().map(|c| c * tau_slot).collect();
    let mut dist = Vec::with_capacity(n);
    let mut tail_mass = Vec::with_capacity(n);
    for start in 0..n {
        // live mass keyed by accumulated bits (in units of 1e-12 q) per channel
        let mut live: Vec<(i64, Vec<f64>)> = vec![(0, one_hot(n, start))];
        let mut rows: Vec<Vec<f64>> = Vec::new();
        loop {
            let mut absorbed = vec![0.0; n];
            let mut next: Vec<(i64, Vec<f64>)> = Vec::new();
            for (key, mass) in &live {
                let acc = *key as f64 * q * 1e-12;
                for (c, &p) in mass.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let got = acc + per_slot[c];
                    if got >= target {
                        for (j, &cj) in channel.transition[c].iter().enumerate() {
                            absorbed[j] += p * cj;
                        }
                    } else {
                        let k = (got / q * 1e12).round() as i64;
                        let slot = match next.iter().position(|(nk, _)| *nk == k) {
                            Some(i) => i,
                            None => {
                                next.push((k, vec![0.0; n]));
                                next.len() - 1
                            }
                        };
                        for (j, &cj) in channel.transition[c].iter().enumerate() {
                            next[slot].1[j] += p * cj;
                        }
                    }
                }
            }
            rows.push(absorbed);
            let remaining: f64 = next.iter().flat_map(|(_, m)| m.iter()).sum();
            if remaining < tail_tol {
                // fold what is left into the last slot, keeping the law proper
                let last = rows.last_mut().expect("at least one slot");
                for (_, m) in &next {
                    for (j, &p) in m.iter().enumerate() {
                        last[j] += p;
                    }
                }
                tail_mass.push(remaining);
                break;
            }
            if rows.len() >= MAX_HORIZON {
                return Err(ModelError::InvalidArgument(format!(
                    "first passage from channel state {start} does not settle within {MAX_HORIZON} slots"
                )));
            }
            next.sort_by_key(|(k, _)| *k);
            live = next;
        }
        dist.push(rows);
    }
    Ok(FirstPassage { dist, tail_mass })
}

fn one_hot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// One slot of playback: an empty base layer at a segment boundary stalls,
/// otherwise the head segment advances and is removed when it completes.
/// Returns the next `(buffer, u)` and the undiscounted reward of the slot.
pub fn slot_playback(
    b: &BufferState,
    u: usize,
    slots_per_segment: usize,
    video: &VideoConfig,
) -> (BufferState, usize, f64) {
    let l = b.decodable_layers();
    if u == 0 && l == 0 {
        return (b.clone(), 0, video.rebuffer_penalty);
    }
    let reward = prefix_reward(l, video);
    if u + 1 < slots_per_segment {
        return (b.clone(), u + 1, reward);
    }
    let mut next = b.clone();
    for v in next.0.iter_mut().take(l) {
        *v -= 1;
    }
    (next, 0, reward)
}

/// `(r_bar, tau_bar)` for an action whose duration has law `pmf` (indexed
/// by `t - 1`) and whose slot rewards along the trajectory are `rewards`
/// (at least `pmf.len()` entries).
pub fn expected_reward_and_duration(pmf: &[f64], rewards: &[f64], discount: f64) -> (f64, f64) {
    let mut r_bar = 0.0;
    let mut tau_bar = 0.0;
    let mut acc_r = 0.0;
    let mut acc_t = 0.0;
    let mut d = 1.0;
    for (t, &p) in pmf.iter().enumerate() {
        acc_r += d * rewards[t];
        acc_t += d;
        d *= discount;
        r_bar += p * acc_r;
        tau_bar += p * acc_t;
    }
    (r_bar, tau_bar)
}

/// A set of identical users for the joint model. The channel kernel applies
/// per short slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmdpGroup {
    pub count: usize,
    pub channel: ChannelModel,
    pub video: VideoConfig,
}

#[derive(Debug, Clone)]
pub struct SmdpGroupModel {
    pub count: usize,
    pub space: SmdpStateSpace,
    pub tau_slot: f64,
    /// Per-slot discount `e^{-s}`.
    pub discount: f64,
    /// Discounted transitions, one matrix per action `0..=L`.
    pub h: Vec<TransitionMatrix>,
    /// `r_bar[a][s]`.
    pub r_bar: Vec<Vec<f64>>,
    /// `tau_bar[a][s]`.
    pub tau_bar: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

impl SmdpGroupModel {
    /// Builds the model at per-second discount `beta`, so one slot is
    /// discounted by `beta^tau_slot`. Slot rewards are scaled by
    /// `(1 - e^{-s}) / (1 - beta)` so a second of playback is worth what one
    /// segment slot is worth in the restless-bandit model.
    pub fn build(group: &SmdpGroup, beta: f64, tail_tol: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ModelError::InvalidArgument(format!("discount {beta} outside (0, 1)")));
        }
        let video = &group.video;
        video.validate()?;
        group.channel.validate().map_err(ModelError::InvalidChannel)?;
        let (tau_slot, k) = slot_timing(video, &group.channel)?;
        let discount = beta.powf(tau_slot);
        let weight = (1.0 - discount) / (1.0 - beta.powf(video.segment_duration));
        let space = SmdpStateSpace {
            num_channel_states: group.channel.num_states(),
            num_buffer_states: video.num_buffer_states(),
            slots_per_segment: k,
        };
        let passages: Vec<FirstPassage> = video
            .layer_rates
            .par_iter()
            .map(|&q| first_passage(q, &group.channel, tau_slot, tail_tol))
            .collect::<Result<_>>()?;
        let buffers: Vec<BufferState> = (0..space.num_buffer_states)
            .map(|i| unindex_buffer(i, video).expect("index in range"))
            .collect();

        let (h0, r0) = build_passive(&space, &group.channel, video, &buffers, discount, weight);
        let mut h = vec![h0];
        let mut r_bar = vec![r0];
        let mut tau_bar = vec![vec![1.0; space.size()]];
        for (l, fp) in passages.iter().enumerate() {
            let (hl, rl, tl) = build_active(&space, video, &buffers, l, fp, discount, weight);
            h.push(hl);
            r_bar.push(rl);
            tau_bar.push(tl);
        }

        let pi = group.channel.stationary_distribution()?;
        let mut alpha = vec![0.0; space.size()];
        for (c, p) in pi.iter().enumerate() {
            alpha[space.index(c, 0, 0)] = *p;
        }
        Ok(Self {
            count: group.count,
            space,
            tau_slot,
            discount,
            h,
            r_bar,
            tau_bar,
            alpha,
        })
    }

    pub fn num_states(&self) -> usize {
        self.space.size()
    }

    pub fn num_actions(&self) -> usize {
        self.h.len()
    }
}

fn build_passive(
    space: &SmdpStateSpace,
    channel: &ChannelModel,
    video: &VideoConfig,
    buffers: &[BufferState],
    discount: f64,
    weight: f64,
) -> (TransitionMatrix, Vec<f64>) {
    let mut rows = Vec::with_capacity(space.size());
    let mut rewards = Vec::with_capacity(space.size());
    for s in 0..space.size() {
        let (c, bi, u) = space.split(s);
        let (nb, nu, r) = slot_playback(&buffers[bi], u, space.slots_per_segment, video);
        let nbi = buffer_index(&nb, video);
        let row = channel.transition[c]
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(j, p)| (space.index(j, nbi, nu), discount * p))
            .collect();
        rows.push(row);
        rewards.push(weight * r);
    }
    (TransitionMatrix::from_rows(space.size(), rows), rewards)
}

/// Discounted transitions of fetching one sub-segment of layer `l`
/// (0-based). Playback runs slot by slot while the download is in flight and
/// the sub-segment lands at the end; a full layer discards it.
fn build_active(
    space: &SmdpStateSpace,
    video: &VideoConfig,
    buffers: &[BufferState],
    l: usize,
    fp: &FirstPassage,
    discount: f64,
    weight: f64,
) -> (TransitionMatrix, Vec<f64>, Vec<f64>) {
    let n = space.size();
    let mut rows = Vec::with_capacity(n);
    let mut r_bar = Vec::with_capacity(n);
    let mut tau_bar = Vec::with_capacity(n);
    for s in 0..n {
        let (c, bi, u) = space.split(s);
        let table = &fp.dist[c];
        let mut b = buffers[bi].clone();
        let mut off = u;
        let mut rewards = Vec::with_capacity(table.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut d = 1.0;
        for probs in table {
            let (nb, nu, r) = slot_playback(&b, off, space.slots_per_segment, video);
            rewards.push(weight * r);
            b = nb;
            off = nu;
            d *= discount;
            if probs.iter().all(|p| *p == 0.0) {
                continue;
            }
            let mut landed = b.clone();
            if landed.0[l] < video.buffer_limit {
                landed.0[l] += 1;
            }
            let target = buffer_index(&landed, video);
            for (j, &p) in probs.iter().enumerate() {
                if p > 0.0 {
                    row.push((space.index(j, target, off), d * p));
                }
            }
        }
        let pmf: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
        let (r, t) = expected_reward_and_duration(&pmf, &rewards, discount);
        rows.push(row);
        r_bar.push(r);
        tau_bar.push(t);
    }
    (TransitionMatrix::from_rows(n, rows), r_bar, tau_bar)
}

fn buffer_index(b: &BufferState, video: &VideoConfig) -> usize {
    crate::video::index_buffer(b, video).expect("buffer stays within limits")
}

/// Assembled joint LP with its layout.
#[derive(Debug, Clone)]
pub struct MusmdpLp {
    pub problem: LpProblem,
    /// `(column offset, row offset, states, actions)` per group.
    pub layout: Vec<(usize, usize, usize, usize)>,
    pub resource_row: usize,
    pub total_users: usize,
}

impl MusmdpLp {
    pub fn col(&self, g: usize, s: usize, a: usize) -> usize {
        let (off, _, _, na) = self.layout[g];
        off + na * s + a
    }
}

/// Maximize `sum_g N_g sum_{s,a} r_bar y` over one polytope per group with
/// `sum_g (N_g / N) sum_{s, a >= 1} tau_bar y = M / (N (1 - e^{-s}))`.
pub fn build_musmdp_lp(models: &[SmdpGroupModel], subchannels: f64) -> Result<MusmdpLp> {
    let total: usize = models.iter().map(|m| m.count).sum();
    if models.is_empty() || total == 0 {
        return Err(ModelError::InvalidArgument("no users".into()));
    }
    if !(subchannels >= 0.0) || subchannels > total as f64 {
        return Err(ModelError::InvalidArgument(format!(
            "subchannels {subchannels} outside [0, {total}]"
        )));
    }
    let discount = models[0].discount;
    if models.iter().any(|m| (m.discount - discount).abs() > 1e-12) {
        return Err(ModelError::InvalidArgument(
            "groups must share one slot length and discount".into(),
        ));
    }
    let mut b = LpBuilder::new(Sense::Maximize);
    let mut layout = Vec::new();
    let (mut col, mut row) = (0, 0);
    for m in models {
        layout.push((col, row, m.num_states(), m.num_actions()));
        col += m.num_states() * m.num_actions();
        row += m.num_states();
    }
    for (g, m) in models.iter().enumerate() {
        for s in 0..m.num_states() {
            for a in 0..m.num_actions() {
                b.add_var(format!("y[{g},{s},{a}]"), m.count as f64 * m.r_bar[a][s]);
            }
        }
    }
    for (g, m) in models.iter().enumerate() {
        for j in 0..m.num_states() {
            b.add_row(format!("balance[{g},{j}]"), m.alpha[j]);
        }
    }
    let resource_row = b.add_row("resource", subchannels / (total as f64 * (1.0 - discount)));
    let mut crash = Vec::new();
    for (g, m) in models.iter().enumerate() {
        let (off, roff, _, na) = layout[g];
        let w = m.count as f64 / total as f64;
        for s in 0..m.num_states() {
            for a in 0..na {
                let c = off + na * s + a;
                b.add_coefficient(roff + s, c, 1.0);
                for (j, h) in m.h[a].row(s) {
                    b.add_coefficient(roff + j, c, -h);
                }
                if a == 0 {
                    crash.push(c);
                } else {
                    b.add_coefficient(resource_row, c, w * m.tau_bar[a][s]);
                }
            }
        }
    }
    let mut problem = b.build();
    problem.crash_basis = crash;
    Ok(MusmdpLp {
        problem,
        layout,
        resource_row,
        total_users: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusmdpSolution {
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub max_primal_residual: f64,
    /// `y[g][s][a]`.
    pub occupancy: Vec<Vec<Vec<f64>>>,
}

pub fn solve_musmdp(lp: &MusmdpLp, options: &SolverOptions) -> Result<MusmdpSolution> {
    let sol = solve(&lp.problem, options)?;
    let occupancy = lp
        .layout
        .iter()
        .map(|&(off, _, ns, na)| {
            (0..ns)
                .map(|s| sol.x[off + na * s..off + na * (s + 1)].to_vec())
                .collect()
        })
        .collect();
    Ok(MusmdpSolution {
        objective: sol.objective,
        dual_objective: sol.dual_objective(&lp.problem),
        iterations: sol.iterations,
        max_primal_residual: sol.primal_residual(&lp.problem),
        occupancy,
    })
}
