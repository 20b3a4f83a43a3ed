//! Per-slot user selection: the LP-derived QA-aware ranking, the QA-blind
//! buffer-evolution heuristic and three classic baselines.

use std::cmp::{Ordering, Reverse};
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::rb::{GroupSolution, StateSpace};
use crate::sparse::TransitionMatrix;

/// Occupancies at or below this are treated as zero.
pub const SUPPORT_TOL: f64 = 1e-9;

/// What a scheduler may look at for one user in the current slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserView {
    pub group: usize,
    /// Full state index within the group's state space.
    pub state: usize,
    pub channel_state: usize,
    /// Current channel rate in bits per second.
    pub rate: f64,
    /// Base-layer sub-segments in the buffer.
    pub base_level: usize,
}

/// What happened to one user after a slot's downloads.
#[derive(Debug, Clone, PartialEq)]
pub struct UserOutcome {
    pub scheduled: bool,
    /// Sub-segments delivered per layer.
    pub delivered: Vec<usize>,
    /// Bits delivered divided by the slot length.
    pub throughput: f64,
}

pub trait Scheduler {
    /// Users to serve, best first; exactly `min(m, users.len())` of them.
    fn select(&mut self, users: &[UserView], m: usize) -> Vec<usize>;

    /// Feedback after the slot. Called once per slot with one entry per user.
    fn observe(&mut self, _outcomes: &[UserOutcome]) {}
}

fn top_m<K: Ord>(n: usize, m: usize, key: impl Fn(usize) -> K) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&i| (key(i), i));
    idx.truncate(m.min(n));
    idx
}

/// Total order on finite floats for sort keys.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

// ---------------------------------------------------------------------------
// QA-aware ranking

/// Priority order over a group's states derived from a solved relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityRanking {
    pub space: StateSpace,
    /// Retained states, highest priority first.
    pub order: Vec<usize>,
    /// Number of leading entries of `order` that come from the active set.
    pub active_len: usize,
    /// 1-based position per state; `None` for pruned states.
    pub position: Vec<Option<usize>>,
}

impl PriorityRanking {
    /// `i_s = p_s / |S|`, with pruned states at 1.
    pub fn normalized_index(&self, s: usize) -> f64 {
        match self.position[s] {
            Some(p) => p as f64 / self.position.len() as f64,
            None => 1.0,
        }
    }

    pub fn is_pruned(&self, s: usize) -> bool {
        self.position[s].is_none()
    }
}

/// States with positive occupancy under either action.
pub fn prune_unreachable(x0: &[f64], x1: &[f64]) -> Vec<bool> {
    x0.iter()
        .zip(x1)
        .map(|(a, b)| *a > SUPPORT_TOL || *b > SUPPORT_TOL)
        .collect()
}

/// Forward closure of `support(alpha)` along edges `l -> s` with
/// `h^a_{ls} > 0` and `x^a_l > 0`.
pub fn reachable_states(
    h0: &TransitionMatrix,
    h1: &TransitionMatrix,
    x0: &[f64],
    x1: &[f64],
    alpha: &[f64],
) -> Vec<bool> {
    let mut seen: Vec<bool> = alpha.iter().map(|a| *a > 0.0).collect();
    let mut queue: VecDeque<usize> = (0..alpha.len()).filter(|&s| seen[s]).collect();
    while let Some(l) = queue.pop_front() {
        for (h, x) in [(h0, x0), (h1, x1)] {
            if x[l] <= SUPPORT_TOL {
                continue;
            }
            for (s, p) in h.row(l) {
                if p > 0.0 && !seen[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
    }
    seen
}

/// Tie-break among equal scores: lower buffer index, then higher channel.
fn tie_key(space: &StateSpace, s: usize) -> (usize, Reverse<usize>) {
    let (c, b) = space.split(s);
    (b, Reverse(c))
}

/// Ranks retained states: activated states (`x^1 > 0`) by `gamma^0`
/// descending, then passive-only states by `gamma^1` ascending.
pub fn qaa_rank_raw(space: StateSpace, x0: &[f64], x1: &[f64], gamma0: &[f64], gamma1: &[f64]) -> PriorityRanking {
    let n = x0.len();
    let mut q1: Vec<usize> = (0..n).filter(|&s| x1[s] > SUPPORT_TOL).collect();
    let mut q0: Vec<usize> = (0..n)
        .filter(|&s| x1[s] <= SUPPORT_TOL && x0[s] > SUPPORT_TOL)
        .collect();
    q1.sort_by_key(|&s| (Reverse(Key(gamma0[s])), tie_key(&space, s)));
    q0.sort_by_key(|&s| (Key(gamma1[s]), tie_key(&space, s)));
    let active_len = q1.len();
    let order: Vec<usize> = q1.into_iter().chain(q0).collect();
    let mut position = vec![None; n];
    for (p, &s) in order.iter().enumerate() {
        position[s] = Some(p + 1);
    }
    PriorityRanking {
        space,
        order,
        active_len,
        position,
    }
}

pub fn qaa_rank(solution: &GroupSolution, space: StateSpace) -> PriorityRanking {
    qaa_rank_raw(space, &solution.x0, &solution.x1, &solution.gamma0, &solution.gamma1)
}

/// Picks the `m` users whose states rank highest. Rankings of different
/// groups are compared through the normalized index; pruned states go last.
pub fn qaa_schedule(rankings: &[PriorityRanking], users: &[UserView], m: usize) -> Vec<usize> {
    top_m(users.len(), m, |i| {
        let u = &users[i];
        let r = &rankings[u.group];
        let pruned = r.is_pruned(u.state);
        (pruned, Key(r.normalized_index(u.state)), tie_key(&r.space, u.state))
    })
}

#[derive(Debug, Clone)]
pub struct Qaa {
    pub rankings: Vec<PriorityRanking>,
}

impl Scheduler for Qaa {
    fn select(&mut self, users: &[UserView], m: usize) -> Vec<usize> {
        qaa_schedule(&self.rankings, users, m)
    }
}

// ---------------------------------------------------------------------------
// Buffer evolution aware scheduling

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeasParams {
    pub epsilon: f64,
    pub threshold: f64,
    pub initial_level: f64,
    /// `h(x) = h_slope * x + h_intercept` on sub-segments delivered.
    pub h_slope: f64,
    pub h_intercept: f64,
    pub slot_duration: f64,
    pub segment_duration: f64,
}

impl Default for BeasParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            threshold: 0.0,
            initial_level: 0.0,
            h_slope: 1.0,
            h_intercept: 0.0,
            slot_duration: 1.0,
            segment_duration: 1.0,
        }
    }
}

impl BeasParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(format!("epsilon {} outside [0, 1)", self.epsilon));
        }
        if !(self.slot_duration > 0.0 && self.segment_duration > 0.0) {
            return Err("slot and segment durations must be positive".into());
        }
        if ![self.threshold, self.initial_level, self.h_slope, self.h_intercept]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err("BEAS parameters must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeasState {
    pub params: BeasParams,
    pub levels: Vec<f64>,
}

impl BeasState {
    pub fn new(params: BeasParams, users: usize) -> Self {
        Self {
            levels: vec![params.initial_level; users],
            params,
        }
    }

    /// Users below the threshold, best channel first, topped up with the
    /// lowest base-layer occupancies when fewer than `m` are below it.
    pub fn select(&self, users: &[UserView], m: usize) -> Vec<usize> {
        let m = m.min(users.len());
        let below: Vec<bool> = self.levels.iter().map(|b| *b < self.params.threshold).collect();
        let count = below.iter().filter(|b| **b).count();
        if count >= m {
            let mut cand: Vec<usize> = (0..users.len()).filter(|&i| below[i]).collect();
            cand.sort_by_key(|&i| (Reverse(Key(users[i].rate)), i));
            cand.truncate(m);
            cand
        } else {
            let mut chosen: Vec<usize> = (0..users.len()).filter(|&i| below[i]).collect();
            let mut rest: Vec<usize> = (0..users.len()).filter(|&i| !below[i]).collect();
            rest.sort_by_key(|&i| (users[i].base_level, i));
            chosen.extend(rest.into_iter().take(m - count));
            chosen
        }
    }

    /// Smoothed update: scheduled users move toward `tau_seg h(n)`, the rest
    /// drift down by `tau_slot`.
    pub fn update(&mut self, scheduled: &[bool], delivered: &[usize]) {
        let p = &self.params;
        for (i, b) in self.levels.iter_mut().enumerate() {
            *b = if scheduled[i] {
                let h = p.h_slope * delivered[i] as f64 + p.h_intercept;
                (1.0 - p.epsilon) * *b + p.epsilon * p.segment_duration * h
            } else {
                (1.0 - p.epsilon) * *b - p.epsilon * p.slot_duration
            };
        }
    }
}

impl Scheduler for BeasState {
    fn select(&mut self, users: &[UserView], m: usize) -> Vec<usize> {
        BeasState::select(self, users, m)
    }

    fn observe(&mut self, outcomes: &[UserOutcome]) {
        let scheduled: Vec<bool> = outcomes.iter().map(|o| o.scheduled).collect();
        let delivered: Vec<usize> = outcomes.iter().map(|o| o.delivered.iter().sum()).collect();
        self.update(&scheduled, &delivered);
    }
}

// ---------------------------------------------------------------------------
// Baselines

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "PF")]
    ProportionalFair,
    #[serde(rename = "BCF")]
    BestChannelFirst,
    #[serde(rename = "LBF")]
    LowestBufferFirst,
}

/// One-shot baseline decision. `throughput` is only read by PF.
pub fn baseline_schedule(kind: BaselineKind, users: &[UserView], throughput: &[f64], m: usize) -> Vec<usize> {
    match kind {
        BaselineKind::ProportionalFair => top_m(users.len(), m, |i| Reverse(Key(users[i].rate / throughput[i]))),
        BaselineKind::BestChannelFirst => top_m(users.len(), m, |i| Reverse(Key(users[i].rate))),
        BaselineKind::LowestBufferFirst => top_m(users.len(), m, |i| users[i].base_level),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub kind: BaselineKind,
    /// PF averaging window in slots.
    pub time_constant: f64,
    pub throughput: Vec<f64>,
}

/// Starting PF average, small enough that unserved users look hungry.
pub const PF_INITIAL_THROUGHPUT: f64 = 1e-6;

impl Baseline {
    pub fn new(kind: BaselineKind, time_constant: f64, users: usize) -> Self {
        Self {
            kind,
            time_constant,
            throughput: vec![PF_INITIAL_THROUGHPUT; users],
        }
    }
}

impl Scheduler for Baseline {
    fn select(&mut self, users: &[UserView], m: usize) -> Vec<usize> {
        baseline_schedule(self.kind, users, &self.throughput, m)
    }

    fn observe(&mut self, outcomes: &[UserOutcome]) {
        let a = 1.0 / self.time_constant;
        for (t, o) in self.throughput.iter_mut().zip(outcomes) {
            let served = if o.scheduled { o.throughput } else { 0.0 };
            *t = ((1.0 - a) * *t + a * served).max(PF_INITIAL_THROUGHPUT);
        }
    }
}
