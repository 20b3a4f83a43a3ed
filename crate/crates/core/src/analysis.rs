//! Fill rate against drain rate, the critical load where they meet, and
//! priority heatmaps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use svcrb_lp::SolverOptions;

use crate::error::{ModelError, Result};
use crate::rb::{build_rb_lp, solve_rb, GroupModel, GroupSolution, RbSolution, StateSpace, UserGroup};
use crate::schedulers::{qaa_rank, PriorityRanking};
use crate::video::{unindex_buffer, VideoConfig};

/// Average throughput a user gets at load `rho = N / M`.
pub fn lambda_avg(c_avg: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(ModelError::InvalidArgument(format!("load {rho} must be positive")));
    }
    Ok(c_avg / rho)
}

/// Share of discounted time spent playing exactly `l` layers, `l = 0..=L`.
pub fn layer_time_shares(solution: &GroupSolution, space: &StateSpace, video: &VideoConfig) -> Vec<f64> {
    let mut shares = vec![0.0; video.num_layers() + 1];
    for (s, (a, b)) in solution.x0.iter().zip(&solution.x1).enumerate() {
        let (_, buf) = space.split(s);
        let l = unindex_buffer(buf, video).expect("index in range").decodable_layers();
        shares[l] += a + b;
    }
    let total: f64 = shares.iter().sum();
    if total > 0.0 {
        shares.iter_mut().for_each(|v| *v /= total);
    }
    shares
}

/// Average playback rate `sum_l (q_1 + .. + q_l) tau_l`.
pub fn mu_avg(solution: &GroupSolution, space: &StateSpace, video: &VideoConfig) -> f64 {
    mu_from_shares(&layer_time_shares(solution, space, video), video)
}

pub fn mu_from_shares(shares: &[f64], video: &VideoConfig) -> f64 {
    let mut rate = 0.0;
    let mut mu = 0.0;
    for (l, tau) in shares.iter().enumerate() {
        if l > 0 {
            rate += video.layer_rates[l - 1] / video.segment_duration;
        }
        mu += rate * tau;
    }
    mu
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub subchannels: usize,
    pub load: f64,
    pub lambda_avg: f64,
    pub mu_avg: f64,
    pub objective_per_user: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSweep {
    pub users: usize,
    pub points: Vec<SweepPoint>,
    /// Solutions in the order of `points`.
    #[serde(skip)]
    pub solutions: Vec<RbSolution>,
}

/// Solves the homogeneous relaxation for every subchannel count, in
/// parallel. `group.count` is the population `N`; `beta` is per slot.
pub fn load_sweep(group: &UserGroup, subchannels: &[usize], beta: f64, options: &SolverOptions) -> Result<LoadSweep> {
    let model = GroupModel::build(group)?;
    let c_avg = group.channel.avg_rate()?;
    let n = group.count;
    let space = model.space;
    let solved: Vec<(SweepPoint, RbSolution)> = subchannels
        .par_iter()
        .map(|&m| {
            if m == 0 || m > n {
                return Err(ModelError::InvalidArgument(format!("subchannels {m} outside [1, {n}]")));
            }
            let rb = build_rb_lp(std::slice::from_ref(&model), m as f64, beta)?;
            let sol = solve_rb(&rb, options)?;
            let load = n as f64 / m as f64;
            let point = SweepPoint {
                subchannels: m,
                load,
                lambda_avg: lambda_avg(c_avg, load)?,
                mu_avg: mu_avg(&sol.groups[0], &space, &group.video),
                objective_per_user: sol.objective / n as f64,
            };
            Ok((point, sol))
        })
        .collect::<Result<_>>()?;
    let (points, solutions) = solved.into_iter().unzip();
    Ok(LoadSweep {
        users: n,
        points,
        solutions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLoad {
    pub load: f64,
    /// Loads of the sweep points that bracket the crossing.
    pub bracket: (f64, f64),
}

/// Load where `lambda_avg - mu_avg` changes sign, by linear interpolation.
pub fn critical_load(points: &[SweepPoint]) -> Result<CriticalLoad> {
    let mut pts: Vec<&SweepPoint> = points.iter().collect();
    pts.sort_by(|a, b| a.load.total_cmp(&b.load));
    let gap = |p: &SweepPoint| p.lambda_avg - p.mu_avg;
    for p in &pts {
        if gap(p) == 0.0 {
            return Ok(CriticalLoad {
                load: p.load,
                bracket: (p.load, p.load),
            });
        }
    }
    for w in pts.windows(2) {
        let (g0, g1) = (gap(w[0]), gap(w[1]));
        if g0.signum() != g1.signum() {
            let t = g0 / (g0 - g1);
            return Ok(CriticalLoad {
                load: w[0].load + t * (w[1].load - w[0].load),
                bracket: (w[0].load, w[1].load),
            });
        }
    }
    Err(ModelError::NoCriticalLoad {
        loads: pts.iter().map(|p| p.load).collect(),
        gaps: pts.iter().map(|p| gap(p)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub state: usize,
    pub channel_state: usize,
    pub buffer: Vec<usize>,
    pub index: f64,
    pub pruned: bool,
}

/// Normalized priority of every state; pruned states sit at 1.
pub fn heatmap(ranking: &PriorityRanking, video: &VideoConfig) -> Vec<HeatmapRow> {
    (0..ranking.position.len())
        .map(|s| {
            let (c, b) = ranking.space.split(s);
            HeatmapRow {
                state: s,
                channel_state: c,
                buffer: unindex_buffer(b, video).expect("index in range").0,
                index: ranking.normalized_index(s),
                pruned: ranking.is_pruned(s),
            }
        })
        .collect()
}

pub fn heatmap_for(solution: &GroupSolution, space: StateSpace, video: &VideoConfig) -> Vec<HeatmapRow> {
    heatmap(&qaa_rank(solution, space), video)
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with ties given their average rank. `None`
/// when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "spearman needs paired samples");
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
