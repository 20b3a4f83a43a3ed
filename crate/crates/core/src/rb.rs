//! Restless-bandit relaxation: per-user state space, active/passive
//! transition matrices and the occupancy-measure LP.

use serde::{Deserialize, Serialize};
use svcrb_lp::{solve, LpBuilder, LpProblem, LpSolution, Sense, SolverOptions};

use crate::channel::ChannelModel;
use crate::error::{ModelError, Result};
use crate::qa::{build_passive_matrix, build_policy_matrices, PolicyMatrix, QaSpec};
use crate::sparse::TransitionMatrix;
use crate::video::{prefix_reward, unindex_buffer, VideoConfig};

/// A set of statistically identical users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserGroup {
    pub count: usize,
    pub qa: QaSpec,
    pub channel: ChannelModel,
    pub video: VideoConfig,
    /// Distribution of the first full state. Defaults to an empty buffer with
    /// the channel drawn from its stationary law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_distribution: Option<Vec<f64>>,
}

/// Channel-major encoding of `(channel state, buffer)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    pub num_channel_states: usize,
    pub num_buffer_states: usize,
}

impl StateSpace {
    pub fn new(channel: &ChannelModel, video: &VideoConfig) -> Self {
        Self {
            num_channel_states: channel.num_states(),
            num_buffer_states: video.num_buffer_states(),
        }
    }

    pub fn size(&self) -> usize {
        self.num_channel_states * self.num_buffer_states
    }

    pub fn full_index(&self, channel: usize, buffer: usize) -> usize {
        channel * self.num_buffer_states + buffer
    }

    /// `(channel state, buffer index)` of a full state.
    pub fn split(&self, state: usize) -> (usize, usize) {
        (state / self.num_buffer_states, state % self.num_buffer_states)
    }
}

/// Reward of each full state; only the buffer component matters.
pub fn state_reward_vector(video: &VideoConfig, channel: &ChannelModel) -> Vec<f64> {
    let per_buffer: Vec<f64> = (0..video.num_buffer_states())
        .map(|i| {
            let b = unindex_buffer(i, video).expect("index in range");
            prefix_reward(b.decodable_layers(), video)
        })
        .collect();
    (0..channel.num_states())
        .flat_map(|_| per_buffer.iter().copied())
        .collect()
}

/// Passive transitions `C ⊗ P0`.
pub fn build_h0(channel: &ChannelModel, p0: &PolicyMatrix) -> Result<TransitionMatrix> {
    if channel.transition.iter().any(|r| r.len() != channel.num_states()) {
        return Err(ModelError::Dimension("channel matrix is not square".into()));
    }
    Ok(TransitionMatrix::kron_policy(&channel.transition, p0))
}

/// Active transitions: block `(i, j)` is `C[i][j] * P(c_i)`.
pub fn build_h1(channel: &ChannelModel, policies: &[PolicyMatrix]) -> Result<TransitionMatrix> {
    TransitionMatrix::block_policy(&channel.transition, policies)
}

pub fn default_initial_distribution(channel: &ChannelModel, video: &VideoConfig) -> Result<Vec<f64>> {
    let space = StateSpace::new(channel, video);
    let pi = channel.stationary_distribution()?;
    let mut alpha = vec![0.0; space.size()];
    for (c, p) in pi.into_iter().enumerate() {
        alpha[space.full_index(c, 0)] = p;
    }
    Ok(alpha)
}

/// Everything the LP needs about one group.
#[derive(Debug, Clone)]
pub struct GroupModel {
    pub count: usize,
    pub space: StateSpace,
    pub h0: TransitionMatrix,
    pub h1: TransitionMatrix,
    pub rewards: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl GroupModel {
    pub fn build(group: &UserGroup) -> Result<Self> {
        group.video.validate()?;
        group.channel.validate().map_err(ModelError::InvalidChannel)?;
        group.qa.validate(&group.video, group.channel.num_states())?;
        let space = StateSpace::new(&group.channel, &group.video);
        let h0 = build_h0(&group.channel, &build_passive_matrix(&group.video))?;
        let h1 = build_h1(
            &group.channel,
            &build_policy_matrices(&group.qa, &group.video, &group.channel)?,
        )?;
        let alpha = match &group.initial_distribution {
            Some(a) => {
                if a.len() != space.size() {
                    return Err(ModelError::Dimension(format!(
                        "initial distribution has {} entries for {} states",
                        a.len(),
                        space.size()
                    )));
                }
                if a.iter().any(|p| !(*p >= 0.0)) || (a.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(ModelError::InvalidArgument(
                        "initial distribution must be a probability vector".into(),
                    ));
                }
                a.clone()
            }
            None => default_initial_distribution(&group.channel, &group.video)?,
        };
        Ok(Self {
            count: group.count,
            space,
            h0,
            h1,
            rewards: state_reward_vector(&group.video, &group.channel),
            alpha,
        })
    }

    pub fn num_states(&self) -> usize {
        self.space.size()
    }

    pub fn transitions(&self, action: usize) -> &TransitionMatrix {
        if action == 0 {
            &self.h0
        } else {
            &self.h1
        }
    }
}

/// Where a group's variables and polytope rows sit inside the LP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupLayout {
    pub count: usize,
    pub num_states: usize,
    pub col_offset: usize,
    pub row_offset: usize,
}

/// The assembled LP plus the bookkeeping to read its solution back.
#[derive(Debug, Clone)]
pub struct RbLp {
    pub problem: LpProblem,
    pub layout: Vec<GroupLayout>,
    pub resource_row: usize,
    pub discount: f64,
    pub subchannels: f64,
    pub total_users: usize,
}

impl RbLp {
    /// Column of `x_s^a` for group `g`.
    pub fn col(&self, g: usize, s: usize, a: usize) -> usize {
        self.layout[g].col_offset + 2 * s + a
    }
}

fn check_discount(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ModelError::InvalidArgument(format!("discount {beta} outside (0, 1)")));
    }
    Ok(())
}

/// Multi-group LP, one representative per group.
///
/// Objective `sum_g N_g sum_s R_s (x_s^0 + x_s^1)`; one polytope per group;
/// resource row `sum_g (N_g / N) sum_s x_s^1 = M / (N (1 - beta))`, the
/// population-wide constraint divided by `N`. For a single group this is the
/// homogeneous form and its multipliers are the `N R_s` dual.
pub fn build_rb_lp(models: &[GroupModel], subchannels: f64, beta: f64) -> Result<RbLp> {
    check_discount(beta)?;
    let total: usize = models.iter().map(|m| m.count).sum();
    if models.is_empty() || total == 0 {
        return Err(ModelError::InvalidArgument("no users".into()));
    }
    if !(subchannels >= 0.0) || subchannels > total as f64 {
        return Err(ModelError::InvalidArgument(format!(
            "subchannels {subchannels} outside [0, {total}]"
        )));
    }
    let weights: Vec<f64> = models.iter().map(|m| m.count as f64 / total as f64).collect();
    let objective_scale: Vec<f64> = models.iter().map(|m| m.count as f64).collect();
    assemble(
        models,
        &weights,
        &objective_scale,
        subchannels / (total as f64 * (1.0 - beta)),
        beta,
        subchannels,
        total,
    )
}

/// Single-representative LP with objective `sum_s R_s x_s` and resource
/// right-hand side `M / (N (1 - beta))`.
pub fn build_homogeneous_lp(model: &GroupModel, users: usize, subchannels: f64, beta: f64) -> Result<RbLp> {
    check_discount(beta)?;
    if users == 0 || !(subchannels >= 0.0) || subchannels > users as f64 {
        return Err(ModelError::InvalidArgument("need 0 <= M <= N and N >= 1".into()));
    }
    assemble(
        std::slice::from_ref(model),
        &[1.0],
        &[1.0],
        subchannels / (users as f64 * (1.0 - beta)),
        beta,
        subchannels,
        users,
    )
}

fn assemble(
    models: &[GroupModel],
    weights: &[f64],
    objective_scale: &[f64],
    resource_rhs: f64,
    beta: f64,
    subchannels: f64,
    total_users: usize,
) -> Result<RbLp> {
    let mut b = LpBuilder::new(Sense::Maximize);
    let mut layout = Vec::with_capacity(models.len());
    let mut col_offset = 0;
    let mut row_offset = 0;
    for m in models {
        layout.push(GroupLayout {
            count: m.count,
            num_states: m.num_states(),
            col_offset,
            row_offset,
        });
        col_offset += 2 * m.num_states();
        row_offset += m.num_states();
    }
    for (g, m) in models.iter().enumerate() {
        for s in 0..m.num_states() {
            for a in 0..2 {
                b.add_var(format!("x[{g},{s},{a}]"), objective_scale[g] * m.rewards[s]);
            }
        }
    }
    for (g, m) in models.iter().enumerate() {
        for j in 0..m.num_states() {
            b.add_row(format!("balance[{g},{j}]"), m.alpha[j]);
        }
    }
    let resource_row = b.add_row("resource", resource_rhs);
    let mut crash = Vec::new();
    for (g, m) in models.iter().enumerate() {
        let lay = layout[g];
        for s in 0..m.num_states() {
            for a in 0..2 {
                let col = lay.col_offset + 2 * s + a;
                b.add_coefficient(lay.row_offset + s, col, 1.0);
                for (j, h) in m.transitions(a).row(s) {
                    b.add_coefficient(lay.row_offset + j, col, -beta * h);
                }
                if a == 1 {
                    b.add_coefficient(resource_row, col, weights[g]);
                } else {
                    crash.push(col);
                }
            }
        }
    }
    let mut problem = b.build();
    problem.crash_basis = crash;
    Ok(RbLp {
        problem,
        layout,
        resource_row,
        discount: beta,
        subchannels,
        total_users,
    })
}

/// Dual LP: `min sum alpha_s lambda_s + rhs * lambda` subject to one
/// inequality per primal column.
pub fn build_rb_dual(rb: &RbLp) -> LpProblem {
    rb.problem.dual()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSolution {
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub gamma1: Vec<f64>,
    /// Multipliers of the group's balance rows.
    pub lambda_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbSolution {
    pub objective: f64,
    pub dual_objective: f64,
    /// Multiplier of the resource row.
    pub lambda: f64,
    pub groups: Vec<GroupSolution>,
    pub iterations: usize,
    pub max_primal_residual: f64,
    pub max_complementarity: f64,
}

impl RbSolution {
    pub fn from_lp(rb: &RbLp, sol: &LpSolution) -> Self {
        let groups = rb
            .layout
            .iter()
            .map(|lay| {
                let n = lay.num_states;
                let pick = |v: &[f64], a: usize| (0..n).map(|s| v[lay.col_offset + 2 * s + a]).collect::<Vec<_>>();
                GroupSolution {
                    x0: pick(&sol.x, 0),
                    x1: pick(&sol.x, 1),
                    gamma0: pick(&sol.reduced_costs, 0),
                    gamma1: pick(&sol.reduced_costs, 1),
                    lambda_s: sol.duals[lay.row_offset..lay.row_offset + n].to_vec(),
                }
            })
            .collect();
        Self {
            objective: sol.objective,
            dual_objective: sol.dual_objective(&rb.problem),
            lambda: sol.duals[rb.resource_row],
            groups,
            iterations: sol.iterations,
            max_primal_residual: sol.primal_residual(&rb.problem),
            max_complementarity: sol.complementarity_gap(),
        }
    }
}

pub fn solve_rb(rb: &RbLp, options: &SolverOptions) -> Result<RbSolution> {
    let sol = solve(&rb.problem, options)?;
    Ok(RbSolution::from_lp(rb, &sol))
}
