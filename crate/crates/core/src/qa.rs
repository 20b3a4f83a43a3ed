//! Quality-adaptation policies: which sub-segments a user requests when it is
//! given a slot, and the policy matrices they induce.

use serde::{Deserialize, Serialize};

use crate::channel::{sub_segments_deliverable, ChannelModel};
use crate::error::{ModelError, Result};
use crate::sparse::TransitionMatrix;
use crate::video::{index_buffer, playback_step, unindex_buffer, BufferState, VideoConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum QaSpec {
    /// Diagonal buffer policy. `thresholds` are pre-fetch gaps in seconds,
    /// either one shared value or one per adjacent layer pair.
    #[serde(rename = "DBP")]
    Dbp { thresholds: Vec<f64> },
    /// Channel based policy with one rule per channel state. An empty table
    /// means the default ladder (see [`QaSpec::default_cbp_rules`]).
    #[serde(rename = "CBP")]
    Cbp {
        #[serde(default)]
        rules: Vec<CbpRule>,
    },
    /// Base-layer priority: base only while `b_1 < switch_fraction * b_max`,
    /// full-quality segments afterwards.
    #[serde(rename = "BPP")]
    Bpp { switch_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CbpRule {
    BaseOnly,
    /// `floor(base_fraction * budget)` base requests, the rest enhancement.
    Split {
        base_fraction: f64,
    },
    FullQuality,
}

impl QaSpec {
    pub fn dbp(seconds: f64) -> Self {
        QaSpec::Dbp {
            thresholds: vec![seconds],
        }
    }

    /// `percent` of the buffer limit, as in "BPP-50".
    pub fn bpp(percent: f64) -> Self {
        QaSpec::Bpp {
            switch_fraction: percent / 100.0,
        }
    }

    pub fn cbp() -> Self {
        QaSpec::Cbp { rules: Vec::new() }
    }

    /// All states but the top two request base only, the second best splits
    /// two thirds to the base layer, the best requests full quality.
    pub fn default_cbp_rules(num_channel_states: usize) -> Vec<CbpRule> {
        (0..num_channel_states)
            .map(|c| {
                if c + 1 == num_channel_states {
                    CbpRule::FullQuality
                } else if c + 2 == num_channel_states {
                    CbpRule::Split {
                        base_fraction: 2.0 / 3.0,
                    }
                } else {
                    CbpRule::BaseOnly
                }
            })
            .collect()
    }

    pub fn label(&self) -> String {
        match self {
            QaSpec::Dbp { thresholds } if thresholds.len() == 1 => format!("DBP-{}s", thresholds[0]),
            QaSpec::Dbp { thresholds } => format!("DBP-{thresholds:?}s"),
            QaSpec::Cbp { .. } => "CBP".to_string(),
            QaSpec::Bpp { switch_fraction } => format!("BPP-{}", switch_fraction * 100.0),
        }
    }

    pub fn validate(&self, video: &VideoConfig, num_channel_states: usize) -> Result<()> {
        match self {
            QaSpec::Dbp { thresholds } => {
                let pairs = video.num_layers().saturating_sub(1);
                if thresholds.len() != 1 && thresholds.len() != pairs {
                    return Err(ModelError::InvalidArgument(format!(
                        "DBP needs 1 or {pairs} thresholds, got {}",
                        thresholds.len()
                    )));
                }
                if thresholds.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
                    return Err(ModelError::InvalidArgument("DBP thresholds must be >= 0".into()));
                }
            }
            QaSpec::Cbp { rules } => {
                if !rules.is_empty() && rules.len() != num_channel_states {
                    return Err(ModelError::InvalidArgument(format!(
                        "CBP table has {} rules for {num_channel_states} channel states",
                        rules.len()
                    )));
                }
                for r in rules {
                    if let CbpRule::Split { base_fraction } = r {
                        if !(0.0..=1.0).contains(base_fraction) {
                            return Err(ModelError::InvalidArgument(
                                "CBP base fraction must lie in [0, 1]".into(),
                            ));
                        }
                    }
                }
            }
            QaSpec::Bpp { switch_fraction } => {
                if !(*switch_fraction > 0.0 && *switch_fraction <= 1.0) {
                    return Err(ModelError::InvalidArgument(
                        "BPP switch fraction must lie in (0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn cbp_rule(&self, channel: usize, num_channel_states: usize) -> CbpRule {
        match self {
            QaSpec::Cbp { rules } if !rules.is_empty() => rules[channel],
            _ => Self::default_cbp_rules(num_channel_states)[channel],
        }
    }

    /// Layer (0-based) of the next request on buffer `b`, or `None` when no
    /// layer can take another sub-segment. `made` counts requests already
    /// granted this slot, `budget` is the slot's sub-segment budget.
    fn next_request(
        &self,
        video: &VideoConfig,
        b: &[usize],
        channel: usize,
        num_channel_states: usize,
        made: usize,
        budget: usize,
    ) -> Option<usize> {
        let limit = video.buffer_limit;
        let eligible = |l: usize| b[l] < limit && (l == 0 || b[l] < b[l - 1]);
        let fallback = || (0..b.len()).find(|&l| eligible(l));
        let base_first = || if eligible(0) { Some(0) } else { fallback() };
        // finish the oldest partial segment, else start a new one at the base
        let full_quality = || {
            (1..b.len())
                .find(|&l| eligible(l))
                .or_else(|| if eligible(0) { Some(0) } else { None })
        };
        match self {
            QaSpec::Dbp { thresholds } => {
                let seg = video.segment_duration;
                let threshold = |l: usize| thresholds.get(l).unwrap_or(&thresholds[0]) / seg;
                let last = b.len() - 1;
                for l in 0..b.len() {
                    let wants = l == last || ((b[l] - b[l + 1].min(b[l])) as f64) < threshold(l);
                    if wants && eligible(l) {
                        return Some(l);
                    }
                }
                fallback()
            }
            QaSpec::Bpp { switch_fraction } => {
                if (b[0] as f64) < switch_fraction * limit as f64 {
                    base_first()
                } else {
                    full_quality().or_else(fallback)
                }
            }
            QaSpec::Cbp { .. } => match self.cbp_rule(channel, num_channel_states) {
                CbpRule::BaseOnly => base_first(),
                CbpRule::FullQuality => full_quality().or_else(fallback),
                CbpRule::Split { base_fraction } => {
                    let quota = (base_fraction * budget as f64 + 1e-9).floor() as usize;
                    if made < quota {
                        base_first()
                    } else {
                        (1..b.len()).find(|&l| eligible(l)).or_else(fallback)
                    }
                }
            },
        }
    }
}

/// Requests for one slot when every sub-segment costs one unit of `budget`.
pub fn qa_decide(
    qa: &QaSpec,
    video: &VideoConfig,
    b: &BufferState,
    channel: usize,
    num_channel_states: usize,
    budget: usize,
) -> Vec<usize> {
    let mut p = b.0.clone();
    let mut d = vec![0; p.len()];
    for made in 0..budget {
        match qa.next_request(video, &p, channel, num_channel_states, made, budget) {
            Some(l) => {
                p[l] += 1;
                d[l] += 1;
            }
            None => break,
        }
    }
    d
}

/// Requests for one slot with `capacity` bits available. Each sub-segment of
/// layer `l` costs `q_l`; the slot ends at the first request that no longer
/// fits and the remainder is discarded.
pub fn decide_with_capacity(
    qa: &QaSpec,
    video: &VideoConfig,
    b: &BufferState,
    channel: usize,
    num_channel_states: usize,
    capacity: f64,
) -> Vec<usize> {
    let budget = sub_segments_deliverable(capacity, 1.0, video.layer_rates[0]);
    let mut p = b.0.clone();
    let mut d = vec![0; p.len()];
    let mut left = capacity;
    let mut made = 0;
    while let Some(l) = qa.next_request(video, &p, channel, num_channel_states, made, budget) {
        let q = video.layer_rates[l];
        if left + 1e-12 * q < q {
            break;
        }
        left -= q;
        p[l] += 1;
        d[l] += 1;
        made += 1;
    }
    d
}

/// One row per buffer index: the buffer index reached after a slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyMatrix {
    pub targets: Vec<usize>,
}

impl PolicyMatrix {
    pub fn dim(&self) -> usize {
        self.targets.len()
    }

    pub fn to_transition(&self) -> TransitionMatrix {
        TransitionMatrix::from_rows(self.dim(), self.targets.iter().map(|&j| vec![(j, 1.0)]).collect())
    }
}

/// Slot map for a user that is served in channel state `c`: playback from
/// the start-of-slot buffer, then the QA's downloads on top of what is left.
pub fn build_policy_matrix(qa: &QaSpec, video: &VideoConfig, channel: &ChannelModel, c: usize) -> Result<PolicyMatrix> {
    qa.validate(video, channel.num_states())?;
    if c >= channel.num_states() {
        return Err(ModelError::InvalidArgument(format!("channel state {c} out of range")));
    }
    let capacity = channel.states[c] * video.segment_duration;
    let targets = (0..video.num_buffer_states())
        .map(|i| {
            let b = unindex_buffer(i, video).expect("index in range");
            let mut p = playback_step(&b, video).next;
            let d = decide_with_capacity(qa, video, &p, c, channel.num_states(), capacity);
            for (v, x) in p.0.iter_mut().zip(&d) {
                *v += x;
            }
            index_buffer(&p, video).expect("QA respects the buffer limit")
        })
        .collect();
    Ok(PolicyMatrix { targets })
}

pub fn build_policy_matrices(qa: &QaSpec, video: &VideoConfig, channel: &ChannelModel) -> Result<Vec<PolicyMatrix>> {
    (0..channel.num_states())
        .map(|c| build_policy_matrix(qa, video, channel, c))
        .collect()
}

/// Playback-only slot map.
pub fn build_passive_matrix(video: &VideoConfig) -> PolicyMatrix {
    let targets = (0..video.num_buffer_states())
        .map(|i| {
            let b = unindex_buffer(i, video).expect("index in range");
            index_buffer(&playback_step(&b, video).next, video).expect("playback stays in range")
        })
        .collect();
    PolicyMatrix { targets }
}
