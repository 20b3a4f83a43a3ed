//! Layered video model: configuration, per-layer buffers, playback and the
//! QoE reward.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

pub const DEFAULT_PHI: f64 = 0.16;
pub const DEFAULT_THETA: f64 = 0.66;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoConfig {
    /// Size of one sub-segment of each layer. With one-second segments this
    /// is also the layer's bitrate.
    pub layer_rates: Vec<f64>,
    #[serde(default = "one")]
    pub segment_duration: f64,
    /// Sub-segments each layer's buffer can hold.
    pub buffer_limit: usize,
    #[serde(default = "default_phi")]
    pub qoe_phi: f64,
    #[serde(default = "default_theta")]
    pub qoe_theta: f64,
    #[serde(default)]
    pub rebuffer_penalty: f64,
}

fn one() -> f64 {
    1.0
}
fn default_phi() -> f64 {
    DEFAULT_PHI
}
fn default_theta() -> f64 {
    DEFAULT_THETA
}

impl Default for VideoConfig {
    /// Two 1 Mb layers, one-second segments, 20-segment buffer.
    fn default() -> Self {
        Self {
            layer_rates: vec![1.0, 1.0],
            segment_duration: 1.0,
            buffer_limit: 20,
            qoe_phi: DEFAULT_PHI,
            qoe_theta: DEFAULT_THETA,
            rebuffer_penalty: 0.0,
        }
    }
}

impl VideoConfig {
    pub fn num_layers(&self) -> usize {
        self.layer_rates.len()
    }

    pub fn r_max(&self) -> f64 {
        self.layer_rates.iter().sum()
    }

    /// Number of distinct buffer vectors, `(b_max + 1)^L`.
    pub fn num_buffer_states(&self) -> usize {
        (self.buffer_limit + 1).pow(self.num_layers() as u32)
    }

    /// Hard errors for malformed configs; the returned strings are soft
    /// warnings (currently only a rebuffer penalty that beats base-only
    /// playback).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.layer_rates.is_empty() {
            return Err(ModelError::InvalidArgument("video needs at least one layer".into()));
        }
        if self.layer_rates.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
            return Err(ModelError::InvalidArgument("layer rates must be positive".into()));
        }
        if !(self.segment_duration.is_finite() && self.segment_duration > 0.0) {
            return Err(ModelError::InvalidArgument("segment duration must be positive".into()));
        }
        if self.buffer_limit == 0 {
            return Err(ModelError::InvalidArgument("buffer limit must be at least 1".into()));
        }
        if !self.qoe_phi.is_finite() || !self.qoe_theta.is_finite() || !self.rebuffer_penalty.is_finite() {
            return Err(ModelError::InvalidArgument("QoE parameters must be finite".into()));
        }
        let mut warnings = Vec::new();
        let base = playback_reward(self.layer_rates[0], self, false)?;
        if self.rebuffer_penalty > base {
            warnings.push(format!(
                "rebuffer penalty {} exceeds base-layer reward {base:.6}",
                self.rebuffer_penalty
            ));
        }
        Ok(warnings)
    }
}

/// QoE of playing at rate `played_rate`: `exp(-phi (R_p / R_max)^-theta + phi)`,
/// or the rebuffer penalty for a stall.
pub fn playback_reward(played_rate: f64, video: &VideoConfig, rebuffering: bool) -> Result<f64> {
    if rebuffering {
        return Ok(video.rebuffer_penalty);
    }
    let r_max = video.r_max();
    if !(played_rate > 0.0) || played_rate > r_max * (1.0 + 1e-12) {
        return Err(ModelError::InvalidArgument(format!(
            "played rate {played_rate} outside (0, {r_max}]"
        )));
    }
    if played_rate >= r_max {
        return Ok(1.0);
    }
    let ratio = played_rate / r_max;
    Ok((-video.qoe_phi * ratio.powf(-video.qoe_theta) + video.qoe_phi).exp())
}

/// Per-layer sub-segment counts, base layer first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BufferState(pub Vec<usize>);

impl BufferState {
    pub fn empty(num_layers: usize) -> Self {
        Self(vec![0; num_layers])
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn base(&self) -> usize {
        self.0.first().copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Length of the longest all-positive prefix: the layers the next segment
    /// plays with.
    pub fn decodable_layers(&self) -> usize {
        self.0.iter().take_while(|&&b| b > 0).count()
    }

    pub fn is_monotone(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaybackOutcome {
    pub next: BufferState,
    pub reward: f64,
    pub rebuffered: bool,
    /// Layers played this slot; 0 on a stall.
    pub layers_played: usize,
}

/// Plays one segment from the head of the buffer. Only the decodable prefix
/// is consumed; an empty base layer stalls and leaves the buffer unchanged.
pub fn playback_step(b: &BufferState, video: &VideoConfig) -> PlaybackOutcome {
    let l = b.decodable_layers();
    if l == 0 {
        return PlaybackOutcome {
            next: b.clone(),
            reward: video.rebuffer_penalty,
            rebuffered: true,
            layers_played: 0,
        };
    }
    let mut next = b.clone();
    for v in next.0.iter_mut().take(l) {
        *v -= 1;
    }
    let rate: f64 = video.layer_rates[..l].iter().sum();
    PlaybackOutcome {
        next,
        reward: playback_reward(rate, video, false).expect("prefix rate is within (0, R_max]"),
        rebuffered: false,
        layers_played: l,
    }
}

/// Reward of playing the first `layers` layers (`layers == 0` is a stall).
pub fn prefix_reward(layers: usize, video: &VideoConfig) -> f64 {
    if layers == 0 {
        video.rebuffer_penalty
    } else {
        let rate: f64 = video.layer_rates[..layers].iter().sum();
        playback_reward(rate, video, false).expect("prefix rate is within (0, R_max]")
    }
}

/// Mixed-radix index with the base layer as the most significant digit.
pub fn index_buffer(b: &BufferState, video: &VideoConfig) -> Result<usize> {
    if b.0.len() != video.num_layers() {
        return Err(ModelError::InvalidArgument(format!(
            "buffer has {} layers, video has {}",
            b.0.len(),
            video.num_layers()
        )));
    }
    let radix = video.buffer_limit + 1;
    let mut idx = 0;
    for &v in &b.0 {
        if v > video.buffer_limit {
            return Err(ModelError::InvalidArgument(format!(
                "buffer level {v} exceeds limit {}",
                video.buffer_limit
            )));
        }
        idx = idx * radix + v;
    }
    Ok(idx)
}

pub fn unindex_buffer(index: usize, video: &VideoConfig) -> Result<BufferState> {
    if index >= video.num_buffer_states() {
        return Err(ModelError::InvalidArgument(format!(
            "buffer index {index} out of range"
        )));
    }
    let radix = video.buffer_limit + 1;
    let mut levels = vec![0; video.num_layers()];
    let mut rest = index;
    for v in levels.iter_mut().rev() {
        *v = rest % radix;
        rest /= radix;
    }
    Ok(BufferState(levels))
}
