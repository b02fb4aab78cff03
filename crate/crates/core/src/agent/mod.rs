//! Deep Q-learning agent with a ternary-quantized Q-network.
//!
//! The network is `d → 128` (full precision), two `128 → 128` ternary hidden
//! layers trained through the straight-through estimator, and a full-precision
//! head over the discrete lighting actions. Replay is proportional
//! prioritized, and rewards combine energy, comfort and circadian terms.

mod checkpoint;
mod dqn;
mod encode;
mod env;
mod error;
mod eval;
mod network;
mod replay;
mod reward;
mod select;
mod toy;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dqn::{
    select_action, td_errors, td_targets, train, AgentConfig, DqnAgent, EpisodeMetrics,
    METRICS_CSV_HEADER,
};
pub use encode::{encode_state, state_dim};
pub use env::{EnvStep, Environment, HomeEnv};
pub use error::AgentError;
pub use eval::{evaluate, Controller, EvalSummary, GreedyController, RuleBasedController};
pub use network::{Adam, ForwardCache, Linear, LinearGrad, QNetwork, QNetworkGrad, HIDDEN_WIDTH};
pub use replay::{per_insert, per_sample, per_update, PrioritizedBatch, ReplayBuffer, SumTree};
pub use reward::{comfort_score, compute_reward, RewardBreakdown, RewardWeights};
pub use select::{train_with_selection, SelectionOutcome};
pub use toy::{ToyLightingMdp, TOY_ACTIONS, TOY_STATES};

use serde::{Deserialize, Serialize};

use crate::home::ActionIndex;

/// One replay record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: ActionIndex,
    pub reward: RewardBreakdown,
    pub next_state: Vec<f64>,
    pub terminal: bool,
    pub override_flag: bool,
}
