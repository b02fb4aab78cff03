use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    Adam, AgentError, Environment, PrioritizedBatch, QNetwork, QNetworkGrad, ReplayBuffer,
    Transition,
};
use crate::home::ActionIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Gradient updates between target-network copies.
    pub target_sync: u64,
    pub per_alpha: f64,
    pub per_beta_start: f64,
    pub per_beta_end: f64,
    pub per_beta_steps: u64,
    pub priority_epsilon: f64,
    pub replay_capacity: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    /// Environment steps per gradient update.
    pub train_every: u64,
    pub hidden_layers: usize,
    pub huber_delta: f64,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            discount: 0.97,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 20_000,
            learning_rate: 1e-3,
            batch_size: 64,
            target_sync: 500,
            per_alpha: 0.6,
            per_beta_start: 0.4,
            per_beta_end: 1.0,
            per_beta_steps: 100_000,
            priority_epsilon: 1e-3,
            replay_capacity: 100_000,
            warmup: 1_000,
            train_every: 4,
            hidden_layers: 2,
            huber_delta: 1.0,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidConfig(m.to_string()));
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1)");
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return bad("epsilon must lie in [0, 1]");
            }
        }
        for p in [self.per_alpha, self.per_beta_start, self.per_beta_end] {
            if !(0.0..=1.0).contains(&p) {
                return bad("per_alpha and per_beta must lie in [0, 1]");
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.target_sync == 0 || self.train_every == 0 {
            return bad("batch_size, target_sync and train_every must be positive");
        }
        if self.replay_capacity < self.batch_size {
            return bad("replay_capacity must hold at least one batch");
        }
        if !(self.huber_delta > 0.0) {
            return bad("huber_delta must be positive");
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end`.
    pub fn epsilon_at(&self, step: u64) -> f64 {
        let frac = (step as f64 / self.epsilon_decay_steps.max(1) as f64).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    pub fn beta_at(&self, step: u64) -> f64 {
        let frac = (step as f64 / self.per_beta_steps.max(1) as f64).min(1.0);
        self.per_beta_start + (self.per_beta_end - self.per_beta_start) * frac
    }
}

/// Epsilon-greedy selection; greedy ties go to the lowest index.
pub fn select_action<R: Rng + ?Sized>(
    q: &QNetwork,
    state: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionIndex, AgentError> {
    if rng.gen::<f64>() < epsilon {
        return Ok(ActionIndex(rng.gen_range(0..q.num_actions())));
    }
    Ok(argmax(&q.q_values(state)?))
}

pub(crate) fn argmax(values: &[f64]) -> ActionIndex {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    ActionIndex(best)
}

/// `y = r + discount · max_a' Q_target(s', a')`, or `y = r` for terminal transitions.
pub fn td_targets(
    batch: &[Transition],
    q_target: &QNetwork,
    discount: f64,
) -> Result<Vec<f64>, AgentError> {
    batch
        .iter()
        .map(|t| {
            if t.terminal || discount == 0.0 {
                return Ok(t.reward.total);
            }
            let best = q_target
                .q_values(&t.next_state)?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(t.reward.total + discount * best)
        })
        .collect()
}

/// `δ = y − Q_online(s, a)`.
pub fn td_errors(
    batch: &[Transition],
    q_online: &QNetwork,
    targets: &[f64],
) -> Result<Vec<f64>, AgentError> {
    batch
        .iter()
        .zip(targets)
        .map(|(t, y)| {
            let cache = q_online.features(&t.state)?;
            Ok(y - q_online.q_value(&cache, t.action.0))
        })
        .collect()
}

fn huber(delta: f64, k: f64) -> (f64, f64) {
    if delta.abs() <= k {
        (0.5 * delta * delta, delta)
    } else {
        (k * (delta.abs() - 0.5 * k), k * delta.signum())
    }
}

/// Per-episode training metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub total_reward: f64,
    pub energy_kwh: f64,
    pub comfort_mean: f64,
    pub overrides: usize,
    pub epsilon: f64,
}

pub const METRICS_CSV_HEADER: &str =
    "episode,total_reward,energy_kwh,comfort_mean,overrides,epsilon";

impl EpisodeMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.episode,
            self.total_reward,
            self.energy_kwh,
            self.comfort_mean,
            self.overrides,
            self.epsilon
        )
    }
}

/// DQN learner: online and target networks, optimizer, replay and RNG.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    config: AgentConfig,
    online: QNetwork,
    target: QNetwork,
    optimizer: Adam,
    replay: ReplayBuffer,
    rng: ChaCha8Rng,
    steps: u64,
    updates: u64,
}

impl DqnAgent {
    pub fn new(config: AgentConfig, state_dim: usize, actions: usize) -> Result<Self, AgentError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let online = QNetwork::new(state_dim, actions, config.hidden_layers, &mut rng)?;
        Self::with_network(config, online, rng)
    }

    /// Wraps an existing network, e.g. one restored from a checkpoint.
    pub fn from_network(config: AgentConfig, online: QNetwork) -> Result<Self, AgentError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::with_network(config, online, rng)
    }

    fn with_network(
        config: AgentConfig,
        online: QNetwork,
        rng: ChaCha8Rng,
    ) -> Result<Self, AgentError> {
        let replay = ReplayBuffer::new(
            config.replay_capacity,
            config.per_alpha,
            config.priority_epsilon,
        )?;
        Ok(Self {
            optimizer: Adam::new(config.learning_rate),
            target: online.clone(),
            online,
            replay,
            rng,
            steps: 0,
            updates: 0,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn online(&self) -> &QNetwork {
        &self.online
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon_at(self.steps)
    }

    pub fn greedy(&self, state: &[f64]) -> Result<ActionIndex, AgentError> {
        Ok(argmax(&self.online.q_values(state)?))
    }

    /// Epsilon-greedy action at the current schedule position.
    pub fn act(&mut self, state: &[f64]) -> Result<ActionIndex, AgentError> {
        let eps = self.epsilon();
        select_action(&self.online, state, eps, &mut self.rng)
    }

    /// Stores a transition, advances the step counter and runs a gradient
    /// update when due. Returns the loss of that update, if any.
    pub fn observe(&mut self, t: Transition) -> Result<Option<f64>, AgentError> {
        self.replay.insert(t);
        self.steps += 1;
        let ready = self.replay.len() >= self.config.warmup.max(self.config.batch_size);
        if ready && self.steps % self.config.train_every == 0 {
            return self.train_step().map(Some);
        }
        Ok(None)
    }

    /// Stores a transition without advancing the schedule or training, for
    /// feedback that arrives outside the step loop.
    pub fn remember(&mut self, t: Transition) {
        self.replay.insert(t);
    }

    /// Samples a prioritized batch and applies one update.
    pub fn train_step(&mut self) -> Result<f64, AgentError> {
        let beta = self.config.beta_at(self.steps);
        let batch = self
            .replay
            .sample(self.config.batch_size, beta, &mut self.rng)?;
        self.train_on_batch(&batch)
    }

    /// One gradient step on the importance-weighted Huber loss of `batch`.
    pub fn train_on_batch(&mut self, batch: &PrioritizedBatch) -> Result<f64, AgentError> {
        let targets = td_targets(&batch.transitions, &self.target, self.config.discount)?;
        let n = batch.transitions.len() as f64;
        let dequantized = self.online.dequantized_hidden();
        let mut grad = QNetworkGrad::zeros_like(&self.online);
        let mut loss = 0.0;
        let mut errors = Vec::with_capacity(batch.transitions.len());
        for ((t, y), w) in batch
            .transitions
            .iter()
            .zip(&targets)
            .zip(&batch.is_weights)
        {
            let cache = self.online.features(&t.state)?;
            let delta = y - self.online.q_value(&cache, t.action.0);
            let (l, dl) = huber(delta, self.config.huber_delta);
            loss += w * l / n;
            // ∂L/∂Q = −w · huber'(δ) / n
            self.online.backward(
                &cache,
                &[(t.action.0, -w * dl / n)],
                &dequantized,
                &mut grad,
            );
            errors.push(delta);
        }
        if !loss.is_finite() {
            return Err(AgentError::NonFiniteLoss {
                update: self.updates,
                loss,
            });
        }
        self.online.finish_grad(&mut grad)?;
        self.optimizer.step(self.online.params_mut(), grad.slices());
        self.online.refresh()?;
        self.replay.update(&batch.indices, &errors);
        self.updates += 1;
        if self.updates % self.config.target_sync == 0 {
            self.sync_target();
        }
        Ok(loss)
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }
}

/// Runs `episodes` episodes of epsilon-greedy interaction and learning.
/// Bit-reproducible for fixed agent and environment seeds.
pub fn train<E: Environment>(
    agent: &mut DqnAgent,
    env: &mut E,
    episodes: usize,
) -> Result<Vec<EpisodeMetrics>, AgentError> {
    if env.state_dim() != agent.online.state_dim()
        || env.num_actions() != agent.online.num_actions()
    {
        return Err(AgentError::DimensionMismatch {
            expected: agent.online.num_actions(),
            actual: env.num_actions(),
        });
    }
    let mut metrics = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let mut obs = env.reset()?;
        let mut m = EpisodeMetrics {
            episode,
            total_reward: 0.0,
            energy_kwh: 0.0,
            comfort_mean: 0.0,
            overrides: 0,
            epsilon: agent.epsilon(),
        };
        let mut comfort = (0.0, 0usize);
        loop {
            let action = agent.act(&obs)?;
            let step = env.step(action)?;
            m.total_reward += step.reward.total;
            m.energy_kwh += step.energy_kwh;
            m.overrides += usize::from(step.override_flag);
            if let Some(c) = step.comfort {
                comfort.0 += c;
                comfort.1 += 1;
            }
            agent.observe(Transition {
                state: obs,
                action,
                reward: step.reward,
                next_state: step.observation.clone(),
                terminal: step.terminal,
                override_flag: step.override_flag,
            })?;
            obs = step.observation;
            if step.terminal || step.truncated {
                break;
            }
        }
        m.comfort_mean = if comfort.1 > 0 {
            comfort.0 / comfort.1 as f64
        } else {
            0.0
        };
        tracing::debug!(
            episode,
            reward = m.total_reward,
            energy_kwh = m.energy_kwh,
            epsilon = m.epsilon,
            "episode finished"
        );
        metrics.push(m);
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{RewardBreakdown, RewardWeights, ToyLightingMdp};

    fn reward(total: f64) -> RewardBreakdown {
        RewardBreakdown {
            total,
            ..Default::default()
        }
    }

    fn tiny_net(seed: u64) -> QNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        QNetwork::new(3, 4, 2, &mut rng).unwrap()
    }

    #[test]
    fn greedy_tie_breaks_low() {
        let mut net = tiny_net(0);
        net.head.weight = crate::Matrix::zeros(4, crate::agent::HIDDEN_WIDTH);
        net.head.bias = vec![0.5; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            select_action(&net, &[0.1, 0.2, 0.3], 0.0, &mut rng).unwrap(),
            ActionIndex(0)
        );
        net.head.bias = vec![0.1, 0.3, 0.9, 0.9];
        assert_eq!(
            select_action(&net, &[0.1, 0.2, 0.3], 0.0, &mut rng).unwrap(),
            ActionIndex(2)
        );
    }

    #[test]
    fn greedy_maximizes_q() {
        let net = tiny_net(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..50 {
            let x = [i as f64 * 0.1, -0.3, 0.7];
            let q = net.q_values(&x).unwrap();
            let a = select_action(&net, &x, 0.0, &mut rng).unwrap();
            assert!(q.iter().all(|&v| v <= q[a.0]));
        }
    }

    #[test]
    fn terminal_and_zero_discount_targets() {
        let net = tiny_net(1);
        let t = Transition {
            state: vec![0.0; 3],
            action: ActionIndex(1),
            reward: reward(0.5),
            next_state: vec![1.0; 3],
            terminal: true,
            override_flag: false,
        };
        assert_eq!(td_targets(&[t.clone()], &net, 0.97).unwrap(), vec![0.5]);
        let mut nt = t;
        nt.terminal = false;
        nt.reward = reward(-0.25);
        assert_eq!(td_targets(&[nt], &net, 0.0).unwrap(), vec![-0.25]);
    }

    #[test]
    fn bellman_backup_by_hand() {
        // Head with zero weights and bias (1, 3): Q_target(s', ·) = (1, 3)
        // everywhere, so y = r + 0.9 · 3.
        let mut net = tiny_net(2);
        net.head = crate::agent::Linear::new(
            crate::Matrix::zeros(2, crate::agent::HIDDEN_WIDTH),
            vec![1.0, 3.0],
        );
        let t = |r: f64, terminal| Transition {
            state: vec![0.0; 3],
            action: ActionIndex(0),
            reward: reward(r),
            next_state: vec![0.5; 3],
            terminal,
            override_flag: false,
        };
        let y = td_targets(&[t(1.0, false), t(-2.0, false), t(4.0, true)], &net, 0.9).unwrap();
        assert_eq!(y, vec![1.0 + 0.9 * 3.0, -2.0 + 0.9 * 3.0, 4.0]);
        let d = td_errors(&[t(1.0, false)], &net, &[3.7]).unwrap();
        assert!((d[0] - (3.7 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_td_error_gives_zero_loss() {
        let mut agent = DqnAgent::new(
            AgentConfig {
                discount: 0.0,
                batch_size: 2,
                replay_capacity: 4,
                ..Default::default()
            },
            3,
            4,
        )
        .unwrap();
        let x = vec![0.2, -0.1, 0.4];
        let q = agent.online().q_values(&x).unwrap();
        let transitions: Vec<Transition> = (0..2)
            .map(|a| Transition {
                state: x.clone(),
                action: ActionIndex(a),
                reward: reward(q[a]),
                next_state: x.clone(),
                terminal: false,
                override_flag: false,
            })
            .collect();
        let batch = PrioritizedBatch {
            transitions,
            indices: vec![0, 1],
            is_weights: vec![1.0, 1.0],
        };
        let before = agent.online().clone();
        for t in &batch.transitions {
            agent.replay.insert(t.clone());
        }
        assert_eq!(agent.train_on_batch(&batch).unwrap(), 0.0);
        // Zero gradient: Adam leaves every parameter untouched.
        assert_eq!(agent.online(), &before);
    }

    #[test]
    fn target_sync_is_bit_identical() {
        let cfg = AgentConfig {
            warmup: 8,
            batch_size: 8,
            train_every: 1,
            target_sync: 3,
            replay_capacity: 64,
            ..Default::default()
        };
        let mut agent = DqnAgent::new(cfg, crate::agent::state_dim(2), 5).unwrap();
        let mut env = ToyLightingMdp::new(RewardWeights::default(), 3, 5);
        let mut synced = 0;
        for _ in 0..6 {
            let mut obs = env.reset().unwrap();
            for _ in 0..5 {
                let a = agent.act(&obs).unwrap();
                let s = env.step(a).unwrap();
                let before = agent.updates();
                agent
                    .observe(Transition {
                        state: obs,
                        action: a,
                        reward: s.reward,
                        next_state: s.observation.clone(),
                        terminal: false,
                        override_flag: false,
                    })
                    .unwrap();
                if agent.updates() != before && agent.updates() % 3 == 0 {
                    assert_eq!(agent.target(), agent.online());
                    synced += 1;
                } else if agent.updates() % 3 != 0 && agent.updates() > 0 {
                    assert_ne!(agent.target(), agent.online());
                }
                obs = s.observation;
            }
        }
        assert!(synced >= 3);
    }

    #[test]
    fn config_validation() {
        assert!(AgentConfig {
            discount: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AgentConfig {
            per_alpha: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AgentConfig::default().validate().is_ok());
        let c = AgentConfig::default();
        assert_eq!(c.epsilon_at(0), 1.0);
        assert!((c.epsilon_at(10_000) - 0.525).abs() < 1e-12);
        assert!((c.epsilon_at(50_000) - 0.05).abs() < 1e-12);
        assert_eq!(c.beta_at(0), 0.4);
        assert_eq!(c.beta_at(1_000_000), 1.0);
    }
}
