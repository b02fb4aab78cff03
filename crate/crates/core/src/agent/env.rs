use super::{
    comfort_score as comfort_of, compute_reward, encode_state, state_dim, AgentError,
    RewardBreakdown, RewardWeights,
};
use crate::home::{
    initial_state, num_actions, step, watts, ActionIndex, HomeConfig, HomeState, LightAction,
    SimRng, STEPS_PER_DAY, STEP_MINUTES,
};

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: RewardBreakdown,
    /// True terminal state: no bootstrapping past it.
    pub terminal: bool,
    /// Episode cut by the time limit; the value of the next state still counts.
    pub truncated: bool,
    pub override_flag: bool,
    pub energy_kwh: f64,
    /// Pre-penalty comfort when any zone is occupied.
    pub comfort: Option<f64>,
}

/// Discrete-action environment driven by the DQN training loop.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn reset(&mut self) -> Result<Vec<f64>, AgentError>;
    fn step(&mut self, action: ActionIndex) -> Result<EnvStep, AgentError>;
}

/// The smart-home simulator as a day-long episodic environment.
#[derive(Debug, Clone)]
pub struct HomeEnv {
    cfg: HomeConfig,
    weights: RewardWeights,
    rng: SimRng,
    state: Option<HomeState>,
    steps: usize,
    episode_len: usize,
}

impl HomeEnv {
    pub fn new(cfg: HomeConfig, weights: RewardWeights, seed: u64) -> Self {
        Self {
            cfg,
            weights,
            rng: SimRng::new(seed),
            state: None,
            steps: 0,
            episode_len: STEPS_PER_DAY,
        }
    }

    pub fn with_episode_len(mut self, steps: usize) -> Self {
        self.episode_len = steps.max(1);
        self
    }

    pub fn config(&self) -> &HomeConfig {
        &self.cfg
    }

    pub fn weights(&self) -> &RewardWeights {
        &self.weights
    }

    pub fn state(&self) -> Option<&HomeState> {
        self.state.as_ref()
    }
}

impl Environment for HomeEnv {
    fn state_dim(&self) -> usize {
        state_dim(self.cfg.zone_count())
    }

    fn num_actions(&self) -> usize {
        num_actions(self.cfg.zone_count())
    }

    fn reset(&mut self) -> Result<Vec<f64>, AgentError> {
        let s = initial_state(&self.cfg, &mut self.rng);
        let obs = encode_state(&s, &self.cfg)?;
        self.state = Some(s);
        self.steps = 0;
        Ok(obs)
    }

    fn step(&mut self, action: ActionIndex) -> Result<EnvStep, AgentError> {
        let s = self
            .state
            .take()
            .ok_or_else(|| AgentError::InvalidConfig("step called before reset".into()))?;
        let a = LightAction::from_index(action, self.cfg.zone_count())?;
        let (next, events) = step(&s, a, &self.cfg, &mut self.rng)?;
        let reward = compute_reward(&s, a, &next, &events, &self.weights, &self.cfg);
        let hours = f64::from(STEP_MINUTES) / 60.0;
        let out = EnvStep {
            observation: encode_state(&next, &self.cfg)?,
            reward,
            terminal: false,
            truncated: self.steps + 1 >= self.episode_len,
            override_flag: events.overridden(),
            energy_kwh: watts(&next, &self.cfg) * hours / 1000.0,
            comfort: comfort_of(&next, &self.cfg),
        };
        self.steps += 1;
        self.state = Some(next);
        Ok(out)
    }
}
