use serde::{Deserialize, Serialize};

use super::{
    comfort_score, compute_reward, dqn::argmax, encode_state, AgentError, QNetwork, RewardWeights,
};
use crate::home::{
    initial_state, rule_based_controller, step, watts, HomeConfig, HomeState, LightAction, SimRng,
    STEPS_PER_DAY, STEP_MINUTES,
};

/// A lighting policy evaluated on the simulator.
pub trait Controller {
    fn name(&self) -> &str;
    fn act(&mut self, state: &HomeState, cfg: &HomeConfig) -> Result<LightAction, AgentError>;
}

pub struct RuleBasedController;

impl Controller for RuleBasedController {
    fn name(&self) -> &str {
        "rule_based"
    }

    fn act(&mut self, state: &HomeState, cfg: &HomeConfig) -> Result<LightAction, AgentError> {
        Ok(rule_based_controller(state, cfg))
    }
}

/// Greedy policy of a trained Q-network.
pub struct GreedyController<'a> {
    pub network: &'a QNetwork,
}

impl Controller for GreedyController<'_> {
    fn name(&self) -> &str {
        "agent"
    }

    fn act(&mut self, state: &HomeState, cfg: &HomeConfig) -> Result<LightAction, AgentError> {
        let q = self.network.q_values(&encode_state(state, cfg)?)?;
        Ok(LightAction::from_index(argmax(&q), cfg.zone_count())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub controller: String,
    pub days: usize,
    pub steps: usize,
    pub energy_kwh: f64,
    pub energy_kwh_per_day: f64,
    /// Pre-penalty comfort averaged over steps with at least one occupied zone.
    pub comfort_mean: f64,
    pub occupied_steps: usize,
    pub overrides: usize,
    /// Overrides per step.
    pub override_rate: f64,
    pub mean_reward: f64,
}

/// Runs one simulated day per seed. Each seed fixes the occupant and
/// override random streams, so controllers evaluated on the same seeds face
/// identical occupancy traces. `on_step` sees every post-step state.
pub fn evaluate<C: Controller + ?Sized>(
    controller: &mut C,
    cfg: &HomeConfig,
    weights: &RewardWeights,
    seeds: &[u64],
    mut on_step: impl FnMut(&HomeState),
) -> Result<EvalSummary, AgentError> {
    let hours = f64::from(STEP_MINUTES) / 60.0;
    let mut energy_wh = 0.0;
    let mut comfort = 0.0;
    let mut occupied_steps = 0;
    let mut overrides = 0;
    let mut reward = 0.0;
    let mut steps = 0;
    for &seed in seeds {
        let mut rng = SimRng::new(seed);
        let mut state = initial_state(cfg, &mut rng);
        for _ in 0..STEPS_PER_DAY {
            let action = controller.act(&state, cfg)?;
            let (next, events) = step(&state, action, cfg, &mut rng)?;
            let r = compute_reward(&state, action, &next, &events, weights, cfg);
            energy_wh += watts(&next, cfg) * hours;
            if let Some(c) = comfort_score(&next, cfg) {
                comfort += c;
                occupied_steps += 1;
            }
            overrides += usize::from(events.overridden());
            reward += r.total;
            steps += 1;
            on_step(&next);
            state = next;
        }
    }
    let days = seeds.len();
    Ok(EvalSummary {
        controller: controller.name().to_string(),
        days,
        steps,
        energy_kwh: energy_wh / 1000.0,
        energy_kwh_per_day: if days > 0 {
            energy_wh / 1000.0 / days as f64
        } else {
            0.0
        },
        comfort_mean: if occupied_steps > 0 {
            comfort / occupied_steps as f64
        } else {
            0.0
        },
        occupied_steps,
        overrides,
        override_rate: if steps > 0 {
            overrides as f64 / steps as f64
        } else {
            0.0
        },
        mean_reward: if steps > 0 {
            reward / steps as f64
        } else {
            0.0
        },
    })
}
