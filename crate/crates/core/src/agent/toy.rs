//! A 16-state lighting MDP small enough to solve exactly.
//!
//! Two zones, clock frozen at 13:00 (circadian target 6500 K), and a
//! deterministic occupancy cycle `{} → {1} → {0,1} → {0}`. Each zone is either
//! off or lit at 60% / 6500 K, which is also every occupant's preference.
//! Five actions: no-op, and on/off for each zone. Rewards come from the same
//! multi-objective function as the full simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    compute_reward, encode_state, AgentError, EnvStep, Environment, RewardBreakdown, RewardWeights,
};
use crate::home::{
    ambient_light, ActionIndex, HomeConfig, HomeState, LightAction, OccupantConfig, Preferred,
    StepEvents, ZoneConfig,
};

pub const TOY_STATES: usize = 16;
pub const TOY_ACTIONS: usize = 5;

const CYCLE: [[bool; 2]; 4] = [[false, false], [false, true], [true, true], [true, false]];
const MINUTE: u16 = 780;
const DAY: u16 = 80;
const LIT_LEVEL: u8 = 6;
const CCT_BIN: u8 = 4;

#[derive(Debug, Clone)]
pub struct ToyLightingMdp {
    cfg: HomeConfig,
    weights: RewardWeights,
    state: usize,
    rng: ChaCha8Rng,
    steps: usize,
    episode_len: usize,
}

impl ToyLightingMdp {
    pub fn new(weights: RewardWeights, seed: u64, episode_len: usize) -> Self {
        let zone = |name: &str| ZoneConfig {
            name: name.into(),
            p_max_w: 10.0,
            preferred: Preferred {
                idle: 60,
                active: 60,
            },
            synonyms: vec![],
        };
        let stay: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let cfg = HomeConfig {
            name: "toy_2zone".into(),
            description: "deterministic occupancy cycle".into(),
            zones: vec![zone("a"), zone("b")],
            occupants: vec![OccupantConfig {
                name: "o".into(),
                initial: "away".into(),
                schedule: HomeConfig::uniform_schedule(stay),
            }],
            override_threshold: 100,
            override_probability: 0.0,
            weather: Default::default(),
            activity_hours: vec![],
            scenes: Default::default(),
            start_day_of_year: Some(DAY),
        };
        Self {
            cfg,
            weights,
            state: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            steps: 0,
            episode_len: episode_len.max(1),
        }
    }

    pub fn config(&self) -> &HomeConfig {
        &self.cfg
    }

    /// State index `phase · 4 + lit0 · 2 + lit1`.
    pub fn home_state(&self, index: usize) -> HomeState {
        let phase = index / 4;
        let lit = [index & 2 != 0, index & 1 != 0];
        let occupancy = CYCLE[phase].to_vec();
        HomeState {
            occupant_locations: Vec::new(),
            occupancy,
            minute_of_day: MINUTE,
            day_of_week: (DAY % 7) as u8,
            day_of_year: DAY,
            ambient_lux: ambient_light(MINUTE, DAY, 1.0),
            weather_factor: 1.0,
            brightness: lit
                .iter()
                .map(|&l| if l { LIT_LEVEL * 10 } else { 0 })
                .collect(),
            cct: vec![6500; 2],
            activity: false,
        }
    }

    pub fn light_action(action: usize) -> LightAction {
        match action {
            1 | 2 => LightAction::Set {
                zone: 0,
                level: if action == 1 { LIT_LEVEL } else { 0 },
                cct_bin: CCT_BIN,
            },
            3 | 4 => LightAction::Set {
                zone: 1,
                level: if action == 3 { LIT_LEVEL } else { 0 },
                cct_bin: CCT_BIN,
            },
            _ => LightAction::NoOp,
        }
    }

    pub fn encode(&self, index: usize) -> Result<Vec<f64>, AgentError> {
        encode_state(&self.home_state(index), &self.cfg)
    }

    /// Deterministic model: next state index and reward.
    pub fn transition(&self, index: usize, action: usize) -> (usize, RewardBreakdown) {
        let phase = index / 4;
        let mut lit = [index & 2 != 0, index & 1 != 0];
        match action {
            1 => lit[0] = true,
            2 => lit[0] = false,
            3 => lit[1] = true,
            4 => lit[1] = false,
            _ => {}
        }
        let next = ((phase + 1) % 4) * 4 + usize::from(lit[0]) * 2 + usize::from(lit[1]);
        let reward = compute_reward(
            &self.home_state(index),
            Self::light_action(action),
            &self.home_state(next),
            &StepEvents::default(),
            &self.weights,
            &self.cfg,
        );
        (next, reward)
    }

    pub fn current(&self) -> usize {
        self.state
    }
}

impl Environment for ToyLightingMdp {
    fn state_dim(&self) -> usize {
        super::state_dim(2)
    }

    fn num_actions(&self) -> usize {
        TOY_ACTIONS
    }

    fn reset(&mut self) -> Result<Vec<f64>, AgentError> {
        self.state = self.rng.gen_range(0..TOY_STATES);
        self.steps = 0;
        self.encode(self.state)
    }

    fn step(&mut self, action: ActionIndex) -> Result<EnvStep, AgentError> {
        if action.0 >= TOY_ACTIONS {
            return Err(AgentError::Sim(crate::home::SimError::InvalidAction {
                index: action.0,
                actions: TOY_ACTIONS,
            }));
        }
        let (next, reward) = self.transition(self.state, action.0);
        self.state = next;
        self.steps += 1;
        let s = self.home_state(next);
        Ok(EnvStep {
            observation: self.encode(next)?,
            reward,
            terminal: false,
            truncated: self.steps >= self.episode_len,
            override_flag: false,
            energy_kwh: crate::home::watts(&s, &self.cfg) / 12.0 / 1000.0,
            comfort: super::comfort_score(&s, &self.cfg),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states_encode_distinctly() {
        let mdp = ToyLightingMdp::new(RewardWeights::default(), 0, 8);
        let encoded: Vec<Vec<f64>> = (0..TOY_STATES).map(|i| mdp.encode(i).unwrap()).collect();
        for i in 0..TOY_STATES {
            for j in 0..i {
                assert_ne!(encoded[i], encoded[j]);
            }
        }
    }

    #[test]
    fn transitions_cycle() {
        let mdp = ToyLightingMdp::new(RewardWeights::default(), 0, 8);
        assert_eq!(mdp.transition(0, 0).0, 4);
        assert_eq!(mdp.transition(0, 1).0, 6);
        assert_eq!(mdp.transition(15, 4).0, 2);
        // Lighting the zone that becomes occupied pays off immediately.
        let (_, lit) = mdp.transition(0, 3);
        let (_, dark) = mdp.transition(0, 0);
        assert!(lit.total > dark.total);
    }
}
