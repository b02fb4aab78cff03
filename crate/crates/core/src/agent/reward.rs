use serde::{Deserialize, Serialize};

use crate::home::{target_cct, HomeConfig, HomeState, LightAction, StepEvents};

/// Weights of the energy, comfort and circadian terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_energy: f64,
    pub w_comfort: f64,
    pub w_circadian: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_energy: 1.0,
            w_comfort: 1.0,
            w_circadian: 0.5,
        }
    }
}

impl RewardWeights {
    pub fn new(w_energy: f64, w_comfort: f64, w_circadian: f64) -> Option<Self> {
        let w = Self {
            w_energy,
            w_comfort,
            w_circadian,
        };
        w.is_valid().then_some(w)
    }

    pub fn is_valid(&self) -> bool {
        let ws = [self.w_energy, self.w_comfort, self.w_circadian];
        ws.iter().all(|w| w.is_finite() && *w >= 0.0) && ws.iter().any(|w| *w > 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w_energy: self.w_energy * c,
            w_comfort: self.w_comfort * c,
            w_circadian: self.w_circadian * c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// In `[−1, 0]`: normalized lighting power.
    pub r_energy: f64,
    /// In `[−2, 1]`: closeness to preferred brightness, minus 1 on override.
    pub r_comfort: f64,
    /// In `[0, 1]`: color-temperature alignment with the circadian target.
    pub r_circadian: f64,
    pub total: f64,
}

/// Mean over occupied zones of `1 − |brightness − preferred| / 100`, or
/// `None` when nobody is home.
pub fn comfort_score(state: &HomeState, cfg: &HomeConfig) -> Option<f64> {
    let scores: Vec<f64> = (0..cfg.zone_count())
        .filter(|&z| state.occupancy[z])
        .map(|z| {
            let preferred = f64::from(cfg.preferred(z, state.activity));
            1.0 - (f64::from(state.brightness[z]) - preferred).abs() / 100.0
        })
        .collect();
    (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Multi-objective reward of the transition `s → s'`, evaluated on the
/// resulting state `s'` (after any override). The action itself does not
/// enter the formula beyond its effect on `s'`.
pub fn compute_reward(
    _state: &HomeState,
    _action: LightAction,
    next: &HomeState,
    events: &StepEvents,
    weights: &RewardWeights,
    cfg: &HomeConfig,
) -> RewardBreakdown {
    let power: f64 = cfg
        .zones
        .iter()
        .zip(&next.brightness)
        .map(|(z, &b)| z.p_max_w * f64::from(b) / 100.0)
        .sum();
    let r_energy = -power / cfg.total_power();

    let penalty = if events.overridden() { 1.0 } else { 0.0 };
    let r_comfort = comfort_score(next, cfg).unwrap_or(0.0) - penalty;

    let target = target_cct(next.minute_of_day);
    let aligned: Vec<f64> = (0..cfg.zone_count())
        .filter(|&z| next.occupancy[z] && next.brightness[z] > 0)
        .map(|z| 1.0 - (f64::from(next.cct[z]) - target).abs() / 3800.0)
        .collect();
    let r_circadian = if aligned.is_empty() {
        0.0
    } else {
        aligned.iter().sum::<f64>() / aligned.len() as f64
    };

    RewardBreakdown {
        r_energy,
        r_comfort,
        r_circadian,
        total: weights.w_energy * r_energy
            + weights.w_comfort * r_comfort
            + weights.w_circadian * r_circadian,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::home::{
        initial_state, HomeConfig, OccupantConfig, OverrideEvent, Preferred, SimRng, ZoneConfig,
    };

    fn four_zone() -> HomeConfig {
        HomeConfig {
            name: "four".into(),
            description: String::new(),
            zones: (0..4)
                .map(|i| ZoneConfig {
                    name: format!("z{i}"),
                    p_max_w: 10.0,
                    preferred: Preferred {
                        idle: 60,
                        active: 60,
                    },
                    synonyms: vec![],
                })
                .collect(),
            occupants: vec![OccupantConfig {
                name: "o".into(),
                initial: "away".into(),
                schedule: HomeConfig::uniform_schedule(
                    (0..5)
                        .map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                        .collect(),
                ),
            }],
            override_threshold: 30,
            override_probability: 0.5,
            weather: Default::default(),
            activity_hours: vec![],
            scenes: Default::default(),
            start_day_of_year: Some(80),
        }
    }

    #[test]
    fn all_off_is_zero() {
        let cfg = four_zone();
        let s = initial_state(&cfg, &mut SimRng::new(0));
        let r = compute_reward(
            &s,
            LightAction::NoOp,
            &s,
            &StepEvents::default(),
            &RewardWeights::default(),
            &cfg,
        );
        assert_eq!(r, RewardBreakdown::default());
    }

    #[test]
    fn single_zone_at_preference() {
        let cfg = four_zone();
        let mut s = initial_state(&cfg, &mut SimRng::new(0));
        s.minute_of_day = 780;
        s.occupancy[1] = true;
        s.occupant_locations = vec![2];
        s.brightness[1] = 60;
        s.cct[1] = 6500;
        let r = compute_reward(
            &s,
            LightAction::NoOp,
            &s,
            &StepEvents::default(),
            &RewardWeights::default(),
            &cfg,
        );
        assert!((r.r_energy + 0.15).abs() < 1e-12);
        assert_eq!(r.r_comfort, 1.0);
        assert_eq!(r.r_circadian, 1.0);
        assert!((r.total - 1.35).abs() < 1e-12);
    }

    #[test]
    fn override_subtracts_one() {
        let cfg = four_zone();
        let mut s = initial_state(&cfg, &mut SimRng::new(0));
        s.occupancy[0] = true;
        s.brightness[0] = 30;
        let w = RewardWeights::default();
        let plain = compute_reward(&s, LightAction::NoOp, &s, &StepEvents::default(), &w, &cfg);
        let ev = StepEvents {
            override_event: Some(OverrideEvent {
                zone: 0,
                brightness: 60,
            }),
            ..Default::default()
        };
        let penalized = compute_reward(&s, LightAction::NoOp, &s, &ev, &w, &cfg);
        assert_eq!(penalized.r_comfort, plain.r_comfort - 1.0);
        assert_eq!(penalized.r_energy, plain.r_energy);
    }

    #[test]
    fn weights_validation() {
        assert!(RewardWeights::new(0.0, 0.0, 0.0).is_none());
        assert!(RewardWeights::new(-1.0, 1.0, 1.0).is_none());
        assert!(RewardWeights::new(0.0, 0.0, 0.1).is_some());
    }
}
