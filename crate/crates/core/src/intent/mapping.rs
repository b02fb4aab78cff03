use serde::{Deserialize, Serialize};

use super::{Intent, IntentError, ALL_ZONES};
use crate::home::{HomeConfig, HomeState, LightAction};

/// One zone's target lighting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneSetting {
    pub zone: String,
    pub brightness: u8,
    pub cct: u16,
}

/// Machine-readable response to a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDocument {
    pub intent: Intent,
    pub settings: Vec<ZoneSetting>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntentResolution {
    pub document: ConfigDocument,
    pub actions: Vec<LightAction>,
}

fn zones_of(zone: &str, cfg: &HomeConfig) -> Result<Vec<usize>, IntentError> {
    if zone == ALL_ZONES {
        return Ok((0..cfg.zone_count()).collect());
    }
    cfg.zone_index(zone)
        .map(|z| vec![z])
        .ok_or_else(|| IntentError::UnknownZone(zone.to_string()))
}

/// Turns an intent into concrete settings for the current state. `TurnOn`
/// uses the zone's preferred brightness for the current activity (full
/// output when that preference is zero); other settings keep the parts of
/// the current state the intent does not mention. `QueryState` yields no
/// actions.
pub fn intent_to_config(
    intent: &Intent,
    state: &HomeState,
    cfg: &HomeConfig,
) -> Result<IntentResolution, IntentError> {
    let mut targets: Vec<(usize, f64, f64)> = Vec::new();
    match intent {
        Intent::TurnOn { zone } => {
            for z in zones_of(zone, cfg)? {
                let p = cfg.preferred(z, state.activity);
                let b = if p == 0 { 100 } else { p };
                targets.push((z, f64::from(b), f64::from(state.cct[z])));
            }
        }
        Intent::TurnOff { zone } => {
            for z in zones_of(zone, cfg)? {
                targets.push((z, 0.0, f64::from(state.cct[z])));
            }
        }
        Intent::SetBrightness { zone, pct } => {
            for z in zones_of(zone, cfg)? {
                targets.push((z, f64::from(*pct), f64::from(state.cct[z])));
            }
        }
        Intent::SetColorTemp { zone, kelvin } => {
            for z in zones_of(zone, cfg)? {
                targets.push((z, f64::from(state.brightness[z]), f64::from(*kelvin)));
            }
        }
        Intent::ActivateScene { scene } => {
            let settings = cfg
                .scenes
                .get(scene)
                .ok_or_else(|| IntentError::UnknownScene(scene.clone()))?;
            for s in settings {
                let z = cfg
                    .zone_index(&s.zone)
                    .ok_or_else(|| IntentError::UnknownZone(s.zone.clone()))?;
                targets.push((z, f64::from(s.brightness), f64::from(s.cct)));
            }
        }
        Intent::QueryState { zone } => {
            if let Some(zone) = zone {
                zones_of(zone, cfg)?;
            }
        }
    }
    let actions: Vec<LightAction> = targets
        .iter()
        .map(|&(z, b, k)| LightAction::set(z, b, k))
        .collect();
    let settings = actions
        .iter()
        .map(|a| ZoneSetting {
            zone: cfg.zones[a.zone().expect("set action")].name.clone(),
            brightness: a.brightness().expect("set action"),
            cct: a.cct().expect("set action"),
        })
        .collect();
    Ok(IntentResolution {
        document: ConfigDocument {
            intent: intent.clone(),
            settings,
        },
        actions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::home::{initial_state, SimRng};

    fn family() -> (HomeConfig, HomeState) {
        let cfg = HomeConfig::load(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/configs/family_4zone.json"
        ))
        .unwrap();
        let mut s = initial_state(&cfg, &mut SimRng::new(0));
        s.cct = vec![2700, 3650, 4600, 6500];
        s.brightness = vec![10, 20, 30, 40];
        (cfg, s)
    }

    #[test]
    fn turn_off_all_fans_out() {
        let (cfg, s) = family();
        let r = intent_to_config(
            &Intent::TurnOff {
                zone: ALL_ZONES.into(),
            },
            &s,
            &cfg,
        )
        .unwrap();
        assert_eq!(r.actions.len(), 4);
        for (z, a) in r.actions.iter().enumerate() {
            assert_eq!(a.zone(), Some(z));
            assert_eq!(a.brightness(), Some(0));
            assert_eq!(a.cct(), Some(s.cct[z]));
        }
    }

    #[test]
    fn single_zone_brightness() {
        let (cfg, s) = family();
        let r = intent_to_config(
            &Intent::SetBrightness {
                zone: "kitchen".into(),
                pct: 40,
            },
            &s,
            &cfg,
        )
        .unwrap();
        assert_eq!(
            r.actions,
            vec![LightAction::Set {
                zone: 0,
                level: 4,
                cct_bin: 0
            }]
        );
        assert_eq!(
            r.document.settings,
            vec![ZoneSetting {
                zone: "kitchen".into(),
                brightness: 40,
                cct: 2700
            }]
        );
    }

    #[test]
    fn scene_table_lookup() {
        let (cfg, s) = family();
        let r = intent_to_config(
            &Intent::ActivateScene {
                scene: "evening".into(),
            },
            &s,
            &cfg,
        )
        .unwrap();
        let table = &cfg.scenes["evening"];
        assert_eq!(r.document.settings.len(), table.len());
        for (got, want) in r.document.settings.iter().zip(table) {
            assert_eq!(got.zone, want.zone);
            assert_eq!(got.brightness, want.brightness);
            assert_eq!(got.cct, want.cct);
        }
        assert!(intent_to_config(
            &Intent::ActivateScene {
                scene: "disco".into()
            },
            &s,
            &cfg
        )
        .is_err());
    }

    #[test]
    fn turn_on_uses_preference_and_color_keeps_brightness() {
        let (cfg, mut s) = family();
        s.activity = false;
        let r = intent_to_config(
            &Intent::TurnOn {
                zone: "bedroom".into(),
            },
            &s,
            &cfg,
        )
        .unwrap();
        assert_eq!(r.actions[0].brightness(), Some(100));
        let r = intent_to_config(
            &Intent::TurnOn {
                zone: "kitchen".into(),
            },
            &s,
            &cfg,
        )
        .unwrap();
        assert_eq!(r.actions[0].brightness(), Some(cfg.zones[0].preferred.idle));
        let r = intent_to_config(
            &Intent::SetColorTemp {
                zone: "bathroom".into(),
                kelvin: 2700,
            },
            &s,
            &cfg,
        )
        .unwrap();
        assert_eq!(
            r.actions,
            vec![LightAction::Set {
                zone: 3,
                level: 4,
                cct_bin: 0
            }]
        );
        let q = intent_to_config(&Intent::QueryState { zone: None }, &s, &cfg).unwrap();
        assert!(q.actions.is_empty());
        assert!(intent_to_config(
            &Intent::TurnOn {
                zone: "garage".into()
            },
            &s,
            &cfg
        )
        .is_err());
    }
}
