use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Location index meaning "not in any zone".
pub const AWAY: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub zones: Vec<ZoneConfig>,
    pub occupants: Vec<OccupantConfig>,
    /// Brightness deviation (percentage points) beyond which occupants may override.
    #[serde(default = "default_threshold")]
    pub override_threshold: u8,
    /// Per-step probability of an override once the threshold is exceeded.
    #[serde(default = "default_override_probability")]
    pub override_probability: f64,
    #[serde(default)]
    pub weather: WeatherConfig,
    /// Half-open `[start_hour, end_hour)` ranges during which occupants are active.
    #[serde(default)]
    pub activity_hours: Vec<[u8; 2]>,
    /// Scene name → per-zone settings.
    #[serde(default)]
    pub scenes: BTreeMap<String, Vec<SceneSetting>>,
    /// Fixed start day; sampled per episode when absent.
    #[serde(default)]
    pub start_day_of_year: Option<u16>,
}

fn default_threshold() -> u8 {
    30
}

fn default_override_probability() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    pub name: String,
    /// Power draw at 100% brightness.
    pub p_max_w: f64,
    pub preferred: Preferred,
    /// Alternative names accepted by the command parser.
    #[serde(default)]
    pub synonyms: Vec<String>,
}

/// Preferred brightness (percent) by occupant activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preferred {
    pub idle: u8,
    pub active: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupantConfig {
    pub name: String,
    /// Starting location: `"away"` or a zone name.
    #[serde(default = "default_initial")]
    pub initial: String,
    pub schedule: Vec<HourBand>,
}

fn default_initial() -> String {
    "away".to_string()
}

/// Markov transition table over locations `[away, zone 0, …, zone n−1]`
/// applied while the hour of day lies in `[start_hour, end_hour)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourBand {
    pub start_hour: u8,
    pub end_hour: u8,
    pub transitions: Vec<Vec<f64>>,
}

/// Per-episode weather factor is drawn uniformly from `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherConfig {
    pub min: f64,
    pub max: f64,
}

impl Default for WeatherConfig {
    fn default() -> Self {
        Self { min: 1.0, max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSetting {
    pub zone: String,
    pub brightness: u8,
    pub cct: u16,
}

impl HomeConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: HomeConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn zone_count(&self) -> usize {
        self.zones.len()
    }

    pub fn zone_index(&self, name: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.name == name)
    }

    pub fn total_power(&self) -> f64 {
        self.zones.iter().map(|z| z.p_max_w).sum()
    }

    pub fn preferred(&self, zone: usize, active: bool) -> u8 {
        let p = self.zones[zone].preferred;
        if active {
            p.active
        } else {
            p.idle
        }
    }

    pub fn is_active_hour(&self, hour: u8) -> bool {
        self.activity_hours
            .iter()
            .any(|[start, end]| (*start..*end).contains(&hour))
    }

    pub(crate) fn location_index(&self, name: &str) -> Option<usize> {
        if name == "away" {
            Some(AWAY)
        } else {
            self.zone_index(name).map(|z| z + 1)
        }
    }

    pub(crate) fn band(&self, occupant: usize, hour: u8) -> &HourBand {
        self.occupants[occupant]
            .schedule
            .iter()
            .find(|b| (b.start_hour..b.end_hour).contains(&hour))
            .expect("validated: schedule covers every hour")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        let n = self.zones.len();
        if n == 0 {
            return bad("at least one zone is required".into());
        }
        for z in &self.zones {
            if !(z.p_max_w.is_finite() && z.p_max_w > 0.0) {
                return bad(format!("zone {}: p_max_w must be positive", z.name));
            }
            for p in [z.preferred.idle, z.preferred.active] {
                if p > 100 || p % 10 != 0 {
                    return bad(format!(
                        "zone {}: preferred brightness {p} must be a multiple of 10 in 0..=100",
                        z.name
                    ));
                }
            }
        }
        let mut names: Vec<&str> = self.zones.iter().map(|z| z.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != n || names.contains(&"away") || names.contains(&"all") {
            return bad("zone names must be unique and not 'away' or 'all'".into());
        }
        if !(0.0..=1.0).contains(&self.override_probability) {
            return bad("override_probability must lie in [0, 1]".into());
        }
        if self.override_threshold > 100 {
            return bad("override_threshold must be ≤ 100".into());
        }
        let w = self.weather;
        if !(0.0..=1.0).contains(&w.min) || !(0.0..=1.0).contains(&w.max) || w.min > w.max {
            return bad("weather range must satisfy 0 ≤ min ≤ max ≤ 1".into());
        }
        if let Some(d) = self.start_day_of_year {
            if d > 365 {
                return bad("start_day_of_year must be ≤ 365".into());
            }
        }
        for [s, e] in &self.activity_hours {
            if s >= e || *e > 24 {
                return bad(format!("activity hours [{s}, {e}) invalid"));
            }
        }
        for occ in &self.occupants {
            if self.location_index(&occ.initial).is_none() {
                return bad(format!(
                    "occupant {}: unknown initial location {}",
                    occ.name, occ.initial
                ));
            }
            for hour in 0..24u8 {
                let covering = occ
                    .schedule
                    .iter()
                    .filter(|b| (b.start_hour..b.end_hour).contains(&hour))
                    .count();
                if covering != 1 {
                    return bad(format!(
                        "occupant {}: hour {hour} covered by {covering} bands, expected 1",
                        occ.name
                    ));
                }
            }
            for band in &occ.schedule {
                if band.transitions.len() != n + 1 {
                    return bad(format!(
                        "occupant {}: transition table needs {} rows",
                        occ.name,
                        n + 1
                    ));
                }
                for row in &band.transitions {
                    if row.len() != n + 1 || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return bad(format!("occupant {}: malformed transition row", occ.name));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return bad(format!(
                            "occupant {}: transition row sums to {sum}, expected 1",
                            occ.name
                        ));
                    }
                }
            }
        }
        for (scene, settings) in &self.scenes {
            for s in settings {
                if self.zone_index(&s.zone).is_none() {
                    return bad(format!("scene {scene}: unknown zone {}", s.zone));
                }
                if s.brightness > 100 || !(2700..=6500).contains(&s.cct) {
                    return bad(format!("scene {scene}: setting out of range"));
                }
            }
        }
        Ok(())
    }

    /// A single-band schedule with the given transition matrix, for tests and
    /// synthetic homes.
    pub fn uniform_schedule(transitions: Vec<Vec<f64>>) -> Vec<HourBand> {
        vec![HourBand {
            start_hour: 0,
            end_hour: 24,
            transitions,
        }]
    }
}
