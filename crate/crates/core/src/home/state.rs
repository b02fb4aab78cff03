use serde::{Deserialize, Serialize};

use super::{HomeConfig, SimError, CCT_BINS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeState {
    pub occupancy: Vec<bool>,
    pub minute_of_day: u16,
    pub day_of_week: u8,
    pub day_of_year: u16,
    pub ambient_lux: f64,
    pub weather_factor: f64,
    /// Percent, always a multiple of 10.
    pub brightness: Vec<u8>,
    /// Kelvin, always one of the bin centers.
    pub cct: Vec<u16>,
    pub activity: bool,
    /// Hidden occupant locations (`0` = away, `z + 1` = zone `z`).
    pub occupant_locations: Vec<usize>,
}

impl HomeState {
    pub fn zone_count(&self) -> usize {
        self.occupancy.len()
    }

    pub fn hour(&self) -> u8 {
        (self.minute_of_day / 60) as u8
    }

    pub fn any_occupied(&self) -> bool {
        self.occupancy.iter().any(|&o| o)
    }

    pub fn validate(&self, cfg: &HomeConfig) -> Result<(), SimError> {
        let n = cfg.zone_count();
        let bad = |m: String| Err(SimError::StateMismatch(m));
        if self.occupancy.len() != n || self.brightness.len() != n || self.cct.len() != n {
            return bad(format!("expected {n} zones"));
        }
        if self.occupant_locations.len() != cfg.occupants.len() {
            return bad("occupant count mismatch".into());
        }
        if self.minute_of_day >= 1440 || self.day_of_week > 6 || self.day_of_year > 365 {
            return bad("clock out of range".into());
        }
        if !(self.ambient_lux >= 0.0 && self.ambient_lux <= super::MAX_LUX) {
            return bad(format!("ambient {} out of range", self.ambient_lux));
        }
        if !(0.0..=1.0).contains(&self.weather_factor) {
            return bad("weather factor out of range".into());
        }
        if self.brightness.iter().any(|&b| b > 100 || b % 10 != 0) {
            return bad("brightness must be a multiple of 10 in 0..=100".into());
        }
        if self.cct.iter().any(|c| !CCT_BINS.contains(c)) {
            return bad("cct must be a bin center".into());
        }
        let mut derived = vec![false; n];
        for &loc in &self.occupant_locations {
            if loc > n {
                return bad(format!("occupant location {loc} out of range"));
            }
            if loc > 0 {
                derived[loc - 1] = true;
            }
        }
        if derived != self.occupancy {
            return bad("occupancy bits disagree with occupant locations".into());
        }
        Ok(())
    }
}
