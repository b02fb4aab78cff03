use std::f64::consts::TAU;

use super::AgentError;
use crate::home::{HomeConfig, HomeState, MAX_LUX};

/// Feature dimension `3n + 9` for an `n`-zone home.
pub fn state_dim(zones: usize) -> usize {
    3 * zones + 9
}

/// Feature layout: occupancy bits; sin/cos of minute-of-day, day-of-week and
/// day-of-year; ambient lux / 100000; weather factor; brightness / 100 per
/// zone; `(cct − 2700) / 3800` per zone; activity flag.
pub fn encode_state(state: &HomeState, cfg: &HomeConfig) -> Result<Vec<f64>, AgentError> {
    let n = cfg.zone_count();
    for len in [
        state.occupancy.len(),
        state.brightness.len(),
        state.cct.len(),
    ] {
        if len != n {
            return Err(AgentError::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let mut v = Vec::with_capacity(state_dim(n));
    v.extend(state.occupancy.iter().map(|&o| if o { 1.0 } else { 0.0 }));
    for angle in [
        TAU * f64::from(state.minute_of_day) / 1440.0,
        TAU * f64::from(state.day_of_week) / 7.0,
        TAU * f64::from(state.day_of_year) / 366.0,
    ] {
        v.push(angle.sin());
        v.push(angle.cos());
    }
    v.push(state.ambient_lux / MAX_LUX);
    v.push(state.weather_factor);
    v.extend(state.brightness.iter().map(|&b| f64::from(b) / 100.0));
    v.extend(state.cct.iter().map(|&c| (f64::from(c) - 2700.0) / 3800.0));
    v.push(if state.activity { 1.0 } else { 0.0 });
    debug_assert_eq!(v.len(), state_dim(n));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::home::{ambient_light, initial_state, HomeConfig, SimRng};

    fn family() -> HomeConfig {
        HomeConfig::load(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/configs/family_4zone.json"
        ))
        .unwrap()
    }

    #[test]
    fn midnight_layout() {
        let mut cfg = family();
        cfg.weather = crate::home::WeatherConfig { min: 1.0, max: 1.0 };
        let mut s = initial_state(&cfg, &mut SimRng::new(0));
        s.occupancy = vec![false; 4];
        s.occupant_locations = vec![0; 3];
        let v = encode_state(&s, &cfg).unwrap();
        assert_eq!(v.len(), state_dim(4));
        assert_eq!(&v[0..4], &[0.0; 4]);
        assert_eq!(v[4], 0.0);
        assert_eq!(v[5], 1.0);
        assert_eq!(v[10], 0.0);
        assert_eq!(v[11], 1.0);
        assert_eq!(&v[12..16], &[0.0; 4]);
        assert_eq!(v, encode_state(&s, &cfg).unwrap());
    }

    #[test]
    fn noon_ambient_component() {
        let cfg = family();
        let mut s = initial_state(&cfg, &mut SimRng::new(0));
        s.minute_of_day = 720;
        s.day_of_year = 172;
        s.weather_factor = 1.0;
        s.ambient_lux = ambient_light(720, 172, 1.0);
        let v = encode_state(&s, &cfg).unwrap();
        assert!((v[10] - ambient_light(720, 172, 1.0) / 100_000.0).abs() < 1e-15);
        assert!(v[10] > 0.99);
    }

    #[test]
    fn mismatched_state() {
        let cfg = family();
        let mut s = initial_state(&cfg, &mut SimRng::new(0));
        s.brightness.pop();
        assert!(matches!(
            encode_state(&s, &cfg),
            Err(AgentError::DimensionMismatch { .. })
        ));
    }
}
