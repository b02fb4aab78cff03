use std::f64::consts::PI;

/// Clear-sky peak illuminance at solar noon.
pub const MAX_LUX: f64 = 100_000.0;

/// Sunrise and sunset in minutes of day. Both shift by up to two hours
/// around 6:00 / 18:00 following the seasonal sinusoid (equinox near day 80).
pub fn daylight_window(day_of_year: u16) -> (f64, f64) {
    let season = (2.0 * PI * (f64::from(day_of_year) - 80.0) / 365.0).sin();
    (360.0 - 120.0 * season, 1080.0 + 120.0 * season)
}

/// Outdoor illuminance in lux.
pub fn ambient_light(minute_of_day: u16, day_of_year: u16, weather_factor: f64) -> f64 {
    let (sunrise, sunset) = daylight_window(day_of_year);
    let t = f64::from(minute_of_day);
    let phase = PI * (t - sunrise) / (sunset - sunrise);
    let sun = if (sunrise..=sunset).contains(&t) {
        phase.sin().max(0.0)
    } else {
        0.0
    };
    (MAX_LUX * weather_factor.clamp(0.0, 1.0) * sun).clamp(0.0, MAX_LUX)
}

/// Circadian color-temperature target in kelvin: warm at night, ramping to
/// daylight by noon, plateau until 14:00, back to warm by 20:00.
pub fn target_cct(minute_of_day: u16) -> f64 {
    let t = f64::from(minute_of_day);
    match t {
        t if t < 360.0 => 2700.0,
        t if t < 720.0 => 2700.0 + 3800.0 * (t - 360.0) / 360.0,
        t if t < 840.0 => 6500.0,
        t if t < 1200.0 => 6500.0 - 3800.0 * (t - 840.0) / 360.0,
        _ => 2700.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midnight_is_dark() {
        for doy in [0, 80, 172, 300, 365] {
            assert_eq!(ambient_light(0, doy, 1.0), 0.0);
        }
    }

    #[test]
    fn equinox_noon_peak() {
        let (rise, set) = daylight_window(80);
        assert_eq!((rise, set), (360.0, 1080.0));
        assert!((ambient_light(720, 80, 1.0) - MAX_LUX).abs() < 1e-9);
    }

    #[test]
    fn weather_scales() {
        for minute in (0..1440).step_by(7) {
            let clear = ambient_light(minute, 150, 1.0);
            assert_eq!(ambient_light(minute, 150, 0.5), clear * 0.5);
        }
    }

    #[test]
    fn summer_days_are_longer() {
        let (r, s) = daylight_window(172);
        assert!(r < 360.0 && s > 1080.0);
        assert!(r >= 240.0 && s <= 1200.0);
    }

    #[test]
    fn cct_curve() {
        assert_eq!(target_cct(180), 2700.0);
        assert_eq!(target_cct(780), 6500.0);
        assert_eq!(target_cct(540), 4600.0);
        assert_eq!(target_cct(1020), 4600.0);
        assert_eq!(target_cct(1439), 2700.0);
        for m in 0..1439u16 {
            let (a, b) = (target_cct(m), target_cct(m + 1));
            assert!((2700.0..=6500.0).contains(&a));
            assert!((a - b).abs() <= 3800.0 / 360.0 + 1e-9);
        }
    }
}
