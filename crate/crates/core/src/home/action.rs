use serde::{Deserialize, Serialize};

use super::SimError;

/// Brightness levels 0, 10, …, 100 percent.
pub const BRIGHTNESS_LEVELS: usize = 11;
/// Color-temperature bin centers in kelvin.
pub const CCT_BINS: [u16; 5] = [2700, 3650, 4600, 5550, 6500];

/// Flattened action index; `0` is the no-op.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionIndex(pub usize);

/// `n · 11 · 5 + 1` for an `n`-zone home.
pub fn num_actions(zones: usize) -> usize {
    zones * BRIGHTNESS_LEVELS * CCT_BINS.len() + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LightAction {
    NoOp,
    Set {
        zone: usize,
        /// Brightness level `0..=10` (tenths of full output).
        level: u8,
        /// Index into [`CCT_BINS`].
        cct_bin: u8,
    },
}

impl LightAction {
    /// Builds a set-action, rounding brightness to the 10% grid and snapping
    /// the color temperature to the nearest bin.
    pub fn set(zone: usize, brightness_pct: f64, cct_kelvin: f64) -> Self {
        let level = (brightness_pct.clamp(0.0, 100.0) / 10.0).round() as u8;
        LightAction::Set {
            zone,
            level,
            cct_bin: nearest_cct_bin(cct_kelvin),
        }
    }

    pub fn brightness(&self) -> Option<u8> {
        match self {
            LightAction::NoOp => None,
            LightAction::Set { level, .. } => Some(level * 10),
        }
    }

    pub fn cct(&self) -> Option<u16> {
        match self {
            LightAction::NoOp => None,
            LightAction::Set { cct_bin, .. } => Some(CCT_BINS[*cct_bin as usize]),
        }
    }

    pub fn zone(&self) -> Option<usize> {
        match self {
            LightAction::NoOp => None,
            LightAction::Set { zone, .. } => Some(*zone),
        }
    }

    pub fn to_index(&self, zones: usize) -> Result<ActionIndex, SimError> {
        match *self {
            LightAction::NoOp => Ok(ActionIndex(0)),
            LightAction::Set {
                zone,
                level,
                cct_bin,
            } => {
                if zone >= zones {
                    return Err(SimError::InvalidZone { zone, zones });
                }
                if level as usize >= BRIGHTNESS_LEVELS || cct_bin as usize >= CCT_BINS.len() {
                    return Err(SimError::InvalidAction {
                        index: usize::MAX,
                        actions: num_actions(zones),
                    });
                }
                Ok(ActionIndex(
                    1 + zone * BRIGHTNESS_LEVELS * CCT_BINS.len()
                        + level as usize * CCT_BINS.len()
                        + cct_bin as usize,
                ))
            }
        }
    }

    pub fn from_index(index: ActionIndex, zones: usize) -> Result<Self, SimError> {
        let actions = num_actions(zones);
        if index.0 >= actions {
            return Err(SimError::InvalidAction {
                index: index.0,
                actions,
            });
        }
        if index.0 == 0 {
            return Ok(LightAction::NoOp);
        }
        let i = index.0 - 1;
        let per_zone = BRIGHTNESS_LEVELS * CCT_BINS.len();
        Ok(LightAction::Set {
            zone: i / per_zone,
            level: ((i % per_zone) / CCT_BINS.len()) as u8,
            cct_bin: (i % CCT_BINS.len()) as u8,
        })
    }
}

pub(crate) fn nearest_cct_bin(kelvin: f64) -> u8 {
    CCT_BINS
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (f64::from(**a) - kelvin)
                .abs()
                .total_cmp(&(f64::from(**b) - kelvin).abs())
        })
        .map(|(i, _)| i as u8)
        .expect("non-empty bins")
}

pub(crate) fn cct_bin_of(kelvin: u16) -> u8 {
    nearest_cct_bin(f64::from(kelvin))
}
