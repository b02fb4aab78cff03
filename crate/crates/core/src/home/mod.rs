//! Seeded smart-home simulator.
//!
//! One step is five minutes; an episode is one day (288 steps). Occupants move
//! between zones following per-hour-band Markov chains, ambient light follows
//! a seasonal daylight curve, and occupants may manually override lighting
//! that strays too far from their preferred level.

mod action;
mod baseline;
mod config;
mod error;
mod models;
mod sim;
mod state;
mod trace;

pub(crate) use action::nearest_cct_bin;
pub use action::{num_actions, ActionIndex, LightAction, BRIGHTNESS_LEVELS, CCT_BINS};
pub use baseline::{rule_based_controller, BASELINE_CCT_BIN};
pub use config::{
    HomeConfig, HourBand, OccupantConfig, Preferred, SceneSetting, WeatherConfig, ZoneConfig, AWAY,
};
pub use error::SimError;
pub use models::{ambient_light, daylight_window, target_cct, MAX_LUX};
pub use sim::{episode_energy, initial_state, step, watts, OverrideEvent, SimRng, StepEvents};
pub use state::HomeState;
pub use trace::{read_trace, TraceKind, TraceRecord, TraceWriter};

/// Minutes advanced by one simulator step.
pub const STEP_MINUTES: u16 = 5;
/// Steps in one simulated day.
pub const STEPS_PER_DAY: usize = 288;
