//! The single owner of simulator and agent state.

use serde::{Deserialize, Serialize};

use super::{GatewayError, Mode};
use crate::agent::{
    compute_reward, encode_state, save_checkpoint, DqnAgent, RewardBreakdown, RewardWeights,
    Transition,
};
use crate::home::{
    initial_state, rule_based_controller, step, watts, HomeConfig, HomeState, LightAction,
    OverrideEvent, SimRng, StepEvents, TraceKind, TraceRecord, TraceWriter, CCT_BINS, STEP_MINUTES,
};
use crate::intent::{intent_to_config, parse_command, Intent, Lexicon, ZoneSetting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandSource {
    #[default]
    Ifttt,
    Dashboard,
    Cli,
}

impl CommandSource {
    pub fn name(self) -> &'static str {
        match self {
            CommandSource::Ifttt => "ifttt",
            CommandSource::Dashboard => "dashboard",
            CommandSource::Cli => "cli",
        }
    }
}

/// A zone addressed by index or by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZoneRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneView {
    pub index: usize,
    pub name: String,
    pub occupied: bool,
    pub brightness: u8,
    pub cct: u16,
    /// Preferred brightness for the current activity.
    pub preferred: u8,
    pub power_w: f64,
}

/// `GET /state` body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    /// Sequence number of the last applied mutation.
    pub seq: u64,
    pub mode: Mode,
    pub steps: u64,
    pub minute_of_day: u16,
    /// `HH:MM` rendering of `minute_of_day`.
    pub clock: String,
    pub day_of_week: u8,
    pub day_of_year: u16,
    pub ambient_lux: f64,
    pub weather_factor: f64,
    pub activity: bool,
    pub power_w: f64,
    pub zones: Vec<ZoneView>,
}

/// `GET /metrics` body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub seq: u64,
    pub mode: Mode,
    pub steps: u64,
    pub commands: u64,
    pub rejected_commands: u64,
    /// Overrides posted to `/webhook/override`.
    pub overrides: u64,
    /// Overrides produced by simulated occupants during steps.
    pub simulated_overrides: u64,
    /// Energy over all simulator steps so far.
    pub energy_kwh: f64,
    pub replay_len: usize,
    pub agent_updates: u64,
}

/// One server-sent event; one per step, command, override and mode change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveEvent {
    pub seq: u64,
    pub kind: TraceKind,
    pub state: StateDocument,
    pub actions: Vec<LightAction>,
    pub reward: Option<RewardBreakdown>,
    #[serde(rename = "override")]
    pub override_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<Intent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandResponse {
    pub seq: u64,
    pub intent: Intent,
    pub actions: Vec<LightAction>,
    pub settings: Vec<ZoneSetting>,
    pub zones: Vec<ZoneView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverrideResponse {
    pub seq: u64,
    pub zone: ZoneView,
    pub action: LightAction,
    pub reward: RewardBreakdown,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Counters {
    steps: u64,
    commands: u64,
    rejected: u64,
    overrides: u64,
    simulated_overrides: u64,
    energy_wh: f64,
}

/// Simulator, agent and trajectory log behind the gateway's queue. Every
/// mutation gets the next sequence number and one trace record.
pub struct LiveLoop {
    cfg: HomeConfig,
    lexicon: Lexicon,
    weights: RewardWeights,
    rng: SimRng,
    state: HomeState,
    agent: DqnAgent,
    learn: bool,
    mode: Mode,
    trace: Option<TraceWriter>,
    seq: u64,
    counters: Counters,
}

impl LiveLoop {
    pub fn new(
        cfg: HomeConfig,
        weights: RewardWeights,
        agent: DqnAgent,
        mode: Mode,
        seed: u64,
        trace: Option<TraceWriter>,
    ) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let mut rng = SimRng::new(seed);
        let state = initial_state(&cfg, &mut rng);
        Ok(Self {
            lexicon: Lexicon::from_config(&cfg),
            cfg,
            weights,
            rng,
            state,
            agent,
            learn: true,
            mode,
            trace,
            seq: 0,
            counters: Counters::default(),
        })
    }

    pub fn with_learning(mut self, learn: bool) -> Self {
        self.learn = learn;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn home(&self) -> &HomeState {
        &self.state
    }

    pub fn agent(&self) -> &DqnAgent {
        &self.agent
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    fn zone_views(&self) -> Vec<ZoneView> {
        let s = &self.state;
        self.cfg
            .zones
            .iter()
            .enumerate()
            .map(|(i, z)| ZoneView {
                index: i,
                name: z.name.clone(),
                occupied: s.occupancy[i],
                brightness: s.brightness[i],
                cct: s.cct[i],
                preferred: self.cfg.preferred(i, s.activity),
                power_w: z.p_max_w * f64::from(s.brightness[i]) / 100.0,
            })
            .collect()
    }

    pub fn state_document(&self) -> StateDocument {
        let s = &self.state;
        StateDocument {
            seq: self.seq,
            mode: self.mode,
            steps: self.counters.steps,
            minute_of_day: s.minute_of_day,
            clock: format!("{:02}:{:02}", s.minute_of_day / 60, s.minute_of_day % 60),
            day_of_week: s.day_of_week,
            day_of_year: s.day_of_year,
            ambient_lux: s.ambient_lux,
            weather_factor: s.weather_factor,
            activity: s.activity,
            power_w: watts(s, &self.cfg),
            zones: self.zone_views(),
        }
    }

    pub fn metrics_document(&self) -> MetricsDocument {
        let c = &self.counters;
        MetricsDocument {
            seq: self.seq,
            mode: self.mode,
            steps: c.steps,
            commands: c.commands,
            rejected_commands: c.rejected,
            overrides: c.overrides,
            simulated_overrides: c.simulated_overrides,
            energy_kwh: c.energy_wh / 1000.0,
            replay_len: self.agent.replay().len(),
            agent_updates: self.agent.updates(),
        }
    }

    fn record(
        &mut self,
        kind: TraceKind,
        actions: Vec<LightAction>,
        reward: Option<RewardBreakdown>,
        events: StepEvents,
        source: Option<String>,
        intent: Option<Intent>,
    ) -> Result<LiveEvent, GatewayError> {
        self.seq += 1;
        let override_flag = kind == TraceKind::Override || events.overridden();
        if let Some(w) = self.trace.as_mut() {
            w.write(&TraceRecord {
                t: self.seq,
                kind,
                state: self.state.clone(),
                actions: actions.clone(),
                reward,
                events,
                override_flag,
                source: source.clone(),
            })?;
        }
        Ok(LiveEvent {
            seq: self.seq,
            kind,
            state: self.state_document(),
            actions,
            reward,
            override_flag,
            intent,
            source,
        })
    }

    fn policy_action(&self) -> Result<LightAction, GatewayError> {
        let n = self.cfg.zone_count();
        Ok(match self.mode {
            Mode::Agent => {
                let x = encode_state(&self.state, &self.cfg)?;
                LightAction::from_index(self.agent.greedy(&x)?, n)?
            }
            Mode::RuleBased => rule_based_controller(&self.state, &self.cfg),
            Mode::Manual => LightAction::NoOp,
        })
    }

    /// Advances the simulator one step under the current mode.
    pub fn tick(&mut self) -> Result<LiveEvent, GatewayError> {
        let action = self.policy_action()?;
        let (next, events) = step(&self.state, action, &self.cfg, &mut self.rng)?;
        let reward = compute_reward(
            &self.state,
            action,
            &next,
            &events,
            &self.weights,
            &self.cfg,
        );
        if self.mode == Mode::Agent && self.learn {
            let n = self.cfg.zone_count();
            self.agent.observe(Transition {
                state: encode_state(&self.state, &self.cfg)?,
                action: action.to_index(n)?,
                reward,
                next_state: encode_state(&next, &self.cfg)?,
                terminal: false,
                override_flag: events.overridden(),
            })?;
        }
        self.state = next;
        self.counters.steps += 1;
        if events.overridden() {
            self.counters.simulated_overrides += 1;
        }
        self.counters.energy_wh += watts(&self.state, &self.cfg) * (f64::from(STEP_MINUTES) / 60.0);
        self.record(
            TraceKind::Step,
            vec![action],
            Some(reward),
            events,
            None,
            None,
        )
    }

    /// Parses a command and applies the resulting settings immediately.
    pub fn command(
        &mut self,
        text: &str,
        source: CommandSource,
    ) -> Result<(CommandResponse, LiveEvent), GatewayError> {
        if self.mode == Mode::RuleBased {
            self.counters.rejected += 1;
            return Err(GatewayError::Conflict(
                "commands are rejected in rule_based mode".into(),
            ));
        }
        let intent = match parse_command(text, &self.lexicon) {
            Ok(i) => i,
            Err(e) => {
                self.counters.rejected += 1;
                return Err(GatewayError::NoParse(e));
            }
        };
        let resolution = intent_to_config(&intent, &self.state, &self.cfg)?;
        for a in &resolution.actions {
            apply(&mut self.state, *a);
        }
        self.counters.commands += 1;
        let event = self.record(
            TraceKind::Command,
            resolution.actions.clone(),
            None,
            StepEvents::default(),
            Some(source.name().into()),
            Some(intent.clone()),
        )?;
        let response = CommandResponse {
            seq: self.seq,
            intent,
            actions: resolution.actions,
            settings: resolution.document.settings,
            zones: self.zone_views(),
        };
        Ok((response, event))
    }

    pub fn resolve_zone(&self, zone: &ZoneRef) -> Result<usize, GatewayError> {
        let n = self.cfg.zone_count();
        match zone {
            ZoneRef::Index(i) if *i < n => Ok(*i),
            ZoneRef::Index(i) => Err(GatewayError::BadRequest(format!(
                "zone {i} out of range for {n} zones"
            ))),
            ZoneRef::Name(name) => {
                let wanted = name.trim().to_lowercase();
                self.cfg
                    .zones
                    .iter()
                    .position(|z| {
                        z.name.to_lowercase() == wanted
                            || z.synonyms.iter().any(|s| s.to_lowercase() == wanted)
                    })
                    .ok_or_else(|| GatewayError::BadRequest(format!("unknown zone '{name}'")))
            }
        }
    }

    /// Applies a manual setting, logs it and stores it as feedback with the
    /// override penalty.
    pub fn manual_override(
        &mut self,
        zone: &ZoneRef,
        brightness: u32,
        cct: Option<u32>,
    ) -> Result<(OverrideResponse, LiveEvent), GatewayError> {
        let z = self.resolve_zone(zone)?;
        if brightness > 100 {
            return Err(GatewayError::BadRequest(format!(
                "brightness {brightness} outside 0..=100"
            )));
        }
        let (lo, hi) = (CCT_BINS[0], CCT_BINS[CCT_BINS.len() - 1]);
        if let Some(k) = cct {
            if !(u32::from(lo)..=u32::from(hi)).contains(&k) {
                return Err(GatewayError::BadRequest(format!(
                    "cct {k} outside {lo}..={hi}"
                )));
            }
        }
        let kelvin = cct.map_or(f64::from(self.state.cct[z]), f64::from);
        let action = LightAction::set(z, f64::from(brightness), kelvin);
        let before = self.state.clone();
        apply(&mut self.state, action);
        let events = StepEvents {
            override_event: Some(OverrideEvent {
                zone: z,
                brightness: self.state.brightness[z],
            }),
            ..Default::default()
        };
        let reward = compute_reward(
            &before,
            action,
            &self.state,
            &events,
            &self.weights,
            &self.cfg,
        );
        let n = self.cfg.zone_count();
        self.agent.remember(Transition {
            state: encode_state(&before, &self.cfg)?,
            action: action.to_index(n)?,
            reward,
            next_state: encode_state(&self.state, &self.cfg)?,
            terminal: false,
            override_flag: true,
        });
        self.counters.overrides += 1;
        let event = self.record(
            TraceKind::Override,
            vec![action],
            Some(reward),
            events,
            Some("user".into()),
            None,
        )?;
        let response = OverrideResponse {
            seq: self.seq,
            zone: self.zone_views().swap_remove(z),
            action,
            reward,
        };
        Ok((response, event))
    }

    /// Switches mode; the change is logged even when the mode is unchanged.
    pub fn set_mode(&mut self, mode: Mode) -> Result<LiveEvent, GatewayError> {
        self.mode = mode;
        self.record(
            TraceKind::Mode,
            Vec::new(),
            None,
            StepEvents::default(),
            Some(mode.name().into()),
            None,
        )
    }

    pub fn save_checkpoint(&self, path: &std::path::Path) -> Result<(), GatewayError> {
        save_checkpoint(self.agent.online(), path)?;
        Ok(())
    }
}

fn apply(state: &mut HomeState, action: LightAction) {
    if let (Some(z), Some(b), Some(k)) = (action.zone(), action.brightness(), action.cct()) {
        state.brightness[z] = b;
        state.cct[z] = k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{encode_state, state_dim, AgentConfig};
    use crate::home::{episode_energy, num_actions, read_trace};

    fn home() -> HomeConfig {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/family_4zone.json");
        HomeConfig::load(path).unwrap()
    }

    fn live(mode: Mode, log: Option<&std::path::Path>) -> LiveLoop {
        let cfg = home();
        let n = cfg.zone_count();
        let agent = DqnAgent::new(
            AgentConfig {
                warmup: 16,
                batch_size: 8,
                ..Default::default()
            },
            state_dim(n),
            num_actions(n),
        )
        .unwrap();
        let trace = log.map(|p| TraceWriter::append(p).unwrap());
        LiveLoop::new(cfg, RewardWeights::default(), agent, mode, 11, trace).unwrap()
    }

    #[test]
    fn sequence_numbers_are_dense() {
        let mut l = live(Mode::Agent, None);
        let mut seqs = Vec::new();
        for _ in 0..5 {
            seqs.push(l.tick().unwrap().seq);
        }
        seqs.push(
            l.command("turn on the kitchen lights", CommandSource::Cli)
                .unwrap()
                .1
                .seq,
        );
        seqs.push(
            l.manual_override(&ZoneRef::Index(1), 80, None)
                .unwrap()
                .1
                .seq,
        );
        seqs.push(l.set_mode(Mode::Manual).unwrap().seq);
        assert_eq!(seqs, (1..=8).collect::<Vec<u64>>());
    }

    #[test]
    fn rejected_commands_do_not_consume_sequence_numbers() {
        let mut l = live(Mode::RuleBased, None);
        assert!(matches!(
            l.command("turn on the kitchen lights", CommandSource::Cli),
            Err(GatewayError::Conflict(_))
        ));
        l.set_mode(Mode::Agent).unwrap();
        assert!(matches!(
            l.command("do the thing", CommandSource::Cli),
            Err(GatewayError::NoParse(_))
        ));
        assert_eq!(l.seq(), 1);
        assert_eq!(l.metrics_document().rejected_commands, 2);
    }

    #[test]
    fn override_transition_carries_penalty() {
        let mut l = live(Mode::Manual, None);
        let before = l.home().clone();
        let (resp, ev) = l
            .manual_override(&ZoneRef::Name("Kitchen".into()), 74, Some(3000))
            .unwrap();
        assert_eq!(resp.zone.brightness, 70);
        assert_eq!(resp.zone.cct, 2700);
        assert!(ev.override_flag);
        let t = l.agent().replay().get(0).unwrap();
        assert!(t.override_flag);
        assert_eq!(t.state, encode_state(&before, &home()).unwrap());
        // Same settings without the override event: only the penalty differs.
        let mut unpenalized = l.home().clone();
        unpenalized.brightness[0] = 70;
        let plain = compute_reward(
            &before,
            resp.action,
            &unpenalized,
            &StepEvents::default(),
            &RewardWeights::default(),
            &home(),
        );
        assert!((resp.reward.r_comfort - (plain.r_comfort - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn override_validation() {
        let mut l = live(Mode::Manual, None);
        for (zone, b, k) in [
            (ZoneRef::Index(9), 50, None),
            (ZoneRef::Name("garage".into()), 50, None),
            (ZoneRef::Index(0), 101, None),
            (ZoneRef::Index(0), 50, Some(2000)),
            (ZoneRef::Index(0), 50, Some(7000)),
        ] {
            assert!(matches!(
                l.manual_override(&zone, b, k),
                Err(GatewayError::BadRequest(_))
            ));
        }
        assert_eq!(l.seq(), 0);
    }

    #[test]
    fn synonyms_resolve() {
        let l = live(Mode::Manual, None);
        assert_eq!(l.resolve_zone(&ZoneRef::Name("lounge".into())).unwrap(), 1);
    }

    #[test]
    fn energy_matches_logged_steps() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("t.jsonl");
        let mut l = live(Mode::RuleBased, Some(&log));
        for i in 0..60 {
            if i % 7 == 3 {
                l.manual_override(&ZoneRef::Index(i % 4), 30, None).unwrap();
            }
            l.tick().unwrap();
        }
        let records = read_trace(&log).unwrap();
        let steps: Vec<HomeState> = records
            .iter()
            .filter(|r| r.kind == TraceKind::Step)
            .map(|r| r.state.clone())
            .collect();
        assert_eq!(steps.len(), 60);
        assert_eq!(
            l.metrics_document().energy_kwh,
            episode_energy(&steps, &home())
        );
        let ts: Vec<u64> = records.iter().map(|r| r.t).collect();
        assert_eq!(ts, (1..=records.len() as u64).collect::<Vec<_>>());
    }

    #[test]
    fn agent_mode_learns_online() {
        let mut l = live(Mode::Agent, None);
        for _ in 0..40 {
            l.tick().unwrap();
        }
        assert_eq!(l.agent().replay().len(), 40);
        assert!(l.agent().updates() > 0);
        let mut frozen = live(Mode::Agent, None).with_learning(false);
        frozen.tick().unwrap();
        assert_eq!(frozen.agent().replay().len(), 0);
    }

    #[test]
    fn clock_renders_hours_and_minutes() {
        let mut l = live(Mode::Manual, None);
        for _ in 0..13 {
            l.tick().unwrap();
        }
        assert_eq!(l.state_document().clock, "01:05");
    }
}
