use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::agent::{AgentConfig, RewardWeights};

/// Environment variable overriding [`GatewayConfig::bind`].
pub const BIND_ENV: &str = "BITRL_BIND";
/// Environment variable overriding [`GatewayConfig::secret`].
pub const SECRET_ENV: &str = "BITRL_SECRET";

/// Who drives the lights between commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Greedy DQN policy; commands and overrides are accepted.
    #[default]
    Agent,
    /// The rule-based baseline; commands are rejected with 409.
    RuleBased,
    /// No automatic actions; only commands and overrides change the lights.
    Manual,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Agent => "agent",
            Mode::RuleBased => "rule_based",
            Mode::Manual => "manual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub bind: String,
    /// Shared secret expected in the `x-bitrl-token` header.
    pub secret: String,
    /// Home description; relative paths resolve against the config file.
    pub home: PathBuf,
    pub mode: Mode,
    /// Simulator steps per wall-clock second; `0` disables the ticker.
    pub time_scale: f64,
    pub trajectory_log: Option<PathBuf>,
    /// Loaded at startup when present and written by `POST /checkpoint`.
    pub checkpoint: Option<PathBuf>,
    pub agent: AgentConfig,
    pub weights: RewardWeights,
    /// Seed of the live simulator.
    pub seed: u64,
    /// Train the agent online from its own steps in agent mode.
    pub learn: bool,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            secret: String::new(),
            home: PathBuf::from("family_4zone.json"),
            mode: Mode::Agent,
            time_scale: 1.0,
            trajectory_log: None,
            checkpoint: None,
            agent: AgentConfig::default(),
            weights: RewardWeights::default(),
            seed: 0,
            learn: true,
        }
    }
}

impl GatewayConfig {
    pub fn from_json(text: &str) -> Result<Self, GatewayError> {
        serde_json::from_str(text).map_err(|e| GatewayError::Config(e.to_string()))
    }

    /// Reads a config file, resolves its relative paths against the file's
    /// directory and applies the environment overrides.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply_env(|k| std::env::var(k).ok());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.home);
        if let Some(p) = self.trajectory_log.as_mut() {
            fix(p);
        }
        if let Some(p) = self.checkpoint.as_mut() {
            fix(p);
        }
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(bind) = var(BIND_ENV).filter(|v| !v.is_empty()) {
            self.bind = bind;
        }
        if let Some(secret) = var(SECRET_ENV).filter(|v| !v.is_empty()) {
            self.secret = secret;
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.secret.is_empty() {
            return Err(GatewayError::Config(format!(
                "no shared secret: set \"secret\" or {SECRET_ENV}"
            )));
        }
        if !self.time_scale.is_finite() || self.time_scale < 0.0 {
            return Err(GatewayError::Config(format!(
                "time_scale must be finite and >= 0, got {}",
                self.time_scale
            )));
        }
        if !self.weights.is_valid() {
            return Err(GatewayError::Config(
                "reward weights must be finite and >= 0".into(),
            ));
        }
        self.agent
            .validate()
            .map_err(|e| GatewayError::Config(e.to_string()))
    }
}
