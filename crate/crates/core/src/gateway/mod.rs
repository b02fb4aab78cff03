//! Webhook HTTP service running the live control loop.
//!
//! Request handlers never touch the simulator directly. Every mutation is a
//! message on one queue consumed by a single thread that owns the simulator,
//! the agent and the trajectory log; readers see immutable snapshots that the
//! owner swaps after each mutation, and subscribers receive one event per
//! mutation in sequence order.

mod config;
mod http;
mod live;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;
use tokio::sync::{broadcast, mpsc, oneshot, watch};

pub use config::{GatewayConfig, Mode, BIND_ENV, SECRET_ENV};
pub use http::{
    router, CheckpointRequest, CommandRequest, ErrorBody, ModeRequest, OverrideRequest,
    StepRequest, TOKEN_HEADER,
};
pub use live::{
    CommandResponse, CommandSource, LiveEvent, LiveLoop, MetricsDocument, OverrideResponse,
    StateDocument, ZoneRef, ZoneView,
};

use crate::agent::{load_checkpoint, state_dim, AgentError, DqnAgent};
use crate::home::{num_actions, HomeConfig, SimError, TraceWriter};
use crate::intent::{IntentError, ParseError};

/// Largest `count` accepted by one `POST /step`.
pub const MAX_STEPS_PER_REQUEST: u32 = 10_000;
const QUEUE_DEPTH: usize = 256;
const EVENT_BUFFER: usize = 1024;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("missing or invalid token")]
    Unauthorized,
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
    #[error("could not parse command: {0}")]
    NoParse(ParseError),
    #[error("gateway config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("gateway is shutting down")]
    Stopped,
}

/// State and metrics taken together after one mutation.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: StateDocument,
    pub metrics: MetricsDocument,
}

type Reply<T> = oneshot::Sender<Result<T, GatewayError>>;

enum Request {
    Tick,
    Step {
        count: u32,
        reply: Reply<StateDocument>,
    },
    Command {
        text: String,
        source: CommandSource,
        reply: Reply<CommandResponse>,
    },
    Override {
        zone: ZoneRef,
        brightness: u32,
        cct: Option<u32>,
        reply: Reply<OverrideResponse>,
    },
    Mode {
        mode: Mode,
        reply: Reply<StateDocument>,
    },
    Checkpoint {
        reply: Reply<PathBuf>,
    },
    Shutdown,
}

/// Cheap, cloneable access to a running gateway.
#[derive(Clone)]
pub struct GatewayHandle {
    tx: mpsc::Sender<Request>,
    snapshot: watch::Receiver<Arc<Snapshot>>,
    events: broadcast::Sender<LiveEvent>,
    secret: Arc<str>,
}

impl GatewayHandle {
    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.snapshot.borrow())
    }

    pub fn subscribe(&self) -> broadcast::Receiver<LiveEvent> {
        self.events.subscribe()
    }

    /// Constant-time comparison against the shared secret.
    pub fn token_ok(&self, token: &str) -> bool {
        let (a, b) = (self.secret.as_bytes(), token.as_bytes());
        a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
    }

    async fn call<T>(&self, make: impl FnOnce(Reply<T>) -> Request) -> Result<T, GatewayError> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(make(reply))
            .await
            .map_err(|_| GatewayError::Stopped)?;
        rx.await.map_err(|_| GatewayError::Stopped)?
    }

    pub async fn command(
        &self,
        text: String,
        source: CommandSource,
    ) -> Result<CommandResponse, GatewayError> {
        self.call(|reply| Request::Command {
            text,
            source,
            reply,
        })
        .await
    }

    pub async fn manual_override(
        &self,
        zone: ZoneRef,
        brightness: u32,
        cct: Option<u32>,
    ) -> Result<OverrideResponse, GatewayError> {
        self.call(|reply| Request::Override {
            zone,
            brightness,
            cct,
            reply,
        })
        .await
    }

    pub async fn step(&self, count: u32) -> Result<StateDocument, GatewayError> {
        if count > MAX_STEPS_PER_REQUEST {
            return Err(GatewayError::BadRequest(format!(
                "count {count} exceeds {MAX_STEPS_PER_REQUEST}"
            )));
        }
        self.call(|reply| Request::Step { count, reply }).await
    }

    pub async fn set_mode(&self, mode: Mode) -> Result<StateDocument, GatewayError> {
        self.call(|reply| Request::Mode { mode, reply }).await
    }

    pub async fn checkpoint(&self) -> Result<PathBuf, GatewayError> {
        self.call(|reply| Request::Checkpoint { reply }).await
    }
}

/// A running gateway: the state-owner thread plus an optional clock ticker.
pub struct Gateway {
    handle: GatewayHandle,
    owner: std::thread::JoinHandle<()>,
    ticker: Option<tokio::task::JoinHandle<()>>,
}

impl Gateway {
    /// Loads the home and agent and starts the owner thread. With a positive
    /// `time_scale` a ticker task is spawned, so a Tokio runtime must be
    /// current.
    pub fn start(config: &GatewayConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let home = HomeConfig::load(&config.home)?;
        Self::start_with_home(config, home)
    }

    pub fn start_with_home(config: &GatewayConfig, home: HomeConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let n = home.zone_count();
        let agent = match &config.checkpoint {
            Some(path) if path.exists() => {
                let net = load_checkpoint(path)?;
                if net.state_dim() != state_dim(n) || net.num_actions() != num_actions(n) {
                    return Err(GatewayError::Config(format!(
                        "checkpoint {} is for {}-d states and {} actions, home needs {} and {}",
                        path.display(),
                        net.state_dim(),
                        net.num_actions(),
                        state_dim(n),
                        num_actions(n)
                    )));
                }
                tracing::info!(path = %path.display(), "loaded checkpoint");
                DqnAgent::from_network(config.agent.clone(), net)?
            }
            _ => {
                tracing::warn!("no checkpoint loaded, starting from an untrained agent");
                DqnAgent::new(config.agent.clone(), state_dim(n), num_actions(n))?
            }
        };
        let trace = config
            .trajectory_log
            .as_ref()
            .map(TraceWriter::append)
            .transpose()?;
        let live = LiveLoop::new(home, config.weights, agent, config.mode, config.seed, trace)?
            .with_learning(config.learn);

        let (tx, rx) = mpsc::channel(QUEUE_DEPTH);
        let (snap_tx, snap_rx) = watch::channel(Arc::new(Snapshot {
            state: live.state_document(),
            metrics: live.metrics_document(),
        }));
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        let owner = {
            let events = events.clone();
            let checkpoint = config.checkpoint.clone();
            std::thread::Builder::new()
                .name("bitrl-live".into())
                .spawn(move || own(live, rx, snap_tx, events, checkpoint))?
        };
        let handle = GatewayHandle {
            tx,
            snapshot: snap_rx,
            events,
            secret: config.secret.as_str().into(),
        };
        let ticker = (config.time_scale > 0.0).then(|| {
            let tx = handle.tx.clone();
            let period = Duration::from_secs_f64(1.0 / config.time_scale);
            tokio::spawn(async move {
                let mut interval = tokio::time::interval(period);
                interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
                interval.tick().await;
                loop {
                    interval.tick().await;
                    if tx.send(Request::Tick).await.is_err() {
                        break;
                    }
                }
            })
        });
        Ok(Self {
            handle,
            owner,
            ticker,
        })
    }

    pub fn handle(&self) -> GatewayHandle {
        self.handle.clone()
    }

    pub fn router(&self) -> axum::Router {
        router(self.handle.clone())
    }

    /// Stops the ticker, lets requests already queued finish, then stops the
    /// owner thread. Handles still held elsewhere get [`GatewayError::Stopped`].
    pub async fn shutdown(self) {
        if let Some(t) = self.ticker {
            t.abort();
            let _ = t.await;
        }
        let _ = self.handle.tx.send(Request::Shutdown).await;
        drop(self.handle);
        let _ = tokio::task::spawn_blocking(move || self.owner.join()).await;
    }
}

fn own(
    mut live: LiveLoop,
    mut rx: mpsc::Receiver<Request>,
    snapshot: watch::Sender<Arc<Snapshot>>,
    events: broadcast::Sender<LiveEvent>,
    checkpoint: Option<PathBuf>,
) {
    fn answer<T: Send + 'static>(
        reply: Reply<T>,
        result: Result<T, GatewayError>,
    ) -> Box<dyn FnOnce()> {
        Box::new(move || {
            let _ = reply.send(result);
        })
    }

    while let Some(req) = rx.blocking_recv() {
        let mut emitted = Vec::new();
        let deliver = match req {
            Request::Shutdown => break,
            Request::Tick => {
                match live.tick() {
                    Ok(ev) => emitted.push(ev),
                    Err(e) => tracing::error!(error = %e, "simulator step failed"),
                }
                Box::new(|| ()) as Box<dyn FnOnce()>
            }
            Request::Step { count, reply } => {
                let mut result = Ok(());
                for _ in 0..count {
                    match live.tick() {
                        Ok(ev) => emitted.push(ev),
                        Err(e) => {
                            result = Err(e);
                            break;
                        }
                    }
                }
                answer(reply, result.map(|()| live.state_document()))
            }
            Request::Command {
                text,
                source,
                reply,
            } => {
                let result = live.command(&text, source).map(|(resp, ev)| {
                    emitted.push(ev);
                    resp
                });
                answer(reply, result)
            }
            Request::Override {
                zone,
                brightness,
                cct,
                reply,
            } => {
                let result = live
                    .manual_override(&zone, brightness, cct)
                    .map(|(resp, ev)| {
                        emitted.push(ev);
                        resp
                    });
                answer(reply, result)
            }
            Request::Mode { mode, reply } => {
                let from = live.mode();
                let result = live.set_mode(mode).map(|ev| {
                    tracing::info!(from = from.name(), to = mode.name(), "mode change");
                    emitted.push(ev);
                    live.state_document()
                });
                answer(reply, result)
            }
            Request::Checkpoint { reply } => {
                let result = match &checkpoint {
                    Some(path) => live.save_checkpoint(path).map(|()| path.clone()),
                    None => Err(GatewayError::Conflict(
                        "no checkpoint path configured".into(),
                    )),
                };
                answer(reply, result)
            }
        };
        // Snapshot first, so a client that got its reply never reads older state.
        publish(&live, &snapshot, &events, emitted);
        deliver();
    }
}

fn publish(
    live: &LiveLoop,
    snapshot: &watch::Sender<Arc<Snapshot>>,
    events: &broadcast::Sender<LiveEvent>,
    emitted: Vec<LiveEvent>,
) {
    if emitted.is_empty() {
        return;
    }
    snapshot.send_replace(Arc::new(Snapshot {
        state: live.state_document(),
        metrics: live.metrics_document(),
    }));
    for ev in emitted {
        let _ = events.send(ev);
    }
}

/// Binds `config.bind` and serves until ctrl-c.
pub async fn serve(config: GatewayConfig) -> Result<(), GatewayError> {
    let gateway = Gateway::start(&config)?;
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, mode = config.mode.name(), "gateway listening");
    axum::serve(listener, gateway.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    gateway.shutdown().await;
    Ok(())
}
