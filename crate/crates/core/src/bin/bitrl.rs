use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bitrl::agent::{
    evaluate, load_checkpoint, save_checkpoint, state_dim, train, train_with_selection,
    AgentConfig, DqnAgent, EvalSummary, GreedyController, HomeEnv, RewardWeights,
    RuleBasedController, METRICS_CSV_HEADER,
};
use bitrl::bench::{run_bench, BenchConfig, Dims, Kernel};
use bitrl::gateway::{self, GatewayConfig};
use bitrl::home::{initial_state, num_actions, HomeConfig, SimRng};
use bitrl::intent::{
    eval_classifier, generate_corpus, intent_to_config, label_distribution, parse_command,
    train_intent_classifier, write_corpus, Lexicon,
};
use clap::{Parser, Subcommand};
use serde::Serialize;

const DEFAULT_HOME: &str = include_str!("../../configs/family_4zone.json");

#[derive(Parser)]
#[command(
    name = "bitrl",
    version,
    about = "Ternary DQN lighting control for a simulated smart home"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a DQN agent and write a checkpoint.
    Train {
        /// Home description (JSON); the bundled four-zone family home if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Agent hyperparameters (JSON); defaults otherwise.
        #[arg(long)]
        agent_config: Option<PathBuf>,
        #[arg(long, default_value_t = 300)]
        episodes: usize,
        /// Overrides the agent seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Seed of the training simulator.
        #[arg(long, default_value_t = 42)]
        env_seed: u64,
        /// Reward weights `energy,comfort,circadian`.
        #[arg(long)]
        weights: Option<String>,
        /// Keep the best snapshot, validating the greedy policy every N episodes.
        #[arg(long)]
        validate_every: Option<usize>,
        /// Validation days as `START..END` seeds (END exclusive).
        #[arg(long, default_value = "500..505")]
        validation_seeds: String,
        #[arg(long)]
        out: PathBuf,
        /// Per-episode metrics CSV.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Compare a checkpoint with the rule-based baseline on paired days.
    Eval {
        /// Checkpoint; an untrained network seeded by `--seed` if omitted.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of simulated days.
        #[arg(long, default_value_t = 20)]
        episodes: u64,
        /// First day seed; days use `seed..seed+episodes`.
        #[arg(long, default_value_t = 1_000_000)]
        seed: u64,
        #[arg(long)]
        weights: Option<String>,
        /// JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the matrix-vector kernels and write a JSON report.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "128x128,256x384")]
        dims: Vec<String>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "float,ternary,lut,twobit"
        )]
        kernels: Vec<String>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 20)]
        warmup: usize,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also train the intent classifier and record its held-out accuracy.
        #[arg(long)]
        accuracy: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic command corpus as JSON lines.
    GenCorpus {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse one command and print the intent and settings as JSON.
    Parse {
        #[arg(long)]
        text: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the webhook gateway.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_home(path: Option<&Path>) -> Result<HomeConfig, Failure> {
    match path {
        Some(p) => HomeConfig::load(p).map_err(config_err),
        None => HomeConfig::from_json(DEFAULT_HOME).map_err(config_err),
    }
}

fn parse_weights(text: Option<&str>) -> Result<RewardWeights, Failure> {
    let Some(text) = text else {
        return Ok(RewardWeights::default());
    };
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Config(format!("weights '{text}': {e}")))?;
    match parts[..] {
        [e, c, z] => RewardWeights::new(e, c, z)
            .ok_or_else(|| Failure::Config(format!("weights '{text}' must be finite and >= 0"))),
        _ => Err(Failure::Config(format!(
            "weights '{text}' need three values"
        ))),
    }
}

fn parse_seed_range(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Config(format!("seed range '{text}' (expected START..END)"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let (a, b): (u64, u64) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if b <= a {
        return Err(bad());
    }
    Ok((a..b).collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(runtime_err)?;
    writeln!(w).and_then(|()| w.flush()).map_err(runtime_err)
}

#[derive(Serialize)]
struct EvalReport {
    seeds: Vec<u64>,
    agent: EvalSummary,
    baseline: EvalSummary,
    /// `1 − agent / baseline` energy.
    energy_saving: f64,
    comfort_delta: f64,
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Train {
            config,
            agent_config,
            episodes,
            seed,
            env_seed,
            weights,
            validate_every,
            validation_seeds,
            out,
            metrics,
        } => {
            let home = load_home(config.as_deref())?;
            let weights = parse_weights(weights.as_deref())?;
            let mut cfg = match agent_config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
                    serde_json::from_str::<AgentConfig>(&text)
                        .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
                }
                None => AgentConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let n = home.zone_count();
            let mut agent = DqnAgent::new(cfg, state_dim(n), num_actions(n)).map_err(config_err)?;
            let mut env = HomeEnv::new(home, weights, env_seed);
            let (network, episode_metrics) = match validate_every {
                Some(every) => {
                    let seeds = parse_seed_range(&validation_seeds)?;
                    let outcome =
                        train_with_selection(&mut agent, &mut env, episodes, every, &seeds)
                            .map_err(runtime_err)?;
                    tracing::info!(
                        episode = outcome.episode,
                        score = outcome.score,
                        "selected snapshot"
                    );
                    (outcome.network, outcome.metrics)
                }
                None => {
                    let m = train(&mut agent, &mut env, episodes).map_err(runtime_err)?;
                    (agent.online().clone(), m)
                }
            };
            save_checkpoint(&network, &out).map_err(runtime_err)?;
            if let Some(path) = metrics {
                let file = File::create(&path)
                    .map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                writeln!(w, "{METRICS_CSV_HEADER}").map_err(runtime_err)?;
                for m in &episode_metrics {
                    writeln!(w, "{}", m.csv_row()).map_err(runtime_err)?;
                }
                w.flush().map_err(runtime_err)?;
            }
            tracing::info!(episodes, out = %out.display(), "checkpoint written");
            Ok(())
        }
        Command::Eval {
            ckpt,
            config,
            episodes,
            seed,
            weights,
            out,
        } => {
            let home = load_home(config.as_deref())?;
            let weights = parse_weights(weights.as_deref())?;
            let n = home.zone_count();
            let network = match ckpt {
                Some(p) => {
                    let net = load_checkpoint(&p).map_err(config_err)?;
                    if net.state_dim() != state_dim(n) || net.num_actions() != num_actions(n) {
                        return Err(Failure::Config(format!(
                            "{} does not fit a {n}-zone home",
                            p.display()
                        )));
                    }
                    net
                }
                None => {
                    let cfg = AgentConfig {
                        seed,
                        ..Default::default()
                    };
                    DqnAgent::new(cfg, state_dim(n), num_actions(n))
                        .map_err(runtime_err)?
                        .online()
                        .clone()
                }
            };
            let seeds: Vec<u64> = (seed..seed.saturating_add(episodes)).collect();
            let agent = evaluate(
                &mut GreedyController { network: &network },
                &home,
                &weights,
                &seeds,
                |_| {},
            )
            .map_err(runtime_err)?;
            let baseline = evaluate(&mut RuleBasedController, &home, &weights, &seeds, |_| {})
                .map_err(runtime_err)?;
            let report = EvalReport {
                energy_saving: if baseline.energy_kwh > 0.0 {
                    1.0 - agent.energy_kwh / baseline.energy_kwh
                } else {
                    0.0
                },
                comfort_delta: agent.comfort_mean - baseline.comfort_mean,
                seeds,
                agent,
                baseline,
            };
            println!(
                "{:<12} {:>12} {:>10} {:>10} {:>12}",
                "controller", "kWh/day", "comfort", "overrides", "reward/step"
            );
            for s in [&report.agent, &report.baseline] {
                println!(
                    "{:<12} {:>12.4} {:>10.4} {:>10} {:>12.4}",
                    s.controller, s.energy_kwh_per_day, s.comfort_mean, s.overrides, s.mean_reward
                );
            }
            println!(
                "energy saving vs rule-based: {:.1}%",
                100.0 * report.energy_saving
            );
            if let Some(p) = out {
                write_json(&p, &report)?;
            }
            Ok(())
        }
        Command::Bench {
            dims,
            kernels,
            threads,
            warmup,
            iterations,
            seed,
            accuracy,
            out,
        } => {
            let cfg = BenchConfig {
                dims: dims
                    .iter()
                    .map(|d| d.parse::<Dims>())
                    .collect::<Result<_, _>>()
                    .map_err(config_err)?,
                kernels: kernels
                    .iter()
                    .map(|k| k.parse::<Kernel>())
                    .collect::<Result<_, _>>()
                    .map_err(config_err)?,
                warmup,
                iterations,
                threads,
                seed,
            };
            cfg.validate().map_err(config_err)?;
            let mut report = run_bench(&cfg).map_err(runtime_err)?;
            if accuracy {
                let home = HomeConfig::from_json(DEFAULT_HOME).map_err(config_err)?;
                let lexicon = Lexicon::from_config(&home);
                let corpus = generate_corpus(12_000, &lexicon, seed);
                let (train_set, held_out) = corpus.split_at(10_000);
                let model = train_intent_classifier(train_set, seed).map_err(runtime_err)?;
                let acc = eval_classifier(&model, held_out)
                    .map_err(runtime_err)?
                    .accuracy;
                report = report.with_intent_accuracy(acc);
            }
            report.validate().map_err(runtime_err)?;
            print!("{}", report.to_table());
            write_json(&out, &report)
        }
        Command::GenCorpus {
            config,
            count,
            seed,
            out,
        } => {
            let home = load_home(config.as_deref())?;
            let corpus = generate_corpus(count, &Lexicon::from_config(&home), seed);
            let file =
                File::create(&out).map_err(|e| runtime_err(format!("{}: {e}", out.display())))?;
            let mut w = BufWriter::new(file);
            write_corpus(&mut w, &corpus).map_err(runtime_err)?;
            w.flush().map_err(runtime_err)?;
            for (kind, n) in label_distribution(&corpus) {
                tracing::info!(kind, n, "label count");
            }
            Ok(())
        }
        Command::Parse { text, config } => {
            let home = load_home(config.as_deref())?;
            let lexicon = Lexicon::from_config(&home);
            match parse_command(&text, &lexicon) {
                Ok(intent) => {
                    let state = initial_state(&home, &mut SimRng::new(0));
                    let resolution =
                        intent_to_config(&intent, &state, &home).map_err(runtime_err)?;
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&resolution.document).map_err(runtime_err)?
                    );
                    Ok(())
                }
                Err(e) => {
                    println!("{}", serde_json::to_string_pretty(&e).map_err(runtime_err)?);
                    Err(Failure::Runtime(format!(
                        "could not parse command: {e} (slot: {})",
                        e.slot()
                    )))
                }
            }
        }
        Command::Serve { config } => {
            let cfg = GatewayConfig::load(&config).map_err(config_err)?;
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(runtime_err)?;
            rt.block_on(gateway::serve(cfg)).map_err(|e| match e {
                gateway::GatewayError::Config(_)
                | gateway::GatewayError::Sim(_)
                | gateway::GatewayError::Agent(_) => config_err(e),
                other => runtime_err(other),
            })
        }
    }
}
