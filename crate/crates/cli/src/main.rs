//! `adlmon`: train and evaluate models, replay scenarios, run the service and
//! talk to it.
//!
//! Failures print one JSON line `{"error": kind, "message": ...}` on stderr
//! and exit nonzero.

mod error;
mod offline;
mod online;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use adlmon_client::Client;
use adlmon_core::anomaly::TreeConfig;
use adlmon_core::artifacts::{Artifacts, FitOptions};
use adlmon_core::dialogue::{Role, SessionId};
use adlmon_core::hmm::DecodeMode;
use adlmon_core::pipeline::{Bus, Topic, DEFAULT_LAG};
use adlmon_core::simulator::{HouseholdSpec, Scenario};
use adlmon_service::{bind, serve, AppState};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{error_line, CliError};

#[derive(Debug, Parser)]
#[command(name = "adlmon", version, about = "Ambient activity monitoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Directory holding OrdonezA_Sensors.txt and OrdonezA_ADLs.txt.
    #[arg(long)]
    dataset: PathBuf,
    /// Sensor map TOML; defaults to the built-in twelve-sensor map.
    #[arg(long)]
    sensor_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, default_value_t = FitOptions::default().seed)]
    seed: u64,
    /// Days of synthetic segments added to the detector training set.
    #[arg(long, default_value_t = FitOptions::default().n_synth_days)]
    synth_days: i64,
    /// Tree depth limit; omit for unlimited.
    #[arg(long)]
    max_depth: Option<usize>,
}

impl FitArgs {
    fn options(&self, evaluate: bool) -> FitOptions {
        let tree = TreeConfig { max_depth: self.max_depth, ..TreeConfig::default() };
        FitOptions { seed: self.seed, n_synth_days: self.synth_days, tree, evaluate }
    }
}

#[derive(Debug, Args)]
struct ServerArgs {
    /// Directory with model.json and anomaly.json.
    #[arg(long, env = "ADLMON_ARTIFACTS")]
    artifacts: PathBuf,
    /// Event log directory; events stay in memory when omitted.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value = "Alice")]
    subject: String,
    /// Fixed-lag decoding window in slices.
    #[arg(long, default_value_t = DEFAULT_LAG)]
    lag: usize,
}

#[derive(Debug, Args)]
struct UrlArg {
    #[arg(long, env = "ADLMON_URL", default_value = "http://127.0.0.1:8080")]
    url: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoleArg {
    Caregiver,
    OlderAdult,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Caregiver => Role::Caregiver,
            RoleArg::OlderAdult => Role::OlderAdult,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Viterbi,
    Posterior,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic household in the two-file dataset format.
    SynthDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = HouseholdSpec::default().start)]
        start: NaiveDate,
        #[arg(long, default_value_t = HouseholdSpec::default().days)]
        days: usize,
        #[arg(long, default_value_t = HouseholdSpec::default().seed)]
        seed: u64,
    },
    /// Train the HMM and write model.json into the artifact directory.
    Train {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
        #[arg(long, env = "ADLMON_ARTIFACTS")]
        artifacts: PathBuf,
    },
    /// Fit the anomaly bundle against an existing model.json.
    FitAnomaly {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, env = "ADLMON_ARTIFACTS")]
        artifacts: PathBuf,
        /// Skip the leave-one-day-out detector evaluation.
        #[arg(long)]
        no_eval: bool,
    },
    /// Leave-one-day-out evaluation of the HMM and of the detectors.
    Eval {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
        #[arg(long, value_enum, default_value = "viterbi")]
        mode: ModeArg,
        /// Print the full reports as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Replay a scenario through the pipeline.
    Replay {
        scenario: PathBuf,
        #[command(flatten)]
        server: ServerArgs,
        /// Overrides the scenario's speed.
        #[arg(long)]
        speed: Option<f64>,
        /// Also serve the HTTP API on this address and keep running.
        #[arg(long)]
        serve: Option<SocketAddr>,
    },
    /// Run the HTTP service.
    Serve {
        #[command(flatten)]
        server: ServerArgs,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Service status.
    Health {
        #[command(flatten)]
        url: UrlArg,
    },
    /// Open a dialogue session.
    Session {
        #[command(flatten)]
        url: UrlArg,
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long)]
        name: Option<String>,
    },
    /// Send an utterance to a session.
    Say {
        #[command(flatten)]
        url: UrlArg,
        session: SessionId,
        text: String,
    },
    Transcript {
        #[command(flatten)]
        url: UrlArg,
        session: SessionId,
        #[arg(long)]
        jsonl: bool,
    },
    /// Follow-up requests, as seen by a caregiver session.
    Requests {
        #[command(flatten)]
        url: UrlArg,
        session: SessionId,
    },
    /// Stored events of one topic, one JSON object per line.
    Events {
        #[command(flatten)]
        url: UrlArg,
        topic: Topic,
        #[arg(long, default_value_t = 0)]
        from: u64,
        #[arg(long, default_value_t = 1000)]
        limit: usize,
    },
    /// Stream notifications as they arrive.
    Watch {
        #[command(flatten)]
        url: UrlArg,
        /// Resume after this notification sequence number.
        #[arg(long)]
        resume_after: Option<u64>,
        /// Stop after this many notifications.
        #[arg(long)]
        count: Option<usize>,
    },
}

fn load_artifacts(dir: &Path) -> Result<Arc<Artifacts>, CliError> {
    Ok(Arc::new(Artifacts::load(dir)?))
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

async fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::SynthDataset { out, start, days, seed } => offline::synth_dataset(&out, start, days, seed),
        Command::Train { data, smoothing, artifacts } => {
            let recording = offline::load_dataset(&data.dataset, data.sensor_map)?;
            offline::train(&recording, smoothing, &artifacts).map(drop)
        }
        Command::FitAnomaly { data, fit, artifacts, no_eval } => {
            let recording = offline::load_dataset(&data.dataset, data.sensor_map)?;
            offline::fit(&recording, &artifacts, &fit.options(!no_eval)).map(drop)
        }
        Command::Eval { data, fit, smoothing, mode, json } => {
            let recording = offline::load_dataset(&data.dataset, data.sensor_map)?;
            let mode = match mode {
                ModeArg::Viterbi => DecodeMode::Viterbi,
                ModeArg::Posterior => DecodeMode::Posterior,
            };
            let summary = offline::eval(&recording, smoothing, mode, &fit.options(true))?;
            if json {
                let value = serde_json::json!({ "hmm": summary.hmm, "detectors": summary.detectors });
                println!("{}", serde_json::to_string_pretty(&value).expect("serializes"));
            } else {
                print!("{}", offline::hmm_row(&summary.hmm));
                print!("{}", offline::detector_table(&summary.detectors));
            }
            Ok(())
        }
        Command::Replay { scenario, server, speed, serve: addr } => {
            let scenario = Scenario::load(&scenario)?;
            let speed = speed.unwrap_or(scenario.speed);
            let artifacts = load_artifacts(&server.artifacts)?;
            match addr {
                None => {
                    let run = offline::replay_local(
                        artifacts,
                        &scenario,
                        speed,
                        server.data_dir.as_deref(),
                        &server.subject,
                        server.lag,
                    )
                    .await?;
                    print!("{}", offline::replay_summary(&run));
                    Ok(())
                }
                Some(addr) => {
                    let bus = match &server.data_dir {
                        Some(dir) => Bus::open(dir)?,
                        None => Bus::in_memory(),
                    };
                    let (recording, manifest) = scenario.build(&artifacts.bundle.stats)?;
                    let state = AppState::new((*artifacts).clone(), bus, &server.subject, server.lag);
                    let listener = bind(addr).await?;
                    eprintln!("listening on http://{}", listener.local_addr().map_err(adlmon_service::ServiceError::from)?);
                    let replay = state.spawn_replay(recording, speed, manifest);
                    tokio::spawn(async move {
                        match replay.await {
                            Ok(Ok(report)) => eprintln!("replay finished: {} slices in {} ms", report.slices_sent, report.elapsed_ms),
                            Ok(Err(e)) => eprintln!("{}", error_line("scenario", &e.to_string())),
                            Err(e) => eprintln!("{}", error_line("internal", &e.to_string())),
                        }
                    });
                    Ok(serve(listener, state, shutdown_signal()).await?)
                }
            }
        }
        Command::Serve { server, addr } => {
            let artifacts = Artifacts::load(&server.artifacts)?;
            let bus = match &server.data_dir {
                Some(dir) => Bus::open(dir)?,
                None => Bus::in_memory(),
            };
            let state = AppState::new(artifacts, bus, &server.subject, server.lag);
            let listener = bind(addr).await?;
            eprintln!("listening on http://{}", listener.local_addr().map_err(adlmon_service::ServiceError::from)?);
            Ok(serve(listener, state, shutdown_signal()).await?)
        }
        Command::Health { url } => online::health(&Client::new(url.url)).await,
        Command::Session { url, role, name } => online::open_session(&Client::new(url.url), role.into(), name.as_deref()).await,
        Command::Say { url, session, text } => online::say(&Client::new(url.url), session, &text).await,
        Command::Transcript { url, session, jsonl } => online::transcript(&Client::new(url.url), session, jsonl).await,
        Command::Requests { url, session } => online::requests(&Client::new(url.url), session).await,
        Command::Events { url, topic, from, limit } => online::events(&Client::new(url.url), topic, from, limit).await,
        Command::Watch { url, resume_after, count } => online::watch(&Client::new(url.url), resume_after, count).await,
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    // die quietly when piped into `head`
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let message = rendered.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", message));
            return ExitCode::from(2);
        }
    };
    match run(cli.command).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
