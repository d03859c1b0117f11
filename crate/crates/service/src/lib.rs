//! HTTP service over the monitoring pipeline.
//!
//! | route | |
//! |---|---|
//! | `GET /health` | artifact digests and event counts |
//! | `GET /notifications` | server-sent notification stream (`Last-Event-ID` or `?from=` to resume) |
//! | `GET /events?topic=&from=&limit=` | stored events of one topic |
//! | `POST /sessions` | open a caregiver or older-adult dialogue session |
//! | `POST /sessions/{id}/messages` | send an utterance, get the replies |
//! | `GET /sessions/{id}/transcript` | full transcript (`?format=jsonl` for line-delimited) |
//! | `GET /requests?session=` | follow-up requests, caregiver sessions only |

mod error;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use adlmon_core::artifacts::{ArtifactError, Artifacts};
use adlmon_core::dialogue::DialogueEngine;
use adlmon_core::ingest::Recording;
use adlmon_core::pipeline::{Bus, DialogueHub, Pipeline, PipelineError, DEFAULT_LAG};
use adlmon_core::simulator::{replay, InjectionRecord, ReplayReport, SimError};
use axum::Router;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub use error::ApiError;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Artifacts(#[from] ArtifactError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Artifact directory; `None` falls back to `$ADLMON_ARTIFACTS`.
    pub artifacts: Option<PathBuf>,
    /// Event log directory; `None` keeps events in memory only.
    pub data_dir: Option<PathBuf>,
    /// Name of the monitored older adult.
    pub subject: String,
    pub lag: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { artifacts: None, data_dir: None, subject: "Alice".into(), lag: DEFAULT_LAG }
    }
}

/// Everything the handlers share.
#[derive(Debug, Clone)]
pub struct AppState {
    pub artifacts: Arc<Artifacts>,
    pub hub: Arc<DialogueHub>,
    pub lag: usize,
    bundle_digest: Arc<str>,
}

impl AppState {
    pub fn new(artifacts: Artifacts, bus: Bus, subject: &str, lag: usize) -> Self {
        let bundle_digest = artifacts.bundle_digest().into();
        AppState {
            artifacts: Arc::new(artifacts),
            hub: Arc::new(DialogueHub::new(DialogueEngine::new(subject), bus)),
            lag,
            bundle_digest,
        }
    }

    /// Loads artifacts and opens the event log named by `config`.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let artifacts = Artifacts::load_from(config.artifacts.as_deref())?;
        let bus = match &config.data_dir {
            Some(dir) => Bus::open(dir)?,
            None => Bus::in_memory(),
        };
        Ok(Self::new(artifacts, bus, &config.subject, config.lag))
    }

    pub fn bus(&self) -> &Bus {
        self.hub.bus()
    }

    /// Drives a pipeline over `recording` in the background.
    pub fn spawn_replay(
        &self,
        recording: Recording,
        speed: f64,
        manifest: Vec<InjectionRecord>,
    ) -> JoinHandle<Result<ReplayReport, SimError>> {
        let mut pipeline = Pipeline::new(Arc::clone(&self.artifacts), Arc::clone(&self.hub), self.lag);
        tokio::spawn(async move { replay(&recording, speed, manifest, &mut pipeline).await })
    }
}

pub fn router(state: AppState) -> Router {
    routes::router(state)
}

/// Binds `addr`; port 0 picks a free port.
pub async fn bind(addr: SocketAddr) -> Result<TcpListener, ServiceError> {
    TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr, source })
}

/// Serves until the future resolves or the listener fails.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}
