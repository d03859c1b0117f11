use std::path::PathBuf;

use adlmon_client::ClientError;
use adlmon_core::artifacts::ArtifactError;
use adlmon_core::hmm::HmmError;
use adlmon_core::pipeline::PipelineError;
use adlmon_core::simulator::SimError;
use adlmon_service::ServiceError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Artifacts(#[from] ArtifactError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn kind(&self) -> String {
        match self {
            CliError::Artifacts(_) => "artifacts".into(),
            CliError::Hmm(_) => "model".into(),
            CliError::Pipeline(_) => "pipeline".into(),
            CliError::Sim(SimError::Io { .. }) => "io".into(),
            CliError::Sim(SimError::Ingest(_)) => "dataset".into(),
            CliError::Sim(_) => "scenario".into(),
            CliError::Service(_) => "service".into(),
            CliError::Client(ClientError::Api { error, .. }) => error.clone(),
            CliError::Client(ClientError::Transport(_)) => "transport".into(),
            CliError::Client(ClientError::Decode(_)) => "decode".into(),
            CliError::Io { .. } => "io".into(),
        }
    }
}

/// One JSON object on one line.
pub fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}
