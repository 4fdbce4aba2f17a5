//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {reason}")]
    Wav { path: PathBuf, reason: String },

    #[error("referenced audio is not mono: {path} has {channels} channels")]
    NonMonoAudio { path: PathBuf, channels: u16 },

    #[error("manifest row {row}: {reason}")]
    ManifestRow { row: usize, reason: String },

    #[error("duplicate event id in manifest: {id}")]
    DuplicateEventId { id: String },

    #[error("unknown event: {id}")]
    UnknownEvent { id: String },

    #[error("unknown event label: {label}")]
    UnknownLabel { label: String },

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("source position outside room: ({x}, {y}, {z})")]
    SourceOutsideRoom { x: f64, y: f64, z: f64 },

    #[error("source and microphone coincide")]
    SourceAtMic,

    #[error("scene {scene_id}: could not satisfy overlap budget after {attempts} attempts")]
    OverlapBudget { scene_id: String, attempts: usize },

    #[error("scene {scene_id}: trajectory left the room after {attempts} resampling attempts")]
    TrajectoryOutOfRoom { scene_id: String, attempts: usize },

    #[error("scene {scene_id}: {source}")]
    Scene {
        scene_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("span [{start_s}, {end_s}] outside clip bounds (duration {duration_s})")]
    SpanOutOfBounds {
        start_s: f64,
        end_s: f64,
        duration_s: f64,
    },

    #[error("empty framewise score vector")]
    EmptyScores,

    #[error("no trends supplied")]
    EmptyTrends,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid generated-QA reply:\n{}", .0.join("\n"))]
    LlmReplyInvalid(Vec<String>),

    #[error("invalid judge reply: {0}")]
    JudgeReplyInvalid(String),

    #[error("unknown qa id in predictions: {id}")]
    UnknownQaId { id: String },

    #[error("duplicate prediction for qa id {qa_id} under condition {condition}")]
    DuplicatePrediction { qa_id: String, condition: String },

    #[error("missing condition cell: {0}")]
    MissingConditionCell(String),

    #[error("score file {path}: {reason}")]
    ScoreFile { path: PathBuf, reason: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn wav(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Wav {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn in_scene(self, scene_id: impl Into<String>) -> Self {
        Error::Scene {
            scene_id: scene_id.into(),
            source: Box::new(self),
        }
    }
}
