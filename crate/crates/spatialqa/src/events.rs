//! Labeled mono event ingestion and quality filtering.
//!
//! Events arrive as a CSV manifest with the header
//! `id,label,audio_path,duration_s,quality_score,onset_in_source_s,offset_in_source_s`.
//! The quality score is an externally computed audio-text similarity in
//! [0, 1]; it is ingested, never computed here. Both quality filters are
//! inclusive: an event at exactly the duration or score threshold is kept.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wav;

/// A labeled mono audio segment with provenance and quality score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventClip {
    pub id: String,
    pub label: String,
    pub audio_path: PathBuf,
    pub duration_s: f64,
    pub quality_score: f64,
    pub onset_in_source_s: f64,
    pub offset_in_source_s: f64,
}

/// Ordered collection of events plus the manifest they came from.
#[derive(Debug, Clone, Default)]
pub struct EventPool {
    events: Vec<EventClip>,
    source_manifest: PathBuf,
}

impl EventPool {
    pub fn from_events(events: Vec<EventClip>, source_manifest: impl Into<PathBuf>) -> Self {
        EventPool {
            events,
            source_manifest: source_manifest.into(),
        }
    }

    pub fn events(&self) -> &[EventClip] {
        &self.events
    }

    pub fn source_manifest(&self) -> &Path {
        &self.source_manifest
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EventClip> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn labels(&self) -> Vec<String> {
        self.events.iter().map(|e| e.label.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ManifestOptions {
    /// When false, a manifest without the `quality_score` column is accepted
    /// and every event scores 1.0 (so it passes any filter).
    pub require_score: bool,
    /// Open each referenced WAV header and reject non-mono audio.
    pub verify_audio: bool,
}

impl Default for ManifestOptions {
    fn default() -> Self {
        ManifestOptions {
            require_score: true,
            verify_audio: true,
        }
    }
}

const REQUIRED_COLUMNS: [&str; 6] = [
    "id",
    "label",
    "audio_path",
    "duration_s",
    "onset_in_source_s",
    "offset_in_source_s",
];

/// Load a manifest with default options (score column required, audio
/// headers verified mono).
pub fn load_manifest(path: impl AsRef<Path>) -> Result<EventPool> {
    load_manifest_with(path, &ManifestOptions::default())
}

pub fn load_manifest_with(path: impl AsRef<Path>, opts: &ManifestOptions) -> Result<EventPool> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::ManifestRow {
                row: 0,
                reason: e.to_string(),
            },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::ManifestRow {
            row: 0,
            reason: format!("unreadable header: {e}"),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut missing: Vec<&str> = REQUIRED_COLUMNS
        .iter()
        .copied()
        .filter(|c| col(c).is_none())
        .collect();
    let score_col = col("quality_score");
    if score_col.is_none() && opts.require_score {
        missing.push("quality_score");
    }
    if !missing.is_empty() {
        return Err(Error::ManifestRow {
            row: 0,
            reason: format!("missing required column(s): {}", missing.join(", ")),
        });
    }

    let manifest_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut events = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = record.map_err(|e| Error::ManifestRow {
            row,
            reason: e.to_string(),
        })?;
        let field = |name: &str| -> Result<&str> {
            col(name)
                .and_then(|ix| record.get(ix))
                .ok_or_else(|| Error::ManifestRow {
                    row,
                    reason: format!("missing field {name}"),
                })
        };
        let num = |name: &str| -> Result<f64> {
            field(name)?.parse::<f64>().map_err(|_| Error::ManifestRow {
                row,
                reason: format!(
                    "field {name} is not a number: {:?}",
                    field(name).unwrap_or("")
                ),
            })
        };

        let id = field("id")?.to_string();
        if id.is_empty() {
            return Err(Error::ManifestRow {
                row,
                reason: "empty id".into(),
            });
        }
        if !seen_ids.insert(id.clone()) {
            return Err(Error::DuplicateEventId { id });
        }
        let label = field("label")?.to_string();
        let raw_path = PathBuf::from(field("audio_path")?);
        let audio_path = if raw_path.is_relative() {
            manifest_dir.join(raw_path)
        } else {
            raw_path
        };
        let duration_s = num("duration_s")?;
        let onset = num("onset_in_source_s")?;
        let offset = num("offset_in_source_s")?;
        let quality_score = match score_col {
            Some(ix) => {
                let raw = record.get(ix).unwrap_or("");
                raw.parse::<f64>().map_err(|_| Error::ManifestRow {
                    row,
                    reason: format!("field quality_score is not a number: {raw:?}"),
                })?
            }
            None => 1.0,
        };

        if duration_s <= 0.0 {
            return Err(Error::ManifestRow {
                row,
                reason: format!("duration_s must be > 0 (got {duration_s})"),
            });
        }
        if !(0.0..=1.0).contains(&quality_score) {
            return Err(Error::ManifestRow {
                row,
                reason: format!("quality_score must be in [0, 1] (got {quality_score})"),
            });
        }
        if (duration_s - (offset - onset)).abs() > 1e-3 + 1e-9 {
            return Err(Error::ManifestRow {
                row,
                reason: format!(
                    "duration_s {duration_s} disagrees with offset-onset {} by more than 1 ms",
                    offset - onset
                ),
            });
        }
        if opts.verify_audio {
            let channels = wav::channel_count(&audio_path)?;
            if channels != 1 {
                return Err(Error::NonMonoAudio {
                    path: audio_path,
                    channels,
                });
            }
        }

        events.push(EventClip {
            id,
            label,
            audio_path,
            duration_s,
            quality_score,
            onset_in_source_s: onset,
            offset_in_source_s: offset,
        });
    }

    Ok(EventPool {
        events,
        source_manifest: path.to_path_buf(),
    })
}

/// Keep events with `duration_s >= min_duration_s` and
/// `quality_score >= min_score`; both thresholds inclusive, order preserved.
pub fn filter_events(pool: &EventPool, min_duration_s: f64, min_score: f64) -> EventPool {
    EventPool {
        events: pool
            .events
            .iter()
            .filter(|e| e.duration_s >= min_duration_s && e.quality_score >= min_score)
            .cloned()
            .collect(),
        source_manifest: pool.source_manifest.clone(),
    }
}

/// Uniform sample of `count` distinct events, deterministic per seed.
pub fn sample_events(pool: &EventPool, rng_seed: u64, count: usize) -> Result<Vec<EventClip>> {
    if count > pool.len() {
        return Err(Error::InvalidArg(format!(
            "cannot sample {count} events from a pool of {}",
            pool.len()
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let picks = rand::seq::index::sample(&mut rng, pool.len(), count);
    Ok(picks.iter().map(|ix| pool.events[ix].clone()).collect())
}

/// Serialize a pool back to manifest CSV (used by the filter subcommand).
pub fn write_manifest(pool: &EventPool, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(
        "id,label,audio_path,duration_s,quality_score,onset_in_source_s,offset_in_source_s\n",
    );
    for e in &pool.events {
        let quoted_label = if e.label.contains(',') || e.label.contains('"') {
            format!("\"{}\"", e.label.replace('"', "\"\""))
        } else {
            e.label.clone()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.id,
            quoted_label,
            e.audio_path.display(),
            e.duration_s,
            e.quality_score,
            e.onset_in_source_s,
            e.offset_in_source_s
        ));
    }
    crate::pipeline::atomic_write(path, out.as_bytes())
}
