//! Pipeline configuration: one TOML file with a section per subsystem.
//!
//! Every field has a default, so an empty file (or no file) is a valid
//! configuration; the defaults are the pipeline-wide constants (3 s / 0.45
//! event filters, the [-90°, 90°] x [0.3 m, 6 m] stage, reflection order 2
//! at absorption 0.25, 10 s scenes with up to 3 events, masking threshold
//! 0.8 with a 0.3 s median window).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::MaskMode;
use crate::qa::MixConstraints;
use crate::render::RenderParams;
use crate::room::{MicArray, RoomSpec};
use crate::scene::{ComposeConfig, RenderConfig};
use crate::trajectory::{Point3, TrajectoryBounds};
use crate::trends::TrendThresholds;
use crate::wav::SampleFormat;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EventFilterConfig {
    pub min_duration_s: f64,
    pub min_quality_score: f64,
}

impl Default for EventFilterConfig {
    fn default() -> Self {
        EventFilterConfig {
            min_duration_s: 3.0,
            min_quality_score: 0.45,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MicConfig {
    pub listener_position_m: [f64; 3],
    pub spacing_m: f64,
}

impl Default for MicConfig {
    fn default() -> Self {
        MicConfig {
            listener_position_m: [5.0, 1.5, 1.5],
            spacing_m: 0.18,
        }
    }
}

impl MicConfig {
    pub fn mic_array(&self) -> MicArray {
        MicArray::centered(
            Point3::new(
                self.listener_position_m[0],
                self.listener_position_m[1],
                self.listener_position_m[2],
            ),
            self.spacing_m,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub duration_s: f64,
    pub overlap_budget: f64,
    pub p_static: f64,
    pub min_events: usize,
    pub max_events: usize,
    pub span_min_s: f64,
    pub span_max_s: f64,
    pub allow_combined_motion: bool,
    pub frame_rate_hz: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let d = ComposeConfig::default();
        SceneConfig {
            duration_s: d.duration_s,
            overlap_budget: d.overlap_budget,
            p_static: d.p_static,
            min_events: d.min_events,
            max_events: d.max_events,
            span_min_s: d.span_min_s,
            span_max_s: d.span_max_s,
            allow_combined_motion: d.allow_combined_motion,
            frame_rate_hz: d.frame_rate_hz,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    /// "pcm16" or "f32"
    pub wav_format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            wav_format: "pcm16".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    pub threshold: f64,
    pub median_window_s: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            threshold: 0.8,
            median_window_s: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub min_semantic_similarity: u8,
    pub min_factual_accuracy: u8,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            min_semantic_similarity: 4,
            min_factual_accuracy: 4,
        }
    }
}

/// Root configuration. One section per subsystem, all optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub room: RoomSpec,
    pub mics: MicConfig,
    pub events: EventFilterConfig,
    pub scene: SceneConfig,
    pub trajectory: TrajectoryBounds,
    pub render: RenderParamsConfig,
    pub trends: TrendThresholds,
    pub qa: MixConstraints,
    pub mask: MaskConfig,
    pub eval: EvalConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParamsConfig {
    pub hop_s: f64,
    pub xfade_s: f64,
    pub event_peak: f64,
    pub scene_peak: f64,
}

impl Default for RenderParamsConfig {
    fn default() -> Self {
        let r = RenderConfig::default();
        RenderParamsConfig {
            hop_s: r.hop_s,
            xfade_s: r.xfade_s,
            event_peak: r.event_peak,
            scene_peak: r.scene_peak,
        }
    }
}

impl PipelineConfig {
    /// Read a TOML config, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        self.mic_array().validate(&self.room)?;
        if !(0.0..=1.0).contains(&self.scene.overlap_budget) {
            return Err(Error::Config(
                "scene.overlap_budget must be in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.scene.p_static) {
            return Err(Error::Config("scene.p_static must be in [0, 1]".into()));
        }
        if self.scene.min_events == 0 || self.scene.min_events > self.scene.max_events {
            return Err(Error::Config(
                "require 1 <= scene.min_events <= scene.max_events".into(),
            ));
        }
        if self.scene.frame_rate_hz <= 0.0 {
            return Err(Error::Config("scene.frame_rate_hz must be > 0".into()));
        }
        if !(self.render.hop_s > self.render.xfade_s && self.render.xfade_s > 0.0) {
            return Err(Error::Config(
                "require render.hop_s > render.xfade_s > 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.events.min_quality_score) {
            return Err(Error::Config(
                "events.min_quality_score must be in [0, 1]".into(),
            ));
        }
        self.scored_mask_mode().validate()?;
        self.wav_format()?;
        Ok(())
    }

    pub fn mic_array(&self) -> MicArray {
        self.mics.mic_array()
    }

    pub fn compose_config(&self) -> ComposeConfig {
        ComposeConfig {
            duration_s: self.scene.duration_s,
            overlap_budget: self.scene.overlap_budget,
            p_static: self.scene.p_static,
            min_events: self.scene.min_events,
            max_events: self.scene.max_events,
            span_min_s: self.scene.span_min_s,
            span_max_s: self.scene.span_max_s,
            allow_combined_motion: self.scene.allow_combined_motion,
            frame_rate_hz: self.scene.frame_rate_hz,
            bounds: self.trajectory,
            room: self.room,
            mics: self.mic_array(),
            in_room_margin_m: 0.05,
        }
    }

    pub fn render_config(&self) -> RenderConfig {
        RenderConfig {
            hop_s: self.render.hop_s,
            xfade_s: self.render.xfade_s,
            event_peak: self.render.event_peak,
            scene_peak: self.render.scene_peak,
            normalize: true,
            tail_fade_s: 0.01,
        }
    }

    pub fn render_params(&self) -> RenderParams {
        RenderParams {
            hop_s: self.render.hop_s,
            xfade_s: self.render.xfade_s,
        }
    }

    pub fn scored_mask_mode(&self) -> MaskMode {
        MaskMode::Scored {
            threshold: self.mask.threshold,
            median_window_s: self.mask.median_window_s,
            frame_rate_hz: self.scene.frame_rate_hz,
        }
    }

    pub fn open_scoring(&self) -> crate::eval::OpenScoringConfig {
        crate::eval::OpenScoringConfig {
            min_semantic_similarity: self.eval.min_semantic_similarity,
            min_factual_accuracy: self.eval.min_factual_accuracy,
        }
    }

    pub fn wav_format(&self) -> Result<SampleFormat> {
        match self.output.wav_format.as_str() {
            "pcm16" => Ok(SampleFormat::Int16),
            "f32" => Ok(SampleFormat::Float32),
            other => Err(Error::Config(format!(
                "output.wav_format must be pcm16 or f32 (got {other})"
            ))),
        }
    }
}
