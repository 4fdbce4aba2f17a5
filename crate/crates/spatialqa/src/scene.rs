//! Scene composition: events + trajectories + onsets under an overlap budget,
//! realized into a stereo mix with full ground-truth metadata.
//!
//! Composition is deterministic per seed. Scene workers derive their seeds
//! from a master seed with [`derive_seed`], so batch results do not depend on
//! completion order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{EventClip, EventPool};
use crate::render::{render_moving_source, resample_mono, StereoBuffer};
use crate::room::{MicArray, RoomSpec};
use crate::trajectory::{
    make_trajectory_with, polar_to_cartesian, sample_positions, Trajectory, TrajectoryBounds,
    TrajectoryKind, DYNAMIC_KINDS,
};
use crate::wav;

/// One event placed in a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub event_id: String,
    pub label: String,
    pub onset_s: f64,
    pub span_s: f64,
    pub trajectory: Trajectory,
}

/// A fully specified scene, ready to render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub scene_id: String,
    pub duration_s: f64,
    pub overlap_budget: f64,
    pub placements: Vec<Placement>,
}

/// Ground-truth tracks for one event at the trajectory frame rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrack {
    pub event_id: String,
    pub label: String,
    pub onset_s: f64,
    pub offset_s: f64,
    pub trajectory_kind: TrajectoryKind,
    pub azimuth_deg: Vec<f64>,
    pub distance_m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub first: String,
    pub second: String,
    pub ratio: f64,
}

/// Per-scene ground truth serialized as one JSON document per scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    pub scene_id: String,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub frame_rate_hz: f64,
    pub events: Vec<EventTrack>,
    pub overlap_flag: bool,
    pub pairwise_overlaps: Vec<PairOverlap>,
}

impl SceneMetadata {
    pub fn labels(&self) -> Vec<String> {
        self.events.iter().map(|e| e.label.clone()).collect()
    }

    pub fn event_by_label(&self, label: &str) -> Option<&EventTrack> {
        self.events.iter().find(|e| e.label == label)
    }
}

/// Composition knobs. Defaults follow the pipeline-wide constants: 10 s
/// scenes, up to 3 events, 30% overlap budget, a quarter of sources static.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ComposeConfig {
    pub duration_s: f64,
    pub overlap_budget: f64,
    pub p_static: f64,
    pub min_events: usize,
    pub max_events: usize,
    pub span_min_s: f64,
    pub span_max_s: f64,
    /// Opt-in combined lateral+radial motion kind.
    pub allow_combined_motion: bool,
    pub frame_rate_hz: f64,
    pub bounds: TrajectoryBounds,
    pub room: RoomSpec,
    pub mics: MicArray,
    /// Clearance kept between any sampled position and the walls.
    pub in_room_margin_m: f64,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig {
            duration_s: 10.0,
            overlap_budget: 0.3,
            p_static: 0.25,
            min_events: 1,
            max_events: 3,
            span_min_s: 3.0,
            span_max_s: 8.0,
            allow_combined_motion: false,
            frame_rate_hz: 10.0,
            bounds: TrajectoryBounds::default(),
            room: RoomSpec::default(),
            mics: MicArray::default(),
            in_room_margin_m: 0.05,
        }
    }
}

/// Rendering knobs for scene realization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub hop_s: f64,
    pub xfade_s: f64,
    /// Per-event peak before spatialization.
    pub event_peak: f64,
    /// Final scene peak.
    pub scene_peak: f64,
    /// Disable both normalization stages (used by linearity tests).
    pub normalize: bool,
    /// Fade applied to the last samples when the reverb tail is truncated at
    /// the scene boundary.
    pub tail_fade_s: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            hop_s: 0.1,
            xfade_s: 0.02,
            event_peak: 0.5,
            scene_peak: 0.9,
            normalize: true,
            tail_fade_s: 0.01,
        }
    }
}

/// Stable per-scene seed derivation (splitmix64 over master ^ index).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Shared active time divided by the duration of the shorter clip.
pub fn overlap_ratio(onset_a: f64, offset_a: f64, onset_b: f64, offset_b: f64) -> f64 {
    let shared = (offset_a.min(offset_b) - onset_a.max(onset_b)).max(0.0);
    let shorter = (offset_a - onset_a).min(offset_b - onset_b);
    if shorter <= 0.0 {
        0.0
    } else {
        shared / shorter
    }
}

const ONSET_ATTEMPTS: usize = 1000;
const TRAJECTORY_ATTEMPTS: usize = 100;

// Uniform draw from [0, hi] minus the union of open intervals; None when the
// complement has zero measure.
fn draw_from_complement(
    rng: &mut ChaCha12Rng,
    hi: f64,
    mut forbidden: Vec<(f64, f64)>,
) -> Option<f64> {
    forbidden.retain(|&(a, b)| b > a && b > 0.0 && a < hi);
    forbidden.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut allowed: Vec<(f64, f64)> = Vec::new();
    let mut cursor = 0.0f64;
    for &(a, b) in &forbidden {
        let a = a.max(0.0);
        let b = b.min(hi);
        if a > cursor {
            allowed.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if cursor < hi || (allowed.is_empty() && cursor == 0.0 && hi == 0.0) {
        allowed.push((cursor, hi));
    }
    let total: f64 = allowed.iter().map(|(a, b)| b - a).sum();
    if allowed.is_empty() {
        return None;
    }
    if total <= 0.0 {
        // hi == 0 with nothing forbidden: the only onset is 0
        return if forbidden.is_empty() {
            Some(0.0)
        } else {
            None
        };
    }
    let mut x = rng.random_range(0.0..total);
    for &(a, b) in &allowed {
        let w = b - a;
        if x <= w {
            return Some(a + x);
        }
        x -= w;
    }
    allowed.last().map(|&(_, b)| b)
}

fn trajectory_stays_inside(traj: &Trajectory, cfg: &ComposeConfig) -> bool {
    let origin = cfg.mics.center();
    sample_positions(traj, cfg.frame_rate_hz).iter().all(|p| {
        cfg.room
            .contains(&polar_to_cartesian(p, &origin), cfg.in_room_margin_m)
    })
}

/// Select 1-3 events with distinct labels, give each a trajectory and an
/// onset, and enforce the pairwise overlap budget by rejection sampling.
pub fn compose_scene(
    pool: &EventPool,
    scene_id: impl Into<String>,
    rng_seed: u64,
    cfg: &ComposeConfig,
) -> Result<SceneSpec> {
    let scene_id = scene_id.into();
    if pool.is_empty() {
        return Err(Error::InvalidArg("event pool is empty".into()));
    }
    if cfg.min_events == 0 || cfg.min_events > cfg.max_events {
        return Err(Error::Config(
            "require 1 <= min_events <= max_events".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);

    // Draw events label-distinct so questions can name sources unambiguously.
    let mut order: Vec<usize> = (0..pool.len()).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut chosen: Vec<&EventClip> = Vec::new();
    let mut labels_seen: Vec<&str> = Vec::new();
    let distinct_labels = {
        let mut ls: Vec<&str> = pool.events().iter().map(|e| e.label.as_str()).collect();
        ls.sort_unstable();
        ls.dedup();
        ls.len()
    };
    let hi = cfg.max_events.min(3).min(distinct_labels);
    let lo = cfg.min_events.min(hi);
    let n_events = if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    };
    for ix in order {
        let e = &pool.events()[ix];
        if labels_seen.contains(&e.label.as_str()) {
            continue;
        }
        labels_seen.push(&e.label);
        chosen.push(e);
        if chosen.len() == n_events {
            break;
        }
    }

    let mut dynamic_kinds: Vec<TrajectoryKind> = DYNAMIC_KINDS.to_vec();
    if cfg.allow_combined_motion {
        dynamic_kinds.push(TrajectoryKind::LateralRadial);
    }

    // Spans and onsets by rejection against the overlap budget. Each attempt
    // redraws the spans (several long clips in a short scene may admit no
    // valid onsets at all), then places the clips one by one with the onset
    // drawn uniformly from the region where every pairwise ratio stays within
    // budget. An event with an empty feasible region fails the attempt.
    let mut accepted: Option<Vec<(f64, f64)>> = None;
    'attempt: for _ in 0..ONSET_ATTEMPTS {
        let mut candidate: Vec<(f64, f64)> = Vec::with_capacity(chosen.len());
        for event in &chosen {
            let draw = rng.random_range(cfg.span_min_s..=cfg.span_max_s);
            let span = draw.min(event.duration_s).min(cfg.duration_s);
            let latest = (cfg.duration_s - span).max(0.0);
            // overlap with placed clip j exceeds budget exactly when the new
            // onset falls inside (onset_j - span + c_j, offset_j - c_j)
            let forbidden: Vec<(f64, f64)> = candidate
                .iter()
                .map(|&(on_j, sp_j)| {
                    let allowed_shared = cfg.overlap_budget * span.min(sp_j);
                    (on_j - span + allowed_shared, on_j + sp_j - allowed_shared)
                })
                .collect();
            match draw_from_complement(&mut rng, latest, forbidden) {
                Some(onset) => candidate.push((onset, span)),
                None => continue 'attempt,
            }
        }
        let ok = candidate.iter().enumerate().all(|(i, &(on_a, sp_a))| {
            candidate.iter().skip(i + 1).all(|&(on_b, sp_b)| {
                overlap_ratio(on_a, on_a + sp_a, on_b, on_b + sp_b) <= cfg.overlap_budget + 1e-12
            })
        });
        if ok {
            accepted = Some(candidate);
            break;
        }
    }
    let Some(timing) = accepted else {
        return Err(Error::OverlapBudget {
            scene_id,
            attempts: ONSET_ATTEMPTS,
        });
    };

    let mut placements = Vec::with_capacity(chosen.len());
    for (event, &(onset_s, span_s)) in chosen.iter().zip(&timing) {
        let kind = if rng.random_bool(cfg.p_static) {
            TrajectoryKind::Static
        } else {
            dynamic_kinds[rng.random_range(0..dynamic_kinds.len())]
        };
        let mut trajectory = None;
        for _ in 0..TRAJECTORY_ATTEMPTS {
            let t = make_trajectory_with(kind, rng.random(), span_s, &cfg.bounds)?;
            if trajectory_stays_inside(&t, cfg) {
                trajectory = Some(t);
                break;
            }
        }
        let trajectory = trajectory.ok_or_else(|| Error::TrajectoryOutOfRoom {
            scene_id: scene_id.clone(),
            attempts: TRAJECTORY_ATTEMPTS,
        })?;
        placements.push(Placement {
            event_id: event.id.clone(),
            label: event.label.clone(),
            onset_s,
            span_s,
            trajectory,
        });
    }

    Ok(SceneSpec {
        scene_id,
        duration_s: cfg.duration_s,
        overlap_budget: cfg.overlap_budget,
        placements,
    })
}

/// Ground-truth metadata implied by a spec (no audio involved).
pub fn metadata_from_spec(
    spec: &SceneSpec,
    sample_rate_hz: u32,
    frame_rate_hz: f64,
) -> SceneMetadata {
    let mut events = Vec::with_capacity(spec.placements.len());
    for p in &spec.placements {
        let positions = sample_positions(&p.trajectory, frame_rate_hz);
        events.push(EventTrack {
            event_id: p.event_id.clone(),
            label: p.label.clone(),
            onset_s: p.onset_s,
            offset_s: p.onset_s + p.span_s,
            trajectory_kind: p.trajectory.kind,
            azimuth_deg: positions.iter().map(|q| q.azimuth_deg).collect(),
            distance_m: positions.iter().map(|q| q.distance_m).collect(),
        });
    }
    let mut pairwise = Vec::new();
    let mut any = false;
    for i in 0..events.len() {
        for j in (i + 1)..events.len() {
            let r = overlap_ratio(
                events[i].onset_s,
                events[i].offset_s,
                events[j].onset_s,
                events[j].offset_s,
            );
            if r > 0.0 {
                any = true;
            }
            pairwise.push(PairOverlap {
                first: events[i].label.clone(),
                second: events[j].label.clone(),
                ratio: r,
            });
        }
    }
    SceneMetadata {
        scene_id: spec.scene_id.clone(),
        duration_s: spec.duration_s,
        sample_rate_hz,
        frame_rate_hz,
        events,
        overlap_flag: any,
        pairwise_overlaps: pairwise,
    }
}

/// Render a spec into a stereo scene plus metadata.
pub fn realize_scene(
    spec: &SceneSpec,
    pool: &EventPool,
    room: &RoomSpec,
    mics: &MicArray,
    render_cfg: &RenderConfig,
    frame_rate_hz: f64,
) -> Result<(StereoBuffer, SceneMetadata)> {
    let (buffer, meta, _) =
        realize_scene_with_solos(spec, pool, room, mics, render_cfg, frame_rate_hz)?;
    Ok((buffer, meta))
}

/// Like [`realize_scene`] but also returns each placement's solo render on
/// the scene timeline (pre scene-normalization), for oracle scoring.
pub fn realize_scene_with_solos(
    spec: &SceneSpec,
    pool: &EventPool,
    room: &RoomSpec,
    mics: &MicArray,
    render_cfg: &RenderConfig,
    frame_rate_hz: f64,
) -> Result<(StereoBuffer, SceneMetadata, Vec<StereoBuffer>)> {
    let fs = room.sample_rate_hz;
    let n_total = (spec.duration_s * fs as f64).round() as usize;
    let mut mix = StereoBuffer::silence(n_total, fs);
    let mut solos = Vec::with_capacity(spec.placements.len());

    for p in &spec.placements {
        let clip = pool.get(&p.event_id).ok_or_else(|| {
            Error::UnknownEvent {
                id: p.event_id.clone(),
            }
            .in_scene(&spec.scene_id)
        })?;
        let (audio, audio_fs) =
            wav::read_mono(&clip.audio_path).map_err(|e| e.in_scene(&spec.scene_id))?;
        let mut audio = resample_mono(&audio, audio_fs, fs);
        let span_samples = (p.span_s * fs as f64).round() as usize;
        audio.truncate(span_samples.max(1).min(audio.len()));
        if render_cfg.normalize {
            let peak = audio.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            if peak > 0.0 {
                let g = render_cfg.event_peak / peak;
                for s in &mut audio {
                    *s *= g;
                }
            }
        }
        let rendered = render_moving_source(
            &audio,
            &p.trajectory,
            room,
            mics,
            render_cfg.hop_s,
            render_cfg.xfade_s,
        )
        .map_err(|e| e.in_scene(&spec.scene_id))?;

        let offset = (p.onset_s * fs as f64).round() as usize;
        let mut solo = StereoBuffer::silence(n_total, fs);
        for i in 0..rendered.len() {
            let ix = offset + i;
            if ix >= n_total {
                break; // reverb tail past the scene boundary is truncated
            }
            solo.left[ix] = rendered.left[i];
            solo.right[ix] = rendered.right[i];
        }
        // Soften the truncation at the scene boundary. Fading each solo (and
        // summing afterwards) keeps the mix an exact sum of the solos.
        let fade = (render_cfg.tail_fade_s * fs as f64).round() as usize;
        if fade > 0 && n_total > fade {
            for i in 0..fade {
                let g = 1.0 - (fade - i) as f64 / (fade + 1) as f64;
                let ix = n_total - fade + i;
                solo.left[ix] *= g;
                solo.right[ix] *= g;
            }
        }
        for i in 0..n_total {
            mix.left[i] += solo.left[i];
            mix.right[i] += solo.right[i];
        }
        solos.push(solo);
    }

    if render_cfg.normalize {
        mix.normalize_peak(render_cfg.scene_peak);
    }
    mix.validate().map_err(|e| e.in_scene(&spec.scene_id))?;

    let meta = metadata_from_spec(spec, fs, frame_rate_hz);
    Ok((mix, meta, solos))
}
