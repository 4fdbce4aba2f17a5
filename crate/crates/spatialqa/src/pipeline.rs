//! Batch orchestration shared by the CLI subcommands.
//!
//! Scenes are independent jobs: worker `k` renders scene `k` with a seed
//! derived from the master seed, and results are merged by index, so output
//! bytes do not depend on completion order or worker count. Every file is
//! written atomically (temp file + rename); interrupted runs never leave
//! partial files for downstream stages to consume.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{
    aggregate, emit_judge_prompt, read_predictions_jsonl, render_table, EvalReport, JudgeKind,
};
use crate::events::EventPool;
use crate::masking::{
    apply_mask, extract_query_events, gt_spans, merge_spans, oracle_scores, read_scores,
    scores_to_spans, write_scores, MaskMode, Span,
};
use crate::qa::{
    emit_generation_prompt, generate_qa, read_qa_jsonl, write_qa_jsonl, QAItem, QaSet,
};
use crate::render::StereoBuffer;
use crate::scene::{compose_scene, derive_seed, realize_scene_with_solos, SceneMetadata};
use crate::trends::extract_frame_trends;
use crate::wav;

/// Write `bytes` to `path` atomically (temp file in the same directory, then
/// rename).
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn atomic_write_wav(path: &Path, buffer: &StereoBuffer, format: wav::SampleFormat) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    wav::write(
        tmp.path(),
        buffer.sample_rate_hz,
        &[&buffer.left, &buffer.right],
        format,
    )?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn atomic_write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Run `f` inside a rayon pool of `jobs` threads (0 = rayon default).
pub fn with_worker_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("worker pool");
    pool.install(f)
}

pub fn scene_file_id(index: usize) -> String {
    format!("scene_{index:04}")
}

#[derive(Debug, Serialize)]
pub struct SynthSummary {
    pub scenes: usize,
    pub score_files: usize,
    pub out_dir: PathBuf,
}

/// Compose, render, and write `n_scenes` scenes: `audio/<id>.wav`,
/// `metadata/<id>.json`, and (optionally) per-label oracle score files under
/// `scores/`.
pub fn synthesize(
    pool: &EventPool,
    config: &PipelineConfig,
    n_scenes: usize,
    master_seed: u64,
    out_dir: &Path,
    jobs: usize,
    emit_oracle_scores: bool,
) -> Result<SynthSummary> {
    let compose_cfg = config.compose_config();
    let render_cfg = config.render_config();
    let format = config.wav_format()?;
    let frame_rate = config.scene.frame_rate_hz;

    let results: Vec<Result<usize>> = with_worker_pool(jobs, || {
        (0..n_scenes)
            .into_par_iter()
            .map(|index| {
                let scene_id = scene_file_id(index);
                let seed = derive_seed(master_seed, index as u64);
                let spec = compose_scene(pool, &scene_id, seed, &compose_cfg)?;
                let (buffer, meta, solos) = realize_scene_with_solos(
                    &spec,
                    pool,
                    &config.room,
                    &config.mic_array(),
                    &render_cfg,
                    frame_rate,
                )?;
                atomic_write_wav(
                    &out_dir.join("audio").join(format!("{scene_id}.wav")),
                    &buffer,
                    format,
                )?;
                atomic_write_json(
                    out_dir.join("metadata").join(format!("{scene_id}.json")),
                    &meta,
                )?;
                let mut written = 0usize;
                if emit_oracle_scores {
                    for (track, solo) in meta.events.iter().zip(&solos) {
                        let scores = oracle_scores(solo, frame_rate, meta.duration_s);
                        write_scores(
                            out_dir
                                .join("scores")
                                .join(format!("{scene_id}__{}.csv", track.label)),
                            frame_rate,
                            &scores,
                        )?;
                        written += 1;
                    }
                }
                Ok(written)
            })
            .collect()
    });

    let mut score_files = 0;
    for r in results {
        score_files += r?;
    }
    Ok(SynthSummary {
        scenes: n_scenes,
        score_files,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Sorted metadata files under `<scenes>/metadata/`.
pub fn load_scene_metadata(scenes_dir: &Path) -> Result<Vec<SceneMetadata>> {
    let meta_dir = scenes_dir.join("metadata");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&meta_dir)
        .map_err(|e| Error::io(&meta_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut metas = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        metas.push(serde_json::from_str(&text)?);
    }
    Ok(metas)
}

/// Extract trends for every scene into `<out>/<scene_id>.json`.
pub fn trends_run(scenes_dir: &Path, config: &PipelineConfig, out_dir: &Path) -> Result<usize> {
    let metas = load_scene_metadata(scenes_dir)?;
    for meta in &metas {
        let trends = extract_frame_trends(meta, &config.trends)?;
        atomic_write_json(out_dir.join(format!("{}.json", meta.scene_id)), &trends)?;
    }
    Ok(metas.len())
}

#[derive(Debug, Serialize)]
pub struct QaSummary {
    pub scenes: usize,
    pub items: usize,
    pub waivers: usize,
    pub out_path: PathBuf,
}

/// Generate QA for every scene into a single JSONL file (per-scene seeds
/// derive from the master seed by scene index).
pub fn gen_qa_run(
    scenes_dir: &Path,
    config: &PipelineConfig,
    master_seed: u64,
    out_path: &Path,
) -> Result<QaSummary> {
    let metas = load_scene_metadata(scenes_dir)?;
    let mut items: Vec<QAItem> = Vec::new();
    let mut waivers = 0usize;
    for (index, meta) in metas.iter().enumerate() {
        let trends = extract_frame_trends(meta, &config.trends)?;
        let QaSet {
            items: scene_items,
            waivers: scene_waivers,
        } = generate_qa(
            &trends,
            meta,
            derive_seed(master_seed, index as u64),
            &config.qa,
        )?;
        items.extend(scene_items);
        waivers += scene_waivers.len();
    }
    write_qa_jsonl(out_path, &items)?;
    Ok(QaSummary {
        scenes: metas.len(),
        items: items.len(),
        waivers,
        out_path: out_path.to_path_buf(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskCliMode {
    NoMask,
    Gt,
    Scored,
}

impl std::str::FromStr for MaskCliMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "no_mask" => MaskCliMode::NoMask,
            "gt" => MaskCliMode::Gt,
            "scored" => MaskCliMode::Scored,
            other => {
                return Err(Error::InvalidArg(format!(
                    "unknown mask mode {other}; expected no_mask, gt, or scored"
                )))
            }
        })
    }
}

#[derive(Debug, Serialize)]
pub struct MaskSummary {
    pub masked: usize,
    pub unmasked: usize,
    pub score_fallbacks: usize,
    pub out_dir: PathBuf,
}

/// Mask each scene per question. The output name keeps the `.masked.wav`
/// suffix contract: `<scene_id>__<qa_id>.masked.wav`. Questions that name no
/// scene label (or, in scored mode, lack score files) fall back to the
/// unmasked audio, counted in the summary.
pub fn mask_run(
    scenes_dir: &Path,
    qa_path: &Path,
    mode: MaskCliMode,
    config: &PipelineConfig,
    scores_dir: Option<&Path>,
    out_dir: &Path,
    max_per_scene: usize,
) -> Result<MaskSummary> {
    let metas = load_scene_metadata(scenes_dir)?;
    let items = read_qa_jsonl(qa_path)?;
    let format = config.wav_format()?;
    let mut masked = 0usize;
    let mut unmasked = 0usize;
    let mut fallbacks = 0usize;

    for meta in &metas {
        let audio_path = scenes_dir
            .join("audio")
            .join(format!("{}.wav", meta.scene_id));
        let audio_file = wav::read(&audio_path)?;
        if audio_file.channels.len() != 2 {
            return Err(Error::wav(&audio_path, "expected a stereo scene file"));
        }
        let buffer = StereoBuffer {
            left: audio_file.channels[0].clone(),
            right: audio_file.channels[1].clone(),
            sample_rate_hz: audio_file.sample_rate_hz,
        };
        let labels = meta.labels();
        let mut scene_items: Vec<&QAItem> = items
            .iter()
            .filter(|i| i.scene_id == meta.scene_id)
            .collect();
        if max_per_scene > 0 {
            scene_items.truncate(max_per_scene);
        }
        for item in scene_items {
            let relevant = extract_query_events(&item.question, &labels);
            let spans: Vec<Span> = if relevant.is_empty() {
                Vec::new()
            } else {
                match mode {
                    MaskCliMode::NoMask => Vec::new(),
                    MaskCliMode::Gt => gt_spans(meta, &relevant)?,
                    MaskCliMode::Scored => {
                        let dir = scores_dir
                            .map(Path::to_path_buf)
                            .unwrap_or_else(|| scenes_dir.join("scores"));
                        let mut all: Vec<Span> = Vec::new();
                        let mut missing = false;
                        for label in &relevant {
                            let path = dir.join(format!("{}__{label}.csv", meta.scene_id));
                            if !path.exists() {
                                missing = true;
                                break;
                            }
                            let (rate, scores) = read_scores(&path)?;
                            let mode = MaskMode::Scored {
                                threshold: config.mask.threshold,
                                median_window_s: config.mask.median_window_s,
                                frame_rate_hz: rate,
                            };
                            all.extend(scores_to_spans(&scores, &mode)?);
                        }
                        if missing {
                            eprintln!(
                                "warning: missing score file(s) for {} -> no masking",
                                meta.scene_id
                            );
                            fallbacks += 1;
                            Vec::new()
                        } else {
                            merge_spans(all)
                        }
                    }
                }
            };
            let out = apply_mask(&buffer, &spans)?;
            if spans.is_empty() {
                unmasked += 1;
            } else {
                masked += 1;
            }
            atomic_write_wav(
                &out_dir.join(format!("{}__{}.masked.wav", meta.scene_id, item.id)),
                &out,
                format,
            )?;
        }
    }
    Ok(MaskSummary {
        masked,
        unmasked,
        score_fallbacks: fallbacks,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Score a predictions file against gold QA, writing the report JSON and
/// optionally printing the accuracy table.
pub fn evaluate_run(
    gold_path: &Path,
    preds_path: &Path,
    scenes_dir: &Path,
    config: &PipelineConfig,
    out_path: &Path,
    print_table: bool,
) -> Result<EvalReport> {
    let gold = read_qa_jsonl(gold_path)?;
    let preds = read_predictions_jsonl(preds_path)?;
    let metas = load_scene_metadata(scenes_dir)?;
    let report = aggregate(&preds, &gold, &metas, &config.open_scoring())?;
    atomic_write_json(out_path, &report)?;
    if print_table {
        println!("{}", render_table(&report));
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct PromptSummary {
    pub prompts: usize,
    pub out_dir: PathBuf,
}

/// Emit generation prompts (one per scene) or judge prompts (one per
/// prediction) as text files.
pub fn emit_prompts_run(
    kind: &str,
    scenes_dir: Option<&Path>,
    gold_path: Option<&Path>,
    preds_path: Option<&Path>,
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<PromptSummary> {
    let mut prompts = 0usize;
    match kind {
        "generation" => {
            let scenes_dir = scenes_dir.ok_or_else(|| {
                Error::InvalidArg("--scenes is required for generation prompts".into())
            })?;
            let metas = load_scene_metadata(scenes_dir)?;
            for meta in &metas {
                let trends = extract_frame_trends(meta, &config.trends)?;
                let text = emit_generation_prompt(&trends)?;
                atomic_write(
                    out_dir.join(format!("{}__generation.txt", meta.scene_id)),
                    text.as_bytes(),
                )?;
                prompts += 1;
            }
        }
        "thinking" | "rationale" | "open" => {
            let judge_kind: JudgeKind = kind.parse()?;
            let gold_path = gold_path
                .ok_or_else(|| Error::InvalidArg("--gold is required for judge prompts".into()))?;
            let preds_path = preds_path
                .ok_or_else(|| Error::InvalidArg("--pred is required for judge prompts".into()))?;
            let gold = read_qa_jsonl(gold_path)?;
            let preds = read_predictions_jsonl(preds_path)?;
            for pred in &preds {
                let Some(item) = gold.iter().find(|g| g.id == pred.qa_id) else {
                    return Err(Error::UnknownQaId {
                        id: pred.qa_id.clone(),
                    });
                };
                if judge_kind == JudgeKind::Open
                    && item.question_type != crate::qa::QuestionType::Open
                {
                    continue;
                }
                match emit_judge_prompt(judge_kind, item, pred) {
                    Ok(text) => {
                        atomic_write(
                            out_dir.join(format!(
                                "{}__{}__{kind}.txt",
                                pred.qa_id,
                                pred.condition.to_string().replace('/', "_")
                            )),
                            text.as_bytes(),
                        )?;
                        prompts += 1;
                    }
                    Err(Error::InvalidArg(_)) => continue, // missing optional field
                    Err(e) => return Err(e),
                }
            }
        }
        other => {
            return Err(Error::InvalidArg(format!(
                "unknown prompt kind {other}; expected generation, thinking, rationale, or open"
            )))
        }
    }
    Ok(PromptSummary {
        prompts,
        out_dir: out_dir.to_path_buf(),
    })
}
