//! Prediction scoring, faceted accuracy aggregation, and the interaction
//! metric.
//!
//! Closed items (yes/no and multiple choice) are scored by keyword match.
//! Open items need ingested judge scores; an open item counts correct when
//! its semantic similarity and factual accuracy are both at least 4 (a
//! configurable mapping). The interaction metric is a
//! difference-in-differences: how much more thinking helps under a masking
//! method than under no masking,
//! `(Acc_T^method - Acc_N^method) - (Acc_T^NoMask - Acc_N^NoMask)`,
//! in percentage points. It is identically zero for the NoMask method.

pub mod prompts;
mod table;

pub use prompts::{emit_judge_prompt, parse_judge_reply, JudgeKind, JudgeReply};
pub use table::render_table;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qa::{QAItem, QuestionType};
use crate::scene::SceneMetadata;

/// Masking method a prediction was produced under. `Agm` covers any
/// framewise-score-driven masking (the scored mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskCondition {
    NoMask,
    Agm,
    Gt,
}

impl MaskCondition {
    pub const ALL: [MaskCondition; 3] =
        [MaskCondition::NoMask, MaskCondition::Agm, MaskCondition::Gt];

    pub fn as_str(&self) -> &'static str {
        match self {
            MaskCondition::NoMask => "no_mask",
            MaskCondition::Agm => "agm",
            MaskCondition::Gt => "gt",
        }
    }
}

/// (masking method, thinking?) cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub mask_mode: MaskCondition,
    pub thinking: bool,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{}",
            self.mask_mode.as_str(),
            if self.thinking {
                "thinking"
            } else {
                "non_thinking"
            }
        )
    }
}

/// Judge scores for an open-ended answer (0-5 each).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenJudgeScores {
    pub factual_accuracy: u8,
    pub semantic_similarity: u8,
}

/// One model prediction for one item under one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub qa_id: String,
    pub condition: Condition,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinking_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_s: Option<f64>,
    /// Ingested judge scores for open items (see [`prompts`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_open: Option<OpenJudgeScores>,
    /// Error categories tallied from judge replies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub judge_errors: Vec<String>,
}

/// Thresholds mapping judge scores to open-item correctness.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct OpenScoringConfig {
    pub min_semantic_similarity: u8,
    pub min_factual_accuracy: u8,
}

impl Default for OpenScoringConfig {
    fn default() -> Self {
        OpenScoringConfig {
            min_semantic_similarity: 4,
            min_factual_accuracy: 4,
        }
    }
}

fn normalize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

fn contains_seq(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty()
        && needle.len() <= haystack.len()
        && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Keyword-match scoring for yes/no and multiple-choice gold items.
///
/// Yes/no: the first "yes" or "no" token in the prediction decides. Multiple
/// choice: exactly one choice may occur in the prediction, and it must be
/// the gold answer; zero or several matches score incorrect.
pub fn score_closed(prediction: &str, gold: &QAItem) -> bool {
    let pred = normalize(prediction);
    match gold.question_type {
        QuestionType::YesNo => {
            let first = pred.iter().find(|w| *w == "yes" || *w == "no");
            match first {
                Some(w) => w.eq_ignore_ascii_case(&gold.answer),
                None => false,
            }
        }
        QuestionType::MultipleChoice => {
            let Some(choices) = &gold.choices else {
                return false;
            };
            let matched: Vec<&String> = choices
                .iter()
                .filter(|c| contains_seq(&pred, &normalize(c)))
                .collect();
            matched.len() == 1 && *matched[0] == gold.answer
        }
        QuestionType::Open => false,
    }
}

/// Relevant-event facet buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevantBucket {
    One,
    Two,
    CompleteMatch,
}

impl RelevantBucket {
    pub fn as_str(&self) -> &'static str {
        match self {
            RelevantBucket::One => "1_event",
            RelevantBucket::Two => "2_events",
            RelevantBucket::CompleteMatch => "complete_match",
        }
    }
}

fn relevant_bucket(item: &QAItem, scene_events: usize) -> RelevantBucket {
    let n = item.relevant_events.len();
    if n >= scene_events {
        RelevantBucket::CompleteMatch
    } else if n <= 1 {
        RelevantBucket::One
    } else {
        RelevantBucket::Two
    }
}

/// correct/total counts with a percentage view.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub correct: usize,
    pub total: usize,
}

impl Cell {
    pub fn accuracy_pct(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.total as f64
        }
    }

    fn add(&mut self, correct: bool) {
        self.total += 1;
        if correct {
            self.correct += 1;
        }
    }
}

/// Accuracy breakdown for one condition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub overall: Cell,
    pub by_question_type: BTreeMap<String, Cell>,
    pub by_overlap: BTreeMap<String, Cell>,
    pub by_relevant_events: BTreeMap<String, Cell>,
    pub excluded_open_missing_judge: usize,
    pub mean_latency_s: Option<f64>,
    pub judge_error_tallies: BTreeMap<String, usize>,
}

/// Facet selector for the interaction metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FacetKey {
    Overall,
    QType(QuestionType),
    Overlap(bool),
    Relevant(RelevantBucket),
}

impl std::fmt::Display for FacetKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FacetKey::Overall => write!(f, "overall"),
            FacetKey::QType(q) => write!(f, "{}", q.as_str()),
            FacetKey::Overlap(o) => write!(f, "{}", if *o { "overlap" } else { "no_overlap" }),
            FacetKey::Relevant(r) => write!(f, "{}", r.as_str()),
        }
    }
}

/// Full evaluation report across conditions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub conditions: BTreeMap<String, ConditionReport>,
    /// Interaction values precomputed per method and facet (display rounding
    /// is applied by the renderer, not here).
    pub delta_interaction: BTreeMap<String, f64>,
}

impl EvalReport {
    pub fn condition(&self, c: &Condition) -> Option<&ConditionReport> {
        self.conditions.get(&c.to_string())
    }
}

/// The interaction formula on raw accuracy cells (percent):
/// `(acc_t_method - acc_n_method) - (acc_t_nomask - acc_n_nomask)`.
pub fn delta_from_accuracies(
    acc_t_method: f64,
    acc_n_method: f64,
    acc_t_nomask: f64,
    acc_n_nomask: f64,
) -> f64 {
    (acc_t_method - acc_n_method) - (acc_t_nomask - acc_n_nomask)
}

fn facet_cell(report: &ConditionReport, facet: &FacetKey) -> Option<Cell> {
    match facet {
        FacetKey::Overall => Some(report.overall),
        FacetKey::QType(q) => report.by_question_type.get(q.as_str()).copied(),
        FacetKey::Overlap(o) => report
            .by_overlap
            .get(if *o { "overlap" } else { "no_overlap" })
            .copied(),
        FacetKey::Relevant(r) => report.by_relevant_events.get(r.as_str()).copied(),
    }
}

/// Interaction metric for `method` on `facet`, in percentage points
/// (unrounded; callers round to 0.1 pp for display).
pub fn delta_interaction(
    report: &EvalReport,
    method: MaskCondition,
    facet: &FacetKey,
) -> Result<f64> {
    let cell = |mask: MaskCondition, thinking: bool| -> Result<f64> {
        let condition = Condition {
            mask_mode: mask,
            thinking,
        };
        let cr = report
            .condition(&condition)
            .ok_or_else(|| Error::MissingConditionCell(format!("{condition} ({facet})")))?;
        facet_cell(cr, facet)
            .filter(|c| c.total > 0)
            .map(|c| c.accuracy_pct())
            .ok_or_else(|| Error::MissingConditionCell(format!("{condition} ({facet})")))
    };
    Ok(delta_from_accuracies(
        cell(method, true)?,
        cell(method, false)?,
        cell(MaskCondition::NoMask, true)?,
        cell(MaskCondition::NoMask, false)?,
    ))
}

/// Score predictions against gold items and aggregate all facets.
///
/// Open items without judge scores are excluded from accuracy and counted in
/// `excluded_open_missing_judge`. Duplicate predictions for one (qa_id,
/// condition) are an error; so is an unknown qa_id.
pub fn aggregate(
    preds: &[PredictionRecord],
    gold: &[QAItem],
    scenes: &[SceneMetadata],
    open_cfg: &OpenScoringConfig,
) -> Result<EvalReport> {
    let gold_by_id: BTreeMap<&str, &QAItem> = gold.iter().map(|g| (g.id.as_str(), g)).collect();
    let scene_by_id: BTreeMap<&str, &SceneMetadata> =
        scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();

    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut reports: BTreeMap<String, ConditionReport> = BTreeMap::new();
    let mut latencies: BTreeMap<String, (f64, usize)> = BTreeMap::new();

    for pred in preds {
        let gold_item = gold_by_id
            .get(pred.qa_id.as_str())
            .ok_or_else(|| Error::UnknownQaId {
                id: pred.qa_id.clone(),
            })?;
        let key = (pred.qa_id.clone(), pred.condition.to_string());
        if !seen.insert(key) {
            return Err(Error::DuplicatePrediction {
                qa_id: pred.qa_id.clone(),
                condition: pred.condition.to_string(),
            });
        }
        let report = reports.entry(pred.condition.to_string()).or_default();

        for cat in &pred.judge_errors {
            *report.judge_error_tallies.entry(cat.clone()).or_default() += 1;
        }
        if let Some(lat) = pred.latency_s {
            let entry = latencies
                .entry(pred.condition.to_string())
                .or_insert((0.0, 0));
            entry.0 += lat;
            entry.1 += 1;
        }

        let correct = match gold_item.question_type {
            QuestionType::YesNo | QuestionType::MultipleChoice => {
                score_closed(&pred.answer, gold_item)
            }
            QuestionType::Open => match pred.judge_open {
                Some(scores) => {
                    scores.semantic_similarity >= open_cfg.min_semantic_similarity
                        && scores.factual_accuracy >= open_cfg.min_factual_accuracy
                }
                None => {
                    report.excluded_open_missing_judge += 1;
                    continue;
                }
            },
        };

        report.overall.add(correct);
        report
            .by_question_type
            .entry(gold_item.question_type.as_str().to_string())
            .or_default()
            .add(correct);
        if let Some(scene) = scene_by_id.get(gold_item.scene_id.as_str()) {
            report
                .by_overlap
                .entry(
                    if scene.overlap_flag {
                        "overlap"
                    } else {
                        "no_overlap"
                    }
                    .to_string(),
                )
                .or_default()
                .add(correct);
            report
                .by_relevant_events
                .entry(
                    relevant_bucket(gold_item, scene.events.len())
                        .as_str()
                        .to_string(),
                )
                .or_default()
                .add(correct);
        }
    }

    for (cond, (sum, n)) in latencies {
        if let Some(report) = reports.get_mut(&cond) {
            report.mean_latency_s = Some(sum / n as f64);
        }
    }

    let mut out = EvalReport {
        conditions: reports,
        delta_interaction: BTreeMap::new(),
    };
    let facets = [
        FacetKey::Overall,
        FacetKey::QType(QuestionType::YesNo),
        FacetKey::QType(QuestionType::MultipleChoice),
        FacetKey::QType(QuestionType::Open),
        FacetKey::Overlap(false),
        FacetKey::Overlap(true),
        FacetKey::Relevant(RelevantBucket::One),
        FacetKey::Relevant(RelevantBucket::Two),
        FacetKey::Relevant(RelevantBucket::CompleteMatch),
    ];
    for method in [MaskCondition::Agm, MaskCondition::Gt] {
        for facet in &facets {
            if let Ok(v) = delta_interaction(&out, method, facet) {
                out.delta_interaction
                    .insert(format!("{}/{}", method.as_str(), facet), v);
            }
        }
    }
    Ok(out)
}

/// Predictions JSONL: one [`PredictionRecord`] per line.
pub fn read_predictions_jsonl(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line)?);
    }
    Ok(out)
}

pub fn write_predictions_jsonl(path: impl AsRef<Path>, preds: &[PredictionRecord]) -> Result<()> {
    let mut text = String::new();
    for p in preds {
        text.push_str(&serde_json::to_string(p)?);
        text.push('\n');
    }
    crate::pipeline::atomic_write(path, text.as_bytes())
}
