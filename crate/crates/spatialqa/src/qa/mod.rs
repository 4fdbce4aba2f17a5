//! Movement-reasoning question generation.
//!
//! The default path is fully rule-based: every question instantiates a fixed
//! template whose answer is derived deterministically from [`FrameTrends`],
//! so each item is ground-truthable. An optional external-LLM path emits the
//! generation prompt verbatim and validates the reply against the same
//! invariants (see [`prompt`]).
//!
//! Serialized items follow the generation prompt's output schema (`id`,
//! `question`, `type`, `choices`, `answer`, `thinking`, `rationale`, `tags`)
//! plus three documented extensions: `difficulty`, `relevant_events`, and
//! `scene_id`. The `thinking` field serializes as the `<think>` block string;
//! in memory it is structured.

mod generate;
pub mod prompt;

pub use generate::{build_thinking, generate_qa, MixConstraints, QaSet, Waiver};
pub use prompt::{emit_generation_prompt, parse_llm_reply, QA_GENERATION_PROMPT};

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    YesNo,
    MultipleChoice,
    Open,
}

impl QuestionType {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuestionType::YesNo => "yes_no",
            QuestionType::MultipleChoice => "multiple_choice",
            QuestionType::Open => "open",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Lateral,
    Radial,
    RelativeMotion,
    Sequencing,
    Comparative,
    Perception,
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Simple,
    Moderate,
    Complex,
}

impl Difficulty {
    /// Thinking steps mandated for this difficulty.
    pub fn steps(&self) -> usize {
        match self {
            Difficulty::Simple => 1,
            Difficulty::Moderate => 2,
            Difficulty::Complex => 3,
        }
    }
}

/// Difficulty from structure: anything comparative, relative-motion,
/// sequencing/choreography, or temporal is complex; a single-attribute
/// single-event yes/no is simple; everything else is moderate.
pub fn classify_difficulty(qtype: QuestionType, tags: &[Tag], n_events: usize) -> Difficulty {
    let complex_tags = [
        Tag::Comparative,
        Tag::RelativeMotion,
        Tag::Sequencing,
        Tag::Temporal,
    ];
    if tags.iter().any(|t| complex_tags.contains(t)) {
        return Difficulty::Complex;
    }
    let attributes = tags
        .iter()
        .filter(|t| matches!(t, Tag::Lateral | Tag::Radial))
        .count();
    if qtype == QuestionType::YesNo && n_events == 1 && attributes <= 1 {
        Difficulty::Simple
    } else {
        Difficulty::Moderate
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinkingStep {
    pub step_text: String,
    pub solution_text: String,
}

/// Structured reasoning block: ordered steps plus a final summary.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThinkingBlock {
    pub steps: Vec<ThinkingStep>,
    pub final_reasoning: String,
}

impl ThinkingBlock {
    /// Render into the `<think>` wire format.
    pub fn render(&self) -> String {
        let mut out = String::from("<think>\n");
        for (i, step) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "Step {}: {}", i + 1, step.step_text);
            let _ = writeln!(out, "Solution: {}", step.solution_text);
        }
        let _ = writeln!(out, "Final reasoning: {}", self.final_reasoning);
        out.push_str("</think>");
        out
    }

    /// Parse the `<think>` wire format back into a structured block.
    pub fn parse(text: &str) -> Result<Self> {
        let inner = text
            .trim()
            .strip_prefix("<think>")
            .and_then(|s| s.trim_end().strip_suffix("</think>"))
            .ok_or_else(|| Error::InvalidArg("thinking block missing <think> markers".into()))?;
        let mut steps: Vec<ThinkingStep> = Vec::new();
        let mut final_reasoning = String::new();
        let mut pending_step: Option<String> = None;
        for line in inner.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("Step ") {
                let text = rest.split_once(':').map(|(_, t)| t.trim()).unwrap_or(rest);
                pending_step = Some(text.to_string());
            } else if let Some(rest) = line.strip_prefix("Solution:") {
                let step_text = pending_step
                    .take()
                    .ok_or_else(|| Error::InvalidArg("solution without a preceding step".into()))?;
                steps.push(ThinkingStep {
                    step_text,
                    solution_text: rest.trim().to_string(),
                });
            } else if let Some(rest) = line.strip_prefix("Final reasoning:") {
                final_reasoning = rest.trim().to_string();
            } else if let Some(last) = steps.last_mut() {
                // continuation lines attach to the previous solution
                last.solution_text.push(' ');
                last.solution_text.push_str(line);
            }
        }
        if steps.is_empty() {
            return Err(Error::InvalidArg("thinking block has no steps".into()));
        }
        if final_reasoning.is_empty() {
            return Err(Error::InvalidArg(
                "thinking block has no final reasoning".into(),
            ));
        }
        Ok(ThinkingBlock {
            steps,
            final_reasoning,
        })
    }
}

mod thinking_string {
    use super::ThinkingBlock;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(block: &ThinkingBlock, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&block.render())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ThinkingBlock, D::Error> {
        let text = String::deserialize(d)?;
        ThinkingBlock::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// One generated question with its gold answer and reasoning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub question: String,
    #[serde(rename = "type")]
    pub question_type: QuestionType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub answer: String,
    #[serde(with = "thinking_string")]
    pub thinking: ThinkingBlock,
    pub rationale: String,
    pub tags: Vec<Tag>,
    pub difficulty: Difficulty,
    pub relevant_events: Vec<String>,
    pub scene_id: String,
}

impl QAItem {
    /// Invariant check; returns human-readable issues (empty = valid). When
    /// `scene_labels` is given, `relevant_events` must be a subset of it.
    pub fn validate(&self, scene_labels: Option<&[String]>) -> Vec<String> {
        let mut issues = Vec::new();
        match self.question_type {
            QuestionType::YesNo => {
                if self.answer != "Yes" && self.answer != "No" {
                    issues.push(format!(
                        "yes_no answer must be Yes or No (got {:?})",
                        self.answer
                    ));
                }
                if self.choices.is_some() {
                    issues.push("yes_no items must not carry choices".into());
                }
            }
            QuestionType::MultipleChoice => match &self.choices {
                Some(choices) => {
                    if !(2..=4).contains(&choices.len()) {
                        issues.push(format!(
                            "multiple_choice needs 2-4 choices (got {})",
                            choices.len()
                        ));
                    }
                    if !choices.contains(&self.answer) {
                        issues.push(format!("answer {:?} is not among the choices", self.answer));
                    }
                }
                None => issues.push("multiple_choice item without choices".into()),
            },
            QuestionType::Open => {
                if self.choices.is_some() {
                    issues.push("open items must not carry choices".into());
                }
            }
        }
        let want_steps = self.difficulty.steps();
        if self.thinking.steps.len() != want_steps {
            issues.push(format!(
                "{:?} difficulty requires {} thinking steps (got {})",
                self.difficulty,
                want_steps,
                self.thinking.steps.len()
            ));
        }
        if self.thinking.final_reasoning.is_empty() {
            issues.push("missing final reasoning".into());
        }
        if self.relevant_events.is_empty() {
            issues.push("relevant_events is empty".into());
        }
        if let Some(labels) = scene_labels {
            for ev in &self.relevant_events {
                if !labels.contains(ev) {
                    issues.push(format!("relevant event {ev:?} is not a scene label"));
                }
            }
        }
        issues
    }
}

/// Write one item per line (JSONL).
pub fn write_qa_jsonl(path: impl AsRef<Path>, items: &[QAItem]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    crate::pipeline::atomic_write(path, out.as_bytes())
}

pub fn read_qa_jsonl(path: impl AsRef<Path>) -> Result<Vec<QAItem>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        items.push(serde_json::from_str(line)?);
    }
    Ok(items)
}
