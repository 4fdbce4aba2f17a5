//! Verbatim emission of the judge prompts for thinking, rationale, and
//! open-answer evaluation, plus parsing of judge replies.
//!
//! The prompts carry `{placeholder}` slots that are substituted with the
//! gold item's fields and the prediction's fields; `{{`/`}}` render as
//! literal braces in the emitted text. Replies are JSON with 0-5 scores per
//! dimension and an optional `errors` array whose categories feed the
//! error-tally report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qa::QAItem;

use super::{OpenJudgeScores, PredictionRecord};

pub const THINKING_JUDGE_PROMPT: &str = r#"You are evaluating the reasoning process (thinking) for a spatial audio question.

Question: {question}
Ground Truth Answer: {ground_truth_answer}

Ground Truth Thinking:
{ground_truth_thinking}

Predicted Thinking:
{predicted_thinking}

Evaluate the predicted thinking on four dimensions:

1. **Logical Coherence** (0-5): 
Does the reasoning flow logically from step to step?
   - 5: Perfect logical flow, each step follows naturally
   - 4: Mostly coherent with minor logical gaps
   - 3: Generally logical but some unclear connections
   - 2: Multiple logical gaps or unclear reasoning
   - 1: Poor logical structure
   - 0: Incoherent or contradictory reasoning

2. **Step Completeness** (0-5): 
Are all necessary reasoning steps present?
   - 5: All necessary steps present and well-developed
   - 4: Most steps present, minor omissions
   - 3: Key steps present but some missing
   - 2: Several important steps missing
   - 1: Many critical steps missing
   - 0: Minimal or no reasoning steps

3. **Factual Accuracy** (0-5):
Are the spatial facts and observations correct?
   - 5: All spatial facts correct (directions, distances, movements)
   - 4: Minor factual errors that don't affect conclusion
   - 3: Some factual errors but core understanding present
   - 2: Multiple factual errors affecting reasoning
   - 1: Major factual errors throughout
   - 0: Completely incorrect facts

4. **Alignment with Ground Truth** (0-5): 
How similar is the reasoning approach to the ground truth?
   - 5: Nearly identical reasoning approach and steps
   - 4: Very similar approach with minor differences
   - 3: Similar overall approach but different execution
   - 2: Different approach but reaches similar conclusions
   - 1: Significantly different approach
   - 0: Completely different reasoning

Also identify any specific errors in the thinking process. Categorize each error as:
- **Spatial reasoning errors**: lateral_direction, distance_depth, crossing_center,
temporal_sequence
- **Logical errors**: missing_steps, incorrect_flow, contradictions, incomplete_analysis
- **Factual errors**: source_misidentification, attribute_swapping, magnitude_errors
- **Consistency errors**: thinking_answer_mismatch, internal_contradictions

For each error, specify severity: minor, moderate, or major.

Provide your evaluation in this exact JSON format:
{{
    "logical_coherence": <score 0-5>,
    "step_completeness": <score 0-5>,
    "factual_accuracy": <score 0-5>,
    "alignment_with_ground_truth": <score 0-5>,
    "explanation": "<brief explanation of scores>",
    "errors": [
        {{"type": "<error_type>", "category": "<category>", "severity": "<severity>", 
        "description": "<description>"}},
        ...
    ]
}}"#;

pub const RATIONALE_JUDGE_PROMPT: &str = r#"You are evaluating the rationale (brief explanation) for a spatial audio answer.

Question: {question}
Ground Truth Answer: {ground_truth_answer}
Predicted Answer: {predicted_answer}

Ground Truth Rationale:
{ground_truth_rationale}

Predicted Rationale:
{predicted_rationale}

Evaluate the predicted rationale on three dimensions:

1. **Conciseness** (0-5): Is the rationale appropriately brief yet complete?
   - 5: Perfect balance of brevity and completeness
   - 4: Mostly concise with minor verbosity or slight incompleteness
   - 3: Acceptable length but could be more concise or complete
   - 2: Too verbose or too brief, missing key points
   - 1: Significantly too long or too short
   - 0: Extremely verbose or minimal content

2. **Accuracy** (0-5): Does it correctly summarize the spatial relationships?
   - 5: All spatial facts correct and well-summarized
   - 4: Minor inaccuracies that don't affect understanding
   - 3: Some inaccuracies but core message correct
   - 2: Multiple inaccuracies affecting the summary
   - 1: Major inaccuracies throughout
   - 0: Completely incorrect summary

3. **Clarity** (0-5): Is it easy to understand?
   - 5: Crystal clear and easy to understand
   - 4: Clear with minor ambiguities
   - 3: Generally clear but some confusing parts
   - 2: Somewhat unclear or confusing
   - 1: Very unclear or hard to follow
   - 0: Incomprehensible

Also identify any specific errors in the rationale. Categorize each error as:
- **Spatial reasoning errors**: lateral_direction, distance_depth, crossing_center, 
temporal_sequence
- **Factual errors**: source_misidentification, attribute_swapping, magnitude_errors
- **Consistency errors**: rationale_answer_mismatch, contradictions

For each error, specify severity: minor, moderate, or major.

Provide your evaluation in this exact JSON format:
{{
    "conciseness": <score 0-5>,
    "accuracy": <score 0-5>,
    "clarity": <score 0-5>,
    "explanation": "<brief explanation of scores>",
    "errors": [
        {{"type": "<error_type>", "category": "<category>", "severity": "<severity>", 
        "description": "<description>"}},
        ...
    ]
}}"#;

pub const OPEN_JUDGE_PROMPT: &str = r#"You are evaluating a spatial audio reasoning answer. 
    Compare the predicted answer against the ground truth.

Question: {question}

Ground Truth Answer: {ground_truth}

Predicted Answer: {predicted}

Evaluate the predicted answer on two dimensions:

1. **Factual Accuracy** (0-5): Are the spatial facts correct (directions, distances, movements, 
source identifications)?
   - 5: All facts are correct
   - 4: Minor factual errors that don't change the main conclusion
   - 3: Some factual errors but core understanding is present
   - 2: Multiple factual errors affecting the conclusion
   - 1: Major factual errors throughout
   - 0: Completely incorrect facts

2. **Semantic Similarity** (0-5): How well does the predicted answer capture the meaning and 
completeness of the ground truth?
   - 5: Captures all key points with equivalent meaning
   - 4: Captures most key points with minor omissions
   - 3: Captures main idea but misses some important details
   - 2: Partially captures the idea with significant gaps
   - 1: Minimal semantic overlap
   - 0: Completely different meaning

Provide your evaluation in this exact JSON format:
{{
    "factual_accuracy": <score 0-5>,
    "semantic_similarity": <score 0-5>,
    "explanation": "<brief explanation of scores>"
}}"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeKind {
    Thinking,
    Rationale,
    Open,
}

impl std::str::FromStr for JudgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "thinking" => JudgeKind::Thinking,
            "rationale" => JudgeKind::Rationale,
            "open" => JudgeKind::Open,
            other => return Err(Error::InvalidArg(format!("unknown judge kind: {other}"))),
        })
    }
}

fn substitute(template: &str, fields: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in fields {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out.replace("{{", "{").replace("}}", "}")
}

/// Emit the judge prompt of `kind` with the gold and predicted fields
/// substituted. Errors if the prediction lacks a field the kind requires.
pub fn emit_judge_prompt(
    kind: JudgeKind,
    gold: &QAItem,
    pred: &PredictionRecord,
) -> Result<String> {
    match kind {
        JudgeKind::Thinking => {
            let predicted = pred.thinking_text.as_deref().ok_or_else(|| {
                Error::InvalidArg("prediction has no thinking_text to judge".into())
            })?;
            Ok(substitute(
                THINKING_JUDGE_PROMPT,
                &[
                    ("question", gold.question.as_str()),
                    ("ground_truth_answer", gold.answer.as_str()),
                    ("ground_truth_thinking", &gold.thinking.render()),
                    ("predicted_thinking", predicted),
                ],
            ))
        }
        JudgeKind::Rationale => {
            let predicted = pred.rationale_text.as_deref().ok_or_else(|| {
                Error::InvalidArg("prediction has no rationale_text to judge".into())
            })?;
            Ok(substitute(
                RATIONALE_JUDGE_PROMPT,
                &[
                    ("question", gold.question.as_str()),
                    ("ground_truth_answer", gold.answer.as_str()),
                    ("predicted_answer", pred.answer.as_str()),
                    ("ground_truth_rationale", gold.rationale.as_str()),
                    ("predicted_rationale", predicted),
                ],
            ))
        }
        JudgeKind::Open => Ok(substitute(
            OPEN_JUDGE_PROMPT,
            &[
                ("question", gold.question.as_str()),
                ("ground_truth", gold.answer.as_str()),
                ("predicted", pred.answer.as_str()),
            ],
        )),
    }
}

/// One error the judge identified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeError {
    #[serde(rename = "type")]
    pub error_type: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub severity: String,
    #[serde(default)]
    pub description: String,
}

/// Parsed judge reply; which score fields are present depends on the kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReply {
    #[serde(default)]
    pub logical_coherence: Option<u8>,
    #[serde(default)]
    pub step_completeness: Option<u8>,
    #[serde(default)]
    pub factual_accuracy: Option<u8>,
    #[serde(default)]
    pub alignment_with_ground_truth: Option<u8>,
    #[serde(default)]
    pub conciseness: Option<u8>,
    #[serde(default)]
    pub accuracy: Option<u8>,
    #[serde(default)]
    pub clarity: Option<u8>,
    #[serde(default)]
    pub semantic_similarity: Option<u8>,
    #[serde(default)]
    pub explanation: String,
    #[serde(default)]
    pub errors: Vec<JudgeError>,
}

fn required(reply: &JudgeReply, kind: JudgeKind) -> Vec<(&'static str, Option<u8>)> {
    match kind {
        JudgeKind::Thinking => vec![
            ("logical_coherence", reply.logical_coherence),
            ("step_completeness", reply.step_completeness),
            ("factual_accuracy", reply.factual_accuracy),
            (
                "alignment_with_ground_truth",
                reply.alignment_with_ground_truth,
            ),
        ],
        JudgeKind::Rationale => vec![
            ("conciseness", reply.conciseness),
            ("accuracy", reply.accuracy),
            ("clarity", reply.clarity),
        ],
        JudgeKind::Open => vec![
            ("factual_accuracy", reply.factual_accuracy),
            ("semantic_similarity", reply.semantic_similarity),
        ],
    }
}

/// Parse and validate a judge reply for `kind`: every required dimension
/// must be present and within 0-5.
pub fn parse_judge_reply(kind: JudgeKind, reply_json: &str) -> Result<JudgeReply> {
    let text = reply_json.trim();
    let text = text
        .strip_prefix("```json")
        .or_else(|| text.strip_prefix("```"))
        .unwrap_or(text);
    let text = text.strip_suffix("```").unwrap_or(text).trim();
    let reply: JudgeReply = serde_json::from_str(text)
        .map_err(|e| Error::JudgeReplyInvalid(format!("not valid JSON: {e}")))?;
    for (name, value) in required(&reply, kind) {
        match value {
            None => {
                return Err(Error::JudgeReplyInvalid(format!(
                    "missing required score field {name}"
                )))
            }
            Some(v) if v > 5 => {
                return Err(Error::JudgeReplyInvalid(format!(
                    "score {name}={v} outside the 0-5 range"
                )))
            }
            Some(_) => {}
        }
    }
    Ok(reply)
}

/// Attach an open-answer judge reply to its prediction record.
pub fn attach_open_scores(pred: &mut PredictionRecord, reply: &JudgeReply) {
    if let (Some(fa), Some(ss)) = (reply.factual_accuracy, reply.semantic_similarity) {
        pred.judge_open = Some(OpenJudgeScores {
            factual_accuracy: fa,
            semantic_similarity: ss,
        });
    }
    pred.judge_errors
        .extend(reply.errors.iter().map(|e| e.error_type.clone()));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{Condition, MaskCondition};
    use crate::qa::{Difficulty, QuestionType, Tag, ThinkingBlock, ThinkingStep};

    fn gold() -> QAItem {
        QAItem {
            id: "q1".into(),
            question: "Is the Croak moving left to right?".into(),
            question_type: QuestionType::YesNo,
            choices: None,
            answer: "Yes".into(),
            thinking: ThinkingBlock {
                steps: vec![ThinkingStep {
                    step_text: "Check the sweep.".into(),
                    solution_text: "It sweeps rightward.".into(),
                }],
                final_reasoning: "It moves left to right.".into(),
            },
            rationale: "It sweeps rightward.".into(),
            tags: vec![Tag::Lateral],
            difficulty: Difficulty::Simple,
            relevant_events: vec!["Croak".into()],
            scene_id: "s1".into(),
        }
    }

    fn pred() -> PredictionRecord {
        PredictionRecord {
            qa_id: "q1".into(),
            condition: Condition {
                mask_mode: MaskCondition::Gt,
                thinking: true,
            },
            answer: "Yes".into(),
            thinking_text: Some(
                "<think>\nStep 1: look\nSolution: ok\nFinal reasoning: yes\n</think>".into(),
            ),
            rationale_text: Some("It moves rightward.".into()),
            latency_s: None,
            judge_open: None,
            judge_errors: vec![],
        }
    }

    #[test]
    fn open_prompt_contains_score_fields() {
        let text = emit_judge_prompt(JudgeKind::Open, &gold(), &pred()).unwrap();
        assert!(text.contains("\"factual_accuracy\": <score 0-5>"));
        assert!(text.contains("\"semantic_similarity\": <score 0-5>"));
        assert!(text.contains("Is the Croak moving left to right?"));
        assert!(!text.contains("{question}"));
        assert!(!text.contains("{{"));
    }

    #[test]
    fn rationale_prompt_contains_dimensions() {
        let text = emit_judge_prompt(JudgeKind::Rationale, &gold(), &pred()).unwrap();
        assert!(text.contains("**Conciseness** (0-5)"));
        assert!(text.contains("**Accuracy** (0-5)"));
        assert!(text.contains("**Clarity** (0-5)"));
        assert!(text.contains("It moves rightward."));
    }

    #[test]
    fn thinking_prompt_substitutes_all_fields() {
        let text = emit_judge_prompt(JudgeKind::Thinking, &gold(), &pred()).unwrap();
        assert!(text.contains("Logical Coherence"));
        assert!(text.contains("Step 1: Check the sweep."));
        assert!(!text.contains("{predicted_thinking}"));
    }

    #[test]
    fn missing_fields_for_kind_are_errors() {
        let mut p = pred();
        p.thinking_text = None;
        assert!(emit_judge_prompt(JudgeKind::Thinking, &gold(), &p).is_err());
    }

    #[test]
    fn reply_score_out_of_range_rejected() {
        let json = r#"{"factual_accuracy": 7, "semantic_similarity": 4, "explanation": "x"}"#;
        match parse_judge_reply(JudgeKind::Open, json) {
            Err(Error::JudgeReplyInvalid(msg)) => assert!(msg.contains("0-5")),
            other => panic!("expected range rejection, got {other:?}"),
        }
        let ok = r#"{"factual_accuracy": 5, "semantic_similarity": 4, "explanation": "x"}"#;
        let reply = parse_judge_reply(JudgeKind::Open, ok).unwrap();
        let mut p = pred();
        attach_open_scores(&mut p, &reply);
        assert_eq!(
            p.judge_open,
            Some(OpenJudgeScores {
                factual_accuracy: 5,
                semantic_similarity: 4
            })
        );
    }

    #[test]
    fn reply_missing_dimension_rejected() {
        let json = r#"{"factual_accuracy": 4, "explanation": "x"}"#;
        assert!(parse_judge_reply(JudgeKind::Open, json).is_err());
        // thinking kind needs its four dimensions
        let json = r#"{"logical_coherence": 4, "step_completeness": 4, "factual_accuracy": 4, "alignment_with_ground_truth": 2, "errors": [{"type": "lateral_direction", "category": "spatial", "severity": "minor", "description": "d"}]}"#;
        let reply = parse_judge_reply(JudgeKind::Thinking, json).unwrap();
        assert_eq!(reply.errors.len(), 1);
    }
}
