//! Verbatim emission of the question-generation prompt for the optional
//! external-LLM path, plus validation of the model's JSON reply.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::masking::extract_query_events;
use crate::trends::FrameTrends;

use super::{classify_difficulty, QAItem, QuestionType, Tag, ThinkingBlock};

/// The full generation prompt. The caller appends one scene's FrameTrends
/// JSON (see [`emit_generation_prompt`]) and sends the result to the model
/// of their choice.
pub const QA_GENERATION_PROMPT: &str = r#"You are an expert in spatial audio reasoning and question generation. Your task is to create
high-quality QA pairs that evaluate a multimodal LLM’s understanding of spatial audio scenes.

### Inputs:
- FrameTrends: A dictionary where each key is an event name and each value contains:
    - azimuth: {direction, span_category, crosses_center, start_side, end_side, is_arc}
    - distance: {trend_profile, variation_category}
    - temporal: {start_time, end_time, duration} if available
    - summary_text: A natural-language summary combining lateral, radial, and temporal info
    - Note: direction may include 'arc left->right' or 'arc right->left' for curved trajectories

This FrameTrends object is derived from all available scene data, 
so treat it as the authoritative source for reasoning.

### Objectives:
Create diverse QA pairs that require reasoning about:
- Lateral trajectories (left->right, right->left, static)
- Arc trajectories (curved motion around the listener with constant radius)
- Radial changes (approach, recede, approach->recede)
- Relative motion between events (opposite directions, convergence/divergence)
- Sequencing and choreography (order, endpoints, overlap vs non-overlap if available)
- Comparative diagnostics (which spans wider azimuth? which ends farther?)
- Natural perceptual implications (e.g., “Which sound feels most noticeable near the middle?”)

### Constraints:
- DO NOT ask for timestamps or exact numeric values.
- Use only qualitative info from FrameTrends (direction, span_category, trend_profile, overlaps).
- Use listener-centric, natural language: “left”, “right”, “middle”, “closer”, “farther”.
- Avoid technical jargon like “binaural salience”; use intuitive terms like
“noticeable” or “prominent”.
- Everything occurs within -90° to +90° in front of the listener, 
so do not repeat “front stage” unnecessarily.
- Center crossing is optional; only mention if relevant.
- Avoid speculation beyond provided data; if ambiguous, 
use cautious phrasing (“appears to”, “likely”) only when supported.
- **Thinking steps and rationale must sound like perceptual reasoning, not metadata citation.**
    - Do NOT mention FrameData, MetaInfo, or structured sources.
    - Use natural language based on the scene description and qualitative trends 
    (e.g., “moves left to right and gets closer”).
    - Avoid phrases like “according to data”, “based on FrameTrends.” or "described as"
    - Write as if you are analyzing the raw audio features present in the embedding.

### Output Format:
Return an array of QA objects in JSON:
{
  "id": "<unique_id>",
  "question": "<string>",
  "type": "yes_no | multiple_choice | open",
  "choices": [optional for multiple_choice],
  "answer": "<string>",
   "thinking": "<think>\nStep 1: [Describe step]\nSolution: 
   [Provide scene-specific reasoning for this step]\n[Optional Step 2: ...]\nSolution: [...]\n[Optional Step 3: ...]
   \nSolution: [...]\nFinal reasoning: [Summarize why the answer is correct]\n</think>", 
  "rationale": "<one-sentence perceptual reasoning>",
  "tags": ["lateral", "radial", "relative_motion", "sequencing", "comparative", ...],
}

### Dynamic Thinking Steps Rules:
- For simple questions (single attribute, , one event, yes/no):
    - Use 1 step + solution +Final reasoning.
- For moderate questions (two attributes OR involves more than one event OR simple comparison):
    - Use 2 steps  + solutions + Final reasoning.
- For complex questions 
(comparative, multi-hop, choreography, relative motion, temporal reasoning):
    - Use 3 steps + solutions + Final reasoning.
- Always include Final reasoning summarizing why the answer is correct.
- Steps must be short, perceptual, and qualitative and followed by reasoning solution for that step 
(e.g., “Check if the sound moves laterally”).
- Do NOT include numeric values or cite structured data.

### Example Thinking Sections:
**Simple Yes/No Question**
<think>
Step 1: Check if the smoke detector moves laterally.
Solution: The smoke detector stays fixed on the right without sweeping.
Final reasoning: It remains on the right, so it is static in azimuth.
</think>

**Moderate Question (two events)**
<think>
Step 1: Compare lateral spans.
Solution: The train sweeps widely; the detector stays fixed.
Step 2: Compare radial behavior.
Solution: The train approaches then recedes; the detector remains steady.
Final reasoning: The train is dynamic both laterally and radially, 
while the detector is static.
</think>

**Complex Question**
<think>
Step 1: Identify lateral behavior of both sources.
Solution: The smoke detector is static on the right; the train moves right→left across the center.
Step 2: Identify radial behavior of both sources.
Solution: The smoke detector maintains a steady distance; the train approaches then recedes.
Step 3: Contrast them to explain differences.
Solution: One is stationary and steady; the other sweeps widely and varies strongly in distance.
Final reasoning: The train is dynamic both laterally and radially, while the detector is static.
</think>

### Required Mix:
- At least 5 Yes/No questions (fundamentals)
- At least 3 Multiple Choice questions (comparatives/diagnostics)
- At least 6 Open-ended questions (expanded reasoning), 
including at least 3 focused on RELATIVE MOTION between events
- At least 4 questions must involve radial reasoning (approach/recede)
- At least 2 questions should summarize overall choreography or sequencing
- At least 2 questions should compare lateral and radial trends together
- If temporal info exists, include at least 2 questions about order or overlap

### Open-Ended Reasoning Templates (adapt naturally):
1) **Qualitative Trend Summary**  
   - “Summarize how [Event] changes in distance while moving laterally.”
2) **Relative Motion Contrast**  
   - “Compare the movement of [Event A] and [Event B] in both direction and distance.”
3) **Stage Choreography**  
   - “Narrate the overall motion: where each source starts, how it moves, and where it finishes.”
4) **Convergence/Divergence**  
   - “Do [Event A] and [Event B] move toward the same region or away from each other? Explain.”
5) **Endpoint Reasoning**  
   - “Explain where each source ends and how its final position follows from its path.”
6) **Prominence Near Middle**  
   - “Which source feels most noticeable near the middle and why?”
7) **Comparative Span**  
   - “Which source spans a wider left–right range, and how does that affect the scene’s balance?”
8) **Temporal Order or Overlap**  
   - “Which event starts first?” or “Do [Event A] and [Event B] overlap in time?”
9) **Path Characteristics**  
   - "Describe the path that [Event] takes as it moves. 
   How does its distance change relate to its lateral movement?"
10) **Motion Pattern Comparison**  
   - "Compare how [Event A] and [Event B] move through space. 
   What makes their paths different?"

### Procedure (internal; do not output steps):
1) Use FrameTrends.summary_text and structured fields for reasoning.
2) Decide question complexity and adjust number of thinking steps dynamically:
    - If question involves >1 event -> at least moderate (minimum 2 steps).
3) For each step, provide both the step description and the solution 
for that step based on the scene.
4) Generate <think> section first, then answer, then rationale.
5) Ensure coverage of lateral, radial, relative motion, sequencing, and comparative reasoning.
6) Validate for internal consistency; if ambiguity exists, use cautious wording."#;

/// Emit the generation prompt with the scene's FrameTrends JSON injected.
pub fn emit_generation_prompt(trends: &BTreeMap<String, FrameTrends>) -> Result<String> {
    if trends.is_empty() {
        return Err(Error::EmptyTrends);
    }
    let json = serde_json::to_string_pretty(trends)?;
    Ok(format!(
        "{QA_GENERATION_PROMPT}\n\n### FrameTrends:\n{json}\n"
    ))
}

#[derive(Debug, Deserialize)]
struct RawReplyItem {
    id: Option<String>,
    question: String,
    #[serde(rename = "type")]
    question_type: QuestionType,
    #[serde(default)]
    choices: Option<Vec<String>>,
    answer: String,
    thinking: String,
    rationale: String,
    #[serde(default)]
    tags: Vec<Tag>,
    #[serde(default)]
    relevant_events: Option<Vec<String>>,
}

fn strip_code_fences(text: &str) -> &str {
    let t = text.trim();
    let t = t
        .strip_prefix("```json")
        .or_else(|| t.strip_prefix("```"))
        .unwrap_or(t);
    t.strip_suffix("```").unwrap_or(t).trim()
}

/// Parse an LLM reply (a JSON array of QA objects) into validated items.
/// Invariant violations are collected into an itemized report. Items missing
/// `relevant_events` get them re-derived by keyword-matching the question
/// against the scene labels.
pub fn parse_llm_reply(
    reply: &str,
    scene_id: &str,
    scene_labels: &[String],
) -> Result<Vec<QAItem>> {
    let body = strip_code_fences(reply);
    let raw: Vec<RawReplyItem> = serde_json::from_str(body)
        .map_err(|e| Error::LlmReplyInvalid(vec![format!("reply is not a QA array: {e}")]))?;
    let mut issues: Vec<String> = Vec::new();
    let mut items = Vec::new();
    for (ix, r) in raw.into_iter().enumerate() {
        let thinking = match ThinkingBlock::parse(&r.thinking) {
            Ok(t) => t,
            Err(e) => {
                issues.push(format!("item {ix}: {e}"));
                continue;
            }
        };
        let steps = thinking.steps.len();
        if !(1..=3).contains(&steps) {
            issues.push(format!(
                "item {ix}: thinking must use between one and three steps (got {steps})"
            ));
            continue;
        }
        let relevant_events = match r.relevant_events {
            Some(ev) => ev,
            None => extract_query_events(&r.question, scene_labels),
        };
        let difficulty =
            classify_difficulty(r.question_type, &r.tags, relevant_events.len().max(1));
        let item = QAItem {
            id: r.id.unwrap_or_else(|| format!("{scene_id}_llm_q{ix:03}")),
            question: r.question,
            question_type: r.question_type,
            choices: r.choices,
            answer: r.answer,
            thinking,
            rationale: r.rationale,
            tags: r.tags,
            difficulty,
            relevant_events,
            scene_id: scene_id.to_string(),
        };
        // External replies choose their own step counts (validated to 1..=3
        // above), so the difficulty-rule check is skipped for them.
        let item_issues: Vec<String> = item
            .validate(Some(scene_labels))
            .into_iter()
            .filter(|m| !m.contains("thinking steps"))
            .collect();
        if item_issues.is_empty() {
            items.push(item);
        } else {
            for m in item_issues {
                issues.push(format!("item {ix}: {m}"));
            }
        }
    }
    if issues.is_empty() {
        Ok(items)
    } else {
        Err(Error::LlmReplyInvalid(issues))
    }
}
