//! Rule-based question generation from frame trends.
//!
//! Each template instantiates a fixed question string and derives its gold
//! answer from the trends alone, so answers can be re-derived by an
//! independent decision table. Yes/no items are balanced by alternating the
//! target truth value and picking predicates whose truth matches.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::SceneMetadata;
use crate::trends::{FrameTrends, LateralDirection, Side, SpanCategory, TrendProfile};

use super::{
    classify_difficulty, Difficulty, QAItem, QuestionType, Tag, ThinkingBlock, ThinkingStep,
};

/// Minimum counts the generated set must satisfy per scene. Quotas that the
/// scene cannot support (a single-event scene has no event pairs) are waived
/// and reported.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct MixConstraints {
    pub min_yes_no: usize,
    pub min_multiple_choice: usize,
    pub min_open: usize,
    pub min_relative_motion_open: usize,
    pub min_radial: usize,
    pub min_sequencing: usize,
    pub min_lateral_radial: usize,
    pub min_temporal: usize,
}

impl Default for MixConstraints {
    fn default() -> Self {
        MixConstraints {
            min_yes_no: 5,
            min_multiple_choice: 3,
            min_open: 6,
            min_relative_motion_open: 3,
            min_radial: 4,
            min_sequencing: 2,
            min_lateral_radial: 2,
            min_temporal: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Waiver {
    pub constraint: String,
    pub reason: String,
}

/// Generated items plus any waived constraints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QaSet {
    pub items: Vec<QAItem>,
    pub waivers: Vec<Waiver>,
}

struct EventView<'a> {
    label: &'a str,
    trends: &'a FrameTrends,
}

// ---------------------------------------------------------------------------
// decision table
// ---------------------------------------------------------------------------

fn moves_rightward(t: &FrameTrends) -> bool {
    t.azimuth.direction.is_rightward()
}

fn moves_leftward(t: &FrameTrends) -> bool {
    t.azimuth.direction.is_leftward()
}

fn laterally_static(t: &FrameTrends) -> bool {
    t.azimuth.direction.is_static()
}

fn fully_static(t: &FrameTrends) -> bool {
    laterally_static(t) && t.distance.trend_profile == TrendProfile::Steady
}

fn approaches(t: &FrameTrends) -> bool {
    t.distance.trend_profile == TrendProfile::Approach
}

fn recedes(t: &FrameTrends) -> bool {
    t.distance.trend_profile == TrendProfile::Recede
}

fn steady_distance(t: &FrameTrends) -> bool {
    t.distance.trend_profile == TrendProfile::Steady
}

// Sweep rank used by comparative templates: a laterally static source ranks
// below every mover; movers rank by span category.
fn sweep_rank(t: &FrameTrends) -> i32 {
    if laterally_static(t) {
        return -1;
    }
    match t.azimuth.span_category {
        SpanCategory::Narrow => 0,
        SpanCategory::Moderate => 1,
        SpanCategory::Wide => 2,
    }
}

fn opposite_directions(a: &FrameTrends, b: &FrameTrends) -> bool {
    (moves_rightward(a) && moves_leftward(b)) || (moves_leftward(a) && moves_rightward(b))
}

fn same_end_side(a: &FrameTrends, b: &FrameTrends) -> bool {
    a.azimuth.end_side == b.azimuth.end_side
}

fn starts_before(a: &FrameTrends, b: &FrameTrends) -> bool {
    a.temporal.start_time_s < b.temporal.start_time_s
}

fn overlap_in_time(a: &FrameTrends, b: &FrameTrends) -> bool {
    a.temporal.end_time_s.min(b.temporal.end_time_s)
        - a.temporal.start_time_s.max(b.temporal.start_time_s)
        > 1e-9
}

fn begins_early(t: &FrameTrends, scene_duration_s: f64) -> bool {
    t.temporal.start_time_s <= scene_duration_s / 3.0
}

fn lasts_until_late(t: &FrameTrends, scene_duration_s: f64) -> bool {
    t.temporal.end_time_s >= 0.75 * scene_duration_s
}

// Prominence-near-the-middle score: crossing the center dominates, merely
// starting or ending there counts half.
fn middle_score(t: &FrameTrends) -> u8 {
    if t.azimuth.crosses_center {
        2
    } else if t.azimuth.start_side == Side::Center || t.azimuth.end_side == Side::Center {
        1
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// phrasing
// ---------------------------------------------------------------------------

fn lateral_phrase(label: &str, t: &FrameTrends) -> String {
    let az = &t.azimuth;
    match az.direction {
        LateralDirection::Static => format!(
            "The {} holds its position {} without sweeping across.",
            label,
            az.start_side.phrase()
        ),
        LateralDirection::LeftToRight => format!(
            "The {} sweeps rightward, starting {} and ending {}.",
            label,
            az.start_side.phrase(),
            az.end_side.phrase()
        ),
        LateralDirection::RightToLeft => format!(
            "The {} sweeps leftward, starting {} and ending {}.",
            label,
            az.start_side.phrase(),
            az.end_side.phrase()
        ),
        LateralDirection::ArcLeftToRight => format!(
            "The {} arcs rightward around the listener, from the {} to the {}.",
            label,
            az.start_side.word(),
            az.end_side.word()
        ),
        LateralDirection::ArcRightToLeft => format!(
            "The {} arcs leftward around the listener, from the {} to the {}.",
            label,
            az.start_side.word(),
            az.end_side.word()
        ),
    }
}

fn radial_phrase(label: &str, t: &FrameTrends) -> String {
    match t.distance.trend_profile {
        TrendProfile::Steady => {
            format!("The {label} keeps a roughly steady distance from the listener.")
        }
        TrendProfile::Approach => {
            format!("The {label} draws closer to the listener over its course.")
        }
        TrendProfile::Recede => {
            format!("The {label} drifts farther from the listener over its course.")
        }
        TrendProfile::ApproachThenRecede => {
            format!("The {label} comes closer at first and then backs away.")
        }
        TrendProfile::RecedeThenApproach => {
            format!("The {label} moves away at first and then comes back closer.")
        }
    }
}

fn lateral_short(label: &str, t: &FrameTrends) -> String {
    match t.azimuth.direction {
        LateralDirection::Static => format!("the {label} stays put"),
        LateralDirection::LeftToRight => format!("the {label} sweeps rightward"),
        LateralDirection::RightToLeft => format!("the {label} sweeps leftward"),
        LateralDirection::ArcLeftToRight => format!("the {label} arcs rightward"),
        LateralDirection::ArcRightToLeft => format!("the {label} arcs leftward"),
    }
}

fn radial_short(label: &str, t: &FrameTrends) -> String {
    match t.distance.trend_profile {
        TrendProfile::Steady => format!("the {label} keeps its distance"),
        TrendProfile::Approach => format!("the {label} comes closer"),
        TrendProfile::Recede => format!("the {label} moves away"),
        TrendProfile::ApproachThenRecede => format!("the {label} comes in and then backs off"),
        TrendProfile::RecedeThenApproach => format!("the {label} backs off and then comes in"),
    }
}

fn phase_word(onset_s: f64, scene_duration_s: f64) -> &'static str {
    if onset_s <= scene_duration_s / 3.0 {
        "early in the scene"
    } else if onset_s <= 2.0 * scene_duration_s / 3.0 {
        "partway through the scene"
    } else {
        "late in the scene"
    }
}

fn timing_phrase(label: &str, t: &FrameTrends, scene_duration_s: f64) -> String {
    let tail = if lasts_until_late(t, scene_duration_s) {
        "keeps sounding until near the end"
    } else {
        "fades out before the scene ends"
    };
    format!(
        "The {} begins {} and {}.",
        label,
        phase_word(t.temporal.start_time_s, scene_duration_s),
        tail
    )
}

fn order_phrase(a: &EventView, b: &EventView) -> String {
    let (first, second) = if starts_before(a.trends, b.trends) {
        (a, b)
    } else {
        (b, a)
    };
    let overlap = if overlap_in_time(a.trends, b.trends) {
        "and the two overlap for part of the scene"
    } else {
        "and they do not overlap in time"
    };
    format!(
        "The {} starts before the {}, {}.",
        first.label, second.label, overlap
    )
}

fn contrast_phrase(a: &EventView, b: &EventView) -> String {
    if a.trends.azimuth.direction != b.trends.azimuth.direction {
        format!(
            "Laterally they differ: {} while {}.",
            lateral_short(a.label, a.trends),
            lateral_short(b.label, b.trends)
        )
    } else if a.trends.distance.trend_profile != b.trends.distance.trend_profile {
        format!(
            "Radially they differ: {} while {}.",
            radial_short(a.label, a.trends),
            radial_short(b.label, b.trends)
        )
    } else {
        "The two follow broadly similar paths.".to_string()
    }
}

// ---------------------------------------------------------------------------
// thinking
// ---------------------------------------------------------------------------

/// Build a thinking block whose step count follows the difficulty rule:
/// one perceptual check for simple items, lateral + radial checks for
/// moderate ones, and per-aspect comparison plus a contrast or timing step
/// for complex ones.
pub fn build_thinking(
    qtype: QuestionType,
    tags: &[Tag],
    involved: &[(&str, &FrameTrends)],
    scene_duration_s: f64,
    final_reasoning: String,
) -> ThinkingBlock {
    let difficulty = classify_difficulty(qtype, tags, involved.len());
    let views: Vec<EventView> = involved
        .iter()
        .map(|(label, trends)| EventView { label, trends })
        .collect();
    let step = |text: &str, solution: String| ThinkingStep {
        step_text: text.to_string(),
        solution_text: solution,
    };
    let joined =
        |f: &dyn Fn(&EventView) -> String| views.iter().map(f).collect::<Vec<_>>().join(" ");

    let steps: Vec<ThinkingStep> = match (difficulty, views.len()) {
        (Difficulty::Simple, _) => {
            let v = &views[0];
            if tags.contains(&Tag::Radial) && !tags.contains(&Tag::Lateral) {
                vec![step(
                    &format!(
                        "Check how the {}'s distance from the listener changes.",
                        v.label
                    ),
                    radial_phrase(v.label, v.trends),
                )]
            } else {
                vec![step(
                    &format!("Check how the {} moves laterally.", v.label),
                    lateral_phrase(v.label, v.trends),
                )]
            }
        }
        (Difficulty::Moderate, 1) => {
            let v = &views[0];
            vec![
                step(
                    &format!("Check how the {} moves laterally.", v.label),
                    lateral_phrase(v.label, v.trends),
                ),
                step(
                    &format!("Check how the {}'s distance changes.", v.label),
                    radial_phrase(v.label, v.trends),
                ),
            ]
        }
        (Difficulty::Moderate, _) => views
            .iter()
            .take(2)
            .map(|v| {
                step(
                    &format!("Check how the {} moves.", v.label),
                    lateral_phrase(v.label, v.trends),
                )
            })
            .collect(),
        (Difficulty::Complex, 1) => {
            let v = &views[0];
            vec![
                step(
                    &format!("Check how the {} moves laterally.", v.label),
                    lateral_phrase(v.label, v.trends),
                ),
                step(
                    &format!("Check how the {}'s distance changes.", v.label),
                    radial_phrase(v.label, v.trends),
                ),
                step(
                    &format!("Check when the {} is active.", v.label),
                    timing_phrase(v.label, v.trends, scene_duration_s),
                ),
            ]
        }
        (Difficulty::Complex, _) => {
            let third = if tags.contains(&Tag::Temporal) || tags.contains(&Tag::Sequencing) {
                step(
                    "Check the timing of the sources.",
                    order_phrase(&views[0], &views[1]),
                )
            } else {
                step(
                    "Contrast the two paths.",
                    contrast_phrase(&views[0], &views[1]),
                )
            };
            vec![
                step(
                    "Identify the lateral behavior of each source.",
                    joined(&|v| lateral_phrase(v.label, v.trends)),
                ),
                step(
                    "Identify the radial behavior of each source.",
                    joined(&|v| radial_phrase(v.label, v.trends)),
                ),
                third,
            ]
        }
    };
    ThinkingBlock {
        steps,
        final_reasoning,
    }
}

// ---------------------------------------------------------------------------
// candidates
// ---------------------------------------------------------------------------

struct Candidate {
    question: String,
    qtype: QuestionType,
    choices: Option<Vec<String>>,
    answer: String,
    tags: Vec<Tag>,
    involved: Vec<usize>,
    final_reasoning: String,
    rationale: String,
    truth: Option<bool>,
}

fn yes_no(truth: bool) -> String {
    if truth {
        "Yes".into()
    } else {
        "No".into()
    }
}

fn single_event_yes_no(ix: usize, v: &EventView, scene_duration_s: f64) -> Vec<Candidate> {
    let t = v.trends;
    let label = v.label;
    let lat = lateral_phrase(label, t);
    let rad = radial_phrase(label, t);
    let mut out = Vec::new();
    let push = |question: String,
                truth: bool,
                tags: Vec<Tag>,
                evidence: &str,
                out: &mut Vec<Candidate>| {
        out.push(Candidate {
            question,
            qtype: QuestionType::YesNo,
            choices: None,
            answer: yes_no(truth),
            tags,
            involved: vec![ix],
            final_reasoning: evidence.to_string(),
            rationale: evidence.to_string(),
            truth: Some(truth),
        });
    };
    push(
        format!("Is the {label} sound moving from left to right?"),
        moves_rightward(t),
        vec![Tag::Lateral],
        &lat,
        &mut out,
    );
    push(
        format!("Is the {label} sound moving from right to left?"),
        moves_leftward(t),
        vec![Tag::Lateral],
        &lat,
        &mut out,
    );
    push(
        format!("Does the {label} stay in roughly the same direction throughout the scene?"),
        laterally_static(t),
        vec![Tag::Lateral],
        &lat,
        &mut out,
    );
    push(
        format!("Does the {label} cross the center as it moves?"),
        t.azimuth.crosses_center,
        vec![Tag::Lateral],
        &lat,
        &mut out,
    );
    push(
        format!("Is the {label} moving closer to the listener over time?"),
        approaches(t),
        vec![Tag::Radial],
        &rad,
        &mut out,
    );
    push(
        format!("Is the {label} moving farther away from the listener over time?"),
        recedes(t),
        vec![Tag::Radial],
        &rad,
        &mut out,
    );
    push(
        format!("Does the {label} keep a roughly steady distance from the listener?"),
        steady_distance(t),
        vec![Tag::Radial],
        &rad,
        &mut out,
    );
    push(
        format!("Does the {label} follow a curved arc around the listener at a roughly constant distance?"),
        t.azimuth.is_arc,
        vec![Tag::Lateral, Tag::Radial],
        &format!("{lat} {rad}"),
        &mut out,
    );
    let timing = timing_phrase(label, t, scene_duration_s);
    push(
        format!("Does the {label} begin in the early part of the scene?"),
        begins_early(t, scene_duration_s),
        vec![Tag::Temporal],
        &timing,
        &mut out,
    );
    push(
        format!("Does the {label} keep sounding until near the end of the scene?"),
        lasts_until_late(t, scene_duration_s),
        vec![Tag::Temporal],
        &timing,
        &mut out,
    );
    out
}

fn pair_yes_no(ia: usize, ib: usize, a: &EventView, b: &EventView) -> Vec<Candidate> {
    let mut out = Vec::new();
    let pair_evidence = format!(
        "{} {}",
        lateral_short(a.label, a.trends),
        lateral_short(b.label, b.trends)
    );
    let mut push = |question: String, truth: bool, tags: Vec<Tag>, evidence: String| {
        out.push(Candidate {
            question,
            qtype: QuestionType::YesNo,
            choices: None,
            answer: yes_no(truth),
            tags,
            involved: vec![ia, ib],
            final_reasoning: evidence.clone(),
            rationale: evidence,
            truth: Some(truth),
        });
    };
    push(
        format!(
            "Do the {} and the {} end up on the same side of the scene?",
            a.label, b.label
        ),
        same_end_side(a.trends, b.trends),
        vec![Tag::RelativeMotion],
        format!(
            "The {} ends {} while the {} ends {}.",
            a.label,
            a.trends.azimuth.end_side.phrase(),
            b.label,
            b.trends.azimuth.end_side.phrase()
        ),
    );
    push(
        format!(
            "Do the {} and the {} move in opposite lateral directions?",
            a.label, b.label
        ),
        opposite_directions(a.trends, b.trends),
        vec![Tag::RelativeMotion, Tag::Lateral],
        format!("Heard together, {pair_evidence}."),
    );
    push(
        format!("Does the {} start before the {}?", a.label, b.label),
        starts_before(a.trends, b.trends),
        vec![Tag::Temporal, Tag::Sequencing],
        order_phrase(a, b),
    );
    push(
        format!("Do the {} and the {} overlap in time?", a.label, b.label),
        overlap_in_time(a.trends, b.trends),
        vec![Tag::Temporal],
        order_phrase(a, b),
    );
    push(
        format!(
            "Does the {} sweep across a wider range than the {}?",
            a.label, b.label
        ),
        sweep_rank(a.trends) > sweep_rank(b.trends),
        vec![Tag::Comparative, Tag::Lateral],
        format!("Comparing sweeps, {pair_evidence}."),
    );
    out
}

fn single_event_multiple_choice(ix: usize, v: &EventView) -> Vec<Candidate> {
    let t = v.trends;
    let label = v.label;
    let mut out = Vec::new();

    let end_choices = vec![
        "On the left".to_string(),
        "Near the center".to_string(),
        "On the right".to_string(),
    ];
    let end_answer = match t.azimuth.end_side {
        Side::Left => "On the left",
        Side::Center => "Near the center",
        Side::Right => "On the right",
    };
    out.push(Candidate {
        question: format!("Where does the {label} end up by the end of the scene?"),
        qtype: QuestionType::MultipleChoice,
        choices: Some(end_choices),
        answer: end_answer.to_string(),
        tags: vec![Tag::Lateral],
        involved: vec![ix],
        final_reasoning: lateral_phrase(label, t),
        rationale: format!("It finishes {}.", t.azimuth.end_side.phrase()),
        truth: None,
    });

    let dist_choices = vec![
        "It steadily moves closer".to_string(),
        "It steadily moves farther away".to_string(),
        "It stays at a roughly steady distance".to_string(),
        "It changes its radial direction partway through".to_string(),
    ];
    let dist_answer = match t.distance.trend_profile {
        TrendProfile::Approach => &dist_choices[0],
        TrendProfile::Recede => &dist_choices[1],
        TrendProfile::Steady => &dist_choices[2],
        TrendProfile::ApproachThenRecede | TrendProfile::RecedeThenApproach => &dist_choices[3],
    }
    .clone();
    out.push(Candidate {
        question: format!(
            "Which best describes how the {label}'s distance changes over the scene?"
        ),
        qtype: QuestionType::MultipleChoice,
        choices: Some(dist_choices),
        answer: dist_answer,
        tags: vec![Tag::Radial],
        involved: vec![ix],
        final_reasoning: radial_phrase(label, t),
        rationale: radial_short(label, t) + ".",
        truth: None,
    });

    let lat_choices = vec![
        "It stays in place".to_string(),
        "It sweeps toward the right".to_string(),
        "It sweeps toward the left".to_string(),
        "It arcs around the listener".to_string(),
    ];
    let lat_answer = if t.azimuth.is_arc {
        &lat_choices[3]
    } else {
        match t.azimuth.direction {
            LateralDirection::Static => &lat_choices[0],
            LateralDirection::LeftToRight | LateralDirection::ArcLeftToRight => &lat_choices[1],
            LateralDirection::RightToLeft | LateralDirection::ArcRightToLeft => &lat_choices[2],
        }
    }
    .clone();
    out.push(Candidate {
        question: format!("Which best describes the {label}'s lateral motion?"),
        qtype: QuestionType::MultipleChoice,
        choices: Some(lat_choices),
        answer: lat_answer,
        tags: vec![Tag::Lateral],
        involved: vec![ix],
        final_reasoning: lateral_phrase(label, t),
        rationale: lateral_short(label, t) + ".",
        truth: None,
    });
    out
}

fn pair_multiple_choice(ia: usize, ib: usize, a: &EventView, b: &EventView) -> Vec<Candidate> {
    let mut out = Vec::new();

    let wider_choices = vec![
        a.label.to_string(),
        b.label.to_string(),
        "Both equally".to_string(),
        "Neither".to_string(),
    ];
    let (ra, rb) = (sweep_rank(a.trends), sweep_rank(b.trends));
    let wider_answer = if ra == -1 && rb == -1 {
        "Neither".to_string()
    } else if ra > rb {
        a.label.to_string()
    } else if rb > ra {
        b.label.to_string()
    } else {
        "Both equally".to_string()
    };
    out.push(Candidate {
        question: "Which source sweeps across a wider left->right range?".to_string(),
        qtype: QuestionType::MultipleChoice,
        choices: Some(wider_choices),
        answer: wider_answer,
        tags: vec![Tag::Comparative, Tag::Lateral],
        involved: vec![ia, ib],
        final_reasoning: contrast_phrase(a, b),
        rationale: format!(
            "Comparing sweeps, {} and {}.",
            lateral_short(a.label, a.trends),
            lateral_short(b.label, b.trends)
        ),
        truth: None,
    });

    let near_choices = vec![
        a.label.to_string(),
        b.label.to_string(),
        "Both of them".to_string(),
        "Neither of them".to_string(),
    ];
    let near_answer = match (approaches(a.trends), approaches(b.trends)) {
        (true, true) => "Both of them".to_string(),
        (true, false) => a.label.to_string(),
        (false, true) => b.label.to_string(),
        (false, false) => "Neither of them".to_string(),
    };
    out.push(Candidate {
        question: "Which source moves closer to the listener overall?".to_string(),
        qtype: QuestionType::MultipleChoice,
        choices: Some(near_choices.clone()),
        answer: near_answer,
        tags: vec![Tag::Comparative, Tag::Radial],
        involved: vec![ia, ib],
        final_reasoning: format!(
            "{} {}",
            radial_phrase(a.label, a.trends),
            radial_phrase(b.label, b.trends)
        ),
        rationale: format!(
            "{} and {}.",
            radial_short(a.label, a.trends),
            radial_short(b.label, b.trends)
        ),
        truth: None,
    });

    let static_answer = match (fully_static(a.trends), fully_static(b.trends)) {
        (true, true) => "Both of them".to_string(),
        (true, false) => a.label.to_string(),
        (false, true) => b.label.to_string(),
        (false, false) => "Neither of them".to_string(),
    };
    out.push(Candidate {
        question: "Which source stays fixed in place?".to_string(),
        qtype: QuestionType::MultipleChoice,
        choices: Some(near_choices),
        answer: static_answer,
        tags: vec![Tag::Comparative],
        involved: vec![ia, ib],
        final_reasoning: contrast_phrase(a, b),
        rationale: format!(
            "{} while {}.",
            lateral_short(a.label, a.trends),
            lateral_short(b.label, b.trends)
        ),
        truth: None,
    });

    let first_choices = vec![
        a.label.to_string(),
        b.label.to_string(),
        "Both at about the same time".to_string(),
    ];
    let gap = (a.trends.temporal.start_time_s - b.trends.temporal.start_time_s).abs();
    let first_answer = if gap < 0.25 {
        "Both at about the same time".to_string()
    } else if starts_before(a.trends, b.trends) {
        a.label.to_string()
    } else {
        b.label.to_string()
    };
    out.push(Candidate {
        question: "Which source starts first?".to_string(),
        qtype: QuestionType::MultipleChoice,
        choices: Some(first_choices),
        answer: first_answer,
        tags: vec![Tag::Temporal, Tag::Sequencing],
        involved: vec![ia, ib],
        final_reasoning: order_phrase(a, b),
        rationale: order_phrase(a, b),
        truth: None,
    });
    out
}

fn open_candidates(views: &[EventView], scene_duration_s: f64) -> Vec<Candidate> {
    let mut out = Vec::new();
    let all: Vec<usize> = (0..views.len()).collect();

    for (ix, v) in views.iter().enumerate() {
        let relation = match v.trends.distance.trend_profile {
            TrendProfile::Steady => "Its distance stays essentially unchanged as it moves.",
            TrendProfile::Approach => {
                "Its lateral path comes with a steady pull closer to the listener."
            }
            TrendProfile::Recede => {
                "Its lateral path comes with a steady drift away from the listener."
            }
            TrendProfile::ApproachThenRecede => {
                "Along the way it first closes in and then retreats."
            }
            TrendProfile::RecedeThenApproach => {
                "Along the way it first retreats and then closes back in."
            }
        };
        out.push(Candidate {
            question: format!(
                "Summarize how the {} changes in distance while moving laterally.",
                v.label
            ),
            qtype: QuestionType::Open,
            choices: None,
            answer: format!("{} {}", v.trends.summary_text, relation),
            tags: vec![Tag::Lateral, Tag::Radial],
            involved: vec![ix],
            final_reasoning: format!(
                "{} {}",
                lateral_phrase(v.label, v.trends),
                radial_phrase(v.label, v.trends)
            ),
            rationale: format!(
                "{} while {}.",
                lateral_short(v.label, v.trends),
                radial_short(v.label, v.trends)
            ),
            truth: None,
        });
        out.push(Candidate {
            question: format!(
                "Describe the path that the {} takes as it moves. How does its distance change relate to its lateral movement?",
                v.label
            ),
            qtype: QuestionType::Open,
            choices: None,
            answer: format!("{} {}", v.trends.summary_text, relation),
            tags: vec![Tag::Lateral, Tag::Radial],
            involved: vec![ix],
            final_reasoning: format!(
                "{} {}",
                lateral_phrase(v.label, v.trends),
                radial_phrase(v.label, v.trends)
            ),
            rationale: format!(
                "{} while {}.",
                lateral_short(v.label, v.trends),
                radial_short(v.label, v.trends)
            ),
            truth: None,
        });
        out.push(Candidate {
            question: format!(
                "Where does the {} seem to come from at the start, and how does that change by the end?",
                v.label
            ),
            qtype: QuestionType::Open,
            choices: None,
            answer: format!(
                "At first the {} is heard {}; by the end it is {}. {}",
                v.label,
                v.trends.azimuth.start_side.phrase(),
                v.trends.azimuth.end_side.phrase(),
                v.trends.summary_text
            ),
            tags: vec![Tag::Lateral],
            involved: vec![ix],
            final_reasoning: lateral_phrase(v.label, v.trends),
            rationale: lateral_short(v.label, v.trends) + ".",
            truth: None,
        });
    }

    // choreography and endpoints over the whole scene, ordered by onset
    let mut by_onset: Vec<&EventView> = views.iter().collect();
    by_onset.sort_by(|x, y| {
        x.trends
            .temporal
            .start_time_s
            .total_cmp(&y.trends.temporal.start_time_s)
    });
    let openers = ["First,", "Then,", "Finally,"];
    let choreography = by_onset
        .iter()
        .enumerate()
        .map(|(i, v)| {
            format!(
                "{} the {} starts {}, {}, and finishes {}.",
                openers[i.min(2)],
                v.label,
                v.trends.azimuth.start_side.phrase(),
                radial_short(v.label, v.trends),
                v.trends.azimuth.end_side.phrase()
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    out.push(Candidate {
        question: "Narrate the overall choreography: where does each source start, how does it move, and where does it finish?".to_string(),
        qtype: QuestionType::Open,
        choices: None,
        answer: choreography.clone(),
        tags: vec![Tag::Sequencing],
        involved: all.clone(),
        final_reasoning: choreography.clone(),
        rationale: "Tracing each source from entry to exit gives the scene's choreography.".to_string(),
        truth: None,
    });

    let endpoints = views
        .iter()
        .map(|v| {
            format!(
                "The {} ends {} because {}.",
                v.label,
                v.trends.azimuth.end_side.phrase(),
                lateral_short(v.label, v.trends)
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    out.push(Candidate {
        question:
            "Explain where each source ends and how its final position follows from its path."
                .to_string(),
        qtype: QuestionType::Open,
        choices: None,
        answer: endpoints.clone(),
        tags: vec![Tag::Sequencing, Tag::Lateral],
        involved: all.clone(),
        final_reasoning: endpoints,
        rationale: "Each ending position is the endpoint of the source's sweep.".to_string(),
        truth: None,
    });

    // prominence near the middle
    let winner_ix = all
        .iter()
        .copied()
        .max_by_key(|&i| middle_score(views[i].trends))
        .unwrap_or(0);
    let winner = &views[winner_ix];
    let prominence_answer = match middle_score(winner.trends) {
        2 => format!(
            "The {} feels most noticeable near the middle because it crosses the center as it moves, passing through that region.",
            winner.label
        ),
        1 => format!(
            "The {} feels most noticeable near the middle because it sits close to the center for part of its path.",
            winner.label
        ),
        _ => format!(
            "No source really occupies the middle; the {} stays {} throughout.",
            winner.label,
            winner.trends.azimuth.start_side.phrase()
        ),
    };
    out.push(Candidate {
        question: "Which source feels most noticeable near the middle of the scene and why?"
            .to_string(),
        qtype: QuestionType::Open,
        choices: None,
        answer: prominence_answer.clone(),
        tags: vec![Tag::Perception],
        involved: all.clone(),
        final_reasoning: prominence_answer,
        rationale: "Presence near the middle comes from crossing or sitting near the center."
            .to_string(),
        truth: None,
    });

    // pair templates
    for ia in 0..views.len() {
        for ib in (ia + 1)..views.len() {
            let a = &views[ia];
            let b = &views[ib];
            let compare = format!(
                "{} {} {}",
                a.trends.summary_text,
                b.trends.summary_text,
                contrast_phrase(a, b)
            );
            out.push(Candidate {
                question: format!(
                    "Compare the movement of the {} and the {} in both direction and distance.",
                    a.label, b.label
                ),
                qtype: QuestionType::Open,
                choices: None,
                answer: compare.clone(),
                tags: vec![Tag::RelativeMotion, Tag::Lateral, Tag::Radial],
                involved: vec![ia, ib],
                final_reasoning: compare,
                rationale: contrast_phrase(a, b),
                truth: None,
            });

            let converge_answer = if same_end_side(a.trends, b.trends) {
                format!(
                    "They move toward the same region; both end up {}.",
                    a.trends.azimuth.end_side.phrase()
                )
            } else {
                format!(
                    "They move apart: the {} ends {} while the {} ends {}.",
                    a.label,
                    a.trends.azimuth.end_side.phrase(),
                    b.label,
                    b.trends.azimuth.end_side.phrase()
                )
            };
            out.push(Candidate {
                question: format!(
                    "Do the {} and the {} move toward the same region or away from each other? Explain.",
                    a.label, b.label
                ),
                qtype: QuestionType::Open,
                choices: None,
                answer: converge_answer.clone(),
                tags: vec![Tag::RelativeMotion],
                involved: vec![ia, ib],
                final_reasoning: converge_answer,
                rationale: "Their ending regions tell whether the paths converge.".to_string(),
                truth: None,
            });

            let paths = format!(
                "{} {} {}",
                a.trends.summary_text,
                b.trends.summary_text,
                contrast_phrase(a, b)
            );
            out.push(Candidate {
                question: format!(
                    "Compare how the {} and the {} move through space. What makes their paths different?",
                    a.label, b.label
                ),
                qtype: QuestionType::Open,
                choices: None,
                answer: paths.clone(),
                tags: vec![Tag::RelativeMotion, Tag::Comparative],
                involved: vec![ia, ib],
                final_reasoning: paths,
                rationale: contrast_phrase(a, b),
                truth: None,
            });

            let temporal_answer = order_phrase(a, b);
            out.push(Candidate {
                question: format!(
                    "Which event starts first, and do the {} and the {} overlap in time?",
                    a.label, b.label
                ),
                qtype: QuestionType::Open,
                choices: None,
                answer: temporal_answer.clone(),
                tags: vec![Tag::Temporal, Tag::Sequencing],
                involved: vec![ia, ib],
                final_reasoning: temporal_answer.clone(),
                rationale: temporal_answer,
                truth: None,
            });
        }
    }
    let _ = scene_duration_s;
    out
}

// ---------------------------------------------------------------------------
// selection
// ---------------------------------------------------------------------------

/// Generate the per-scene QA set. Deterministic for a fixed (trends, meta,
/// seed, mix) tuple.
pub fn generate_qa(
    trends: &BTreeMap<String, FrameTrends>,
    meta: &SceneMetadata,
    rng_seed: u64,
    mix: &MixConstraints,
) -> Result<QaSet> {
    if trends.is_empty() {
        return Err(Error::EmptyTrends);
    }
    let mut views: Vec<EventView> = Vec::new();
    for event in &meta.events {
        let t = trends.get(&event.label).ok_or_else(|| {
            Error::InvalidArg(format!("no trends supplied for event {}", event.label))
        })?;
        views.push(EventView {
            label: &event.label,
            trends: t,
        });
    }
    let n_events = views.len();
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);

    // Build all candidates, template class by template class, shuffling
    // within each class so different seeds favor different events.
    let mut candidates: Vec<Candidate> = Vec::new();
    let class = |cands: Vec<Candidate>, rng: &mut ChaCha12Rng, out: &mut Vec<Candidate>| {
        let mut cands = cands;
        for i in (1..cands.len()).rev() {
            let j = rng.random_range(0..=i);
            cands.swap(i, j);
        }
        out.append(&mut cands);
    };

    let mut yn: Vec<Candidate> = Vec::new();
    for (ix, v) in views.iter().enumerate() {
        yn.extend(single_event_yes_no(ix, v, meta.duration_s));
    }
    for ia in 0..n_events {
        for ib in (ia + 1)..n_events {
            yn.extend(pair_yes_no(ia, ib, &views[ia], &views[ib]));
            yn.extend(pair_yes_no(ib, ia, &views[ib], &views[ia]));
        }
    }
    class(yn, &mut rng, &mut candidates);

    let mut mc: Vec<Candidate> = Vec::new();
    for (ix, v) in views.iter().enumerate() {
        mc.extend(single_event_multiple_choice(ix, v));
    }
    for ia in 0..n_events {
        for ib in (ia + 1)..n_events {
            mc.extend(pair_multiple_choice(ia, ib, &views[ia], &views[ib]));
        }
    }
    class(mc, &mut rng, &mut candidates);

    class(
        open_candidates(&views, meta.duration_s),
        &mut rng,
        &mut candidates,
    );

    // Greedy selection under the mix constraints.
    let mut used = vec![false; candidates.len()];
    let mut selected: Vec<usize> = Vec::new();
    let mut yes_count = 0usize;
    let mut no_count = 0usize;
    let mut waivers: Vec<Waiver> = Vec::new();

    let count_selected = |selected: &[usize], pred: &dyn Fn(&Candidate) -> bool| {
        selected.iter().filter(|&&i| pred(&candidates[i])).count()
    };

    // yes/no quota with alternating target truth
    let mut want_yes = rng.random_bool(0.5);
    for _ in 0..mix.min_yes_no {
        let pick = (0..candidates.len())
            .find(|&i| {
                !used[i]
                    && candidates[i].qtype == QuestionType::YesNo
                    && candidates[i].truth == Some(want_yes)
            })
            .or_else(|| {
                (0..candidates.len())
                    .find(|&i| !used[i] && candidates[i].qtype == QuestionType::YesNo)
            });
        if let Some(i) = pick {
            used[i] = true;
            if candidates[i].truth == Some(true) {
                yes_count += 1;
            } else {
                no_count += 1;
            }
            selected.push(i);
        }
        want_yes = !want_yes;
    }
    if count_selected(&selected, &|c| c.qtype == QuestionType::YesNo) < mix.min_yes_no {
        waivers.push(Waiver {
            constraint: "min_yes_no".into(),
            reason: "not enough yes/no candidates for this scene".into(),
        });
    }

    // helper to fill a quota from a predicate, preferring non-yes/no items
    // so the balance is preserved
    macro_rules! fill {
        ($name:expr, $min:expr, $pred:expr, $reason:expr) => {{
            let pred: &dyn Fn(&Candidate) -> bool = &$pred;
            let mut have = count_selected(&selected, pred);
            while have < $min {
                let pick = (0..candidates.len())
                    .find(|&i| {
                        !used[i]
                            && pred(&candidates[i])
                            && candidates[i].qtype != QuestionType::YesNo
                    })
                    .or_else(|| {
                        // balance-aware yes/no fallback
                        let want = yes_count <= no_count;
                        (0..candidates.len())
                            .find(|&i| {
                                !used[i]
                                    && pred(&candidates[i])
                                    && candidates[i].truth == Some(want)
                            })
                            .or_else(|| {
                                (0..candidates.len()).find(|&i| !used[i] && pred(&candidates[i]))
                            })
                    });
                match pick {
                    Some(i) => {
                        used[i] = true;
                        match candidates[i].truth {
                            Some(true) => yes_count += 1,
                            Some(false) => no_count += 1,
                            None => {}
                        }
                        selected.push(i);
                        have += 1;
                    }
                    None => {
                        waivers.push(Waiver {
                            constraint: $name.into(),
                            reason: $reason.into(),
                        });
                        break;
                    }
                }
            }
        }};
    }

    fill!(
        "min_multiple_choice",
        mix.min_multiple_choice,
        |c: &Candidate| c.qtype == QuestionType::MultipleChoice,
        "not enough multiple-choice candidates for this scene"
    );
    if n_events >= 2 {
        fill!(
            "min_relative_motion_open",
            mix.min_relative_motion_open,
            |c: &Candidate| c.qtype == QuestionType::Open && c.tags.contains(&Tag::RelativeMotion),
            "not enough relative-motion open candidates"
        );
    } else {
        waivers.push(Waiver {
            constraint: "min_relative_motion_open".into(),
            reason: "relative motion requires at least two events".into(),
        });
        waivers.push(Waiver {
            constraint: "comparative".into(),
            reason: "comparative items require at least two events".into(),
        });
    }
    fill!(
        "min_open",
        mix.min_open,
        |c: &Candidate| c.qtype == QuestionType::Open,
        "not enough open candidates for this scene"
    );
    fill!(
        "min_radial",
        mix.min_radial,
        |c: &Candidate| c.tags.contains(&Tag::Radial),
        "not enough radial candidates for this scene"
    );
    fill!(
        "min_sequencing",
        mix.min_sequencing,
        |c: &Candidate| c.tags.contains(&Tag::Sequencing),
        "not enough sequencing candidates for this scene"
    );
    fill!(
        "min_lateral_radial",
        mix.min_lateral_radial,
        |c: &Candidate| c.tags.contains(&Tag::Lateral) && c.tags.contains(&Tag::Radial),
        "not enough combined lateral+radial candidates"
    );
    fill!(
        "min_temporal",
        mix.min_temporal,
        |c: &Candidate| c.tags.contains(&Tag::Temporal),
        "not enough temporal candidates for this scene"
    );

    // assemble items in selection order
    let mut items = Vec::with_capacity(selected.len());
    for (n, &ci) in selected.iter().enumerate() {
        let c = &candidates[ci];
        let involved: Vec<(&str, &FrameTrends)> = c
            .involved
            .iter()
            .map(|&i| (views[i].label, views[i].trends))
            .collect();
        let difficulty = classify_difficulty(c.qtype, &c.tags, involved.len());
        let thinking = build_thinking(
            c.qtype,
            &c.tags,
            &involved,
            meta.duration_s,
            c.final_reasoning.clone(),
        );
        let item = QAItem {
            id: format!("{}_q{:03}", meta.scene_id, n),
            question: c.question.clone(),
            question_type: c.qtype,
            choices: c.choices.clone(),
            answer: c.answer.clone(),
            thinking,
            rationale: c.rationale.clone(),
            tags: c.tags.clone(),
            difficulty,
            relevant_events: c
                .involved
                .iter()
                .map(|&i| views[i].label.to_string())
                .collect(),
            scene_id: meta.scene_id.clone(),
        };
        debug_assert!(item.validate(None).is_empty(), "{:?}", item.validate(None));
        items.push(item);
    }

    Ok(QaSet { items, waivers })
}
