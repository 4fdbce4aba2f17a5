//! Plain-text rendering of the accuracy/interaction table.

use super::{Condition, EvalReport, MaskCondition};

fn cell_pct(report: &EvalReport, mask: MaskCondition, thinking: bool, facet: &str) -> String {
    let condition = Condition {
        mask_mode: mask,
        thinking,
    };
    let Some(cr) = report.condition(&condition) else {
        return "-".into();
    };
    let cell = if facet == "overall" {
        Some(cr.overall)
    } else {
        cr.by_question_type.get(facet).copied()
    };
    match cell {
        Some(c) if c.total > 0 => format!("{:.1}", c.accuracy_pct()),
        _ => "-".into(),
    }
}

fn delta(report: &EvalReport, method: MaskCondition, facet: &str) -> String {
    match report
        .delta_interaction
        .get(&format!("{}/{}", method.as_str(), facet))
    {
        Some(v) => format!("{:+.1}", v),
        None => "-".into(),
    }
}

/// Rows: per question type plus overall. Columns: thinking and non-thinking
/// accuracies under each masking method, then the two interaction columns.
pub fn render_table(report: &EvalReport) -> String {
    let rows: [(&str, &str); 4] = [
        ("Yes_No", "yes_no"),
        ("Multiple Choice", "multiple_choice"),
        ("Open", "open"),
        ("Overall", "overall"),
    ];
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} | {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7} | {:>8} {:>8}\n",
        "Question Type",
        "T/NoMsk",
        "T/AGM",
        "T/GT",
        "N/NoMsk",
        "N/AGM",
        "N/GT",
        "dI(AGM)",
        "dI(GT)"
    ));
    out.push_str(&"-".repeat(96));
    out.push('\n');
    for (display, facet) in rows {
        out.push_str(&format!(
            "{:<16} | {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7} | {:>8} {:>8}\n",
            display,
            cell_pct(report, MaskCondition::NoMask, true, facet),
            cell_pct(report, MaskCondition::Agm, true, facet),
            cell_pct(report, MaskCondition::Gt, true, facet),
            cell_pct(report, MaskCondition::NoMask, false, facet),
            cell_pct(report, MaskCondition::Agm, false, facet),
            cell_pct(report, MaskCondition::Gt, false, facet),
            delta(report, MaskCondition::Agm, facet),
            delta(report, MaskCondition::Gt, facet),
        ));
    }
    out
}
