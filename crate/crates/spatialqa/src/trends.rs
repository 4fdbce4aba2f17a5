//! Qualitative motion descriptors derived from per-frame tracks.
//!
//! The extractor turns azimuth/distance tracks into the compact vocabulary
//! the question generator consumes: a lateral direction with span and
//! side information, a radial trend profile with a variation magnitude,
//! temporal bounds, and a one-sentence summary. Serialized field names match
//! the question-generation prompt's input schema exactly so the JSON can be
//! embedded verbatim.
//!
//! Category boundaries are declared here, not inferred from data: sides
//! split at +-15°, spans at 30°/80°, distance variation at 0.5/1.5/3 m. A
//! track counts as crossing the center only when it fully traverses the
//! +-15° band.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::SceneMetadata;
use crate::trajectory::TrajectoryKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LateralDirection {
    #[serde(rename = "static")]
    Static,
    #[serde(rename = "left->right")]
    LeftToRight,
    #[serde(rename = "right->left")]
    RightToLeft,
    #[serde(rename = "arc left->right")]
    ArcLeftToRight,
    #[serde(rename = "arc right->left")]
    ArcRightToLeft,
}

impl LateralDirection {
    pub fn is_leftward(&self) -> bool {
        matches!(
            self,
            LateralDirection::RightToLeft | LateralDirection::ArcRightToLeft
        )
    }

    pub fn is_rightward(&self) -> bool {
        matches!(
            self,
            LateralDirection::LeftToRight | LateralDirection::ArcLeftToRight
        )
    }

    pub fn is_static(&self) -> bool {
        matches!(self, LateralDirection::Static)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanCategory {
    Narrow,
    Moderate,
    Wide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Center,
    Right,
}

impl Side {
    pub fn phrase(&self) -> &'static str {
        match self {
            Side::Left => "on the left",
            Side::Center => "near the center",
            Side::Right => "on the right",
        }
    }

    pub fn word(&self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Center => "center",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendProfile {
    #[serde(rename = "steady")]
    Steady,
    #[serde(rename = "approach")]
    Approach,
    #[serde(rename = "recede")]
    Recede,
    #[serde(rename = "approach->recede")]
    ApproachThenRecede,
    #[serde(rename = "recede->approach")]
    RecedeThenApproach,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationCategory {
    None,
    Slight,
    Moderate,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AzimuthTrends {
    pub direction: LateralDirection,
    pub span_category: SpanCategory,
    pub crosses_center: bool,
    pub start_side: Side,
    pub end_side: Side,
    pub is_arc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTrends {
    pub trend_profile: TrendProfile,
    pub variation_category: VariationCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalTrends {
    #[serde(rename = "start_time")]
    pub start_time_s: f64,
    #[serde(rename = "end_time")]
    pub end_time_s: f64,
    #[serde(rename = "duration")]
    pub duration_s: f64,
}

/// The full per-event descriptor set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTrends {
    pub azimuth: AzimuthTrends,
    pub distance: DistanceTrends,
    pub temporal: TemporalTrends,
    pub summary_text: String,
}

/// Classification boundaries.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TrendThresholds {
    /// |azimuth| below this is "center"; crossing requires traversing the
    /// full band.
    pub side_band_deg: f64,
    /// Azimuth range below which a track counts as laterally static.
    pub static_range_deg: f64,
    pub span_narrow_max_deg: f64,
    pub span_wide_min_deg: f64,
    pub variation_none_max_m: f64,
    pub variation_slight_max_m: f64,
    pub variation_moderate_max_m: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        TrendThresholds {
            side_band_deg: 15.0,
            static_range_deg: 5.0,
            span_narrow_max_deg: 30.0,
            span_wide_min_deg: 80.0,
            variation_none_max_m: 0.5,
            variation_slight_max_m: 1.5,
            variation_moderate_max_m: 3.0,
        }
    }
}

impl TrendThresholds {
    pub fn side_of(&self, azimuth_deg: f64) -> Side {
        if azimuth_deg < -self.side_band_deg {
            Side::Left
        } else if azimuth_deg > self.side_band_deg {
            Side::Right
        } else {
            Side::Center
        }
    }

    pub fn span_category(&self, range_deg: f64) -> SpanCategory {
        if range_deg < self.span_narrow_max_deg {
            SpanCategory::Narrow
        } else if range_deg <= self.span_wide_min_deg {
            SpanCategory::Moderate
        } else {
            SpanCategory::Wide
        }
    }

    pub fn variation_category(&self, range_m: f64) -> VariationCategory {
        if range_m < self.variation_none_max_m {
            VariationCategory::None
        } else if range_m <= self.variation_slight_max_m {
            VariationCategory::Slight
        } else if range_m <= self.variation_moderate_max_m {
            VariationCategory::Moderate
        } else {
            VariationCategory::Strong
        }
    }
}

/// Classify raw tracks. `kind` supplies ground truth when available: arcs
/// get arc direction labels directly; without it an arc is inferred from a
/// non-static sweep at "none" distance variation.
pub fn classify_tracks(
    azimuth_deg: &[f64],
    distance_m: &[f64],
    kind: Option<TrajectoryKind>,
    th: &TrendThresholds,
) -> (AzimuthTrends, DistanceTrends) {
    assert!(!azimuth_deg.is_empty() && !distance_m.is_empty());

    let az_first = azimuth_deg[0];
    let az_last = *azimuth_deg.last().unwrap();
    let az_min = azimuth_deg.iter().cloned().fold(f64::INFINITY, f64::min);
    let az_max = azimuth_deg
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let az_range = az_max - az_min;
    let net = az_last - az_first;

    let d_first = distance_m[0];
    let d_last = *distance_m.last().unwrap();
    let d_min = distance_m.iter().cloned().fold(f64::INFINITY, f64::min);
    let d_max = distance_m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d_range = d_max - d_min;

    let variation_category = th.variation_category(d_range);
    let slight = th.variation_none_max_m;
    let trend_profile = if d_range < slight {
        TrendProfile::Steady
    } else {
        let fall_to_min = d_first - d_min;
        let rise_after_min = d_last - d_min;
        let rise_to_max = d_max - d_first;
        let fall_after_max = d_max - d_last;
        if fall_to_min >= slight && rise_after_min >= slight {
            TrendProfile::ApproachThenRecede
        } else if rise_to_max >= slight && fall_after_max >= slight {
            TrendProfile::RecedeThenApproach
        } else if d_last - d_first <= -slight {
            TrendProfile::Approach
        } else if d_last - d_first >= slight {
            TrendProfile::Recede
        } else {
            TrendProfile::Steady
        }
    };

    let laterally_static = az_range <= th.static_range_deg;
    let arc_from_kind = kind.map(|k| k.is_arc());
    let is_arc = match arc_from_kind {
        Some(flag) => flag,
        None => !laterally_static && variation_category == VariationCategory::None,
    };
    let direction = if laterally_static {
        LateralDirection::Static
    } else if net >= 0.0 {
        if is_arc {
            LateralDirection::ArcLeftToRight
        } else {
            LateralDirection::LeftToRight
        }
    } else if is_arc {
        LateralDirection::ArcRightToLeft
    } else {
        LateralDirection::RightToLeft
    };

    let span_category = if laterally_static {
        SpanCategory::Narrow
    } else {
        th.span_category(az_range)
    };
    let crosses_center = az_min <= -th.side_band_deg && az_max >= th.side_band_deg;

    (
        AzimuthTrends {
            direction,
            span_category,
            crosses_center,
            start_side: th.side_of(az_first),
            end_side: th.side_of(az_last),
            is_arc: is_arc && !laterally_static,
        },
        DistanceTrends {
            trend_profile,
            variation_category,
        },
    )
}

fn motion_clause(az: &AzimuthTrends) -> String {
    match az.direction {
        LateralDirection::Static => format!("stays {}", az.start_side.phrase()),
        LateralDirection::LeftToRight | LateralDirection::RightToLeft => {
            let crossing = if az.crosses_center {
                ", crossing the center,"
            } else {
                ""
            };
            format!(
                "moves from the {} to the {}{}",
                az.start_side.word(),
                az.end_side.word(),
                crossing
            )
        }
        LateralDirection::ArcLeftToRight | LateralDirection::ArcRightToLeft => format!(
            "sweeps along a curved arc from the {} to the {}",
            az.start_side.word(),
            az.end_side.word()
        ),
    }
}

fn radial_clause(dist: &DistanceTrends) -> &'static str {
    match dist.trend_profile {
        TrendProfile::Steady => "at a steady distance",
        TrendProfile::Approach => "while moving closer",
        TrendProfile::Recede => "while moving farther away",
        TrendProfile::ApproachThenRecede => "coming closer before backing away",
        TrendProfile::RecedeThenApproach => "drifting farther before coming back closer",
    }
}

/// One deterministic sentence combining the lateral and radial trends, in
/// listener-centric vocabulary.
pub fn summarize(trends: &FrameTrends, label: &str) -> String {
    format!(
        "The {} {} {}.",
        label,
        motion_clause(&trends.azimuth),
        radial_clause(&trends.distance)
    )
}

/// Extract trends for every event in a scene, keyed by label.
pub fn extract_frame_trends(
    meta: &SceneMetadata,
    th: &TrendThresholds,
) -> Result<BTreeMap<String, FrameTrends>> {
    let mut out = BTreeMap::new();
    for event in &meta.events {
        if event.azimuth_deg.is_empty() || event.distance_m.is_empty() {
            return Err(Error::InvalidArg(format!(
                "event {} has empty tracks",
                event.label
            )));
        }
        let (azimuth, distance) = classify_tracks(
            &event.azimuth_deg,
            &event.distance_m,
            Some(event.trajectory_kind),
            th,
        );
        let mut trends = FrameTrends {
            azimuth,
            distance,
            temporal: TemporalTrends {
                start_time_s: event.onset_s,
                end_time_s: event.offset_s,
                duration_s: event.offset_s - event.onset_s,
            },
            summary_text: String::new(),
        };
        trends.summary_text = summarize(&trends, &event.label);
        out.insert(event.label.clone(), trends);
    }
    Ok(out)
}
