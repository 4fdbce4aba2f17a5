//! Query-conditioned temporal masking.
//!
//! Given a question, the labels it names are recovered by case-insensitive
//! whole-word matching. Their time spans come either from ground-truth
//! onsets/offsets or from framewise grounding scores (binarize at a global
//! threshold, clean with a median filter, take the surviving runs). The
//! waveform outside the span union is zeroed on both channels; samples
//! inside are preserved bit-exactly. An empty span list means no masking.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::StereoBuffer;
use crate::scene::SceneMetadata;

/// Half-open-ish time interval in seconds (start < end).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start_s: f64,
    pub end_s: f64,
}

impl Span {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Span { start_s, end_s }
    }
}

/// Masking regime. `Scored` covers the grounding-model path: scores are
/// ingested per (scene, label) at the trajectory frame rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MaskMode {
    NoMask,
    Gt,
    Scored {
        threshold: f64,
        median_window_s: f64,
        frame_rate_hz: f64,
    },
}

impl MaskMode {
    pub fn scored_default() -> Self {
        MaskMode::Scored {
            threshold: 0.8,
            median_window_s: 0.3,
            frame_rate_hz: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let MaskMode::Scored {
            threshold,
            median_window_s,
            frame_rate_hz,
        } = self
        {
            if !(*threshold > 0.0 && *threshold < 1.0) {
                return Err(Error::Config("mask threshold must be in (0, 1)".into()));
            }
            if *median_window_s <= 0.0 {
                return Err(Error::Config("median window must be > 0".into()));
            }
            if *frame_rate_hz <= 0.0 {
                return Err(Error::Config("frame rate must be > 0".into()));
            }
        }
        Ok(())
    }
}

fn words_of(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

fn contains_word_seq(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Labels named by the question: whole-word, case-insensitive match of the
/// full label phrase or any of its words. Returned in scene order.
pub fn extract_query_events(question: &str, scene_labels: &[String]) -> Vec<String> {
    let q_words = words_of(question);
    scene_labels
        .iter()
        .filter(|label| {
            let l_words = words_of(label);
            contains_word_seq(&q_words, &l_words) || l_words.iter().any(|w| q_words.contains(w))
        })
        .cloned()
        .collect()
}

fn median_window_frames(median_window_s: f64, frame_rate_hz: f64) -> usize {
    let w = (median_window_s * frame_rate_hz).round() as usize;
    let w = w.max(1);
    if w.is_multiple_of(2) {
        w + 1
    } else {
        w
    }
}

// Symmetric reflection for out-of-range frame indices: -1 -> 0, n -> n-1.
fn reflect(ix: i64, n: i64) -> usize {
    let mut i = ix;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// Binarize framewise scores at the threshold, median-filter the binary
/// sequence (window rounded to an odd frame count, edges reflected), and
/// convert the surviving 1-runs to spans in seconds.
pub fn scores_to_spans(scores: &[f64], mode: &MaskMode) -> Result<Vec<Span>> {
    let MaskMode::Scored {
        threshold,
        median_window_s,
        frame_rate_hz,
    } = mode
    else {
        return Err(Error::InvalidArg(
            "scores_to_spans requires the scored mask mode".into(),
        ));
    };
    mode.validate()?;
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidArg("scores must lie in [0, 1]".into()));
    }

    let binary: Vec<u8> = scores.iter().map(|s| u8::from(*s >= *threshold)).collect();
    let w = median_window_frames(*median_window_s, *frame_rate_hz);
    let half = (w / 2) as i64;
    let n = binary.len() as i64;
    let filtered: Vec<u8> = (0..n)
        .map(|i| {
            let ones: usize = (-half..=half)
                .map(|k| binary[reflect(i + k, n)] as usize)
                .sum();
            u8::from(ones * 2 > w)
        })
        .collect();

    let mut spans = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, v) in filtered.iter().enumerate() {
        match (*v, run_start) {
            (1, None) => run_start = Some(i),
            (0, Some(s)) => {
                spans.push(Span::new(
                    s as f64 / frame_rate_hz,
                    i as f64 / frame_rate_hz,
                ));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        spans.push(Span::new(
            s as f64 / frame_rate_hz,
            filtered.len() as f64 / frame_rate_hz,
        ));
    }
    Ok(spans)
}

/// Zero both channels outside the union of `spans`; samples inside are
/// copied bit-exactly. No spans means no masking.
pub fn apply_mask(audio: &StereoBuffer, spans: &[Span]) -> Result<StereoBuffer> {
    if spans.is_empty() {
        return Ok(audio.clone());
    }
    let fs = audio.sample_rate_hz as f64;
    let n = audio.len();
    let duration = n as f64 / fs;
    let mut keep = vec![false; n];
    for span in spans {
        if !(span.start_s >= 0.0 && span.end_s > span.start_s && span.end_s <= duration + 1e-9) {
            return Err(Error::SpanOutOfBounds {
                start_s: span.start_s,
                end_s: span.end_s,
                duration_s: duration,
            });
        }
        let a = (span.start_s * fs).round() as usize;
        let b = ((span.end_s * fs).round() as usize).min(n);
        for flag in keep.iter_mut().take(b).skip(a) {
            *flag = true;
        }
    }
    let mut out = StereoBuffer::silence(n, audio.sample_rate_hz);
    for (i, flag) in keep.iter().enumerate() {
        if *flag {
            out.left[i] = audio.left[i];
            out.right[i] = audio.right[i];
        }
    }
    Ok(out)
}

/// Ground-truth spans: the onset/offset of each relevant event, merged where
/// they overlap or touch.
pub fn gt_spans(meta: &SceneMetadata, relevant_labels: &[String]) -> Result<Vec<Span>> {
    let mut spans = Vec::new();
    for label in relevant_labels {
        let event = meta
            .event_by_label(label)
            .ok_or_else(|| Error::UnknownLabel {
                label: label.clone(),
            })?;
        spans.push(Span::new(event.onset_s, event.offset_s));
    }
    Ok(merge_spans(spans))
}

/// Sort and union intervals.
pub fn merge_spans(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut merged: Vec<Span> = Vec::new();
    for s in spans {
        match merged.last_mut() {
            Some(last) if s.start_s <= last.end_s + 1e-12 => {
                last.end_s = last.end_s.max(s.end_s);
            }
            _ => merged.push(s),
        }
    }
    merged
}

/// Built-in oracle scorer for desk tests: per-frame energy of a solo render
/// on the scene timeline, normalized to [0, 1].
pub fn oracle_scores(solo: &StereoBuffer, frame_rate_hz: f64, duration_s: f64) -> Vec<f64> {
    let fs = solo.sample_rate_hz as f64;
    let n_frames = crate::trajectory::frame_count(duration_s, frame_rate_hz);
    let frame_len = (fs / frame_rate_hz).round() as usize;
    let mut energies = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let a = f * frame_len;
        let b = ((f + 1) * frame_len).min(solo.len());
        let mut e = 0.0;
        if a < b {
            for i in a..b {
                e += solo.left[i] * solo.left[i] + solo.right[i] * solo.right[i];
            }
            e /= (b - a) as f64;
        }
        energies.push(e);
    }
    let max = energies.iter().cloned().fold(0.0f64, f64::max);
    if max > 0.0 {
        for e in energies.iter_mut() {
            *e /= max;
        }
    }
    energies
}

/// Score-file format: `# frame_rate_hz=<rate>` comment, `frame_index,score`
/// header, one row per frame.
pub fn write_scores(path: impl AsRef<Path>, frame_rate_hz: f64, scores: &[f64]) -> Result<()> {
    let mut text = format!("# frame_rate_hz={frame_rate_hz}\nframe_index,score\n");
    for (i, s) in scores.iter().enumerate() {
        text.push_str(&format!("{i},{s:.6}\n"));
    }
    crate::pipeline::atomic_write(path, text.as_bytes())
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<(f64, Vec<f64>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut frame_rate = None;
    let mut scores = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("frame_rate_hz=") {
                frame_rate = Some(v.trim().parse::<f64>().map_err(|_| Error::ScoreFile {
                    path: path.to_path_buf(),
                    reason: format!("bad frame rate on line {}", ln + 1),
                })?);
            }
            continue;
        }
        if line.starts_with("frame_index") {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(_), Some(score), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::ScoreFile {
                path: path.to_path_buf(),
                reason: format!("expected `frame_index,score` on line {}", ln + 1),
            });
        };
        scores.push(score.trim().parse::<f64>().map_err(|_| Error::ScoreFile {
            path: path.to_path_buf(),
            reason: format!("bad score on line {}", ln + 1),
        })?);
    }
    let frame_rate = frame_rate.ok_or_else(|| Error::ScoreFile {
        path: path.to_path_buf(),
        reason: "missing `# frame_rate_hz=` header".into(),
    })?;
    Ok((frame_rate, scores))
}
