//! Shared helpers for the integration suites: a synthetic tone/noise event
//! corpus and small signal utilities.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use spatialqa::wav::{self, SampleFormat};

pub const DESK_LABELS: [&str; 12] = [
    "Chime", "Hum", "Buzz", "Whoosh", "Rustle", "Drone", "Ping", "Hiss", "Rumble", "Chirp",
    "Knock", "Murmur",
];

// deterministic noise without pulling an RNG into every test
fn lcg(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}

fn tone_or_noise(label_ix: usize, fs: u32, duration_s: f64) -> Vec<f64> {
    let n = (fs as f64 * duration_s) as usize;
    if label_ix % 3 == 2 {
        let mut state = 0x9E3779B97F4A7C15u64.wrapping_add(label_ix as u64);
        (0..n).map(|_| 0.4 * lcg(&mut state)).collect()
    } else {
        let f = 180.0 + 90.0 * label_ix as f64;
        (0..n)
            .map(|i| {
                let t = i as f64 / fs as f64;
                0.45 * (2.0 * std::f64::consts::PI * f * t).sin()
                    + 0.1 * (2.0 * std::f64::consts::PI * 2.1 * f * t).sin()
            })
            .collect()
    }
}

/// Write 12 synthetic mono events plus their manifest; returns the manifest
/// path. One event is stored at 32 kHz to exercise resampling.
pub fn write_desk_manifest(dir: &Path) -> PathBuf {
    let mut csv = String::from(
        "id,label,audio_path,duration_s,quality_score,onset_in_source_s,offset_in_source_s\n",
    );
    for (i, label) in DESK_LABELS.iter().enumerate() {
        let fs: u32 = if i == 5 { 32000 } else { 16000 };
        let duration = 4.0 + (i % 6) as f64;
        let samples = tone_or_noise(i, fs, duration);
        let file = format!("{}.wav", label.to_lowercase());
        wav::write_mono(dir.join(&file), fs, &samples, SampleFormat::Int16).unwrap();
        let score = 0.5 + 0.04 * i as f64;
        csv.push_str(&format!(
            "evt_{label},{label},{file},{duration},{score:.2},0.0,{duration}\n"
        ));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, csv).unwrap();
    path
}

pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn relative_rms_error(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let mut err = 0.0;
    let mut norm = 0.0;
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0.0);
        let y = b.get(i).copied().unwrap_or(0.0);
        err += (x - y) * (x - y);
        norm += y * y;
    }
    (err / norm.max(1e-300)).sqrt()
}

pub fn direct_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len() + h.len() - 1];
    for (i, xi) in x.iter().enumerate() {
        for (j, hj) in h.iter().enumerate() {
            out[i + j] += xi * hj;
        }
    }
    out
}

/// Lag (in samples) at which `right` best aligns with `left`; positive means
/// `right` arrives later.
pub fn xcorr_lag(left: &[f64], right: &[f64], max_lag: i64) -> i64 {
    let n = left.len().min(right.len());
    let mut best = (f64::NEG_INFINITY, 0i64);
    for lag in -max_lag..=max_lag {
        let mut acc = 0.0;
        for (i, l) in left.iter().enumerate().take(n) {
            let j = i as i64 + lag;
            if j >= 0 && (j as usize) < n {
                acc += l * right[j as usize];
            }
        }
        if acc > best.0 {
            best = (acc, lag);
        }
    }
    best.1
}

/// Band-limited peak of a sampled impulse response: sinc-interpolate on a
/// 1/32-sample grid around the largest tap.
pub fn bandlimited_peak(taps: &[f64]) -> f64 {
    let center = taps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i as f64)
        .unwrap_or(0.0);
    let mut peak = 0.0f64;
    let steps = 129; // center +- 2 samples at 1/32 resolution
    for s in 0..steps {
        let t = center - 2.0 + s as f64 / 32.0;
        let lo = (t as i64 - 64).max(0) as usize;
        let hi = ((t as i64 + 64) as usize).min(taps.len().saturating_sub(1));
        let mut v = 0.0;
        for (k, tap) in taps.iter().enumerate().take(hi + 1).skip(lo) {
            let dt = t - k as f64;
            let sinc = if dt.abs() < 1e-12 {
                1.0
            } else {
                (std::f64::consts::PI * dt).sin() / (std::f64::consts::PI * dt)
            };
            v += tap * sinc;
        }
        peak = peak.max(v.abs());
    }
    peak
}
