//! Acceptance suite. Each criterion prints one `ACCEPTANCE <n> ... PASS/FAIL`
//! line (run with `--nocapture` to see them on success) and fails the test
//! on any violation.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use common::*;
use spatialqa::eval::delta_from_accuracies;
use spatialqa::masking::{apply_mask, scores_to_spans, MaskMode, Span};
use spatialqa::qa::{generate_qa, MixConstraints, QAItem, QuestionType};
use spatialqa::render::{render_moving_source, FftConvolver, StereoBuffer};
use spatialqa::room::{compute_rir, image_sources, MicArray, RoomSpec};
use spatialqa::scene::{compose_scene, metadata_from_spec, ComposeConfig, SceneMetadata};
use spatialqa::trajectory::{polar_to_cartesian, Point3, PolarPos, Trajectory, TrajectoryKind};
use spatialqa::trends::{
    classify_tracks, extract_frame_trends, FrameTrends, LateralDirection, Side, SpanCategory,
    TrendProfile, TrendThresholds, VariationCategory,
};

fn finish(criterion: usize, name: &str, failures: Vec<String>, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    let mut failures = failures;
    if elapsed > budget_s {
        failures.push(format!(
            "runtime {elapsed:.1}s exceeded the {budget_s}s budget"
        ));
    }
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion} ({name}): {verdict} [{elapsed:.2}s]");
    assert!(
        failures.is_empty(),
        "criterion {criterion} failed:\n{}",
        failures.join("\n")
    );
}

// ---------------------------------------------------------------------------
// 1. interaction-metric regression
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_delta_interaction_regression() {
    let started = Instant::now();
    let mut failures = Vec::new();
    // (facet, acc_t_method, acc_n_method, acc_t_nomask, acc_n_nomask, expected)
    let cells: &[(&str, f64, f64, f64, f64, f64)] = &[
        // by question type
        ("yes_no/agm", 73.8, 72.8, 72.1, 72.6, 1.5),
        ("yes_no/gt", 76.3, 72.3, 72.1, 72.6, 4.5),
        ("mc/agm", 52.9, 50.3, 53.1, 50.4, -0.1),
        ("mc/gt", 52.8, 50.3, 53.1, 50.4, -0.2),
        ("open/agm", 41.4, 41.0, 41.0, 41.2, 0.6),
        ("open/gt", 41.8, 41.5, 41.0, 41.2, 0.5),
        ("overall/agm", 55.0, 54.0, 54.3, 54.1, 0.8),
        ("overall/gt", 56.1, 54.1, 54.3, 54.1, 1.8),
        // question type x relevant-event count
        ("mc-complete/agm", 53.0, 50.0, 53.2, 50.6, 0.4),
        ("mc-complete/gt", 53.9, 51.0, 53.2, 50.6, 0.3),
        ("mc-1ev/agm", 56.3, 54.2, 57.0, 52.7, -2.2),
        ("mc-1ev/gt", 52.7, 50.2, 57.0, 52.7, -1.8),
        ("mc-2ev/agm", 50.9, 50.0, 51.1, 48.7, -1.5),
        ("mc-2ev/gt", 47.7, 47.0, 51.1, 48.7, -1.7),
        ("open-complete/agm", 36.1, 35.5, 35.6, 36.1, 1.1),
        ("open-complete/gt", 36.2, 36.3, 35.6, 36.1, 0.4),
        ("open-1ev/agm", 53.2, 52.3, 52.8, 52.3, 0.4),
        ("open-1ev/gt", 54.2, 52.7, 52.8, 52.3, 1.0),
        ("open-2ev/agm", 43.0, 43.7, 43.1, 43.3, -0.5),
        ("open-2ev/gt", 43.6, 43.2, 43.1, 43.3, 0.6),
        ("yn-complete/agm", 73.2, 72.4, 72.7, 72.4, 0.5),
        ("yn-complete/gt", 74.2, 72.8, 72.7, 72.4, 1.1),
        ("yn-1ev/agm", 73.8, 72.8, 70.9, 72.5, 2.6),
        ("yn-1ev/gt", 77.5, 71.3, 70.9, 72.5, 7.8),
        ("yn-2ev/agm", 74.8, 73.6, 75.8, 73.4, -1.2),
        ("yn-2ev/gt", 76.2, 75.3, 75.8, 73.4, -1.5),
        // question type x overlap
        ("yn-noov/agm", 74.4, 73.0, 72.2, 72.6, 1.8),
        ("yn-noov/gt", 78.3, 72.2, 72.2, 72.6, 6.5),
        ("yn-ov/agm", 73.2, 72.6, 72.0, 72.6, 1.2),
        ("yn-ov/gt", 74.4, 72.4, 72.0, 72.6, 2.6),
        ("mc-noov/agm", 55.3, 47.6, 53.2, 49.2, 3.7),
        ("mc-noov/gt", 54.2, 48.4, 53.2, 49.2, 1.8),
        ("mc-ov/agm", 50.5, 53.0, 53.0, 51.6, -3.9),
        ("mc-ov/gt", 51.4, 52.2, 53.0, 51.6, -2.2),
        ("open-noov/agm", 43.0, 41.2, 42.5, 41.8, 1.1),
        ("open-noov/gt", 43.8, 41.9, 42.5, 41.8, 1.2),
        ("open-ov/agm", 39.8, 40.8, 39.6, 40.6, 0.0),
        ("open-ov/gt", 39.8, 41.0, 39.6, 40.6, -0.2),
    ];
    for &(name, t_m, n_m, t_no, n_no, expected) in cells {
        let got = delta_from_accuracies(t_m, n_m, t_no, n_no);
        if (got - expected).abs() > 0.05 + 1e-9 {
            failures.push(format!(
                "{name}: got {got:.3}, expected {expected:.1} within 0.1 pp"
            ));
        }
    }
    // the metric is identically zero when the method is its own baseline
    for &(_, t_m, n_m, _, _, _) in cells.iter().take(4) {
        if delta_from_accuracies(t_m, n_m, t_m, n_m) != 0.0 {
            failures.push("self-baseline delta must be exactly zero".into());
        }
    }
    finish(1, "interaction regression", failures, started, 1.0);
}

// ---------------------------------------------------------------------------
// 2. image-source correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_image_source_method() {
    let started = Instant::now();
    let mut failures = Vec::new();

    // image counts against an independent brute-force lattice enumeration
    let room = RoomSpec::default();
    let src = Point3::new(3.7, 2.9, 1.3);
    for order in 0..=3i64 {
        let mut expected = 0usize;
        for i in -order..=order {
            for j in -order..=order {
                for k in -order..=order {
                    if i.abs() + j.abs() + k.abs() <= order {
                        expected += 1;
                    }
                }
            }
        }
        let got = image_sources(&room, &src, order as u32).unwrap().len();
        if got != expected {
            failures.push(format!(
                "order {order}: {got} images, lattice oracle says {expected}"
            ));
        }
    }
    for (order, want) in [(0usize, 1usize), (1, 7), (2, 25)] {
        let got = image_sources(&room, &src, order as u32).unwrap().len();
        if got != want {
            failures.push(format!(
                "order {order}: expected exactly {want} images, got {got}"
            ));
        }
    }

    // direct-path delay within one sample of d/c*fs over 100 random geometries
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let dims = [
            rng.random_range(6.0..14.0),
            rng.random_range(5.0..12.0),
            rng.random_range(2.5..5.0),
        ];
        let fs = *[16000u32, 24000, 32000, 44100]
            .get(rng.random_range(0..4))
            .unwrap();
        let room = RoomSpec {
            dimensions_m: dims,
            absorption: rng.random_range(0.1..0.9),
            max_order: 0,
            speed_of_sound_mps: 343.0,
            sample_rate_hz: fs,
        };
        let margin = 0.3;
        let rand_point = |rng: &mut ChaCha12Rng| {
            Point3::new(
                rng.random_range(margin..dims[0] - margin),
                rng.random_range(margin..dims[1] - margin),
                rng.random_range(margin..dims[2] - margin),
            )
        };
        let src = rand_point(&mut rng);
        let mut mic = rand_point(&mut rng);
        while src.distance_to(&mic) < 1.0 {
            mic = rand_point(&mut rng);
        }
        let rir = compute_rir(&room, &src, &mic).unwrap();
        let analytic = src.distance_to(&mic) / 343.0 * fs as f64;
        let got = rir.direct_arrival_index() as f64;
        if (got - analytic).abs() > 1.0 {
            failures.push(format!(
                "trial {trial}: arrival {got} vs analytic {analytic:.2} (> 1 sample)"
            ));
        }
    }

    // 1/d peak-amplitude law within 2% after sinc interpolation
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    for trial in 0..40 {
        let d = rng.random_range(1.0..2.6);
        let room = RoomSpec {
            dimensions_m: [16.0, 16.0, 8.0],
            absorption: 0.25,
            max_order: 0,
            speed_of_sound_mps: 343.0,
            sample_rate_hz: 16000,
        };
        let mic = Point3::new(8.0, 2.0, 4.0);
        let off = rng.random_range(-0.3..0.3);
        let near = Point3::new(8.0 + off, 2.0 + (d * d - off * off).sqrt(), 4.0);
        let far = Point3::new(8.0 + off, 2.0 + (4.0 * d * d - off * off).sqrt(), 4.0);
        let peak_near = bandlimited_peak(&compute_rir(&room, &near, &mic).unwrap().taps);
        let peak_far = bandlimited_peak(&compute_rir(&room, &far, &mic).unwrap().taps);
        let ratio = peak_near / peak_far;
        if (ratio - 2.0).abs() / 2.0 > 0.02 {
            failures.push(format!(
                "trial {trial}: peak ratio {ratio:.4} deviates from 2.0 by more than 2% (d = {d:.2})"
            ));
        }
    }

    finish(2, "image-source method", failures, started, 10.0);
}

// ---------------------------------------------------------------------------
// 3. spatial-cue sanity
// ---------------------------------------------------------------------------

fn static_traj(az: f64, d: f64, duration: f64) -> Trajectory {
    Trajectory {
        kind: TrajectoryKind::Static,
        start: PolarPos::new(az, d),
        end: PolarPos::new(az, d),
        duration_s: duration,
    }
}

fn noise_burst(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()
}

#[test]
fn criterion_3_spatial_cues() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let room = RoomSpec::default();
    let mics = MicArray::default();
    let fs = room.sample_rate_hz as usize;

    // hard-left sources: louder and earlier on the left channel
    for seed in 0..4u64 {
        let audio = noise_burst(seed, fs);
        let out = render_moving_source(
            &audio,
            &static_traj(-90.0, 2.0, 1.0),
            &room,
            &mics,
            0.1,
            0.02,
        )
        .unwrap();
        let (rms_l, rms_r) = out.channel_rms();
        if rms_l <= rms_r {
            failures.push(format!(
                "seed {seed}: left RMS {rms_l:.5} not above right {rms_r:.5}"
            ));
        }
        let lag = xcorr_lag(&out.left, &out.right, 40);
        if lag < 1 {
            failures.push(format!(
                "seed {seed}: right channel should lag left (xcorr lag {lag})"
            ));
        }
    }

    // dead-center sources: channels match to within 1e-3 relative RMS
    for seed in 10..13u64 {
        let audio = noise_burst(seed, fs);
        let out =
            render_moving_source(&audio, &static_traj(0.0, 2.5, 1.0), &room, &mics, 0.1, 0.02)
                .unwrap();
        let (rms_l, rms_r) = out.channel_rms();
        let rel = (rms_l - rms_r).abs() / rms_l.max(rms_r);
        if rel >= 1e-3 {
            failures.push(format!(
                "seed {seed}: center-source RMS imbalance {rel:.2e}"
            ));
        }
    }

    // mirrored sources swap channels
    for (seed, theta) in [(20u64, 20.0), (21, 45.0), (22, 70.0)] {
        let audio = noise_burst(seed, fs);
        let plus = render_moving_source(
            &audio,
            &static_traj(theta, 2.0, 1.0),
            &room,
            &mics,
            0.1,
            0.02,
        )
        .unwrap();
        let minus = render_moving_source(
            &audio,
            &static_traj(-theta, 2.0, 1.0),
            &room,
            &mics,
            0.1,
            0.02,
        )
        .unwrap();
        let peak = plus.peak();
        let mut worst = 0.0f64;
        for i in 0..plus.len().min(minus.len()) {
            worst = worst.max((plus.left[i] - minus.right[i]).abs());
            worst = worst.max((plus.right[i] - minus.left[i]).abs());
        }
        if worst / peak >= 1e-3 {
            failures.push(format!(
                "theta {theta}: mirror swap error {:.2e} relative to peak",
                worst / peak
            ));
        }
    }

    finish(3, "spatial cues", failures, started, 30.0);
}

// ---------------------------------------------------------------------------
// 4. renderer equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_renderer_equivalence() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let room = RoomSpec::default();
    let mics = MicArray::default();

    // hop-based render of a static trajectory vs one whole-signal direct
    // convolution
    let audio: Vec<f64> = noise_burst(100, 2 * room.sample_rate_hz as usize);
    let traj = static_traj(40.0, 3.0, 2.0);
    let hopped = render_moving_source(&audio, &traj, &room, &mics, 0.1, 0.02).unwrap();
    let origin = mics.center();
    let cart = polar_to_cartesian(&traj.start, &origin);
    for (name, rendered, mic) in [
        ("left", &hopped.left, &mics.left),
        ("right", &hopped.right, &mics.right),
    ] {
        let rir = compute_rir(&room, &cart, mic).unwrap();
        let whole = direct_convolve(&audio, &rir.taps);
        let err = relative_rms_error(rendered, &whole);
        if err >= 1e-4 {
            failures.push(format!(
                "static hop render vs whole convolution ({name}): {err:.2e}"
            ));
        }
    }

    // FFT convolution against the direct-form oracle
    let mut conv = FftConvolver::new();
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    for trial in 0..6 {
        let x: Vec<f64> = (0..rng.random_range(500..4000))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let h: Vec<f64> = (0..rng.random_range(16..900))
            .map(|_| rng.random_range(-0.2..0.2))
            .collect();
        let got = conv.convolve(&x, &h);
        let want = direct_convolve(&x, &h);
        let err = relative_rms_error(&got, &want);
        if err >= 1e-6 {
            failures.push(format!(
                "fft vs direct convolution trial {trial}: {err:.2e}"
            ));
        }
    }

    finish(4, "renderer equivalence", failures, started, 30.0);
}

// ---------------------------------------------------------------------------
// 5. masking oracle
// ---------------------------------------------------------------------------

fn oracle_spans(scores: &[f64], threshold: f64, window_s: f64, rate: f64) -> Vec<Span> {
    let bin: Vec<u8> = scores.iter().map(|s| u8::from(*s >= threshold)).collect();
    let mut w = (window_s * rate).round() as usize;
    w = w.max(1);
    if w.is_multiple_of(2) {
        w += 1;
    }
    let half = (w / 2) as i64;
    let n = bin.len() as i64;
    let reflect = |mut ix: i64| loop {
        if ix < 0 {
            ix = -ix - 1;
        } else if ix >= n {
            ix = 2 * n - ix - 1;
        } else {
            return ix as usize;
        }
    };
    let mut filtered = Vec::with_capacity(bin.len());
    for i in 0..n {
        let mut window: Vec<u8> = (-half..=half).map(|k| bin[reflect(i + k)]).collect();
        window.sort_unstable();
        filtered.push(window[window.len() / 2]);
    }
    let mut spans = Vec::new();
    let mut start = None;
    for (i, v) in filtered.iter().enumerate() {
        match (v, start) {
            (1, None) => start = Some(i),
            (0, Some(s)) => {
                spans.push(Span::new(s as f64 / rate, i as f64 / rate));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(Span::new(s as f64 / rate, filtered.len() as f64 / rate));
    }
    spans
}

#[test]
fn criterion_5_masking_oracle() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(5);

    for trial in 0..1000 {
        let len = rng.random_range(1..=500);
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..=1.0)).collect();
        let rate = *[5.0, 10.0, 20.0, 25.0, 33.0]
            .get(rng.random_range(0..5))
            .unwrap();
        let threshold = rng.random_range(0.3..0.95);
        let window = rng.random_range(0.1..0.6);
        let mode = MaskMode::Scored {
            threshold,
            median_window_s: window,
            frame_rate_hz: rate,
        };
        let got = scores_to_spans(&scores, &mode).unwrap();
        let want = oracle_spans(&scores, threshold, window, rate);
        if got != want {
            failures.push(format!(
                "trial {trial}: spans diverge from the brute-force oracle"
            ));
            break;
        }
    }

    for trial in 0..100 {
        let n = rng.random_range(100..4000);
        let fs = 1000u32;
        let buf = StereoBuffer {
            left: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            right: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            sample_rate_hz: fs,
        };
        let duration = n as f64 / fs as f64;
        let n_spans = rng.random_range(0..4);
        let spans: Vec<Span> = (0..n_spans)
            .map(|_| {
                let a = rng.random_range(0.0..duration * 0.9);
                let b = rng.random_range(a + 1e-4..duration);
                Span::new(a, b)
            })
            .collect();
        let once = apply_mask(&buf, &spans).unwrap();
        let twice = apply_mask(&once, &spans).unwrap();
        if once != twice {
            failures.push(format!("trial {trial}: masking is not idempotent"));
            break;
        }
        // exact zero/preserve partition
        let mut keep = vec![false; n];
        for s in &spans {
            let a = (s.start_s * fs as f64).round() as usize;
            let b = ((s.end_s * fs as f64).round() as usize).min(n);
            for flag in keep.iter_mut().take(b).skip(a) {
                *flag = true;
            }
        }
        let empty = spans.is_empty();
        for (i, flag) in keep.iter().enumerate() {
            let (wl, wr) = if empty || *flag {
                (buf.left[i], buf.right[i])
            } else {
                (0.0, 0.0)
            };
            if once.left[i].to_bits() != wl.to_bits() || once.right[i].to_bits() != wr.to_bits() {
                failures.push(format!(
                    "trial {trial}: sample {i} breaks the zero/preserve partition"
                ));
                break;
            }
        }
        if !failures.is_empty() {
            break;
        }
    }

    finish(5, "masking oracle", failures, started, 10.0);
}

// ---------------------------------------------------------------------------
// 6. trend oracle
// ---------------------------------------------------------------------------

// Independent classifier: decompose into monotone segments, then apply the
// documented decision table to the segment extremes.
fn oracle_classify(
    az: &[f64],
    dist: &[f64],
    th: &TrendThresholds,
) -> (
    LateralDirection,
    SpanCategory,
    bool,
    Side,
    Side,
    bool,
    TrendProfile,
    VariationCategory,
) {
    let extremes = |track: &[f64]| {
        let mut lo = track[0];
        let mut hi = track[0];
        for &v in track {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    };
    let (az_lo, az_hi) = extremes(az);
    let (d_lo, d_hi) = extremes(dist);
    let az_range = az_hi - az_lo;
    let d_range = d_hi - d_lo;
    let net = az[az.len() - 1] - az[0];

    let variation = if d_range < th.variation_none_max_m {
        VariationCategory::None
    } else if d_range <= th.variation_slight_max_m {
        VariationCategory::Slight
    } else if d_range <= th.variation_moderate_max_m {
        VariationCategory::Moderate
    } else {
        VariationCategory::Strong
    };

    // profile via monotone-segment inspection
    let slight = th.variation_none_max_m;
    let profile = if d_range < slight {
        TrendProfile::Steady
    } else {
        let first = dist[0];
        let last = dist[dist.len() - 1];
        let fall_to_min = first - d_lo;
        let rise_after_min = last - d_lo;
        let rise_to_max = d_hi - first;
        let fall_after_max = d_hi - last;
        if fall_to_min >= slight && rise_after_min >= slight {
            TrendProfile::ApproachThenRecede
        } else if rise_to_max >= slight && fall_after_max >= slight {
            TrendProfile::RecedeThenApproach
        } else if last - first <= -slight {
            TrendProfile::Approach
        } else if last - first >= slight {
            TrendProfile::Recede
        } else {
            TrendProfile::Steady
        }
    };

    let laterally_static = az_range <= th.static_range_deg;
    let inferred_arc = !laterally_static && variation == VariationCategory::None;
    let direction = if laterally_static {
        LateralDirection::Static
    } else if net >= 0.0 {
        if inferred_arc {
            LateralDirection::ArcLeftToRight
        } else {
            LateralDirection::LeftToRight
        }
    } else if inferred_arc {
        LateralDirection::ArcRightToLeft
    } else {
        LateralDirection::RightToLeft
    };
    let span = if laterally_static || az_range < th.span_narrow_max_deg {
        SpanCategory::Narrow
    } else if az_range <= th.span_wide_min_deg {
        SpanCategory::Moderate
    } else {
        SpanCategory::Wide
    };
    let crosses = az_lo <= -th.side_band_deg && az_hi >= th.side_band_deg;
    let side = |v: f64| {
        if v < -th.side_band_deg {
            Side::Left
        } else if v > th.side_band_deg {
            Side::Right
        } else {
            Side::Center
        }
    };
    (
        direction,
        span,
        crosses,
        side(az[0]),
        side(az[az.len() - 1]),
        inferred_arc,
        profile,
        variation,
    )
}

fn piecewise_linear(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> Vec<f64> {
    let n_segments = rng.random_range(1..=4);
    let mut breakpoints: Vec<f64> = (0..=n_segments).map(|_| rng.random_range(lo..hi)).collect();
    let mut track = Vec::new();
    for seg in 0..n_segments {
        let frames = rng.random_range(5..30);
        for f in 0..frames {
            let u = f as f64 / frames as f64;
            track.push(breakpoints[seg] + (breakpoints[seg + 1] - breakpoints[seg]) * u);
        }
    }
    track.push(breakpoints.pop().unwrap());
    track
}

#[test]
fn criterion_6_trend_oracle() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let th = TrendThresholds::default();
    let mut rng = ChaCha12Rng::seed_from_u64(6);

    for trial in 0..500 {
        let az = piecewise_linear(&mut rng, -90.0, 90.0);
        let mut dist = piecewise_linear(&mut rng, 0.3, 6.0);
        dist.resize(az.len(), *dist.last().unwrap());

        let (got_az, got_d) = classify_tracks(&az, &dist, None, &th);
        let (dir, span, crosses, start, end, arc, profile, variation) =
            oracle_classify(&az, &dist, &th);
        if got_az.direction != dir
            || got_az.span_category != span
            || got_az.crosses_center != crosses
            || got_az.start_side != start
            || got_az.end_side != end
            || got_az.is_arc != arc
            || got_d.trend_profile != profile
            || got_d.variation_category != variation
        {
            failures.push(format!(
                "trial {trial}: classification diverges from the segment-inspection oracle\n  got {got_az:?} {got_d:?}\n  want {dir:?} {span:?} {crosses} {start:?} {end:?} {arc} {profile:?} {variation:?}"
            ));
            break;
        }

        // mirror property: negate the azimuth track
        let neg: Vec<f64> = az.iter().map(|v| -v).collect();
        let (mir_az, mir_d) = classify_tracks(&neg, &dist, None, &th);
        let flip = |s: Side| match s {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Center => Side::Center,
        };
        let dir_ok = match got_az.direction {
            LateralDirection::Static => mir_az.direction == LateralDirection::Static,
            LateralDirection::LeftToRight => mir_az.direction == LateralDirection::RightToLeft,
            LateralDirection::RightToLeft => mir_az.direction == LateralDirection::LeftToRight,
            LateralDirection::ArcLeftToRight => {
                mir_az.direction == LateralDirection::ArcRightToLeft
            }
            LateralDirection::ArcRightToLeft => {
                mir_az.direction == LateralDirection::ArcLeftToRight
            }
        };
        if !dir_ok
            || mir_az.start_side != flip(got_az.start_side)
            || mir_az.end_side != flip(got_az.end_side)
            || mir_az.crosses_center != got_az.crosses_center
            || mir_az.span_category != got_az.span_category
            || mir_d != got_d
        {
            failures.push(format!("trial {trial}: mirror property violated"));
            break;
        }
    }

    finish(6, "trend oracle", failures, started, 10.0);
}

// ---------------------------------------------------------------------------
// 7. QA mix, step counts, and answer oracle
// ---------------------------------------------------------------------------

fn sweep_rank(t: &FrameTrends) -> i32 {
    if t.azimuth.direction == LateralDirection::Static {
        return -1;
    }
    match t.azimuth.span_category {
        SpanCategory::Narrow => 0,
        SpanCategory::Moderate => 1,
        SpanCategory::Wide => 2,
    }
}

// Independent re-derivation of every closed-form answer from the trends.
// Returns None when the question matches no known template (which fails the
// criterion).
fn oracle_answer(
    item: &QAItem,
    trends: &BTreeMap<String, FrameTrends>,
    meta: &SceneMetadata,
) -> Option<String> {
    let q = item.question.as_str();
    let rel = &item.relevant_events;
    let t = |label: &String| trends.get(label);
    let yes_no = |b: bool| {
        Some(if b {
            "Yes".to_string()
        } else {
            "No".to_string()
        })
    };
    let rightward = |t: &FrameTrends| {
        matches!(
            t.azimuth.direction,
            LateralDirection::LeftToRight | LateralDirection::ArcLeftToRight
        )
    };
    let leftward = |t: &FrameTrends| {
        matches!(
            t.azimuth.direction,
            LateralDirection::RightToLeft | LateralDirection::ArcRightToLeft
        )
    };

    match item.question_type {
        QuestionType::YesNo => {
            let a = t(rel.first()?)?;
            if q.contains("moving from left to right") {
                yes_no(rightward(a))
            } else if q.contains("moving from right to left") {
                yes_no(leftward(a))
            } else if q.contains("stay in roughly the same direction") {
                yes_no(a.azimuth.direction == LateralDirection::Static)
            } else if q.contains("cross the center") {
                yes_no(a.azimuth.crosses_center)
            } else if q.contains("moving closer to the listener over time") {
                yes_no(a.distance.trend_profile == TrendProfile::Approach)
            } else if q.contains("moving farther away from the listener over time") {
                yes_no(a.distance.trend_profile == TrendProfile::Recede)
            } else if q.contains("keep a roughly steady distance") {
                yes_no(a.distance.trend_profile == TrendProfile::Steady)
            } else if q.contains("curved arc around the listener") {
                yes_no(a.azimuth.is_arc)
            } else if q.contains("begin in the early part") {
                yes_no(a.temporal.start_time_s <= meta.duration_s / 3.0)
            } else if q.contains("keep sounding until near the end") {
                yes_no(a.temporal.end_time_s >= 0.75 * meta.duration_s)
            } else if q.contains("end up on the same side") {
                let b = t(rel.get(1)?)?;
                yes_no(a.azimuth.end_side == b.azimuth.end_side)
            } else if q.contains("opposite lateral directions") {
                let b = t(rel.get(1)?)?;
                yes_no((rightward(a) && leftward(b)) || (leftward(a) && rightward(b)))
            } else if q.contains("start before the") {
                let b = t(rel.get(1)?)?;
                yes_no(a.temporal.start_time_s < b.temporal.start_time_s)
            } else if q.contains("overlap in time") {
                let b = t(rel.get(1)?)?;
                yes_no(
                    a.temporal.end_time_s.min(b.temporal.end_time_s)
                        - a.temporal.start_time_s.max(b.temporal.start_time_s)
                        > 1e-9,
                )
            } else if q.contains("sweep across a wider range than") {
                let b = t(rel.get(1)?)?;
                yes_no(sweep_rank(a) > sweep_rank(b))
            } else {
                None
            }
        }
        QuestionType::MultipleChoice => {
            if q.contains("sweeps across a wider left->right range") {
                let a = t(rel.first()?)?;
                let b = t(rel.get(1)?)?;
                let (ra, rb) = (sweep_rank(a), sweep_rank(b));
                Some(if ra == -1 && rb == -1 {
                    "Neither".into()
                } else if ra > rb {
                    rel[0].clone()
                } else if rb > ra {
                    rel[1].clone()
                } else {
                    "Both equally".into()
                })
            } else if q.contains("end up by the end of the scene") {
                let a = t(rel.first()?)?;
                Some(
                    match a.azimuth.end_side {
                        Side::Left => "On the left",
                        Side::Center => "Near the center",
                        Side::Right => "On the right",
                    }
                    .into(),
                )
            } else if q.contains("distance changes over the scene") {
                let a = t(rel.first()?)?;
                Some(
                    match a.distance.trend_profile {
                        TrendProfile::Approach => "It steadily moves closer",
                        TrendProfile::Recede => "It steadily moves farther away",
                        TrendProfile::Steady => "It stays at a roughly steady distance",
                        _ => "It changes its radial direction partway through",
                    }
                    .into(),
                )
            } else if q.contains("lateral motion") {
                let a = t(rel.first()?)?;
                Some(
                    if a.azimuth.is_arc {
                        "It arcs around the listener"
                    } else {
                        match a.azimuth.direction {
                            LateralDirection::Static => "It stays in place",
                            LateralDirection::LeftToRight | LateralDirection::ArcLeftToRight => {
                                "It sweeps toward the right"
                            }
                            LateralDirection::RightToLeft | LateralDirection::ArcRightToLeft => {
                                "It sweeps toward the left"
                            }
                        }
                    }
                    .into(),
                )
            } else if q.contains("moves closer to the listener overall") {
                let a = t(rel.first()?)?;
                let b = t(rel.get(1)?)?;
                let fa = a.distance.trend_profile == TrendProfile::Approach;
                let fb = b.distance.trend_profile == TrendProfile::Approach;
                Some(match (fa, fb) {
                    (true, true) => "Both of them".into(),
                    (true, false) => rel[0].clone(),
                    (false, true) => rel[1].clone(),
                    (false, false) => "Neither of them".into(),
                })
            } else if q.contains("stays fixed in place") {
                let a = t(rel.first()?)?;
                let b = t(rel.get(1)?)?;
                let fixed = |t: &FrameTrends| {
                    t.azimuth.direction == LateralDirection::Static
                        && t.distance.trend_profile == TrendProfile::Steady
                };
                Some(match (fixed(a), fixed(b)) {
                    (true, true) => "Both of them".into(),
                    (true, false) => rel[0].clone(),
                    (false, true) => rel[1].clone(),
                    (false, false) => "Neither of them".into(),
                })
            } else if q.contains("starts first") {
                let a = t(rel.first()?)?;
                let b = t(rel.get(1)?)?;
                let gap = (a.temporal.start_time_s - b.temporal.start_time_s).abs();
                Some(if gap < 0.25 {
                    "Both at about the same time".into()
                } else if a.temporal.start_time_s < b.temporal.start_time_s {
                    rel[0].clone()
                } else {
                    rel[1].clone()
                })
            } else {
                None
            }
        }
        QuestionType::Open => None,
    }
}

#[test]
fn criterion_7_qa_constraints_and_answer_oracle() {
    let started = Instant::now();
    let mut failures = Vec::new();

    // a pool big enough for 2-3 event scenes; audio is never read here
    let pool = {
        use spatialqa::events::{EventClip, EventPool};
        let labels = ["Chime", "Hum", "Buzz", "Whoosh", "Rustle", "Drone"];
        EventPool::from_events(
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| EventClip {
                    id: format!("e{i}"),
                    label: l.to_string(),
                    audio_path: format!("{l}.wav").into(),
                    duration_s: 7.0,
                    quality_score: 0.9,
                    onset_in_source_s: 0.0,
                    offset_in_source_s: 7.0,
                })
                .collect(),
            "synthetic",
        )
    };
    let compose_cfg = ComposeConfig {
        min_events: 2,
        max_events: 3,
        ..Default::default()
    };
    let th = TrendThresholds::default();
    let mix = MixConstraints::default();

    let mut checked_items = 0usize;
    for seed in 0..100u64 {
        let spec = match compose_scene(&pool, format!("qa_{seed}"), seed, &compose_cfg) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("seed {seed}: compose failed: {e}"));
                continue;
            }
        };
        let meta = metadata_from_spec(&spec, 16000, 10.0);
        let trends = extract_frame_trends(&meta, &th).unwrap();
        let set = match generate_qa(&trends, &meta, seed, &mix) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("seed {seed}: generation failed: {e}"));
                continue;
            }
        };
        if !set.waivers.is_empty() {
            failures.push(format!(
                "seed {seed}: unexpected waivers on a multi-event scene: {:?}",
                set.waivers
            ));
        }
        let count = |pred: &dyn Fn(&QAItem) -> bool| set.items.iter().filter(|i| pred(i)).count();
        let mix_checks: [(&str, usize, usize); 8] = [
            (
                "yes_no",
                count(&|i| i.question_type == QuestionType::YesNo),
                mix.min_yes_no,
            ),
            (
                "multiple_choice",
                count(&|i| i.question_type == QuestionType::MultipleChoice),
                mix.min_multiple_choice,
            ),
            (
                "open",
                count(&|i| i.question_type == QuestionType::Open),
                mix.min_open,
            ),
            (
                "relative_motion open",
                count(&|i| {
                    i.question_type == QuestionType::Open
                        && i.tags.contains(&spatialqa::qa::Tag::RelativeMotion)
                }),
                mix.min_relative_motion_open,
            ),
            (
                "radial",
                count(&|i| i.tags.contains(&spatialqa::qa::Tag::Radial)),
                mix.min_radial,
            ),
            (
                "sequencing",
                count(&|i| i.tags.contains(&spatialqa::qa::Tag::Sequencing)),
                mix.min_sequencing,
            ),
            (
                "lateral+radial",
                count(&|i| {
                    i.tags.contains(&spatialqa::qa::Tag::Lateral)
                        && i.tags.contains(&spatialqa::qa::Tag::Radial)
                }),
                mix.min_lateral_radial,
            ),
            (
                "temporal",
                count(&|i| i.tags.contains(&spatialqa::qa::Tag::Temporal)),
                mix.min_temporal,
            ),
        ];
        for (name, got, want) in mix_checks {
            if got < want {
                failures.push(format!(
                    "seed {seed}: only {got} {name} items (need {want})"
                ));
            }
        }

        for item in &set.items {
            checked_items += 1;
            if item.thinking.steps.len() != item.difficulty.steps() {
                failures.push(format!(
                    "seed {seed}, {}: {} steps for {:?}",
                    item.id,
                    item.thinking.steps.len(),
                    item.difficulty
                ));
            }
            if item.question_type != QuestionType::Open {
                match oracle_answer(item, &trends, &meta) {
                    Some(expected) => {
                        if expected != item.answer {
                            failures.push(format!(
                                "seed {seed}, {}: answer {:?} but oracle says {:?} ({})",
                                item.id, item.answer, expected, item.question
                            ));
                        }
                    }
                    None => failures.push(format!(
                        "seed {seed}, {}: oracle does not recognize {:?}",
                        item.id, item.question
                    )),
                }
            }
        }
        if failures.len() > 20 {
            break;
        }
    }
    if checked_items == 0 {
        failures.push("no items were generated at all".into());
    }

    finish(
        7,
        "qa constraints and answer oracle",
        failures,
        started,
        60.0,
    );
}

// ---------------------------------------------------------------------------
// 8. end-to-end desk run
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_end_to_end_desk_run() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_desk_manifest(dir.path());
    let bin = env!("CARGO_BIN_EXE_spatialqa");
    let run_dir = dir.path().join("run");

    let run = |args: &[&str]| -> (bool, String) {
        let out = std::process::Command::new(bin)
            .args(args)
            .output()
            .expect("spawn spatialqa");
        let stdout = String::from_utf8_lossy(&out.stdout).to_string();
        (out.status.success(), stdout)
    };

    let filtered = dir.path().join("filtered.csv");
    let (ok, _) = run(&[
        "filter-events",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        filtered.to_str().unwrap(),
    ]);
    if !ok {
        failures.push("filter-events failed".into());
    }

    let (ok, _) = run(&[
        "synthesize",
        "--manifest",
        filtered.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--scenes",
        "20",
        "--seed",
        "7",
        "--emit-oracle-scores",
    ]);
    if !ok {
        failures.push("synthesize failed".into());
    }
    let wavs = std::fs::read_dir(run_dir.join("audio"))
        .map(|d| d.count())
        .unwrap_or(0);
    let metas = std::fs::read_dir(run_dir.join("metadata"))
        .map(|d| d.count())
        .unwrap_or(0);
    if wavs != 20 || metas != 20 {
        failures.push(format!(
            "expected 20 scenes, found {wavs} wavs / {metas} metadata files"
        ));
    }

    let trends_dir = run_dir.join("trends");
    let (ok, _) = run(&[
        "trends",
        "--scenes",
        run_dir.to_str().unwrap(),
        "--out",
        trends_dir.to_str().unwrap(),
    ]);
    if !ok
        || std::fs::read_dir(&trends_dir)
            .map(|d| d.count())
            .unwrap_or(0)
            != 20
    {
        failures.push("trends stage failed or produced the wrong file count".into());
    }

    let qa_path = run_dir.join("qa.jsonl");
    let (ok, _) = run(&[
        "gen-qa",
        "--scenes",
        run_dir.to_str().unwrap(),
        "--out",
        qa_path.to_str().unwrap(),
        "--seed",
        "7",
    ]);
    if !ok {
        failures.push("gen-qa failed".into());
    }
    let gold = spatialqa::qa::read_qa_jsonl(&qa_path).unwrap_or_default();
    if gold.is_empty() {
        failures.push("no QA items generated".into());
    }

    for mode in ["gt", "scored"] {
        let out_dir = run_dir.join(format!("masked_{mode}"));
        let (ok, _) = run(&[
            "mask",
            "--scenes",
            run_dir.to_str().unwrap(),
            "--qa",
            qa_path.to_str().unwrap(),
            "--mode",
            mode,
            "--out",
            out_dir.to_str().unwrap(),
            "--max-per-scene",
            "3",
        ]);
        let files = std::fs::read_dir(&out_dir).map(|d| d.count()).unwrap_or(0);
        if !ok || files != 60 {
            failures.push(format!(
                "mask --mode {mode}: ok={ok}, {files} files (expected 60)"
            ));
        }
    }

    // scripted always-"Yes" baseline over all six condition cells
    let preds_path = run_dir.join("preds.jsonl");
    {
        use spatialqa::eval::{Condition, MaskCondition, PredictionRecord};
        let mut preds = Vec::new();
        for item in &gold {
            for mask in MaskCondition::ALL {
                for thinking in [true, false] {
                    preds.push(PredictionRecord {
                        qa_id: item.id.clone(),
                        condition: Condition {
                            mask_mode: mask,
                            thinking,
                        },
                        answer: "Yes".into(),
                        thinking_text: None,
                        rationale_text: None,
                        latency_s: Some(0.1),
                        judge_open: None,
                        judge_errors: vec![],
                    });
                }
            }
        }
        spatialqa::eval::write_predictions_jsonl(&preds_path, &preds).unwrap();
    }

    let report_path = run_dir.join("report.json");
    let (ok, _) = run(&[
        "evaluate",
        "--gold",
        qa_path.to_str().unwrap(),
        "--pred",
        preds_path.to_str().unwrap(),
        "--scenes",
        run_dir.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    if !ok {
        failures.push("evaluate failed".into());
    }

    // the always-Yes baseline's yes/no accuracy equals the gold Yes fraction
    let yes_items = gold
        .iter()
        .filter(|g| g.question_type == QuestionType::YesNo)
        .count();
    let yes_gold = gold
        .iter()
        .filter(|g| g.question_type == QuestionType::YesNo && g.answer == "Yes")
        .count();
    let yes_fraction = yes_gold as f64 / yes_items.max(1) as f64;
    if (yes_fraction - 0.5).abs() > 0.1 {
        failures.push(format!(
            "yes/no balance drifted: gold Yes fraction {yes_fraction:.3} (expected 0.5 +- 0.1)"
        ));
    }
    let report: spatialqa::eval::EvalReport =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap_or_default())
            .unwrap_or_default();
    if report.conditions.len() != 6 {
        failures.push(format!(
            "expected 6 condition cells, got {}",
            report.conditions.len()
        ));
    }
    for (name, cr) in &report.conditions {
        let yn = cr.by_question_type.get("yes_no");
        match yn {
            Some(cell) => {
                let acc = cell.accuracy_pct() / 100.0;
                if (acc - yes_fraction).abs() > 1e-9 {
                    failures.push(format!(
                        "{name}: always-Yes accuracy {acc:.4} != gold Yes fraction {yes_fraction:.4}"
                    ));
                }
            }
            None => failures.push(format!("{name}: missing yes_no facet")),
        }
    }
    // identical predictions in every cell make every interaction cell zero
    for (k, v) in &report.delta_interaction {
        if v.abs() > 1e-9 {
            failures.push(format!("interaction {k} should be zero, got {v}"));
        }
    }

    finish(8, "end-to-end desk run", failures, started, 180.0);
}
