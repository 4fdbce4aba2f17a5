//! Rendering a moving source through time-varying room impulse responses.
//!
//! The trajectory is discretized at hop boundaries (default 100 ms). The
//! input is cut into hop-aligned segments that overlap by the crossfade
//! length; raised-cosine weights w and 1-w are applied to the overlapping
//! input samples so the segment windows sum to one everywhere. Each windowed
//! segment is convolved (FFT overlap-add) with the impulse responses at its
//! hop's position and accumulated at its offset. Because the windows
//! partition unity before the convolution, a static trajectory reproduces a
//! single whole-signal convolution exactly, and the render is linear in the
//! input.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::room::{compute_rir, MicArray, RoomSpec};
use crate::trajectory::{polar_to_cartesian, Trajectory};

/// Two equal-length sample buffers plus their rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoBuffer {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl StereoBuffer {
    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        StereoBuffer {
            left: vec![0.0; len],
            right: vec![0.0; len],
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn peak(&self) -> f64 {
        self.left
            .iter()
            .chain(self.right.iter())
            .fold(0.0f64, |m, s| m.max(s.abs()))
    }

    pub fn channel_rms(&self) -> (f64, f64) {
        let rms = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                (v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64).sqrt()
            }
        };
        (rms(&self.left), rms(&self.right))
    }

    /// Scale both channels so the peak equals `target`. No-op on silence.
    pub fn normalize_peak(&mut self, target: f64) {
        let peak = self.peak();
        if peak > 0.0 {
            let g = target / peak;
            for s in self.left.iter_mut().chain(self.right.iter_mut()) {
                *s *= g;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.left.len() != self.right.len() {
            return Err(Error::InvalidArg("channel length mismatch".into()));
        }
        if self
            .left
            .iter()
            .chain(self.right.iter())
            .any(|s| !s.is_finite())
        {
            return Err(Error::InvalidArg("non-finite sample".into()));
        }
        Ok(())
    }
}

/// Hop/crossfade timing for the block renderer.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    pub hop_s: f64,
    pub xfade_s: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            hop_s: 0.1,
            xfade_s: 0.02,
        }
    }
}

/// FFT convolution with cached plans. Also usable standalone for
/// whole-signal convolution.
pub struct FftConvolver {
    planner: FftPlanner<f64>,
}

impl FftConvolver {
    pub fn new() -> Self {
        FftConvolver {
            planner: FftPlanner::new(),
        }
    }

    /// Full linear convolution, length `x.len() + h.len() - 1`.
    pub fn convolve(&mut self, x: &[f64], h: &[f64]) -> Vec<f64> {
        if x.is_empty() || h.is_empty() {
            return Vec::new();
        }
        let out_len = x.len() + h.len() - 1;
        let n = out_len.next_power_of_two();
        let fft = self.planner.plan_fft_forward(n);
        let ifft = self.planner.plan_fft_inverse(n);

        let mut fx: Vec<Complex<f64>> = x
            .iter()
            .map(|v| Complex::new(*v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(n)
            .collect();
        let mut fh: Vec<Complex<f64>> = h
            .iter()
            .map(|v| Complex::new(*v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(n)
            .collect();
        fft.process(&mut fx);
        fft.process(&mut fh);
        for (a, b) in fx.iter_mut().zip(&fh) {
            *a *= b;
        }
        ifft.process(&mut fx);
        let scale = 1.0 / n as f64;
        fx.truncate(out_len);
        fx.into_iter().map(|c| c.re * scale).collect()
    }
}

impl Default for FftConvolver {
    fn default() -> Self {
        Self::new()
    }
}

// Raised-cosine fade-in weight for overlap sample `o` of `x`; the matching
// fade-out is 1 - w, so overlapping weights always sum to one. Half-sample
// centering keeps the ramp strictly inside (0, 1).
fn fade_in_weight(o: usize, x: usize) -> f64 {
    let u = (o as f64 + 0.5) / x as f64;
    0.5 * (1.0 - (std::f64::consts::PI * u).cos())
}

fn hop_samples(params_s: f64, fs: f64) -> usize {
    (params_s * fs).round() as usize
}

fn validate_hop(hop_s: f64, xfade_s: f64) -> Result<(f64, f64)> {
    if !(hop_s > xfade_s && xfade_s > 0.0) {
        return Err(Error::InvalidArg(format!(
            "require hop_s > xfade_s > 0 (got hop {hop_s}, xfade {xfade_s})"
        )));
    }
    Ok((hop_s, xfade_s))
}

/// Spatialize a mono signal moving along `traj` into a stereo buffer.
/// Output length is the input length plus the impulse-response tail.
pub fn render_moving_source(
    audio: &[f64],
    traj: &Trajectory,
    room: &RoomSpec,
    mics: &MicArray,
    hop_s: f64,
    xfade_s: f64,
) -> Result<StereoBuffer> {
    if audio.is_empty() {
        return Err(Error::InvalidArg("audio must be nonempty".into()));
    }
    validate_hop(hop_s, xfade_s)?;
    room.validate()?;
    mics.validate(room)?;
    traj.validate()?;

    let fs = room.sample_rate_hz as f64;
    let hop = hop_samples(hop_s, fs).max(2);
    let xfade = hop_samples(xfade_s, fs).clamp(1, hop - 1);
    let n = audio.len();
    let n_blocks = n.div_ceil(hop);
    let origin = mics.center();

    let mut convolver = FftConvolver::new();
    let mut left: Vec<f64> = Vec::new();
    let mut right: Vec<f64> = Vec::new();

    for k in 0..n_blocks {
        let block_start = k * hop;
        let block_end = ((k + 1) * hop + xfade).min(n);
        let has_prev = k > 0;
        let next_start = (k + 1) * hop;
        let has_next = next_start < n;

        let mut seg: Vec<f64> = audio[block_start..block_end].to_vec();
        for (i, s) in seg.iter_mut().enumerate() {
            let abs = block_start + i;
            let mut w = 1.0;
            if has_prev && i < xfade {
                w *= fade_in_weight(i, xfade);
            }
            if has_next && abs >= next_start {
                w *= 1.0 - fade_in_weight(abs - next_start, xfade);
            }
            *s *= w;
        }

        let pos = traj.position_at(k as f64 * hop_s);
        let cart = polar_to_cartesian(&pos, &origin);
        let rir_l = compute_rir(room, &cart, &mics.left)?;
        let rir_r = compute_rir(room, &cart, &mics.right)?;

        let out_l = convolver.convolve(&seg, &rir_l.taps);
        let out_r = convolver.convolve(&seg, &rir_r.taps);
        let needed = block_start + out_l.len().max(out_r.len());
        if needed > left.len() {
            left.resize(needed, 0.0);
            right.resize(needed, 0.0);
        }
        for (i, v) in out_l.iter().enumerate() {
            left[block_start + i] += v;
        }
        for (i, v) in out_r.iter().enumerate() {
            right[block_start + i] += v;
        }
    }

    let buf = StereoBuffer {
        left,
        right,
        sample_rate_hz: room.sample_rate_hz,
    };
    buf.validate()?;
    Ok(buf)
}

/// Mix pre-rendered hop blocks into one buffer. Block k starts at k * hop;
/// within each designated overlap the outgoing block is weighted 1-w and the
/// incoming block w; all other samples pass through unweighted (impulse
/// tails beyond a block's hop+xfade span are added as-is).
pub fn crossfade_stitch(blocks: &[StereoBuffer], hop_s: f64, xfade_s: f64) -> Result<StereoBuffer> {
    validate_hop(hop_s, xfade_s)?;
    let Some(first) = blocks.first() else {
        return Err(Error::InvalidArg("no blocks to stitch".into()));
    };
    let fs = first.sample_rate_hz;
    if blocks.iter().any(|b| b.sample_rate_hz != fs) {
        return Err(Error::InvalidArg("inconsistent sample rates".into()));
    }
    for b in blocks {
        b.validate()?;
    }
    if blocks.len() == 1 {
        return Ok(first.clone());
    }
    let hop = hop_samples(hop_s, fs as f64).max(2);
    let xfade = hop_samples(xfade_s, fs as f64).clamp(1, hop - 1);

    let out_len = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| k * hop + b.len())
        .max()
        .unwrap_or(0);
    let mut out = StereoBuffer::silence(out_len, fs);
    for (k, block) in blocks.iter().enumerate() {
        let offset = k * hop;
        let has_prev = k > 0;
        let has_next = k + 1 < blocks.len();
        for i in 0..block.len() {
            let mut w = 1.0;
            if has_prev && i < xfade {
                w *= fade_in_weight(i, xfade);
            }
            if has_next && i >= hop && i < hop + xfade {
                w *= 1.0 - fade_in_weight(i - hop, xfade);
            }
            out.left[offset + i] += w * block.left[i];
            out.right[offset + i] += w * block.right[i];
        }
    }
    Ok(out)
}

/// Windowed-sinc sample-rate conversion for mono buffers.
pub fn resample_mono(input: &[f64], fs_in: u32, fs_out: u32) -> Vec<f64> {
    if fs_in == fs_out || input.is_empty() {
        return input.to_vec();
    }
    let ratio = fs_in as f64 / fs_out as f64;
    // anti-alias cutoff at the narrower Nyquist
    let cutoff = 0.5 * (fs_out as f64 / fs_in as f64).min(1.0);
    let half_taps = (32.0 / (2.0 * cutoff)).ceil() as i64;
    let out_len = ((input.len() as f64) / ratio).round() as usize;
    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        let t = m as f64 * ratio;
        let center = t.floor() as i64;
        let mut acc = 0.0;
        for k in (center - half_taps)..=(center + half_taps) {
            if k < 0 || k as usize >= input.len() {
                continue;
            }
            let dt = t - k as f64;
            let x = 2.0 * cutoff * dt;
            let sinc = if x.abs() < 1e-12 {
                1.0
            } else {
                (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
            };
            let wu = dt / (half_taps as f64 + 0.5);
            let window = 0.5 * (1.0 + (std::f64::consts::PI * wu).cos());
            acc += input[k as usize] * 2.0 * cutoff * sinc * window;
        }
        out.push(acc);
    }
    out
}
