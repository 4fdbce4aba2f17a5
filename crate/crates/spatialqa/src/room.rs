//! Shoebox image-source-method room simulation.
//!
//! A point source in a rectangular room is mirrored across the walls; each
//! mirror image contributes an attenuated, fractionally delayed impulse to
//! the receiver. Image k at distance d with n total wall reflections has
//! amplitude r^n / d where r = sqrt(1 - absorption) (energy-absorption
//! convention). The fractional delay is realized with an 81-tap
//! Hann-windowed sinc, which keeps sub-sample timing differences between the
//! two microphones intact. Air attenuation is neglected; over <= 6 m plus
//! order-2 paths it is below the other modeling error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Point3;

/// Taps in the fractional-delay kernel (odd; 40 each side of the center).
pub const FRAC_DELAY_TAPS: usize = 81;
const HALF_KERNEL: i64 = (FRAC_DELAY_TAPS as i64 - 1) / 2;

/// Rectangular room with uniform surface absorption.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RoomSpec {
    /// (Lx, Ly, Lz) in meters.
    pub dimensions_m: [f64; 3],
    /// Uniform energy absorption coefficient in (0, 1].
    pub absorption: f64,
    /// Maximum total reflection count per image.
    pub max_order: u32,
    pub speed_of_sound_mps: f64,
    pub sample_rate_hz: u32,
}

impl Default for RoomSpec {
    fn default() -> Self {
        RoomSpec {
            dimensions_m: [10.0, 8.0, 3.0],
            absorption: 0.25,
            max_order: 2,
            speed_of_sound_mps: 343.0,
            sample_rate_hz: 16000,
        }
    }
}

impl RoomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dimensions_m.iter().any(|d| *d <= 0.0) {
            return Err(Error::Config("room dimensions must be > 0".into()));
        }
        if !(self.absorption > 0.0 && self.absorption <= 1.0) {
            return Err(Error::Config("absorption must be in (0, 1]".into()));
        }
        if self.speed_of_sound_mps <= 0.0 {
            return Err(Error::Config("speed of sound must be > 0".into()));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be > 0".into()));
        }
        Ok(())
    }

    /// True when `p` lies strictly inside the room with `margin` clearance.
    pub fn contains(&self, p: &Point3, margin: f64) -> bool {
        p.x > margin
            && p.x < self.dimensions_m[0] - margin
            && p.y > margin
            && p.y < self.dimensions_m[1] - margin
            && p.z > margin
            && p.z < self.dimensions_m[2] - margin
    }

    /// Amplitude reflection coefficient, sqrt(1 - absorption).
    pub fn reflection_coefficient(&self) -> f64 {
        (1.0 - self.absorption).sqrt()
    }
}

/// Two omnidirectional receivers. Left/right in the listener frame, i.e.
/// `left.x < right.x` when the listener faces +y.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MicArray {
    pub left: Point3,
    pub right: Point3,
}

impl MicArray {
    /// AB pair centered on `listener`, spaced `spacing_m` along the x axis
    /// (perpendicular to the facing direction).
    pub fn centered(listener: Point3, spacing_m: f64) -> Self {
        let half = spacing_m / 2.0;
        MicArray {
            left: Point3::new(listener.x - half, listener.y, listener.z),
            right: Point3::new(listener.x + half, listener.y, listener.z),
        }
    }

    pub fn center(&self) -> Point3 {
        Point3::new(
            (self.left.x + self.right.x) / 2.0,
            (self.left.y + self.right.y) / 2.0,
            (self.left.z + self.right.z) / 2.0,
        )
    }

    pub fn validate(&self, room: &RoomSpec) -> Result<()> {
        if self.left.x >= self.right.x {
            return Err(Error::Config("left mic must be left of right mic".into()));
        }
        for (name, p) in [("left", &self.left), ("right", &self.right)] {
            if !room.contains(p, 0.0) {
                return Err(Error::Config(format!("{name} mic outside room")));
            }
        }
        Ok(())
    }
}

impl Default for MicArray {
    fn default() -> Self {
        MicArray::centered(Point3::new(5.0, 1.5, 1.5), 0.18)
    }
}

/// A mirror image of the source with its total wall-reflection count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: Point3,
    pub reflections: u32,
}

/// Room impulse response at one receiver.
#[derive(Debug, Clone)]
pub struct Rir {
    pub taps: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Rir {
    /// Band-limited arrival estimate: index of the largest-magnitude tap.
    /// For a direct-path response this lands within one sample of d/c*fs.
    pub fn direct_arrival_index(&self) -> usize {
        self.taps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }
}

// Mirror coordinate of source coordinate `s` for image index `n` along an
// axis of length `l`: even indices translate, odd indices reflect. |n| is
// the number of wall reflections along that axis.
fn mirror_coordinate(n: i64, s: f64, l: f64) -> f64 {
    if n.rem_euclid(2) == 0 {
        n as f64 * l + s
    } else {
        n as f64 * l + (l - s)
    }
}

/// Enumerate all mirror images whose total reflection count is at most
/// `max_order`. Counts are 1, 7, 25, 63 for orders 0-3.
pub fn image_sources(room: &RoomSpec, src: &Point3, max_order: u32) -> Result<Vec<ImageSource>> {
    if !room.contains(src, 0.0) {
        return Err(Error::SourceOutsideRoom {
            x: src.x,
            y: src.y,
            z: src.z,
        });
    }
    let m = max_order as i64;
    let mut images = Vec::new();
    for nx in -m..=m {
        for ny in -m..=m {
            for nz in -m..=m {
                let total = nx.abs() + ny.abs() + nz.abs();
                if total > m {
                    continue;
                }
                images.push(ImageSource {
                    position: Point3::new(
                        mirror_coordinate(nx, src.x, room.dimensions_m[0]),
                        mirror_coordinate(ny, src.y, room.dimensions_m[1]),
                        mirror_coordinate(nz, src.z, room.dimensions_m[2]),
                    ),
                    reflections: total as u32,
                });
            }
        }
    }
    Ok(images)
}

/// Hann-windowed normalized sinc, zero outside +-(taps/2 + 0.5).
fn frac_delay_kernel(t: f64) -> f64 {
    let half = HALF_KERNEL as f64 + 0.5;
    if t.abs() >= half {
        return 0.0;
    }
    let sinc = if t.abs() < 1e-12 {
        1.0
    } else {
        let pt = std::f64::consts::PI * t;
        pt.sin() / pt
    };
    let window = 0.5 * (1.0 + (std::f64::consts::PI * t / half).cos());
    window * sinc
}

/// Sum the attenuated, fractionally delayed image contributions at `mic`.
pub fn compute_rir(room: &RoomSpec, src: &Point3, mic: &Point3) -> Result<Rir> {
    room.validate()?;
    if src.distance_to(mic) < 1e-9 {
        return Err(Error::SourceAtMic);
    }
    let images = image_sources(room, src, room.max_order)?;
    let c = room.speed_of_sound_mps;
    let fs = room.sample_rate_hz as f64;
    let r = room.reflection_coefficient();

    let contributions: Vec<(f64, f64)> = images
        .iter()
        .map(|img| {
            let d = img.position.distance_to(mic).max(1e-9);
            let delay_samples = d / c * fs;
            let amplitude = r.powi(img.reflections as i32) / d;
            (delay_samples, amplitude)
        })
        .collect();

    let max_delay = contributions.iter().map(|(d, _)| *d).fold(0.0f64, f64::max);
    let len = max_delay.ceil() as usize + HALF_KERNEL as usize + 2;
    let mut taps = vec![0.0f64; len];
    for (delay, amplitude) in contributions {
        if amplitude == 0.0 {
            continue;
        }
        let center = delay.floor() as i64;
        for j in -HALF_KERNEL..=HALF_KERNEL {
            let idx = center + j;
            if idx < 0 {
                continue; // pre-arrival kernel spill before t=0 is dropped
            }
            let t = idx as f64 - delay;
            let k = frac_delay_kernel(t);
            if k != 0.0 {
                taps[idx as usize] += amplitude * k;
            }
        }
    }
    Ok(Rir {
        taps,
        sample_rate_hz: room.sample_rate_hz,
    })
}
