//! Motion patterns for sound sources in the frontal half-plane.
//!
//! A source lives in listener-centric polar coordinates: azimuth in
//! [-90°, +90°] (0° straight ahead, negative left, positive right) and
//! distance in [0.3 m, 6 m]. A [`Trajectory`] interpolates linearly in
//! azimuth and in distance between two endpoints; arcs hold the distance
//! fixed while the azimuth sweeps. The lower distance bound is 0.3 m rather
//! than 0 because 1/d attenuation is singular at the origin.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard bound on admissible azimuths, degrees.
pub const AZIMUTH_MAX_DEG: f64 = 90.0;
/// Closest admissible source distance, meters.
pub const DISTANCE_MIN_M: f64 = 0.3;
/// Farthest admissible source distance, meters.
pub const DISTANCE_MAX_M: f64 = 6.0;

/// Endpoint-sampling constraints for dynamic trajectories. The minimum
/// sweep/change magnitudes guarantee that every dynamic pattern clears the
/// trend-extractor thresholds downstream.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryBounds {
    pub azimuth_max_deg: f64,
    pub distance_min_m: f64,
    pub distance_max_m: f64,
    /// Minimum |Δazimuth| for lateral and arc motion, degrees.
    pub min_lateral_sweep_deg: f64,
    /// Minimum |Δdistance| for approach/recede motion, meters.
    pub min_radial_change_m: f64,
}

impl Default for TrajectoryBounds {
    fn default() -> Self {
        TrajectoryBounds {
            azimuth_max_deg: AZIMUTH_MAX_DEG,
            distance_min_m: DISTANCE_MIN_M,
            distance_max_m: DISTANCE_MAX_M,
            min_lateral_sweep_deg: 40.0,
            min_radial_change_m: 1.5,
        }
    }
}

/// Cartesian point, meters. The listener faces +y; +x is the listener's
/// right; z is height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance_to(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Listener-centric polar position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPos {
    pub azimuth_deg: f64,
    pub distance_m: f64,
}

impl PolarPos {
    pub fn new(azimuth_deg: f64, distance_m: f64) -> Self {
        PolarPos {
            azimuth_deg,
            distance_m,
        }
    }

    pub fn validate(&self, bounds: &TrajectoryBounds) -> Result<()> {
        if self.azimuth_deg < -bounds.azimuth_max_deg || self.azimuth_deg > bounds.azimuth_max_deg {
            return Err(Error::InvalidArg(format!(
                "azimuth {} out of [-{}, {}]",
                self.azimuth_deg, bounds.azimuth_max_deg, bounds.azimuth_max_deg
            )));
        }
        if self.distance_m < bounds.distance_min_m || self.distance_m > bounds.distance_max_m {
            return Err(Error::InvalidArg(format!(
                "distance {} out of [{}, {}]",
                self.distance_m, bounds.distance_min_m, bounds.distance_max_m
            )));
        }
        Ok(())
    }
}

/// The motion-pattern taxonomy. `LateralRadial` combines a lateral sweep
/// with a radial change; it is opt-in (see the scene composer's
/// `allow_combined_motion`) and never produced otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Static,
    Approach,
    Recede,
    LateralLr,
    LateralRl,
    ArcLr,
    ArcRl,
    LateralRadial,
}

/// The dynamic kinds a composer samples from by default.
pub const DYNAMIC_KINDS: [TrajectoryKind; 6] = [
    TrajectoryKind::Approach,
    TrajectoryKind::Recede,
    TrajectoryKind::LateralLr,
    TrajectoryKind::LateralRl,
    TrajectoryKind::ArcLr,
    TrajectoryKind::ArcRl,
];

impl TrajectoryKind {
    pub fn is_dynamic(&self) -> bool {
        !matches!(self, TrajectoryKind::Static)
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, TrajectoryKind::ArcLr | TrajectoryKind::ArcRl)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryKind::Static => "static",
            TrajectoryKind::Approach => "approach",
            TrajectoryKind::Recede => "recede",
            TrajectoryKind::LateralLr => "lateral_lr",
            TrajectoryKind::LateralRl => "lateral_rl",
            TrajectoryKind::ArcLr => "arc_lr",
            TrajectoryKind::ArcRl => "arc_rl",
            TrajectoryKind::LateralRadial => "lateral_radial",
        }
    }
}

impl std::str::FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "static" => TrajectoryKind::Static,
            "approach" => TrajectoryKind::Approach,
            "recede" => TrajectoryKind::Recede,
            "lateral_lr" => TrajectoryKind::LateralLr,
            "lateral_rl" => TrajectoryKind::LateralRl,
            "arc_lr" => TrajectoryKind::ArcLr,
            "arc_rl" => TrajectoryKind::ArcRl,
            "lateral_radial" => TrajectoryKind::LateralRadial,
            other => {
                return Err(Error::InvalidArg(format!(
                    "unknown trajectory kind: {other}"
                )))
            }
        })
    }
}

/// A motion pattern between two polar endpoints over a fixed duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub start: PolarPos,
    pub end: PolarPos,
    pub duration_s: f64,
}

impl Trajectory {
    /// Checks the kind-specific endpoint invariant.
    pub fn validate(&self) -> Result<()> {
        if self.duration_s <= 0.0 {
            return Err(Error::InvalidArg("trajectory duration must be > 0".into()));
        }
        let ok = match self.kind {
            TrajectoryKind::Static => self.start == self.end,
            TrajectoryKind::Approach => self.end.distance_m < self.start.distance_m,
            TrajectoryKind::Recede => self.end.distance_m > self.start.distance_m,
            TrajectoryKind::LateralLr => self.end.azimuth_deg > self.start.azimuth_deg,
            TrajectoryKind::LateralRl => self.end.azimuth_deg < self.start.azimuth_deg,
            TrajectoryKind::ArcLr => {
                self.start.distance_m == self.end.distance_m
                    && self.end.azimuth_deg > self.start.azimuth_deg
            }
            TrajectoryKind::ArcRl => {
                self.start.distance_m == self.end.distance_m
                    && self.end.azimuth_deg < self.start.azimuth_deg
            }
            TrajectoryKind::LateralRadial => {
                self.end.azimuth_deg != self.start.azimuth_deg
                    && self.end.distance_m != self.start.distance_m
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArg(format!(
                "trajectory endpoints violate the {} invariant",
                self.kind.as_str()
            )))
        }
    }

    /// Position at time `t` seconds, clamped to [0, duration]. Azimuth and
    /// distance interpolate linearly; arcs degenerate to constant distance
    /// because their endpoints share one.
    pub fn position_at(&self, t: f64) -> PolarPos {
        let u = if self.duration_s > 0.0 {
            (t / self.duration_s).clamp(0.0, 1.0)
        } else {
            0.0
        };
        PolarPos {
            azimuth_deg: lerp(self.start.azimuth_deg, self.end.azimuth_deg, u),
            distance_m: lerp(self.start.distance_m, self.end.distance_m, u),
        }
    }
}

fn lerp(a: f64, b: f64, u: f64) -> f64 {
    a + (b - a) * u
}

/// Number of frames covering `duration_s` at `frame_rate_hz`: the smallest
/// integer >= duration * rate, with a 1e-9 snap so that exact products such
/// as 4.8 * 10 do not round up on float noise. Always at least 1.
pub fn frame_count(duration_s: f64, frame_rate_hz: f64) -> usize {
    let x = duration_s * frame_rate_hz;
    let snapped = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    (snapped as usize).max(1)
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}

/// Draw a trajectory of `kind` with endpoints uniform over the admissible
/// region (rejection sampling against the sweep/change minima). Deterministic
/// per seed.
pub fn make_trajectory(kind: TrajectoryKind, rng_seed: u64, duration_s: f64) -> Result<Trajectory> {
    make_trajectory_with(kind, rng_seed, duration_s, &TrajectoryBounds::default())
}

pub fn make_trajectory_with(
    kind: TrajectoryKind,
    rng_seed: u64,
    duration_s: f64,
    bounds: &TrajectoryBounds,
) -> Result<Trajectory> {
    if duration_s <= 0.0 {
        return Err(Error::InvalidArg("duration_s must be > 0".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let az = bounds.azimuth_max_deg;
    let (d_lo, d_hi) = (bounds.distance_min_m, bounds.distance_max_m);
    let min_sweep = bounds.min_lateral_sweep_deg;
    let min_radial = bounds.min_radial_change_m;

    let draw_az = |rng: &mut ChaCha12Rng| uniform(rng, -az, az);
    let draw_d = |rng: &mut ChaCha12Rng| uniform(rng, d_lo, d_hi);

    let (start, end) = match kind {
        TrajectoryKind::Static => {
            let p = PolarPos::new(draw_az(&mut rng), draw_d(&mut rng));
            (p, p)
        }
        TrajectoryKind::Approach | TrajectoryKind::Recede => {
            let a = draw_az(&mut rng);
            let (near, far) = loop {
                let d0 = draw_d(&mut rng);
                let d1 = draw_d(&mut rng);
                if (d0 - d1).abs() >= min_radial {
                    break (d0.min(d1), d0.max(d1));
                }
            };
            if kind == TrajectoryKind::Approach {
                (PolarPos::new(a, far), PolarPos::new(a, near))
            } else {
                (PolarPos::new(a, near), PolarPos::new(a, far))
            }
        }
        TrajectoryKind::LateralLr | TrajectoryKind::LateralRl => {
            let (a_lo, a_hi) = loop {
                let a0 = draw_az(&mut rng);
                let a1 = draw_az(&mut rng);
                if (a0 - a1).abs() >= min_sweep {
                    break (a0.min(a1), a0.max(a1));
                }
            };
            let d0 = draw_d(&mut rng);
            let d1 = draw_d(&mut rng);
            if kind == TrajectoryKind::LateralLr {
                (PolarPos::new(a_lo, d0), PolarPos::new(a_hi, d1))
            } else {
                (PolarPos::new(a_hi, d0), PolarPos::new(a_lo, d1))
            }
        }
        TrajectoryKind::ArcLr | TrajectoryKind::ArcRl => {
            let (a_lo, a_hi) = loop {
                let a0 = draw_az(&mut rng);
                let a1 = draw_az(&mut rng);
                if (a0 - a1).abs() >= min_sweep {
                    break (a0.min(a1), a0.max(a1));
                }
            };
            let d = draw_d(&mut rng);
            if kind == TrajectoryKind::ArcLr {
                (PolarPos::new(a_lo, d), PolarPos::new(a_hi, d))
            } else {
                (PolarPos::new(a_hi, d), PolarPos::new(a_lo, d))
            }
        }
        TrajectoryKind::LateralRadial => {
            let (a_lo, a_hi) = loop {
                let a0 = draw_az(&mut rng);
                let a1 = draw_az(&mut rng);
                if (a0 - a1).abs() >= min_sweep {
                    break (a0.min(a1), a0.max(a1));
                }
            };
            let (near, far) = loop {
                let d0 = draw_d(&mut rng);
                let d1 = draw_d(&mut rng);
                if (d0 - d1).abs() >= min_radial {
                    break (d0.min(d1), d0.max(d1));
                }
            };
            let left_to_right = rng.random_bool(0.5);
            let approaching = rng.random_bool(0.5);
            let (a0, a1) = if left_to_right {
                (a_lo, a_hi)
            } else {
                (a_hi, a_lo)
            };
            let (dd0, dd1) = if approaching {
                (far, near)
            } else {
                (near, far)
            };
            (PolarPos::new(a0, dd0), PolarPos::new(a1, dd1))
        }
    };

    let traj = Trajectory {
        kind,
        start,
        end,
        duration_s,
    };
    traj.validate()?;
    Ok(traj)
}

/// Sample a per-frame polar path. Returns `frame_count(duration, rate)`
/// positions; the first and last frames reproduce the endpoints exactly.
pub fn sample_positions(traj: &Trajectory, frame_rate_hz: f64) -> Vec<PolarPos> {
    let n = frame_count(traj.duration_s, frame_rate_hz);
    (0..n)
        .map(|i| {
            let u = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            PolarPos {
                azimuth_deg: lerp(traj.start.azimuth_deg, traj.end.azimuth_deg, u),
                distance_m: lerp(traj.start.distance_m, traj.end.distance_m, u),
            }
        })
        .collect()
}

/// Listener-centric polar to room cartesian: x = x0 + d sin(az),
/// y = y0 + d cos(az), z = z0.
pub fn polar_to_cartesian(pos: &PolarPos, listener_origin: &Point3) -> Point3 {
    let az = pos.azimuth_deg.to_radians();
    Point3 {
        x: listener_origin.x + pos.distance_m * az.sin(),
        y: listener_origin.y + pos.distance_m * az.cos(),
        z: listener_origin.z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn static_start_equals_end() {
        let t = make_trajectory(TrajectoryKind::Static, 11, 4.0).unwrap();
        assert_eq!(t.start, t.end);
    }

    #[test]
    fn approach_decreases_distance() {
        for seed in 0..20 {
            let t = make_trajectory(TrajectoryKind::Approach, seed, 5.0).unwrap();
            assert!(t.end.distance_m < t.start.distance_m);
            assert!(t.start.distance_m - t.end.distance_m >= 1.5);
            assert_eq!(t.start.azimuth_deg, t.end.azimuth_deg);
        }
    }

    #[test]
    fn arc_constant_distance_increasing_azimuth() {
        for seed in 0..20 {
            let t = make_trajectory(TrajectoryKind::ArcLr, seed, 5.0).unwrap();
            assert_eq!(t.start.distance_m, t.end.distance_m);
            assert!(t.end.azimuth_deg > t.start.azimuth_deg);
            assert!(t.end.azimuth_deg - t.start.azimuth_deg >= 40.0);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let a = make_trajectory(TrajectoryKind::LateralRl, 99, 3.0).unwrap();
        let b = make_trajectory(TrajectoryKind::LateralRl, 99, 3.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn static_positions_constant() {
        let t = Trajectory {
            kind: TrajectoryKind::Static,
            start: PolarPos::new(30.0, 2.0),
            end: PolarPos::new(30.0, 2.0),
            duration_s: 10.0,
        };
        let pos = sample_positions(&t, 10.0);
        assert_eq!(pos.len(), 100);
        assert!(pos.iter().all(|p| *p == PolarPos::new(30.0, 2.0)));
    }

    #[test]
    fn arc_positions_strictly_decreasing_azimuth() {
        let t = Trajectory {
            kind: TrajectoryKind::ArcRl,
            start: PolarPos::new(60.0, 3.0),
            end: PolarPos::new(-60.0, 3.0),
            duration_s: 6.0,
        };
        t.validate().unwrap();
        let pos = sample_positions(&t, 10.0);
        assert!(pos.iter().all(|p| p.distance_m == 3.0));
        assert!(pos.windows(2).all(|w| w[1].azimuth_deg < w[0].azimuth_deg));
        assert_eq!(pos.first().unwrap().azimuth_deg, 60.0);
        assert_eq!(pos.last().unwrap().azimuth_deg, -60.0);
    }

    #[test]
    fn approach_matches_linear_interpolation_oracle() {
        let t = Trajectory {
            kind: TrajectoryKind::Approach,
            start: PolarPos::new(0.0, 6.0),
            end: PolarPos::new(0.0, 1.0),
            duration_s: 5.0,
        };
        let pos = sample_positions(&t, 10.0);
        assert_eq!(pos.len(), 50);
        assert!(pos.windows(2).all(|w| w[1].distance_m < w[0].distance_m));
        for (i, p) in pos.iter().enumerate() {
            let u = i as f64 / 49.0;
            let expect = 6.0 + (1.0 - 6.0) * u;
            assert!((p.distance_m - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn cartesian_axis_cases() {
        let o = Point3::new(0.0, 0.0, 0.0);
        let ahead = polar_to_cartesian(&PolarPos::new(0.0, 2.0), &o);
        assert!((ahead.x - 0.0).abs() < 1e-12 && (ahead.y - 2.0).abs() < 1e-12);
        let left = polar_to_cartesian(&PolarPos::new(-90.0, 1.0), &o);
        assert!((left.x + 1.0).abs() < 1e-12 && left.y.abs() < 1e-12);
        let diag = polar_to_cartesian(&PolarPos::new(45.0, std::f64::consts::SQRT_2), &o);
        assert!((diag.x - 1.0).abs() < 1e-12 && (diag.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_kind_string_is_error() {
        assert!("spiral".parse::<TrajectoryKind>().is_err());
    }

    proptest! {
        #[test]
        fn sampled_positions_within_bounds(
            seed in 0u64..500,
            kind_ix in 0usize..6,
            duration in 0.5f64..12.0,
            rate in 1.0f64..50.0,
        ) {
            let kind = DYNAMIC_KINDS[kind_ix];
            let t = make_trajectory(kind, seed, duration).unwrap();
            let bounds = TrajectoryBounds::default();
            let pos = sample_positions(&t, rate);
            // length contract: smallest integer >= duration * rate (1e-9 snap)
            let x = duration * rate;
            prop_assert!(pos.len() as f64 >= x - 1e-9);
            prop_assert!(pos.len() as f64 - 1.0 < x);
            for p in &pos {
                prop_assert!(p.validate(&bounds).is_ok());
            }
        }

        #[test]
        fn mirrored_laterals_mirror_frame_by_frame(seed in 0u64..200, duration in 1.0f64..10.0) {
            let t = make_trajectory(TrajectoryKind::LateralLr, seed, duration).unwrap();
            let mirrored = Trajectory {
                kind: TrajectoryKind::LateralRl,
                start: PolarPos::new(-t.start.azimuth_deg, t.start.distance_m),
                end: PolarPos::new(-t.end.azimuth_deg, t.end.distance_m),
                duration_s: t.duration_s,
            };
            mirrored.validate().unwrap();
            let a = sample_positions(&t, 10.0);
            let b = sample_positions(&mirrored, 10.0);
            prop_assert_eq!(a.len(), b.len());
            for (pa, pb) in a.iter().zip(&b) {
                prop_assert!((pa.azimuth_deg + pb.azimuth_deg).abs() < 1e-12);
                prop_assert!((pa.distance_m - pb.distance_m).abs() < 1e-12);
            }
        }

        #[test]
        fn arc_distance_exactly_constant(seed in 0u64..200) {
            let t = make_trajectory(TrajectoryKind::ArcLr, seed, 5.0).unwrap();
            let pos = sample_positions(&t, 25.0);
            for p in &pos {
                prop_assert_eq!(p.distance_m, t.start.distance_m);
            }
        }
    }
}
