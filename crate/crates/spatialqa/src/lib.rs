//! Movement-centric stereo spatial-audio scenes from labeled mono events,
//! with question generation, temporal masking, and evaluation.
//!
//! The pipeline, stage by stage:
//!
//! 1. [`events`] ingests a CSV manifest of labeled mono clips and applies
//!    the duration and quality filters.
//! 2. [`trajectory`] assigns each clip a motion pattern (static, approach,
//!    recede, lateral, arc) sampled in the frontal half-plane.
//! 3. [`room`] simulates a shoebox room with the image-source method and
//!    builds the per-position stereo impulse responses.
//! 4. [`render`] pushes the clip through time-varying impulse responses
//!    with hop-crossfaded block convolution.
//! 5. [`scene`] composes one to three events under an overlap budget and
//!    renders the mix plus full ground-truth metadata.
//! 6. [`trends`] turns the per-frame tracks into qualitative motion
//!    descriptors (direction, span, crossing, radial profile).
//! 7. [`qa`] generates movement-reasoning questions with stepwise thinking
//!    blocks, answers derived deterministically from the trends.
//! 8. [`masking`] zeroes the waveform outside the spans of query-relevant
//!    events (ground truth or framewise grounding scores).
//! 9. [`eval`] scores prediction files, aggregates faceted accuracies, and
//!    computes the thinking-vs-masking interaction metric.
//!
//! The `spatialqa` binary drives the same stages as subcommands; see the
//! book under `book/` for a guided tour with runnable examples.
//!
//! ```
//! use spatialqa::trajectory::{make_trajectory, sample_positions, TrajectoryKind};
//!
//! let traj = make_trajectory(TrajectoryKind::ArcLr, 7, 5.0).unwrap();
//! let path = sample_positions(&traj, 10.0);
//! assert_eq!(path.len(), 50);
//! // an arc holds its radius while the azimuth sweeps
//! assert!(path.iter().all(|p| p.distance_m == traj.start.distance_m));
//! ```

pub mod config;
pub mod error;
pub mod eval;
pub mod events;
pub mod masking;
pub mod pipeline;
pub mod qa;
pub mod render;
pub mod room;
pub mod scene;
pub mod trajectory;
pub mod trends;
pub mod wav;

pub use error::{Error, Result};

// The book's code snippets double as doc-tests so the guide can never drift
// from the crate (mdbook itself cannot run examples against the library).
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/event-pool.md")]
    mod event_pool {}
    #[doc = include_str!("../../../book/src/trajectories.md")]
    mod trajectories {}
    #[doc = include_str!("../../../book/src/room-acoustics.md")]
    mod room_acoustics {}
    #[doc = include_str!("../../../book/src/rendering.md")]
    mod rendering {}
    #[doc = include_str!("../../../book/src/scene-composition.md")]
    mod scene_composition {}
    #[doc = include_str!("../../../book/src/trends.md")]
    mod trends {}
    #[doc = include_str!("../../../book/src/qa-generation.md")]
    mod qa_generation {}
    #[doc = include_str!("../../../book/src/masking.md")]
    mod masking {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
