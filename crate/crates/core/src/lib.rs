//! Floorplan reconstruction from sparse, unordered 360 degree panoramas.
//!
//! The pipeline pairs windows, doors and openings (W/D/O) across panoramas
//! to hypothesize relative poses, filters them through a pluggable
//! [`verify::Verifier`], builds and optimizes a pose graph, and stitches
//! the posed room layouts into a raster floorplan. [`scene`] supplies a
//! synthetic home generator so every stage can be checked against ground
//! truth, and [`eval`] holds the metrics.
//!
//! Data-parallel loops use rayon when the `parallel` feature (default) is
//! enabled and fall back to plain iterators otherwise.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bev;
pub mod eval;
pub mod floorplan;
pub mod geom;
pub mod hypotheses;
pub mod par;
pub mod pipeline;
pub mod polygon;
pub mod posegraph;
pub mod scene;
pub mod verify;

pub use geom::{Pose2, Sim2, Twist2, Vec2};
pub use scene::{PanoId, PanoramaRecord, Scene};
