//! Multi-range depth from motion for a rotation-stabilized monocular camera.
//!
//! The crate provides the building blocks of a live depth-from-motion loop:
//!
//! * [`stillbox`] — procedural generation of rigid test scenes (textured
//!   primitives enclosed in a large box) and an analytic ray renderer that
//!   produces image / ground-truth depth pairs along constant-velocity
//!   translations.
//! * [`estimators`] — per-image-pair normalized-depth (β) estimation behind
//!   one trait, with a ground-truth oracle, a range-clamped oracle and a
//!   classical plane-sweep translation-stereo estimator.
//! * [`pipeline`] — frame/speed ring buffers, displacement integration from
//!   speed samples, frame-pair picking, K-means shift planning and pixel-wise
//!   fusion of several β maps into one metric depth map.
//! * [`metrics`] — L1 / RMSE / depth-normalized error and a multi-scale L1.
//! * [`io`] — PGM / PFM images, JSON sidecars and the on-disk dataset layout.
//!
//! Normalized depth follows the scale identity `ζ = α · β · D` where
//! `α = max_distance / d0` is a dimensionless calibration constant and `D`
//! is the camera displacement between the two frames of a pair.

pub mod error;
pub mod estimators;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod stillbox;

pub use error::{Error, Result};
pub use grid::Grid;
