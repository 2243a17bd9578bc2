//! Monocular edge visual odometry.
//!
//! The engine tracks frames against keyframes by ICP-style point-to-tangent
//! edge alignment, refines correspondences between keyframes with an
//! uncertainty-bounded search along edges, and jointly optimises poses and
//! inverse depths in a sliding-window bundle adjustment. A synthetic scene
//! renderer and trajectory metrics are included for evaluation.

pub mod association;
pub mod ba;
pub mod config;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod image;
pub mod keyframe;
pub mod metrics;
pub mod pipeline;
pub mod sim;
pub mod tracker;
pub mod uncertainty;

pub use error::{Error, Result};
