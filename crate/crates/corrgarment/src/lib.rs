//! Dense point-level visual correspondence for garment manipulation.
//!
//! The crate bundles a procedural garment generator, a position-based-dynamics
//! cloth simulator with manipulation primitives, a partial point-cloud renderer
//! with exact vertex tracing, contrastive descriptor training (cross-deformation,
//! cross-object, coarse-to-fine refinement, few-shot adaptation), unsupervised
//! skeleton extraction, and a demonstration-matched task bench for the unfold,
//! fold and hang tasks.
//!
//! Everything runs in 64-bit floats on the CPU and is deterministic given a
//! seed. Data-parallel inner loops go through [`par`], which uses rayon when
//! the `parallel` feature (default) is enabled and plain iterators otherwise.

pub mod error;
pub mod garment;
pub mod par;
pub mod rng;
pub mod sim;
pub mod skeleton;
pub mod task;

pub use error::{Error, Result};

/// 3D vector in meters (positions, velocities, displacements).
pub type Vec3 = nalgebra::Vector3<f64>;
