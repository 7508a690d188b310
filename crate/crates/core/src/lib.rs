//! Sparse array-of-subarrays design and evaluation.
//!
//! The crate covers the full pipeline for synthesizing a large effective
//! aperture from a sparse placement of identical subarray modules:
//!
//! * [`geometry`] — module layouts, super-array configurations, design
//!   grids, vacancy search and shape statistics;
//! * [`beampattern`] — (expanded) beampattern evaluation on a UV grid and
//!   the beam attributes fed to the optimizer;
//! * [`placement`] — prefix-tree dictionary search with shape-signature
//!   pruning, weighted-cost selection and local refinement;
//! * [`bounds`] — Fisher information / Cramér-Rao and Ziv-Zakai bounds on
//!   DoA estimation accuracy;
//! * [`estimation`] — signal synthesis, maximum-likelihood and Newtonized
//!   OMP estimators, Monte-Carlo scenario generation and error metrics;
//! * [`compressive`] — block-diagonal compressive measurements, the
//!   2K-isometry diagnostic and compressive estimation.
//!
//! All positions are expressed in wavelengths and directions as directional
//! cosines `(u, v) = (sin θ cos φ, sin θ sin φ)`.

pub mod beampattern;
pub mod benchmarks;
pub mod bounds;
pub mod compressive;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod io;
pub mod math;
pub mod placement;

pub use beampattern::{BeamAttributes, PatternField};
pub use bounds::BoundCurve;
pub use error::{Error, Result};
pub use estimation::{EstimationResult, Snapshot, SteeringDictionary};
pub use geometry::{DesignGrid, ElementLayout, Pose, ShapeSignature, SuperArrayConfig};
pub use placement::{Dictionary, ObjectiveWeights};

/// Wavenumber for positions expressed in wavelengths: `k = 2π/λ · λ = 2π`.
pub const WAVENUMBER: f64 = std::f64::consts::TAU;
