//! Thermodynamic-formalism toolkit for complex rational maps.
//!
//! The crate computes, at desk scale and with floating-point (not validated)
//! arithmetic:
//!
//! * backward-orbit trees and the tree pressure of a rational map,
//! * fused, convexified pressure curves `t -> P(t)` with phase-transition
//!   points, asymptote diagnostics and the Bowen zero,
//! * nice/pleasant couples around Julia critical points, the canonical
//!   induced map, its two-variable pressure and the associated structural
//!   checks (vanishing, tail decay, bad pull-back counts),
//! * Legendre-transform spectra (Lyapunov, pointwise dimension, integral
//!   means) and level-1 large-deviation quantities over weighted preimage
//!   ensembles.
//!
//! All numerical claims produced here are heuristic estimates with reported
//! uncertainties; nothing is a computer-assisted proof.

pub mod artifacts;
pub mod backward;
pub mod deviations;
pub mod error;
pub mod exceptional;
pub mod inducing;
pub mod map;
pub mod numerics;
pub mod periodic;
pub mod point;
pub mod poly;
pub mod pressure;
pub mod spectra;

pub use backward::{BackTree, Metric, TreeMode};
pub use deviations::WeightedEnsemble;
pub use error::{CoreError, Result};
pub use inducing::{BranchTable, InducedBranch, NiceCouple, PullbackComponent};
pub use map::{CriticalData, CriticalPoint, MapSpec};
pub use periodic::{Classification, PeriodicOrbit};
pub use point::CPoint;
pub use pressure::{AssembleConfig, PressureCurve};

/// Default tolerance for declaring two sphere points identical
/// (projective cross-difference).
pub const POINT_IDENTITY_TOL: f64 = 1e-9;

/// Dead band around |multiplier| = 1 mapped to the indifferent class.
pub const INDIFFERENT_DEADBAND: f64 = 1e-9;
