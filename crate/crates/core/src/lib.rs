//! Cramér–Rao bounds for near-field range and angle estimation with modular
//! (sparse subarray) linear arrays.
//!
//! Four wavefront models are supported: exact spherical (SWM), hybrid
//! spherical-planar with per-subarray angles (HSPM_DIST) or a shared angle
//! (HSPM_SHARED), and plane wave (PWM). Each has a closed-form bound in
//! [`crb`] and can be checked against the generic Fisher-information bound in
//! [`fim`], computed from the steering vector and its derivatives.
//!
//! ```
//! use nearfield_crb::{crb_closed, ModularLayout, SensingSnr, TargetPolar, WavefrontModel};
//!
//! let layout = ModularLayout::new(3, 125, &[90, 0, 90], 0.0025)?;
//! let target = TargetPolar::from_degrees(30.0, 60.0)?;
//! let snr = SensingSnr::from_db(0.0)?;
//! let b = crb_closed(WavefrontModel::HspmDist, &layout, &target, 0.005, snr)?;
//! assert!(b.crb_r.is_finite() && b.crb_theta > 0.0);
//! # Ok::<(), nearfield_crb::CrbError>(())
//! ```

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod crb;
pub mod error;
pub mod extended;
pub mod fim;
pub mod geometry;
pub mod output;
pub mod par;
pub mod sweep;
pub mod verify;
pub mod wavefront;

pub use config::{ExperimentConfig, ModelList};
pub use crb::{crb_closed, CrbFlags, CrbPair, SensingSnr};
pub use error::{CrbError, Result};
pub use fim::{crb_from_steering, cross_validate, rel_err, FdSteps, ValidationReport};
pub use geometry::{field_regions, FieldRegions, ModularLayout, TargetPolar};
pub use par::Execution;
pub use sweep::SweepRecord;
pub use wavefront::{PhaseReference, SteeringDerivatives, SteeringVector, WavefrontModel};
