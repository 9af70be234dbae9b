//! Distributionally robust borrowing of external (historical) control data.
//!
//! Every method in this crate reduces to the effective borrowing weight
//! family `w = λ n_H / (n_C + λ n_H)`. Around it sit closed-form worst-case
//! bias bounds over 1-Wasserstein balls, robust Wald tests and confidence
//! intervals, a grid search that picks λ by maximising a plug-in robust
//! noncentrality, and the classical borrowing rules written as weight rules.
//!
//! The crate is `no_std` and needs only `alloc`.
//!
//! ```
//! use bond_core::{ArmSummary, BorrowConfig, HistoricalSource, OutcomeKind, RadiusSpec, TrialLayout};
//!
//! let layout = TrialLayout::new(
//!     OutcomeKind::Binary,
//!     vec![ArmSummary::binary(470, 60).unwrap(), ArmSummary::binary(468, 133).unwrap()],
//!     vec![HistoricalSource::new("external", vec![Some(ArmSummary::binary(610, 224).unwrap()), None])],
//! );
//! let radii = RadiusSpec::per_arm(&layout, &[0.0, 0.0]).unwrap();
//! let config = BorrowConfig::new(0.025, 0.3).unwrap();
//! let (cal, test) = bond_core::run_bond(&layout, &radii, &config).unwrap();
//! assert!((cal.lambda.get(0, 0) - 0.48).abs() < 0.01);
//! assert!(test.reject);
//! ```
#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

pub mod baselines;
pub mod calibrate;
pub mod ebw;
mod error;
pub mod multisource;
pub mod normal;
pub mod robust;
pub mod summary;
pub mod transport;

pub use baselines::{run_baseline, BaselineResult, BaselineSpec};
pub use calibrate::{
    kappa_hat, run_bond, select_lambda, sensitivity_sweep, BorrowConfig, CalibrationResult, Caps,
    SensitivityRow,
};
pub use ebw::{BorrowParams, CellVariances, VarianceSource, WeightProfile};
pub use error::{Cell, Error, Result};
pub use multisource::{CoarseningMap, Contrast};
pub use robust::{BiasCorrections, Correction, CorrectionMode, RobustTestResult, Sidedness};
pub use summary::{ArmSummary, HistoricalSource, OutcomeKind, SampleSet, TrialLayout};
pub use transport::{RadiusProvenance, RadiusSpec, ShiftBounds};
