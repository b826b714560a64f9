//! Simulation of magneto-optical rotation metrology with coherent light and
//! type-II parametric down-converted photons.
//!
//! The crate evolves truncated Fock states of up to four modes (`aH`, `aV`,
//! `bH`, `bV`) through a polarization-rotating medium and measures
//! intensities, Glauber coincidences and projection probabilities on the
//! result. [`oracles`] holds the closed forms the numerics are checked
//! against; [`sweep`] and [`verify`] back the `mor-sim` command line tool.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detection;
mod error;
pub mod fock;
pub mod oracles;
pub mod sources;
pub mod sweep;
pub mod verify;

pub use channel::{apply_mor, rotation_matrix, Geometry, MediumSpec, Susceptibilities};
pub use detection::{evaluate, fringe_scan, visibility, Evaluator, FringeSeries, ObservableSpec, VisibilityResult};
pub use error::{Error, Result};
pub use fock::{KetState, Mode, Occupation, TwoModeUnitary};
pub use sources::{SourceKind, SourceSpec, Truncation};
