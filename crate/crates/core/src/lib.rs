//! `reversal_lab` simulates measurement, record copying and reversal on small
//! quantum systems, next to the classical analog.
//!
//! The toolkit checks, numerically and exactly:
//! - a classical measurement can be undone while a copy of its record survives;
//! - a quantum measurement of a superposition cannot, once its record is copied;
//! - the entropy paid for the failed reversal equals the thermal discord of the
//!   post-measurement state;
//! - copyable records must be orthogonal;
//! - a degenerate "consensus" check confirms a record exists without spoiling
//!   the reversal.
//!
//! Module map: [`space`] and [`operator`] are the dense linear-algebra layer,
//! [`state`] holds density operators, [`dynamics`] builds the measurement and
//! copy unitaries, [`info`] computes entropies and discord, [`classical`] is
//! the probability-vector analog, [`repeatability`] checks copyability,
//! [`friend`] builds the verification observables and [`scenario`] ties it
//! together for the CLI.

pub mod classical;
pub mod dynamics;
pub mod error;
pub mod friend;
pub mod info;
pub mod operator;
pub mod par;
pub mod repeatability;
pub mod scenario;
pub mod space;
pub mod state;

/// Label of the measured system.
pub const SYSTEM: &str = "S";
/// Label of the apparatus holding the record.
pub const APPARATUS: &str = "A";
/// Label of the memory device receiving the copy.
pub const DEVICE: &str = "D";

pub use error::{LabError, Result};
pub use operator::ComplexOperator;
pub use space::LabeledSpace;
pub use state::QuantumState;
