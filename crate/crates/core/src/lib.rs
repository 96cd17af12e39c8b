//! Identification of nodal admittance matrices from synchronized voltage and
//! current phasor records.
//!
//! The crate is organised around the stages of the identification pipeline:
//!
//! * [`netmodel`]: admittance matrices, their graphs, Kron reduction.
//! * [`ingest`]: case scripts, phasor tables, power to current conversion.
//! * [`fullid`]: least-squares identification when every bus is observed.
//! * [`hiddenid`]: reduced-matrix estimation and hidden-voltage recovery.
//! * [`slrd`]: sparse plus low-rank splitting of a reduced matrix.
//! * [`radial`]: exact recovery of radial networks with hidden nodes.
//! * [`simgen`]: AC power flow, load scenarios and measurement noise.
//! * [`estimator`]: named identification strategies selectable at runtime.

pub mod error;
pub mod estimator;
pub mod fullid;
pub mod hiddenid;
pub mod ingest;
pub mod linalg;
pub mod netmodel;
pub mod radial;
pub mod simgen;
pub mod slrd;

pub use error::{Error, Result};
pub use netmodel::{AdmittanceMatrix, BuildMode, NetworkGraph, NodePartition};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
