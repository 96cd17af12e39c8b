//! Admittance matrices, their graphs, and Kron reduction.

mod admittance;
mod build;
mod graph;
mod kron;

pub use admittance::AdmittanceMatrix;
pub use build::{build_admittance, BuildMode};
pub use graph::{
    default_zero_threshold, graph_of, identifiability_report, is_radial, IdentifiabilityReport, NetworkGraph,
};
pub(crate) use kron::hidden_gain;
pub use kron::{eliminate_in_order, eliminate_node, kron_reduce, kron_reduce_sequential, NodePartition, MIN_RCOND};
