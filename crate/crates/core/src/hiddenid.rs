//! Linear pieces of the hidden-node workflow: estimating the Kron-reduced
//! matrix over the observed buses and recovering hidden voltages from a known
//! full matrix.

use nalgebra::DMatrix;

use crate::fullid::{estimate_full, EstimateDiagnostics, StructureMap};
use crate::ingest::MeasurementSet;
use crate::netmodel::hidden_gain;
use crate::{AdmittanceMatrix, Error, NodePartition, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedEstimate {
    pub ybar: AdmittanceMatrix,
    pub diagnostics: EstimateDiagnostics,
}

/// Estimates the reduced matrix from observed buses only.
///
/// With zero injection at every hidden bus the observed currents satisfy
/// `I1 = Ybar V1`, so this is the full-observability problem over `M1`.
pub fn estimate_reduced(m: &MeasurementSet, map: &StructureMap) -> Result<ReducedEstimate> {
    let (ybar, diagnostics) = estimate_full(m, map)?;
    Ok(ReducedEstimate { ybar, diagnostics })
}

/// `V2 = -Y22^{-1} Y21 V1` for every slot; `v1` is slots by observed buses.
pub fn hidden_voltages(y: &AdmittanceMatrix, part: &NodePartition, v1: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if part.n() != y.n() {
        return Err(Error::Dimension(format!("partition of {} nodes for a {}-node matrix", part.n(), y.n())));
    }
    if v1.ncols() != part.observed().len() {
        return Err(Error::Dimension(format!(
            "{} voltage columns for {} observed buses",
            v1.ncols(),
            part.observed().len()
        )));
    }
    if part.hidden().is_empty() {
        return Ok(DMatrix::zeros(v1.nrows(), 0));
    }
    let gain = hidden_gain(&y.to_dense(), part)?;
    Ok(-(v1 * gain.transpose()))
}
