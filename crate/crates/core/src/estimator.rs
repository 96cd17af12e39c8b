//! Identification strategies behind one interface, chosen by name at runtime.

use std::collections::BTreeMap;

use crate::fullid::{estimate_full, estimate_full_signed, DiagonalMode, EstimateDiagnostics, SignConstraint, StructureMap};
use crate::hiddenid::estimate_reduced;
use crate::ingest::MeasurementSet;
use crate::{AdmittanceMatrix, Error, Result, C64};

pub trait Estimator {
    fn name(&self) -> &'static str;

    /// Estimates the matrix over the buses the strategy considers observed.
    fn estimate(&self, m: &MeasurementSet, map: &StructureMap) -> Result<(AdmittanceMatrix, EstimateDiagnostics)>;

    /// Buses of `m` the estimate covers, in the order of the result.
    fn observed_labels(&self, m: &MeasurementSet) -> Vec<String> {
        m.labels().to_vec()
    }
}

/// Plain least squares over all buses.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeastSquares;

impl Estimator for LeastSquares {
    fn name(&self) -> &'static str {
        "ls"
    }

    fn estimate(&self, m: &MeasurementSet, map: &StructureMap) -> Result<(AdmittanceMatrix, EstimateDiagnostics)> {
        estimate_full(m, map)
    }
}

/// Least squares with sign constraints on the line parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignConstrained {
    pub constrain: SignConstraint,
}

impl Estimator for SignConstrained {
    fn name(&self) -> &'static str {
        "nnls"
    }

    fn estimate(&self, m: &MeasurementSet, map: &StructureMap) -> Result<(AdmittanceMatrix, EstimateDiagnostics)> {
        estimate_full_signed(m, map, self.constrain)
    }
}

/// Reduced matrix over the buses not listed as hidden.
#[derive(Debug, Clone, Default)]
pub struct Reduced {
    pub hidden: Vec<String>,
}

impl Estimator for Reduced {
    fn name(&self) -> &'static str {
        "reduced"
    }

    fn estimate(&self, m: &MeasurementSet, map: &StructureMap) -> Result<(AdmittanceMatrix, EstimateDiagnostics)> {
        for h in &self.hidden {
            if !m.labels().contains(h) {
                return Err(Error::UnknownBus(h.clone()));
            }
        }
        let observed = m.select(&self.observed_labels(m))?;
        let r = estimate_reduced(&observed, map)?;
        Ok((r.ybar, r.diagnostics))
    }

    fn observed_labels(&self, m: &MeasurementSet) -> Vec<String> {
        m.labels().iter().filter(|l| !self.hidden.contains(l)).cloned().collect()
    }
}

pub const ESTIMATOR_NAMES: [&str; 3] = ["ls", "nnls", "reduced"];

/// Looks up a strategy by name.
pub fn estimator_by_name(name: &str, constrain: SignConstraint, hidden: &[String]) -> Result<Box<dyn Estimator>> {
    match name {
        "ls" => Ok(Box::new(LeastSquares)),
        "nnls" => Ok(Box::new(SignConstrained { constrain })),
        "reduced" => Ok(Box::new(Reduced { hidden: hidden.to_vec() })),
        other => Err(Error::Invalid(format!(
            "unknown estimator `{other}` (expected one of {})",
            ESTIMATOR_NAMES.join(", ")
        ))),
    }
}

/// Structure map sized for what `est` will see in `m`.
pub fn structure_for(
    est: &dyn Estimator,
    m: &MeasurementSet,
    mode: DiagonalMode,
    known: BTreeMap<usize, C64>,
) -> Result<StructureMap> {
    StructureMap::with_known_diagonal(est.observed_labels(m).len(), mode, known)
}
