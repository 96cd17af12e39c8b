//! Least-squares identification of `Y` when every bus is observed.
//!
//! The unknown is the half-vectorisation of `Y`: one parameter per unordered
//! pair `(i, j)`, `i > j`, in column-major order, followed in free-diagonal
//! mode by one parameter per diagonal entry whose value is not known. The
//! linear map `Gamma` embeds it into `vec(Y)`, and the equations are
//! `V^K Y = I^K` with one row per slot.

mod nnls;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

pub use nnls::{nnls, NnlsSolution};

use crate::ingest::MeasurementSet;
use crate::{linalg, AdmittanceMatrix, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalMode {
    /// `Y[i,i] = -sum_j Y[i,j]`: no shunts.
    #[default]
    Constrained,
    /// Diagonal entries are free parameters.
    Free,
}

/// One entry of the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    /// Off-diagonal pair, stored with `i > j`.
    Pair(usize, usize),
    Diagonal(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureMap {
    n: usize,
    mode: DiagonalMode,
    known_diagonal: BTreeMap<usize, C64>,
    columns: Vec<Param>,
}

impl StructureMap {
    pub fn new(n: usize, mode: DiagonalMode) -> Result<Self> {
        Self::with_known_diagonal(n, mode, BTreeMap::new())
    }

    /// Known diagonal values are only meaningful in free mode.
    pub fn with_known_diagonal(n: usize, mode: DiagonalMode, known: BTreeMap<usize, C64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("structure map needs n >= 2, got {n}")));
        }
        if !known.is_empty() && mode == DiagonalMode::Constrained {
            return Err(Error::Invalid("known diagonal entries require free-diagonal mode".into()));
        }
        if let Some((&i, _)) = known.iter().find(|(&i, _)| i >= n) {
            return Err(Error::Invalid(format!("known diagonal index {i} out of range for n = {n}")));
        }
        let mut columns = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in j + 1..n {
                columns.push(Param::Pair(i, j));
            }
        }
        if mode == DiagonalMode::Free {
            columns.extend((0..n).filter(|i| !known.contains_key(i)).map(Param::Diagonal));
        }
        Ok(Self { n, mode, known_diagonal: known, columns })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> DiagonalMode {
        self.mode
    }

    pub fn known_diagonal(&self) -> &BTreeMap<usize, C64> {
        &self.known_diagonal
    }

    pub fn columns(&self) -> &[Param] {
        &self.columns
    }

    /// Parameter vector of a symmetric matrix in this map's order.
    pub fn svec(&self, y: &AdmittanceMatrix) -> DVector<C64> {
        DVector::from_iterator(
            self.columns.len(),
            self.columns.iter().map(|p| match *p {
                Param::Pair(i, j) => y.get(i, j),
                Param::Diagonal(i) => y.get(i, i),
            }),
        )
    }

    /// Inverse of [`svec`](Self::svec), filling diagonals by the map's rule.
    pub fn unsvec(&self, x: &DVector<C64>, labels: Vec<String>) -> Result<AdmittanceMatrix> {
        if x.len() != self.columns.len() || labels.len() != self.n {
            return Err(Error::Dimension("parameter vector does not match the structure map".into()));
        }
        let mut y = AdmittanceMatrix::zeros(labels);
        for (p, &v) in self.columns.iter().zip(x.iter()) {
            match *p {
                Param::Pair(i, j) => {
                    y.set(i, j, v);
                    if self.mode == DiagonalMode::Constrained {
                        y.add(i, i, -v);
                        y.add(j, j, -v);
                    }
                }
                Param::Diagonal(i) => y.set(i, i, v),
            }
        }
        for (&i, &v) in &self.known_diagonal {
            y.set(i, i, v);
        }
        Ok(y)
    }
}

/// `Gamma` with `vec(Y) = Gamma svec(Y)` (plus the known diagonal offset).
///
/// Rows follow column-major `vec`, row `r + c n` holding `Y[r,c]`.
pub fn build_gamma(map: &StructureMap) -> DMatrix<f64> {
    let n = map.n;
    let mut g = DMatrix::zeros(n * n, map.columns.len());
    for (col, p) in map.columns.iter().enumerate() {
        match *p {
            Param::Pair(i, j) => {
                g[(i + j * n, col)] = 1.0;
                g[(j + i * n, col)] = 1.0;
                if map.mode == DiagonalMode::Constrained {
                    g[(i + i * n, col)] = -1.0;
                    g[(j + j * n, col)] = -1.0;
                }
            }
            Param::Diagonal(i) => g[(i + i * n, col)] = 1.0,
        }
    }
    g
}

/// Complex design matrix `(I kron V) Gamma` and right-hand side `vec(I)`,
/// assembled block-wise without forming the Kronecker product.
pub fn design_system(v: &DMatrix<C64>, i: &DMatrix<C64>, map: &StructureMap) -> (DMatrix<C64>, DVector<C64>) {
    let (k, n) = v.shape();
    let mut a = DMatrix::zeros(k * n, map.columns.len());
    for (col, p) in map.columns.iter().enumerate() {
        match *p {
            Param::Pair(p, q) => {
                for s in 0..k {
                    let (vp, vq) = (v[(s, p)], v[(s, q)]);
                    match map.mode {
                        DiagonalMode::Constrained => {
                            a[(s + p * k, col)] = vq - vp;
                            a[(s + q * k, col)] = vp - vq;
                        }
                        DiagonalMode::Free => {
                            a[(s + p * k, col)] = vq;
                            a[(s + q * k, col)] = vp;
                        }
                    }
                }
            }
            Param::Diagonal(d) => {
                for s in 0..k {
                    a[(s + d * k, col)] = v[(s, d)];
                }
            }
        }
    }
    let mut b = DVector::from_iterator(k * n, i.iter().copied());
    for (&d, &val) in &map.known_diagonal {
        for s in 0..k {
            b[s + d * k] -= v[(s, d)] * val;
        }
    }
    (a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateDiagnostics {
    pub slots: usize,
    /// Numerical rank of `V^K`.
    pub voltage_rank: usize,
    /// Smallest singular value of the realified design matrix.
    pub sigma_min: f64,
    pub residual_norm: f64,
    /// `K >= N` and `V^K` has full column rank.
    pub exact: bool,
}

fn check_inputs(m: &MeasurementSet, map: &StructureMap) -> Result<DMatrix<C64>> {
    if m.labels().len() != map.n() {
        return Err(Error::Dimension(format!(
            "measurements cover {} buses, structure map has {}",
            m.labels().len(),
            map.n()
        )));
    }
    if m.slots() == 0 {
        return Err(Error::Invalid("no measurement slots".into()));
    }
    m.currents_or_derived()
}

fn voltage_diagnostics(v: &DMatrix<C64>) -> (usize, bool) {
    let rank = linalg::rank_of(&linalg::singular_values(v));
    (rank, v.nrows() >= v.ncols() && rank == v.ncols())
}

fn realified_system(m: &MeasurementSet, map: &StructureMap) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let i = check_inputs(m, map)?;
    let (a, b) = design_system(m.voltages(), &i, map);
    Ok((linalg::realify(&a), linalg::realify_vec(&b)))
}

/// Unconstrained least-squares estimate.
///
/// A rank-deficient design is not an error: the minimum-norm solution is
/// returned and the exactness flag is cleared.
pub fn estimate_full(m: &MeasurementSet, map: &StructureMap) -> Result<(AdmittanceMatrix, EstimateDiagnostics)> {
    let (a, b) = realified_system(m, map)?;
    let sol = linalg::lstsq_real(&a, &b);
    let (voltage_rank, exact) = voltage_diagnostics(m.voltages());
    let sigma_min = if sol.singular_values.len() < a.ncols() { 0.0 } else { *sol.singular_values.last().unwrap_or(&0.0) };
    let diag = EstimateDiagnostics { slots: m.slots(), voltage_rank, sigma_min, residual_norm: sol.residual_norm, exact };
    let y = map.unsvec(&linalg::complexify_vec(&sol.x), m.labels().to_vec())?;
    Ok((y, diag))
}

/// Which line parameters the signed estimator keeps nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConstraint {
    /// Line conductance `g = -Re Y[i,j] >= 0`.
    #[default]
    Conductance,
    /// Additionally inductive susceptance: `Im Y[i,j] >= 0`.
    Both,
}

/// Least squares with sign-constrained line parameters (active-set NNLS).
pub fn estimate_full_signed(
    m: &MeasurementSet,
    map: &StructureMap,
    constrain: SignConstraint,
) -> Result<(AdmittanceMatrix, EstimateDiagnostics)> {
    let (mut a, b) = realified_system(m, map)?;
    let p = map.columns.len();
    // Real unknowns are [Re x; Im x]. Flip the real-part columns of pairs so
    // the constrained variable is the conductance itself.
    let mut constrained = vec![false; 2 * p];
    for (col, param) in map.columns.iter().enumerate() {
        if let Param::Pair(..) = param {
            a.column_mut(col).neg_mut();
            constrained[col] = true;
            if constrain == SignConstraint::Both {
                constrained[col + p] = true;
            }
        }
    }
    let sol = nnls(&a, &b, &constrained)?;
    let mut x = sol.x.clone();
    for (col, param) in map.columns.iter().enumerate() {
        if let Param::Pair(..) = param {
            x[col] = -x[col];
        }
    }
    let (voltage_rank, exact) = voltage_diagnostics(m.voltages());
    let sv = linalg::singular_values_real(&a);
    let sigma_min = if sv.len() < a.ncols() { 0.0 } else { *sv.last().unwrap_or(&0.0) };
    let diag = EstimateDiagnostics { slots: m.slots(), voltage_rank, sigma_min, residual_norm: sol.residual_norm, exact };
    let y = map.unsvec(&linalg::complexify_vec(&x), m.labels().to_vec())?;
    Ok((y, diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_n2() {
        let g = build_gamma(&StructureMap::new(2, DiagonalMode::Constrained).unwrap());
        assert_eq!(g, DMatrix::from_column_slice(4, 1, &[-1.0, 1.0, 1.0, -1.0]));
    }

    #[test]
    fn gamma_n3_example() {
        let g = build_gamma(&StructureMap::new(3, DiagonalMode::Constrained).unwrap());
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(9, 3, &[
            -1.0, -1.0,  0.0, // Y11
             1.0,  0.0,  0.0, // Y21
             0.0,  1.0,  0.0, // Y31
             1.0,  0.0,  0.0, // Y12
            -1.0,  0.0, -1.0, // Y22
             0.0,  0.0,  1.0, // Y32
             0.0,  1.0,  0.0, // Y13
             0.0,  0.0,  1.0, // Y23
             0.0, -1.0, -1.0, // Y33
        ]);
        assert_eq!(g, expect);
    }

    #[test]
    fn gamma_n5_rank() {
        let g = build_gamma(&StructureMap::new(5, DiagonalMode::Constrained).unwrap());
        let qr = g.qr();
        let r = qr.r();
        let rank = (0..r.nrows().min(r.ncols())).filter(|&k| r[(k, k)].abs() > 1e-12).count();
        assert_eq!(rank, 10);
    }

    #[test]
    fn known_diagonal_needs_free_mode() {
        let known = BTreeMap::from([(0, C64::new(1.0, 0.0))]);
        assert!(StructureMap::with_known_diagonal(3, DiagonalMode::Constrained, known.clone()).is_err());
        let map = StructureMap::with_known_diagonal(3, DiagonalMode::Free, known).unwrap();
        assert_eq!(map.columns().len(), 3 + 2);
    }

    fn two_bus(k: usize) -> (AdmittanceMatrix, MeasurementSet) {
        let yl = C64::new(1.0, -2.0);
        let mut y = AdmittanceMatrix::zeros_indexed(2);
        y.set(0, 0, yl);
        y.set(1, 1, yl);
        y.set(0, 1, -yl);
        let v = DMatrix::from_fn(k, 2, |s, j| C64::from_polar(1.0 + 0.05 * (s + j) as f64, 0.1 * (s * s + 3 * j) as f64));
        let i = &v * y.to_dense();
        let m = MeasurementSet::new(y.labels().to_vec(), v, Some(i), None).unwrap();
        (y, m)
    }

    #[test]
    fn two_bus_exact() {
        let (y, m) = two_bus(2);
        let map = StructureMap::new(2, DiagonalMode::Constrained).unwrap();
        let (est, d) = estimate_full(&m, &map).unwrap();
        assert!(est.max_abs_diff(&y) < 1e-12);
        assert!(d.residual_norm <= 1e-10);
        assert!(d.exact);
    }

    #[test]
    fn signed_matches_unconstrained_when_inactive() {
        let (_, m) = two_bus(3);
        let map = StructureMap::new(2, DiagonalMode::Free).unwrap();
        let (a, _) = estimate_full(&m, &map).unwrap();
        for c in [SignConstraint::Conductance, SignConstraint::Both] {
            let (b, _) = estimate_full_signed(&m, &map, c).unwrap();
            assert!(a.max_abs_diff(&b) <= 1e-9);
        }
    }
}
