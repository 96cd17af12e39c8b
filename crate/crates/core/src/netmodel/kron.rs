use nalgebra::DMatrix;

use super::AdmittanceMatrix;
use crate::{linalg, Error, Result, C64};

/// Reductions are refused when `sigma_min / sigma_max` of the hidden block
/// falls below this.
pub const MIN_RCOND: f64 = 1e-12;

/// Split of node indices into observed and hidden sets, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePartition {
    observed: Vec<usize>,
    hidden: Vec<usize>,
}

impl NodePartition {
    pub fn from_hidden(n: usize, hidden: &[usize]) -> Result<Self> {
        let mut is_hidden = vec![false; n];
        for &h in hidden {
            if h >= n {
                return Err(Error::Invalid(format!("hidden index {h} out of range for n = {n}")));
            }
            if std::mem::replace(&mut is_hidden[h], true) {
                return Err(Error::Invalid(format!("hidden index {h} listed twice")));
            }
        }
        let observed = (0..n).filter(|&i| !is_hidden[i]).collect();
        let hidden = (0..n).filter(|&i| is_hidden[i]).collect();
        Ok(Self { observed, hidden })
    }

    /// Resolves hidden bus labels against a matrix.
    pub fn from_hidden_labels(y: &AdmittanceMatrix, labels: &[String]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| y.index_of(l).ok_or_else(|| Error::UnknownBus(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_hidden(y.n(), &idx)
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn n(&self) -> usize {
        self.observed.len() + self.hidden.len()
    }
}

fn block(m: &DMatrix<C64>, rows: &[usize], cols: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

/// `Y22^{-1} Y21`, shared by Kron reduction and hidden-voltage recovery.
pub(crate) fn hidden_gain(y: &DMatrix<C64>, part: &NodePartition) -> Result<DMatrix<C64>> {
    let y22 = block(y, part.hidden(), part.hidden());
    let y21 = block(y, part.hidden(), part.observed());
    let rc = linalg::rcond(&y22);
    if rc < MIN_RCOND {
        return Err(Error::Singular(format!("hidden block has reciprocal condition {rc:.3e}")));
    }
    y22.lu().solve(&y21).ok_or_else(|| Error::Singular("hidden block is not invertible".into()))
}

/// Kron reduction `Y11 - Y12 Y22^{-1} Y21` over the observed nodes.
pub fn kron_reduce(y: &AdmittanceMatrix, part: &NodePartition) -> Result<AdmittanceMatrix> {
    if part.n() != y.n() {
        return Err(Error::Dimension(format!("partition of {} nodes for a {}-node matrix", part.n(), y.n())));
    }
    if part.observed().is_empty() {
        return Err(Error::Invalid("every node is hidden".into()));
    }
    if part.hidden().is_empty() {
        return Ok(y.clone());
    }
    let dense = y.to_dense();
    let gain = hidden_gain(&dense, part)?;
    let y11 = block(&dense, part.observed(), part.observed());
    let y12 = block(&dense, part.observed(), part.hidden());
    let reduced = y11 - y12 * gain;
    let labels = part.observed().iter().map(|&i| y.labels()[i].clone()).collect();
    AdmittanceMatrix::from_dense_symmetrized(labels, &reduced)
}

/// Schur complement with respect to the single diagonal entry `Y[i,i]`.
pub fn eliminate_node(y: &AdmittanceMatrix, i: usize) -> Result<AdmittanceMatrix> {
    let n = y.n();
    if i >= n {
        return Err(Error::Invalid(format!("node {i} out of range for n = {n}")));
    }
    let pivot = y.get(i, i);
    if pivot.norm() <= MIN_RCOND * y.max_abs() || pivot.norm() == 0.0 {
        return Err(Error::Singular(format!("diagonal entry of node {i} is numerically zero")));
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let col: Vec<C64> = keep.iter().map(|&k| y.get(k, i)).collect();
    let labels = keep.iter().map(|&k| y.labels()[k].clone()).collect();
    let mut out = AdmittanceMatrix::zeros(labels);
    for b in 0..keep.len() {
        for a in 0..=b {
            let v = y.get(keep[a], keep[b]) - col[a] * col[b] / pivot;
            out.set(a, b, v);
        }
    }
    Ok(out)
}

/// Eliminates the hidden nodes one at a time in the given order.
///
/// `order` lists original indices; it must be a permutation of the
/// partition's hidden set.
pub fn eliminate_in_order(y: &AdmittanceMatrix, order: &[usize]) -> Result<AdmittanceMatrix> {
    let mut current = y.clone();
    // Original index of each surviving row.
    let mut alive: Vec<usize> = (0..y.n()).collect();
    for &h in order {
        let pos = alive
            .iter()
            .position(|&a| a == h)
            .ok_or_else(|| Error::Invalid(format!("node {h} eliminated twice or out of range")))?;
        current = eliminate_node(&current, pos)?;
        alive.remove(pos);
    }
    Ok(current)
}

/// Sequential Kron reduction in ascending index order.
pub fn kron_reduce_sequential(y: &AdmittanceMatrix, part: &NodePartition) -> Result<AdmittanceMatrix> {
    eliminate_in_order(y, part.hidden())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Star centred on node 0 with leaf admittances `t1` (node 1), `t2` (node 2).
    fn star(t1: C64, t2: C64) -> AdmittanceMatrix {
        let mut y = AdmittanceMatrix::zeros_indexed(3);
        y.set(0, 0, t1 + t2);
        y.set(0, 1, -t1);
        y.set(0, 2, -t2);
        y.set(1, 1, t1);
        y.set(2, 2, t2);
        y
    }

    #[test]
    fn hide_centre_of_star() {
        let (t1, t2) = (c(1.0, -2.0), c(3.0, -0.5));
        let red = kron_reduce(&star(t1, t2), &NodePartition::from_hidden(3, &[0]).unwrap()).unwrap();
        let t0 = t1 * t2 / (t1 + t2);
        assert!((red.get(0, 0) - t0).norm() < 1e-12);
        assert!((red.get(0, 1) + t0).norm() < 1e-12);
        assert!((red.get(1, 1) - t0).norm() < 1e-12);
    }

    #[test]
    fn hide_leaf_of_star() {
        let (t1, t2) = (c(1.0, -2.0), c(3.0, -0.5));
        let red = kron_reduce(&star(t1, t2), &NodePartition::from_hidden(3, &[2]).unwrap()).unwrap();
        assert!((red.get(0, 0) - t1).norm() < 1e-12);
        assert!((red.get(0, 1) + t1).norm() < 1e-12);
        assert!((red.get(1, 1) - t1).norm() < 1e-12);
    }

    #[test]
    fn empty_hidden_set_is_identity() {
        let y = star(c(1.0, -2.0), c(2.0, -1.0));
        assert_eq!(kron_reduce(&y, &NodePartition::from_hidden(3, &[]).unwrap()).unwrap(), y);
    }

    #[test]
    fn single_elimination_equals_block_reduction() {
        let y = star(c(1.0, -2.0), c(2.0, -1.0));
        let a = eliminate_node(&y, 0).unwrap();
        let b = kron_reduce(&y, &NodePartition::from_hidden(3, &[0]).unwrap()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn eliminating_a_leaf_only_touches_its_neighbour() {
        // Path 0 - 1 - 2 - 3; eliminate leaf 3 attached to 2 through y23.
        let ys = [c(1.0, -3.0), c(2.0, -1.0), c(0.5, -4.0)];
        let mut y = AdmittanceMatrix::zeros_indexed(4);
        for (k, &yk) in ys.iter().enumerate() {
            y.add(k, k, yk);
            y.add(k + 1, k + 1, yk);
            y.add(k, k + 1, -yk);
        }
        let red = eliminate_node(&y, 3).unwrap();
        // Hand expansion: Y[2,2] - Y[2,3]^2 / Y[3,3] = (y12 + y23) - y23 = y12.
        assert!((red.get(2, 2) - (y.get(2, 2) - ys[2])).norm() < 1e-14);
        for (i, j) in [(0, 0), (0, 1), (1, 1), (1, 2), (0, 2)] {
            assert_eq!(red.get(i, j), y.get(i, j));
        }
    }

    #[test]
    fn zero_pivot_is_rejected() {
        let mut y = AdmittanceMatrix::zeros_indexed(2);
        y.set(0, 1, c(1.0, 0.0));
        y.set(1, 1, c(1.0, 0.0));
        assert!(matches!(eliminate_node(&y, 0), Err(Error::Singular(_))));
    }

    #[test]
    fn disconnected_hidden_component_is_singular() {
        // Node 2 is isolated: its diagonal block is zero.
        let mut y = AdmittanceMatrix::zeros_indexed(3);
        y.set(0, 0, c(1.0, 0.0));
        y.set(1, 1, c(1.0, 0.0));
        y.set(0, 1, c(-1.0, 0.0));
        let part = NodePartition::from_hidden(3, &[2]).unwrap();
        assert!(matches!(kron_reduce(&y, &part), Err(Error::Singular(_))));
    }
}
