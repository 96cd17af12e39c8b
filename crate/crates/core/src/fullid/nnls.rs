use nalgebra::{DMatrix, DVector};

use crate::{linalg, Error, Result};

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    /// Negative gradient `A^T (b - A x)` at the solution.
    pub gradient: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn solve_on(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(passive);
    let z = linalg::lstsq_real(&sub, b).x;
    let mut full = DVector::zeros(a.ncols());
    for (k, &j) in passive.iter().enumerate() {
        full[j] = z[k];
    }
    full
}

/// Lawson-Hanson active set for `min ||A x - b||` with `x[j] >= 0` wherever
/// `constrained[j]`; the other coordinates are free.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, constrained: &[bool]) -> Result<NnlsSolution> {
    let n = a.ncols();
    if constrained.len() != n || b.len() != a.nrows() {
        return Err(Error::Dimension("nnls: operand sizes disagree".into()));
    }
    let scale = a.norm() * b.norm().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut in_passive: Vec<bool> = constrained.iter().map(|&c| !c).collect();
    let passive_list = |flags: &[bool]| flags.iter().enumerate().filter(|(_, &p)| p).map(|(j, _)| j).collect::<Vec<_>>();

    let mut x = solve_on(a, b, &passive_list(&in_passive));
    let max_outer = 3 * n + 10;
    let mut iterations = 0;
    loop {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| constrained[j] && !in_passive[j] && w[j] > tol)
            .max_by(|&p, &q| w[p].total_cmp(&w[q]));
        let Some(enter) = candidate else { break };
        iterations += 1;
        if iterations > max_outer {
            return Err(Error::Invalid("nnls did not terminate".into()));
        }
        in_passive[enter] = true;
        loop {
            let z = solve_on(a, b, &passive_list(&in_passive));
            let blocking: Vec<usize> =
                (0..n).filter(|&j| constrained[j] && in_passive[j] && z[j] <= 0.0).collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for j in 0..n {
                if constrained[j] && in_passive[j] && x[j] <= 1e-14 * (1.0 + x.amax()) {
                    in_passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    let gradient = a.transpose() * (b - a * &x);
    let residual_norm = (a * &x - b).norm();
    Ok(NnlsSolution { x, gradient, residual_norm, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inactive_constraints_match_least_squares() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s = nnls(&a, &b, &[true, true]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn active_constraint_clamps_to_zero() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![-1.0, 2.0]);
        let s = nnls(&a, &b, &[true, false]).unwrap();
        assert_eq!(s.x[0], 0.0);
        assert!((s.x[1] - 2.0).abs() < 1e-12);
        // Complementary slackness: the clamped coordinate has nonpositive gradient.
        assert!(s.gradient[0] <= 0.0);
        let s = nnls(&a, &-b, &[false, true]).unwrap();
        assert_eq!(s.x, DVector::from_vec(vec![1.0, 0.0]));
    }
}
