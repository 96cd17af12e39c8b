//! Dense linear-algebra helpers shared by the estimators and solvers.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// Singular values below `RANK_RTOL * sigma_max` count as zero.
pub const RANK_RTOL: f64 = 1e-10;

/// Block form `[[Re, -Im], [Im, Re]]` of a complex matrix.
pub fn realify(m: &DMatrix<C64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for j in 0..c {
        for i in 0..r {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

/// Stacks `[Re v; Im v]`.
pub fn realify_vec(v: &DVector<C64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`realify_vec`].
pub fn complexify_vec(v: &DVector<f64>) -> DVector<C64> {
    let n = v.len() / 2;
    DVector::from_fn(n, |i, _| C64::new(v[i], v[i + n]))
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn singular_values_real(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with the crate-wide relative tolerance.
pub fn rank_of(sv: &[f64]) -> usize {
    let Some(&smax) = sv.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * smax).count()
}

/// Reciprocal 2-norm condition number `sigma_min / sigma_max`.
pub fn rcond(m: &DMatrix<C64>) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `(M + M^T) / 2` (plain transpose, not adjoint).
pub fn symmetric_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.transpose()).scale(0.5)
}

/// Outcome of a dense least-squares solve.
#[derive(Debug, Clone)]
pub struct LstsqSolution<T: nalgebra::Scalar> {
    pub x: DVector<T>,
    /// Singular values of the design matrix, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub residual_norm: f64,
}

/// Minimises `||A x - b||_2` over complex `x`.
///
/// Full column rank: Householder QR and back substitution. Otherwise the
/// minimum-norm solution from a truncated SVD.
pub fn lstsq(a: &DMatrix<C64>, b: &DVector<C64>) -> LstsqSolution<C64> {
    let (m, n) = a.shape();
    assert_eq!(m, b.len(), "lstsq: row mismatch");
    if n == 0 {
        return LstsqSolution { x: DVector::zeros(0), singular_values: vec![], rank: 0, residual_norm: b.norm() };
    }
    let full_rank_candidate = m >= n;
    if full_rank_candidate {
        let qr = a.clone().qr();
        let r = qr.r();
        let sv = singular_values(&r);
        let rank = rank_of(&sv);
        if rank == n {
            let mut qtb = b.clone();
            qr.q_tr_mul(&mut qtb);
            let head = qtb.rows(0, n).into_owned();
            if let Some(x) = r.solve_upper_triangular(&head) {
                let residual_norm = (a * &x - b).norm();
                return LstsqSolution { x, singular_values: sv, rank, residual_norm };
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let rank = rank_of(&sv);
    let eps = sv.first().copied().unwrap_or(0.0) * RANK_RTOL;
    let x = svd.solve(b, eps.max(f64::MIN_POSITIVE)).expect("svd computed with u and v");
    let residual_norm = (a * &x - b).norm();
    LstsqSolution { x, singular_values: sv, rank, residual_norm }
}

/// Real-valued counterpart of [`lstsq`].
pub fn lstsq_real(a: &DMatrix<f64>, b: &DVector<f64>) -> LstsqSolution<f64> {
    let (m, n) = a.shape();
    assert_eq!(m, b.len(), "lstsq: row mismatch");
    if n == 0 {
        return LstsqSolution { x: DVector::zeros(0), singular_values: vec![], rank: 0, residual_norm: b.norm() };
    }
    if m >= n {
        let qr = a.clone().qr();
        let r = qr.r();
        let sv = singular_values_real(&r);
        let rank = rank_of(&sv);
        if rank == n {
            let mut qtb = b.clone();
            qr.q_tr_mul(&mut qtb);
            let head = qtb.rows(0, n).into_owned();
            if let Some(x) = r.solve_upper_triangular(&head) {
                let residual_norm = (a * &x - b).norm();
                return LstsqSolution { x, singular_values: sv, rank, residual_norm };
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let rank = rank_of(&sv);
    let eps = sv.first().copied().unwrap_or(0.0) * RANK_RTOL;
    let x = svd.solve(b, eps.max(f64::MIN_POSITIVE)).expect("svd computed with u and v");
    let residual_norm = (a * &x - b).norm();
    LstsqSolution { x, singular_values: sv, rank, residual_norm }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn realify_identity() {
        let m = DMatrix::<C64>::identity(2, 2);
        assert_eq!(realify(&m), DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn lstsq_matches_exact_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[c(1.0, 1.0), c(0.0, 2.0), c(2.0, -1.0), c(1.0, 0.0), c(0.5, 0.5), c(-1.0, 3.0)]);
        let x = DVector::from_vec(vec![c(0.3, -0.7), c(1.1, 0.2)]);
        let b = &a * &x;
        let sol = lstsq(&a, &b);
        assert_eq!(sol.rank, 2);
        assert!((sol.x - x).norm() < 1e-12);
        assert!(sol.residual_norm < 1e-12);
    }

    #[test]
    fn lstsq_rank_deficient_is_min_norm() {
        // Two identical columns: minimum-norm solution splits the weight evenly.
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0)]);
        let b = DVector::from_vec(vec![c(2.0, 0.0), c(0.0, 2.0)]);
        let sol = lstsq(&a, &b);
        assert_eq!(sol.rank, 1);
        assert!((sol.x[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((sol.x[1] - c(1.0, 0.0)).norm() < 1e-12);
    }
}
