//! Sparse plus low-rank splitting `Ybar = A - B` of a reduced matrix.
//!
//! Solves `min ||A||_1 + lambda ||B||_*  s.t.  A - B = Ybar` by scaled ADMM,
//! where `||.||_1` sums `|Re| + |Im|` over entries. The scaled dual `U`
//! yields the multiplier `G = rho U`, which at a solution satisfies
//! `-G in d||A||_1` and `G / lambda in d||B||_*`; [`check_optimality`]
//! verifies both conditions from fresh factorizations.

use nalgebra::DMatrix;

use crate::{linalg, AdmittanceMatrix, Error, Result, C64};

/// Shrinks real and imaginary parts towards zero by `tau`, independently.
pub fn soft_threshold(m: &DMatrix<C64>, tau: f64) -> DMatrix<C64> {
    let shrink = |x: f64| x.signum() * (x.abs() - tau).max(0.0);
    m.map(|z| C64::new(shrink(z.re), shrink(z.im)))
}

/// Singular value thresholding: `U max(S - tau, 0) V^H`.
pub fn svt(m: &DMatrix<C64>, tau: f64) -> DMatrix<C64> {
    if m.is_empty() {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let t = s - tau;
        if t > 0.0 {
            out += (u.column(k) * vt.row(k)).scale(t);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlrdConfig {
    /// Nuclear-norm weight; `None` means `1 / sqrt(n)`.
    pub lambda: Option<f64>,
    pub rho: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
}

impl Default for SlrdConfig {
    fn default() -> Self {
        Self { lambda: None, rho: 1.0, tol_abs: 1e-8, tol_rel: 1e-6, max_iter: 10_000 }
    }
}

impl SlrdConfig {
    pub fn lambda_for(&self, n: usize) -> f64 {
        self.lambda.unwrap_or(1.0 / (n.max(1) as f64).sqrt())
    }
}

/// Measured margins of the first-order conditions; each ok flag compares
/// its margins against the tolerance passed to [`check_optimality`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub linf_dual_ok: bool,
    pub spectral_dual_ok: bool,
    pub primal_ok: bool,
    /// `max(|Re|, |Im|)` of the multiplier minus 1 (off-support bound).
    pub linf_excess: f64,
    /// Largest deviation from `-sign(A)` on the support of `A`.
    pub support_error: f64,
    /// `||G / lambda||_2 - 1`.
    pub spectral_excess: f64,
    /// `||U_r^H (G/lambda) V_r - I||_max` over the range of `B`.
    pub alignment_error: f64,
    /// Largest spectral norm of the mixed blocks between range and complement.
    pub cross_error: f64,
    /// `||A - B - Ybar||_F / max(1, ||Ybar||_F)`.
    pub primal_error: f64,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.linf_dual_ok && self.spectral_dual_ok && self.primal_ok
    }

    /// Largest of the margins, zero when every condition holds exactly.
    pub fn worst_margin(&self) -> f64 {
        [
            self.linf_excess.max(0.0),
            self.support_error,
            self.spectral_excess.max(0.0),
            self.alignment_error,
            self.cross_error,
            self.primal_error,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub labels: Vec<String>,
    pub ybar: DMatrix<C64>,
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    /// Scaled dual; the multiplier is `rho * u`.
    pub u: DMatrix<C64>,
    pub lambda: f64,
    pub rho: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Primal residual after each sweep.
    pub primal_history: Vec<f64>,
    pub converged: bool,
    pub certificate: Certificate,
}

impl DecompositionResult {
    pub fn a_matrix(&self) -> Result<AdmittanceMatrix> {
        AdmittanceMatrix::from_dense_symmetrized(self.labels.clone(), &self.a)
    }

    pub fn b_matrix(&self) -> Result<AdmittanceMatrix> {
        AdmittanceMatrix::from_dense_symmetrized(self.labels.clone(), &self.b)
    }

    pub fn multiplier(&self) -> DMatrix<C64> {
        self.u.scale(self.rho)
    }
}

/// Default tolerance of the certificate checks.
pub const CERTIFICATE_TOL: f64 = 1e-4;

pub fn decompose(ybar: &AdmittanceMatrix, cfg: &SlrdConfig) -> Result<DecompositionResult> {
    let n = ybar.n();
    let lambda = cfg.lambda_for(n);
    if !(lambda > 0.0) || !(cfg.rho > 0.0) {
        return Err(Error::Invalid(format!("lambda and rho must be positive (got {lambda}, {})", cfg.rho)));
    }
    let y = ybar.to_dense();
    let rho = cfg.rho;
    let mut a = y.clone();
    let mut b = DMatrix::zeros(n, n);
    let mut u = DMatrix::zeros(n, n);
    let y_norm = y.norm();
    let mut history = Vec::new();
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        a = linalg::symmetric_part(&soft_threshold(&(&b + &y - &u), 1.0 / rho));
        let b_prev = b.clone();
        b = linalg::symmetric_part(&svt(&(&a - &y + &u), lambda / rho));
        let r = &a - &b - &y;
        u += &r;
        primal = r.norm();
        dual = rho * (&b - &b_prev).norm();
        history.push(primal);
        let eps_pri = cfg.tol_abs + cfg.tol_rel * a.norm().max(b.norm()).max(y_norm);
        let eps_dual = cfg.tol_abs + cfg.tol_rel * rho * u.norm();
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("decomposition stopped after {iterations} sweeps, primal {primal:.3e}, dual {dual:.3e}");
    }
    let mut out = DecompositionResult {
        labels: ybar.labels().to_vec(),
        ybar: y,
        a,
        b,
        u,
        lambda,
        rho,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        primal_history: history,
        converged,
        certificate: Certificate {
            linf_dual_ok: false,
            spectral_dual_ok: false,
            primal_ok: false,
            linf_excess: f64::INFINITY,
            support_error: f64::INFINITY,
            spectral_excess: f64::INFINITY,
            alignment_error: f64::INFINITY,
            cross_error: f64::INFINITY,
            primal_error: f64::INFINITY,
        },
    };
    out.certificate = check_optimality(&out, lambda, CERTIFICATE_TOL);
    Ok(out)
}

/// Re-derives the optimality conditions of `(A, B, rho U)` from scratch.
pub fn check_optimality(r: &DecompositionResult, lambda: f64, tol: f64) -> Certificate {
    let g = r.multiplier();
    let n = g.nrows();

    // l1 part: -G must be a subgradient of sum |Re| + |Im| at A.
    let a_scale = linalg::max_abs(&r.a).max(f64::MIN_POSITIVE);
    let support_tol = 1e-9 * a_scale;
    let mut linf_excess: f64 = -1.0;
    let mut support_error: f64 = 0.0;
    for (az, gz) in r.a.iter().zip(g.iter()) {
        for (x, d) in [(az.re, -gz.re), (az.im, -gz.im)] {
            if x.abs() > support_tol {
                support_error = support_error.max((d - x.signum()).abs());
            } else {
                linf_excess = linf_excess.max(d.abs() - 1.0);
            }
        }
    }
    let linf_excess = linf_excess.max(-1.0);

    // Nuclear part: G / lambda = U_r V_r^H + W with W orthogonal to both
    // singular subspaces of B and ||W||_2 <= 1.
    let gl = g.unscale(lambda);
    let spectral_excess = linalg::singular_values(&gl).first().copied().unwrap_or(0.0) - 1.0;
    let (alignment_error, cross_error) = if n == 0 {
        (0.0, 0.0)
    } else {
        let svd = r.b.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let keep: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > 1e-9 * smax.max(f64::MIN_POSITIVE)).collect();
        if keep.is_empty() {
            (0.0, 0.0)
        } else {
            let u = svd.u.expect("u requested").select_columns(&keep);
            let v = svd.v_t.expect("v_t requested").select_rows(&keep).adjoint();
            let core = u.adjoint() * &gl * &v;
            let align = linalg::max_abs_diff(&core, &DMatrix::identity(keep.len(), keep.len()));
            let pu = DMatrix::identity(n, n) - &u * u.adjoint();
            let pv = DMatrix::identity(n, n) - &v * v.adjoint();
            let left = linalg::singular_values(&(&pu * &gl * &v)).first().copied().unwrap_or(0.0);
            let right = linalg::singular_values(&(u.adjoint() * &gl * &pv)).first().copied().unwrap_or(0.0);
            (align, left.max(right))
        }
    };

    let primal_error = (&r.a - &r.b - &r.ybar).norm() / r.ybar.norm().max(1.0);
    Certificate {
        linf_dual_ok: linf_excess <= tol && support_error <= tol,
        spectral_dual_ok: spectral_excess <= tol && alignment_error <= tol && cross_error <= tol,
        primal_ok: primal_error <= tol,
        linf_excess,
        support_error,
        spectral_excess,
        alignment_error,
        cross_error,
        primal_error,
    }
}
