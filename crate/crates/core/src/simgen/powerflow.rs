use nalgebra::{DMatrix, DVector};

use crate::ingest::{BusKind, NetworkCase};
use crate::netmodel::{build_admittance, BuildMode};
use crate::{Error, Result, C64};

pub const PF_TOLERANCE: f64 = 1e-8;
pub const PF_MAX_ITER: usize = 30;

/// Converged operating point, in case bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub v: DVector<C64>,
    /// Injection currents `Y V`.
    pub i: DVector<C64>,
    /// Injected complex power `V conj(I)`.
    pub s: DVector<C64>,
    /// Max-norm of the power mismatch at the returned point.
    pub mismatch: f64,
    pub iterations: usize,
}

/// Index sets of the Newton unknowns: angles at `pvpq`, magnitudes at `pq`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusSets {
    pub slack: usize,
    pub pvpq: Vec<usize>,
    pub pq: Vec<usize>,
}

impl BusSets {
    pub fn of(case: &NetworkCase) -> Result<Self> {
        let slack = case.slack_index().ok_or_else(|| Error::Invalid("case has no slack bus".into()))?;
        let pvpq = (0..case.buses.len()).filter(|&k| k != slack).collect();
        let pq = (0..case.buses.len()).filter(|&k| case.buses[k].kind == BusKind::Pq).collect();
        Ok(Self { slack, pvpq, pq })
    }
}

/// `[dP(pvpq); dQ(pq)]` with `dS = V conj(Y V) - S_spec`.
pub fn power_mismatch(y: &DMatrix<C64>, v: &DVector<C64>, s_spec: &DVector<C64>, sets: &BusSets) -> DVector<f64> {
    let i = y * v;
    let ds = v.zip_map(&i, |a, b| a * b.conj()) - s_spec;
    let mut f = DVector::zeros(sets.pvpq.len() + sets.pq.len());
    for (r, &k) in sets.pvpq.iter().enumerate() {
        f[r] = ds[k].re;
    }
    for (r, &k) in sets.pq.iter().enumerate() {
        f[sets.pvpq.len() + r] = ds[k].im;
    }
    f
}

/// Jacobian of [`power_mismatch`] with respect to `[Va(pvpq); Vm(pq)]`.
pub fn power_flow_jacobian(y: &DMatrix<C64>, v: &DVector<C64>, sets: &BusSets) -> DMatrix<f64> {
    let n = v.len();
    let i = y * v;
    let vn = v.map(|z| z / z.norm());
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
    // dS/dVm = diag(V) conj(Y diag(Vn)) + conj(diag(I)) diag(Vn)
    let mut ds_da = DMatrix::zeros(n, n);
    let mut ds_dm = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut ga = -y[(r, c)] * v[c];
            if r == c {
                ga += i[r];
            }
            ds_da[(r, c)] = C64::i() * v[r] * ga.conj();
            let mut gm = v[r] * (y[(r, c)] * vn[c]).conj();
            if r == c {
                gm += i[r].conj() * vn[r];
            }
            ds_dm[(r, c)] = gm;
        }
    }
    let (na, nm) = (sets.pvpq.len(), sets.pq.len());
    let mut j = DMatrix::zeros(na + nm, na + nm);
    for (a, &r) in sets.pvpq.iter().enumerate() {
        for (b, &c) in sets.pvpq.iter().enumerate() {
            j[(a, b)] = ds_da[(r, c)].re;
        }
        for (b, &c) in sets.pq.iter().enumerate() {
            j[(a, na + b)] = ds_dm[(r, c)].re;
        }
    }
    for (a, &r) in sets.pq.iter().enumerate() {
        for (b, &c) in sets.pvpq.iter().enumerate() {
            j[(na + a, b)] = ds_da[(r, c)].im;
        }
        for (b, &c) in sets.pq.iter().enumerate() {
            j[(na + a, na + b)] = ds_dm[(r, c)].im;
        }
    }
    j
}

/// Polar Newton-Raphson from a flat start.
pub fn solve_power_flow(case: &NetworkCase) -> Result<SteadyState> {
    let y = build_admittance(case, BuildMode::Physical)?.to_dense();
    solve_with_matrix(case, &y)
}

pub(crate) fn solve_with_matrix(case: &NetworkCase, y: &DMatrix<C64>) -> Result<SteadyState> {
    let sets = BusSets::of(case)?;
    let s_spec = DVector::from_vec(case.scheduled_injections());
    let slack_angle = case.buses[sets.slack].v_angle_setpoint;
    let mut vm: Vec<f64> =
        case.buses.iter().map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v_setpoint }).collect();
    let mut va = vec![slack_angle; case.buses.len()];
    let assemble = |vm: &[f64], va: &[f64]| DVector::from_iterator(vm.len(), vm.iter().zip(va).map(|(&m, &a)| C64::from_polar(m, a)));

    let mut v = assemble(&vm, &va);
    let mut f = power_mismatch(y, &v, &s_spec, &sets);
    let mut iterations = 0;
    while f.amax() > PF_TOLERANCE {
        if iterations == PF_MAX_ITER {
            return Err(Error::Divergence { iterations, mismatch: f.amax() });
        }
        iterations += 1;
        let j = power_flow_jacobian(y, &v, &sets);
        let dx = j
            .lu()
            .solve(&(-&f))
            .ok_or_else(|| Error::Divergence { iterations, mismatch: f.amax() })?;
        for (r, &k) in sets.pvpq.iter().enumerate() {
            va[k] += dx[r];
        }
        for (r, &k) in sets.pq.iter().enumerate() {
            vm[k] += dx[sets.pvpq.len() + r];
        }
        v = assemble(&vm, &va);
        f = power_mismatch(y, &v, &s_spec, &sets);
        if !f.amax().is_finite() {
            return Err(Error::Divergence { iterations, mismatch: f.amax() });
        }
    }
    let i = y * &v;
    let s = v.zip_map(&i, |a, b| a * b.conj());
    Ok(SteadyState { v, i, s, mismatch: f.amax(), iterations })
}
