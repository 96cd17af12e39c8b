use std::fmt;
use std::fmt::Write as _;

use ipf::estimator::{estimator_by_name, structure_for};
use ipf::fullid::{DiagonalMode, SignConstraint};
use ipf::ingest::{parse_case_script, parse_phasor_table, write_phasor_table};
use ipf::netmodel::{build_admittance, kron_reduce, BuildMode};
use ipf::radial::{align_truth, recover_radial as run_recover, write_group_table, RadialConfig};
use ipf::simgen::{check_zero_injection, generate_scenarios, measure, solve_scenarios, write_manifest};
use ipf::slrd::{decompose as run_decompose, SlrdConfig};
use ipf::{AdmittanceMatrix, Error, NodePartition};
use serde_json::json;

use crate::files::{
    parse_known_diagonal, parse_scale, read_matrix, read_text, resolve_labels, write_json, write_text,
};
use crate::{DecomposeArgs, Diagonal, EvalArgs, GenArgs, IdentifyArgs, KronArgs, RecoverArgs, Sign};

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(String),
    NotExact(String),
    NotConverged(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Divergence { .. }) => 3,
            Failure::Core(Error::DepthExceeded(_)) => 5,
            Failure::Core(_) | Failure::Io(_) => 2,
            Failure::NotExact(_) => 4,
            Failure::NotConverged(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(msg) => write!(f, "{msg}"),
            Failure::NotExact(msg) => write!(f, "estimate is not unique: {msg}"),
            Failure::NotConverged(msg) => write!(f, "not converged: {msg}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

pub fn gen(a: &GenArgs) -> Outcome {
    let case = parse_case_script(&read_text(&a.case)?)?;
    let (lo, hi) = parse_scale(&a.scale)?;
    let labels = case.labels();
    let hidden = resolve_labels(&a.hidden, &labels)?;
    check_zero_injection(&case, &hidden)?;
    let set = generate_scenarios(&case, a.slots, lo, hi, a.seed)?;
    let states = solve_scenarios(&set)?;
    let observed: Vec<usize> = (0..labels.len()).filter(|k| !hidden.contains(k)).collect();
    let m = measure(&states, &labels, &observed, a.snr, a.seed)?;
    let y = build_admittance(&case, BuildMode::Physical)?;

    write_text(&a.out, "phasors.csv", &write_phasor_table(&m))?;
    write_text(&a.out, "scenarios.csv", &write_manifest(&set))?;
    write_text(&a.out, "truth.json", &y.to_json())?;
    if !hidden.is_empty() {
        let reduced = kron_reduce(&y, &NodePartition::from_hidden(y.n(), &hidden)?)?;
        write_text(&a.out, "truth_reduced.json", &reduced.to_json())?;
    }
    let worst = states.iter().map(|s| s.iterations).max().unwrap_or(0);
    log::info!("{} slots solved, at most {worst} Newton iterations", states.len());
    Ok(())
}

pub fn identify(a: &IdentifyArgs) -> Outcome {
    let mut m = parse_phasor_table(&read_text(&a.meas)?)?;
    if let Some(k) = a.slots {
        m = m.first_slots(k)?;
    }
    let constrain = match a.sign {
        Sign::Conductance => SignConstraint::Conductance,
        Sign::Both => SignConstraint::Both,
    };
    let est = estimator_by_name(a.mode.name(), constrain, &a.hidden)?;
    let mode = match a.diagonal {
        Diagonal::Constrained => DiagonalMode::Constrained,
        Diagonal::Free => DiagonalMode::Free,
    };
    let known = match &a.known_diag {
        Some(path) => parse_known_diagonal(&read_text(path)?, &est.observed_labels(&m))?,
        None => Default::default(),
    };
    let map = structure_for(est.as_ref(), &m, mode, known)?;
    let (y, d) = est.estimate(&m, &map)?;

    write_text(&a.out, "estimate.json", &y.to_json())?;
    let summary = json!({
        "mode": est.name(),
        "diagonal": format!("{:?}", a.diagonal).to_lowercase(),
        "buses": y.n(),
        "slots": d.slots,
        "voltage_rank": d.voltage_rank,
        "sigma_min": d.sigma_min,
        "residual_norm": d.residual_norm,
        "exact": d.exact,
    });
    write_json(&a.out, "diagnostics.json", &summary)?;
    if a.require_exact && !d.exact {
        return Err(Failure::NotExact(format!(
            "rank of the voltage records is {} over {} slots for {} buses",
            d.voltage_rank,
            d.slots,
            y.n()
        )));
    }
    Ok(())
}

pub fn kron(a: &KronArgs) -> Outcome {
    let y = match (&a.input, &a.case) {
        (Some(path), None) => read_matrix(path)?,
        (None, Some(path)) => build_admittance(&parse_case_script(&read_text(path)?)?, BuildMode::Physical)?,
        _ => return Err(Error::Invalid("give exactly one of --input and --case".into()).into()),
    };
    let hidden = resolve_labels(&a.hidden, y.labels())?;
    let reduced = kron_reduce(&y, &NodePartition::from_hidden(y.n(), &hidden)?)?;
    write_text(&a.out, "reduced.json", &reduced.to_json())
}

pub fn decompose(a: &DecomposeArgs) -> Outcome {
    let ybar = read_matrix(&a.input)?;
    let cfg = SlrdConfig { lambda: a.lambda, rho: a.rho, tol_abs: a.tol_abs, tol_rel: a.tol_rel, max_iter: a.max_iter };
    let r = run_decompose(&ybar, &cfg)?;
    write_text(&a.out, "sparse.json", &r.a_matrix()?.to_json())?;
    write_text(&a.out, "lowrank.json", &r.b_matrix()?.to_json())?;
    let c = &r.certificate;
    let summary = json!({
        "lambda": r.lambda,
        "rho": r.rho,
        "iterations": r.iterations,
        "primal_residual": r.primal_residual,
        "dual_residual": r.dual_residual,
        "converged": r.converged,
        "certificate": {
            "passed": c.passed(),
            "linf_dual_ok": c.linf_dual_ok,
            "spectral_dual_ok": c.spectral_dual_ok,
            "primal_ok": c.primal_ok,
            "linf_excess": c.linf_excess,
            "support_error": c.support_error,
            "spectral_excess": c.spectral_excess,
            "alignment_error": c.alignment_error,
            "cross_error": c.cross_error,
            "primal_error": c.primal_error,
        },
    });
    write_json(&a.out, "decomposition.json", &summary)?;
    if !r.converged {
        return Err(Failure::NotConverged(format!(
            "{} sweeps, primal residual {:.3e}, dual residual {:.3e}",
            r.iterations, r.primal_residual, r.dual_residual
        )));
    }
    Ok(())
}

pub fn recover_radial(a: &RecoverArgs) -> Outcome {
    let ybar = read_matrix(&a.input)?;
    let cfg = RadialConfig { zero_threshold: a.zero_threshold, tol_ratio: a.ratio_tol, ..RadialConfig::default() };
    let r = run_recover(&ybar, &cfg)?;
    write_text(&a.out, "recovered.json", &r.y.to_json())?;
    write_text(&a.out, "groups.csv", &write_group_table(&r))?;
    let summary = json!({
        "observed": r.observed,
        "hidden": r.hidden_labels(),
        "depth": r.depth,
        "roundtrip_error": r.roundtrip_error,
    });
    write_json(&a.out, "recovery.json", &summary)
}

/// Truth in the node order of `est`.
fn comparable_truth(truth: &AdmittanceMatrix, est: &AdmittanceMatrix, hidden: &[usize]) -> Result<AdmittanceMatrix, Failure> {
    if est.n() == truth.n() {
        return Ok(align_truth(truth, hidden, est)?);
    }
    if est.n() + hidden.len() != truth.n() {
        return Err(Error::Dimension(format!(
            "estimate has {} buses, truth has {} with {} hidden",
            est.n(),
            truth.n(),
            hidden.len()
        ))
        .into());
    }
    let idx = resolve_labels(est.labels(), truth.labels())?;
    if let Some(i) = idx.iter().find(|i| hidden.contains(i)) {
        return Err(Error::Invalid(format!("bus `{}` is both hidden and estimated", truth.labels()[*i])).into());
    }
    Ok(truth.submatrix(&idx))
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn eval(a: &EvalArgs) -> Outcome {
    let truth = read_matrix(&a.truth)?;
    let est = read_matrix(&a.input)?;
    let hidden = resolve_labels(&a.hidden, truth.labels())?;
    let truth = comparable_truth(&truth, &est, &hidden)?;
    let n = est.n();

    let mut table = String::from("i,j,abs_err\n");
    let (mut max_err, mut sq_err, mut sq_truth) = (0.0f64, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let e = (est.get(i, j) - truth.get(i, j)).norm();
            max_err = max_err.max(e);
            sq_err += e * e;
            sq_truth += truth.get(i, j).norm_sqr();
            let _ = writeln!(table, "{},{},{e}", est.labels()[i], est.labels()[j]);
        }
    }
    let (mut tp, mut n_true, mut n_est) = (0, 0, 0);
    for i in 0..n {
        for j in i + 1..n {
            let t = truth.get(i, j).norm() > a.zero_threshold;
            let e = est.get(i, j).norm() > a.zero_threshold;
            n_true += t as usize;
            n_est += e as usize;
            tp += (t && e) as usize;
        }
    }
    write_text(&a.out, "errors.csv", &table)?;
    let summary = json!({
        "buses": n,
        "max_abs_err": max_err,
        "frobenius_err": sq_err.sqrt(),
        "relative_frobenius_err": sq_err.sqrt() / sq_truth.sqrt().max(f64::MIN_POSITIVE),
        "zero_threshold": a.zero_threshold,
        "true_edges": n_true,
        "estimated_edges": n_est,
        "support_precision": ratio(tp, n_est),
        "support_recall": ratio(tp, n_true),
        "support_exact": tp == n_true && tp == n_est,
    });
    write_json(&a.out, "summary.json", &summary)
}
