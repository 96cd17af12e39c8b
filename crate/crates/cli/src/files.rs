use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ipf::{AdmittanceMatrix, Error, C64};

use crate::commands::Failure;

pub fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<AdmittanceMatrix, Failure> {
    Ok(AdmittanceMatrix::from_json(&read_text(path)?)?)
}

pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_text(dir, name, &text)
}

/// `lo:hi` with `0 < lo <= hi`.
pub fn parse_scale(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Core(Error::Invalid(format!("scale `{text}` is not of the form lo:hi")));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Rows `bus,re,im`; an optional header starting with `bus` is skipped.
/// Keys are positions in `labels`.
pub fn parse_known_diagonal(text: &str, labels: &[String]) -> Result<BTreeMap<usize, C64>, Failure> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("bus")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |msg: &str| Failure::Core(Error::Invalid(format!("known diagonal line {}: {msg}", n + 1)));
        let [bus, re, im] = fields[..] else {
            return Err(bad("expected 3 fields"));
        };
        let idx = labels.iter().position(|l| l == bus).ok_or_else(|| Failure::Core(Error::UnknownBus(bus.into())))?;
        let re: f64 = re.parse().map_err(|_| bad("bad real part"))?;
        let im: f64 = im.parse().map_err(|_| bad("bad imaginary part"))?;
        if out.insert(idx, C64::new(re, im)).is_some() {
            return Err(bad("bus listed twice"));
        }
    }
    Ok(out)
}

/// Positions of `wanted` in `labels`, rejecting unknown and repeated ids.
pub fn resolve_labels(wanted: &[String], labels: &[String]) -> Result<Vec<usize>, Failure> {
    let mut out = Vec::with_capacity(wanted.len());
    for w in wanted {
        let idx = labels.iter().position(|l| l == w).ok_or_else(|| Failure::Core(Error::UnknownBus(w.clone())))?;
        if out.contains(&idx) {
            return Err(Failure::Core(Error::Invalid(format!("bus `{w}` listed twice"))));
        }
        out.push(idx);
    }
    Ok(out)
}
