use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::NetworkCase;
use crate::{Error, Result};

/// Per-slot load scalings of a base case.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub base: NetworkCase,
    pub seed: u64,
    pub scale_lo: f64,
    pub scale_hi: f64,
    /// `scales[k][b]`: factor applied to bus `b` in slot `k`; 1.0 at unloaded buses.
    pub scales: Vec<Vec<f64>>,
}

impl ScenarioSet {
    pub fn slots(&self) -> usize {
        self.scales.len()
    }

    /// Buses whose load is scaled (nonzero active or reactive load).
    pub fn loaded_buses(&self) -> Vec<usize> {
        loaded(&self.base)
    }

    /// The base case with slot `k`'s loads.
    pub fn case_for_slot(&self, k: usize) -> NetworkCase {
        let mut case = self.base.clone();
        for (bus, &f) in case.buses.iter_mut().zip(&self.scales[k]) {
            bus.p_load *= f;
            bus.q_load *= f;
        }
        case
    }
}

fn loaded(case: &NetworkCase) -> Vec<usize> {
    (0..case.buses.len()).filter(|&b| case.buses[b].p_load != 0.0 || case.buses[b].q_load != 0.0).collect()
}

/// Rng of slot `k`: stream `k` of the master seed, so any slot can be
/// regenerated on its own.
pub fn slot_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// One uniform draw in `[lo, hi]` per loaded bus and slot, applied to both
/// its active and reactive load.
pub fn generate_scenarios(case: &NetworkCase, k: usize, lo: f64, hi: f64, seed: u64) -> Result<ScenarioSet> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::Invalid(format!("scale interval must satisfy 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    let buses = loaded(case);
    let scales = (0..k)
        .map(|slot| {
            let mut rng = slot_rng(seed, slot);
            let mut row = vec![1.0; case.buses.len()];
            for &b in &buses {
                row[b] = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            }
            row
        })
        .collect();
    Ok(ScenarioSet { base: case.clone(), seed, scale_lo: lo, scale_hi: hi, scales })
}

/// Text table `k,bus,scale` over the loaded buses.
pub fn write_manifest(set: &ScenarioSet) -> String {
    let mut out = String::from("k,bus,scale\n");
    let buses = set.loaded_buses();
    for (k, row) in set.scales.iter().enumerate() {
        for &b in &buses {
            let _ = writeln!(out, "{k},{},{}", set.base.buses[b].id, row[b]);
        }
    }
    out
}

/// Reads a manifest back into scalings against `case`.
pub fn parse_manifest(case: &NetworkCase, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "k,bus,scale")) => {}
        _ => return Err(Error::parse(1, 1, "expected header `k,bus,scale`")),
    }
    let mut scales: Vec<Vec<f64>> = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::parse(n + 1, 1, format!("expected 3 fields, found {}", f.len())));
        }
        let k: usize = f[0].parse().map_err(|_| Error::parse(n + 1, 1, "bad slot"))?;
        let id: usize = f[1].parse().map_err(|_| Error::parse(n + 1, 2, "bad bus id"))?;
        let s: f64 = f[2].parse().map_err(|_| Error::parse(n + 1, 3, "bad scale"))?;
        let b = case.bus_index(id).ok_or_else(|| Error::UnknownBus(id.to_string()))?;
        if k > scales.len() {
            return Err(Error::parse(n + 1, 1, format!("slot {k} out of order")));
        }
        if k == scales.len() {
            scales.push(vec![1.0; case.buses.len()]);
        }
        scales[k][b] = s;
    }
    Ok(scales)
}
