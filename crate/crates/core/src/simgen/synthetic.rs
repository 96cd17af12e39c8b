//! Random test networks and direct phasor excitation.
//!
//! These bypass the power flow: voltages at the observed buses are drawn at
//! random, hidden voltages follow from the zero-injection condition, and
//! currents are `Y V`.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::hiddenid::hidden_voltages;
use crate::ingest::MeasurementSet;
use crate::netmodel::graph_of;
use crate::{AdmittanceMatrix, Error, NetworkGraph, NodePartition, Result, C64};

/// Inductive line with positive conductance.
pub fn random_line_admittance(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random_range(0.5..5.0), -rng.random_range(1.0..20.0))
}

fn stamp(y: &mut AdmittanceMatrix, a: usize, b: usize, v: C64) {
    y.add(a, a, v);
    y.add(b, b, v);
    y.add(a, b, -v);
}

/// Shuntless matrix of a random tree.
///
/// Parents are drawn uniformly among earlier nodes with fewer than
/// `max_degree` neighbours.
pub fn random_tree(n: usize, max_degree: usize, rng: &mut impl Rng) -> AdmittanceMatrix {
    let mut y = AdmittanceMatrix::zeros_indexed(n);
    let mut degree = vec![0usize; n];
    for v in 1..n {
        let open: Vec<usize> = (0..v).filter(|&p| degree[p] < max_degree.max(2)).collect();
        let parent = *open.choose(rng).unwrap_or(&(v - 1));
        degree[parent] += 1;
        degree[v] += 1;
        let w = random_line_admittance(rng);
        stamp(&mut y, parent, v, w);
    }
    y
}

/// Random tree plus up to `extra` chords.
pub fn random_connected_network(n: usize, extra: usize, rng: &mut impl Rng) -> AdmittanceMatrix {
    let mut y = random_tree(n, n, rng);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && y.get(a, b) == C64::new(0.0, 0.0) {
            let w = random_line_admittance(rng);
            stamp(&mut y, a, b, w);
        }
    }
    y
}

/// Distance of every node to the observed set, or `None` if some hidden
/// node cannot reach it.
pub fn hidden_levels(g: &NetworkGraph, part: &NodePartition) -> Option<Vec<usize>> {
    let mut level = vec![usize::MAX; g.n()];
    let adj = g.adjacency();
    let mut queue = VecDeque::new();
    for &o in part.observed() {
        level[o] = 0;
        queue.push_back(o);
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level.iter().all(|&l| l != usize::MAX).then_some(level)
}

/// Hidden nodes violating the layering rule: degree at least 3 and at
/// least two neighbours one level closer to the observed set.
pub fn layering_violations(g: &NetworkGraph, part: &NodePartition) -> Vec<usize> {
    let Some(level) = hidden_levels(g, part) else {
        return part.hidden().to_vec();
    };
    part.hidden()
        .iter()
        .copied()
        .filter(|&h| {
            let nb = g.neighbors(h);
            let closer = nb.iter().filter(|&&w| level[w] + 1 == level[h]).count();
            nb.len() < 3 || closer < 2
        })
        .collect()
}

/// A radial network with a recoverable hidden set.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialInstance {
    pub y: AdmittanceMatrix,
    pub partition: NodePartition,
}

/// Rejection sampler for radial instances whose hidden nodes all satisfy
/// the layering rule. Each hidden candidate is kept with probability
/// `p_hidden`; violators are released back to the observed set until the
/// rule holds.
pub fn random_radial_instance(n: usize, p_hidden: f64, rng: &mut impl Rng) -> Result<RadialInstance> {
    for _ in 0..1000 {
        let y = random_tree(n, 6, rng);
        let g = graph_of(&y, 0.0);
        let mut hidden: Vec<usize> = (0..n).filter(|&v| g.degree(v) >= 3 && rng.random_bool(p_hidden)).collect();
        loop {
            let part = NodePartition::from_hidden(n, &hidden)?;
            let bad = layering_violations(&g, &part);
            if bad.is_empty() {
                break;
            }
            hidden.retain(|h| !bad.contains(h));
        }
        if hidden.is_empty() || hidden.len() + 2 > n {
            continue;
        }
        let partition = NodePartition::from_hidden(n, &hidden)?;
        return Ok(RadialInstance { y, partition });
    }
    Err(Error::Invalid(format!("no admissible hidden set found for n = {n}")))
}

/// Random voltage phasor near 1 per-unit.
pub fn random_voltage(rng: &mut impl Rng) -> C64 {
    C64::from_polar(rng.random_range(0.9..1.1), rng.random_range(-0.5..0.5))
}

/// Noiseless records over the observed buses with zero hidden injection.
///
/// Returns the measurement set and the full `K x n` voltage matrix.
pub fn excite(
    y: &AdmittanceMatrix,
    part: &NodePartition,
    k: usize,
    rng: &mut impl Rng,
) -> Result<(MeasurementSet, DMatrix<C64>)> {
    let obs = part.observed();
    let v1 = DMatrix::from_fn(k, obs.len(), |_, _| random_voltage(rng));
    let v2 = hidden_voltages(y, part, &v1)?;
    let mut v = DMatrix::zeros(k, y.n());
    for (j, &o) in obs.iter().enumerate() {
        v.set_column(o, &v1.column(j));
    }
    for (j, &h) in part.hidden().iter().enumerate() {
        v.set_column(h, &v2.column(j));
    }
    let i = &v * y.to_dense();
    let labels = obs.iter().map(|&o| y.labels()[o].clone()).collect();
    let m = MeasurementSet::new(labels, v1, Some(i.select_columns(obs)), None)?;
    Ok((m, v))
}
