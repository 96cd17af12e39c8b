//! Exact recovery of a radial network from its Kron reduction.
//!
//! Eliminating a group of connected hidden nodes of a tree turns their
//! observed neighbours into a clique, and distinct groups give edge-disjoint
//! cliques. [`decouple`] peels the cliques off the reduced graph,
//! [`group_by_hidden`] assigns every clique member to its hidden neighbour
//! from row proportionality, and [`recover_clique`] rebuilds the line
//! admittances to the hidden nodes and the hidden block itself. When the
//! recovered hidden block is not a forest it is again a reduced matrix and
//! [`recover_radial`] recurses on it.

mod cliques;

use std::fmt::Write as _;

use nalgebra::DMatrix;

pub use cliques::maximal_cliques;

use crate::netmodel::{default_zero_threshold, graph_of, kron_reduce};
use crate::{linalg, AdmittanceMatrix, Error, NetworkGraph, NodePartition, Result, C64};

/// Ratio-test tolerance for noiseless data.
pub const TOL_RATIO: f64 = 1e-6;
/// Ratio-test tolerance suggested for noisy estimates.
pub const TOL_RATIO_NOISY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialConfig {
    /// Absolute threshold for edges; `None` uses `1e-6 * max|entry|`.
    pub zero_threshold: Option<f64>,
    pub tol_ratio: f64,
    /// Relative tolerance of the per-clique round trip.
    pub roundtrip_tol: f64,
    /// Recursion bound; `None` means `n - |M1|` is not known and the
    /// reduced size is used.
    pub max_depth: Option<usize>,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self { zero_threshold: None, tol_ratio: TOL_RATIO, roundtrip_tol: 1e-6, max_depth: None }
    }
}

/// A clique of the reduced graph with its share of the reduced matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Clique {
    /// Node indices into the reduced matrix, ascending.
    pub nodes: Vec<usize>,
    /// Off-diagonals copied from the reduced matrix; each diagonal entry is
    /// minus the sum of its row's off-diagonals.
    pub block: DMatrix<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    /// Laplacian of the edges outside every clique.
    pub tree_part: AdmittanceMatrix,
    pub cliques: Vec<Clique>,
    /// Diagonal not explained by tree and clique parts (bus shunts).
    pub leftover: Vec<C64>,
}

/// Splits the graph of `ybar` into edge-disjoint cliques of size at least 3
/// and a forest.
pub fn decouple(ybar: &AdmittanceMatrix, zero_threshold: f64) -> Result<Separation> {
    let n = ybar.n();
    let g = graph_of(ybar, zero_threshold);
    let found: Vec<Vec<usize>> = maximal_cliques(&g).into_iter().filter(|c| c.len() >= 3).collect();
    let name = |c: &[usize]| c.iter().map(|&i| ybar.labels()[i].clone()).collect::<Vec<_>>();
    for (a, ca) in found.iter().enumerate() {
        for cb in &found[a + 1..] {
            if ca.iter().filter(|v| cb.contains(v)).count() >= 2 {
                return Err(Error::CliqueOverlap { first: name(ca), second: name(cb) });
            }
        }
    }

    let mut rest = g.clone();
    let mut cliques = Vec::with_capacity(found.len());
    let mut leftover: Vec<C64> = (0..n).map(|i| ybar.get(i, i)).collect();
    for nodes in found {
        let m = nodes.len();
        let mut block = DMatrix::from_fn(m, m, |a, b| if a == b { C64::new(0.0, 0.0) } else { ybar.get(nodes[a], nodes[b]) });
        for a in 0..m {
            let s: C64 = block.row(a).iter().sum();
            block[(a, a)] = -s;
            leftover[nodes[a]] -= block[(a, a)];
        }
        for a in 0..m {
            for b in a + 1..m {
                rest.remove_edge(nodes[a], nodes[b]);
            }
        }
        cliques.push(Clique { nodes, block });
    }
    if rest.has_cycle() {
        return Err(Error::Recovery("graph left after removing cliques contains a cycle".into()));
    }

    let mut tree_part = AdmittanceMatrix::zeros(ybar.labels().to_vec());
    for (a, b) in rest.edges() {
        let v = ybar.get(a, b);
        tree_part.set(a, b, v);
        tree_part.add(a, a, -v);
        tree_part.add(b, b, -v);
        leftover[a] += v;
        leftover[b] += v;
    }
    Ok(Separation { tree_part, cliques, leftover })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenGrouping {
    /// Local member indices per hidden neighbour, each sorted; groups are
    /// ordered by their smallest member.
    pub groups: Vec<Vec<usize>>,
    /// `alpha[(k, j)]`: least-squares factor with `row k ~ alpha row j`.
    pub alpha: DMatrix<C64>,
    /// Relative residual of each ratio fit (symmetrised by the max).
    pub residual: DMatrix<f64>,
    pub beta: DMatrix<bool>,
}

impl HiddenGrouping {
    pub fn group_of(&self, member: usize) -> usize {
        self.groups.iter().position(|g| g.contains(&member)).expect("every member is grouped")
    }
}

/// Partitions a clique by shared hidden neighbour using the row-ratio test.
pub fn group_by_hidden(block: &DMatrix<C64>, tol_ratio: f64) -> Result<HiddenGrouping> {
    let m = block.nrows();
    let mut alpha = DMatrix::from_element(m, m, C64::new(1.0, 0.0));
    let mut residual = DMatrix::zeros(m, m);
    for k in 0..m {
        for j in 0..m {
            if j == k {
                continue;
            }
            let (mut num, mut den, mut norm_k) = (C64::new(0.0, 0.0), 0.0, 0.0);
            for i in (0..m).filter(|&i| i != j && i != k) {
                num += block[(j, i)].conj() * block[(k, i)];
                den += block[(j, i)].norm_sqr();
                norm_k += block[(k, i)].norm_sqr();
            }
            let a = if den > 0.0 { num / den } else { C64::new(0.0, 0.0) };
            let res: f64 = (0..m)
                .filter(|&i| i != j && i != k)
                .map(|i| (block[(k, i)] - a * block[(j, i)]).norm_sqr())
                .sum();
            alpha[(k, j)] = a;
            residual[(k, j)] = if norm_k > 0.0 { (res / norm_k).sqrt() } else { f64::INFINITY };
        }
    }
    let sym = DMatrix::from_fn(m, m, |a, b| if a == b { 0.0 } else { residual[(a, b)].max(residual[(b, a)]) });
    let beta = DMatrix::from_fn(m, m, |a, b| a == b || sym[(a, b)] <= tol_ratio);

    let g = NetworkGraph::from_edges(m, (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).filter(|&(a, b)| beta[(a, b)]));
    let groups = g.components();
    for grp in &groups {
        for (x, &a) in grp.iter().enumerate() {
            for &b in &grp[x + 1..] {
                if !beta[(a, b)] {
                    return Err(Error::Recovery(format!(
                        "ratio test is not transitive (residual {:.3e} between members {a} and {b})",
                        sym[(a, b)]
                    )));
                }
            }
        }
    }
    Ok(HiddenGrouping { groups, alpha, residual: sym, beta })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueRecovery {
    /// Admittance of each member's line to its hidden neighbour.
    pub line: Vec<C64>,
    /// Members by hidden nodes: `-line[j]` where `j` joins hidden `g`.
    pub y12: DMatrix<C64>,
    /// Hidden block, in group order.
    pub y22: DMatrix<C64>,
    /// `max|diag(line) - Y12 Y22^{-1} Y21 - block| / max|block|`.
    pub roundtrip_error: f64,
}

/// Rebuilds the lines to the hidden nodes and the hidden block of a clique.
///
/// A member's line admittance follows from the clique diagonal and any
/// in-group partner, averaged over all partners. With the lines fixed, the
/// inverse hidden block `X` enters `diag(line) - block = Y12 X Y12^T`
/// linearly and is fitted entrywise in least squares.
pub fn recover_clique(clique: &Clique, grouping: &HiddenGrouping, roundtrip_tol: f64) -> Result<CliqueRecovery> {
    let b = &clique.block;
    let m = b.nrows();
    let h = grouping.groups.len();
    if h + 1 > m {
        return Err(Error::Recovery(format!("{h} hidden nodes cannot be fitted from a {m}-node clique")));
    }
    let mut line = vec![C64::new(0.0, 0.0); m];
    for grp in &grouping.groups {
        if grp.len() < 2 {
            return Err(Error::UnpairedNode { node: clique.nodes[grp[0]].to_string(), clique: vec![] });
        }
        for &j in grp {
            let partners: Vec<usize> = grp.iter().copied().filter(|&k| k != j).collect();
            let sum: C64 = partners.iter().map(|&k| b[(j, j)] - b[(j, k)] * grouping.alpha[(j, k)]).sum();
            line[j] = sum / partners.len() as f64;
        }
    }
    let owner: Vec<usize> = (0..m).map(|j| grouping.group_of(j)).collect();

    let mut num = DMatrix::from_element(h, h, C64::new(0.0, 0.0));
    let mut den = DMatrix::from_element(h, h, 0.0);
    for j in 0..m {
        for k in 0..m {
            let target = if j == k { line[j] - b[(j, j)] } else { -b[(j, k)] };
            let w = line[j] * line[k];
            num[(owner[j], owner[k])] += w.conj() * target;
            den[(owner[j], owner[k])] += w.norm_sqr();
        }
    }
    let x = DMatrix::from_fn(h, h, |p, q| num[(p, q)] / den[(p, q)]);
    let x = linalg::symmetric_part(&x);
    let rc = linalg::rcond(&x);
    if rc < crate::netmodel::MIN_RCOND {
        return Err(Error::Singular(format!("inverse hidden block has reciprocal condition {rc:.3e}")));
    }
    let y22 = x.clone().try_inverse().ok_or_else(|| Error::Singular("inverse hidden block".into()))?;
    let y22 = linalg::symmetric_part(&y22);
    let y12 = DMatrix::from_fn(m, h, |j, g| if owner[j] == g { -line[j] } else { C64::new(0.0, 0.0) });

    let rebuilt = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(line.clone())) - &y12 * &x * y12.transpose();
    let roundtrip_error = linalg::max_abs_diff(&rebuilt, b) / linalg::max_abs(b).max(f64::MIN_POSITIVE);
    if roundtrip_error > roundtrip_tol {
        return Err(Error::Recovery(format!("clique round trip misses by {roundtrip_error:.3e} (relative)")));
    }
    Ok(CliqueRecovery { line, y12, y22, roundtrip_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Observed nodes (input order) followed by recovered hidden nodes.
    pub y: AdmittanceMatrix,
    pub observed: usize,
    /// For each hidden node: its label and the labels of the neighbours
    /// through which it was identified.
    pub groups: Vec<(String, Vec<String>)>,
    /// Deepest recursion level used (0: no nested hidden structure).
    pub depth: usize,
    /// `max|kron(Y, hidden) - ybar|`.
    pub roundtrip_error: f64,
}

impl RecoveryResult {
    pub fn hidden_labels(&self) -> Vec<String> {
        self.y.labels()[self.observed..].to_vec()
    }

    pub fn partition(&self) -> NodePartition {
        NodePartition::from_hidden(self.y.n(), &(self.observed..self.y.n()).collect::<Vec<_>>())
            .expect("indices in range")
    }
}

/// Expanded matrix with hidden nodes after the `n_obs` leading ones;
/// `members[h]` lists the neighbours that identified hidden node `h`.
struct Expanded {
    y: DMatrix<C64>,
    n_obs: usize,
    members: Vec<Vec<usize>>,
    depth: usize,
}

fn recover_inner(ybar: &AdmittanceMatrix, cfg: &RadialConfig, depth_left: usize, bound: usize) -> Result<Expanded> {
    let n = ybar.n();
    let thr = cfg.zero_threshold.unwrap_or_else(|| default_zero_threshold(ybar));
    let sep = decouple(ybar, thr)?;
    if sep.cliques.is_empty() {
        return Ok(Expanded { y: ybar.to_dense(), n_obs: n, members: vec![], depth: 0 });
    }

    // Hidden nodes of every clique, with their members as global indices.
    struct Part {
        members: Vec<Vec<usize>>,
        rec: CliqueRecovery,
        owner: Vec<usize>,
        nodes: Vec<usize>,
    }
    let mut parts = Vec::new();
    for c in &sep.cliques {
        let grouping = match group_by_hidden(&c.block, cfg.tol_ratio) {
            Ok(g) => g,
            Err(e) => return Err(e),
        };
        if let Some(single) = grouping.groups.iter().find(|g| g.len() < 2) {
            return Err(Error::UnpairedNode {
                node: ybar.labels()[c.nodes[single[0]]].clone(),
                clique: c.nodes.iter().map(|&i| ybar.labels()[i].clone()).collect(),
            });
        }
        let rec = recover_clique(c, &grouping, cfg.roundtrip_tol)?;
        let members = grouping.groups.iter().map(|g| g.iter().map(|&a| c.nodes[a]).collect()).collect();
        let owner = (0..c.nodes.len()).map(|j| grouping.group_of(j)).collect();
        parts.push(Part { members, rec, owner, nodes: c.nodes.clone() });
    }

    // Level-one hidden nodes in canonical order of their member lists.
    let mut order: Vec<(usize, usize)> =
        parts.iter().enumerate().flat_map(|(p, part)| (0..part.members.len()).map(move |g| (p, g))).collect();
    order.sort_by(|&(p, g), &(q, h)| parts[p].members[g].cmp(&parts[q].members[h]));
    let mut slot = vec![Vec::new(); parts.len()];
    for (pos, &(p, g)) in order.iter().enumerate() {
        if slot[p].len() <= g {
            slot[p].resize(g + 1, usize::MAX);
        }
        slot[p][g] = n + pos;
    }
    let level_one = order.len();

    // Recurse into hidden blocks that still contain cycles.
    let mut deeper: Vec<Option<Expanded>> = Vec::with_capacity(parts.len());
    for part in &parts {
        let h = part.rec.y22.nrows();
        let block = AdmittanceMatrix::from_dense_symmetrized((0..h).map(|i| i.to_string()).collect(), &part.rec.y22)?;
        let block_thr = cfg.zero_threshold.unwrap_or_else(|| default_zero_threshold(&block));
        if graph_of(&block, block_thr).has_cycle() {
            if depth_left == 0 {
                return Err(Error::DepthExceeded(bound));
            }
            deeper.push(Some(recover_inner(&block, cfg, depth_left - 1, bound)?));
        } else {
            deeper.push(None);
        }
    }
    let extra: usize = deeper.iter().flatten().map(|e| e.y.nrows() - e.n_obs).sum();
    let total = n + level_one + extra;

    let mut y = DMatrix::from_element(total, total, C64::new(0.0, 0.0));
    let tree = sep.tree_part.to_dense();
    y.view_mut((0, 0), (n, n)).copy_from(&tree);
    for i in 0..n {
        y[(i, i)] += sep.leftover[i];
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); level_one + extra];
    for &(p, g) in &order {
        members[slot[p][g] - n] = parts[p].members[g].clone();
    }
    let mut next = n + level_one;
    let mut depth = 0;
    for (p, part) in parts.iter().enumerate() {
        for (j, &node) in part.nodes.iter().enumerate() {
            let hid = slot[p][part.owner[j]];
            let l = part.rec.line[j];
            y[(node, node)] += l;
            y[(node, hid)] = -l;
            y[(hid, node)] = -l;
        }
        match &deeper[p] {
            None => {
                let h = part.rec.y22.nrows();
                let thr = cfg.zero_threshold.unwrap_or_else(|| 1e-6 * linalg::max_abs(&part.rec.y22));
                for a in 0..h {
                    for b in 0..h {
                        let v = part.rec.y22[(a, b)];
                        y[(slot[p][a], slot[p][b])] = if a != b && v.norm() <= thr { C64::new(0.0, 0.0) } else { v };
                    }
                }
            }
            Some(e) => {
                depth = depth.max(e.depth + 1);
                // Inner indices: first the level-one nodes, then its own hidden nodes.
                let map: Vec<usize> = (0..e.y.nrows())
                    .map(|i| if i < e.n_obs { slot[p][i] } else { next + i - e.n_obs })
                    .collect();
                for a in 0..e.y.nrows() {
                    for b in 0..e.y.nrows() {
                        y[(map[a], map[b])] = e.y[(a, b)];
                    }
                }
                for (k, mem) in e.members.iter().enumerate() {
                    members[next + k - n] = mem.iter().map(|&i| map[i]).collect();
                }
                next += e.y.nrows() - e.n_obs;
            }
        }
    }
    Ok(Expanded { y, n_obs: n, members, depth: depth.max(1) })
}

/// Recovers a radial network with hidden nodes from its reduced matrix.
pub fn recover_radial(ybar: &AdmittanceMatrix, cfg: &RadialConfig) -> Result<RecoveryResult> {
    let bound = cfg.max_depth.unwrap_or(ybar.n().max(1));
    let e = recover_inner(ybar, cfg, bound, bound)?;
    let n = ybar.n();
    let prefix = if ybar.labels().iter().any(|l| l.starts_with('h')) { "hidden" } else { "h" };
    let mut labels = ybar.labels().to_vec();
    labels.extend((0..e.y.nrows() - n).map(|k| format!("{prefix}{k}")));
    let y = AdmittanceMatrix::from_dense_symmetrized(labels.clone(), &e.y)?;
    let groups = e
        .members
        .iter()
        .enumerate()
        .map(|(k, mem)| (labels[n + k].clone(), mem.iter().map(|&i| labels[i].clone()).collect()))
        .collect();
    let depth = if e.members.is_empty() { 0 } else { e.depth };
    let roundtrip_error = if e.members.is_empty() {
        0.0
    } else {
        let part = NodePartition::from_hidden(y.n(), &(n..y.n()).collect::<Vec<_>>())?;
        kron_reduce(&y, &part)?.relabel(ybar.labels().to_vec())?.max_abs_diff(ybar)
    };
    Ok(RecoveryResult { y, observed: n, groups, depth, roundtrip_error })
}

/// Group table `hidden_id,observed_member`, one row per membership.
pub fn write_group_table(r: &RecoveryResult) -> String {
    let mut out = String::from("hidden_id,observed_member\n");
    for (h, members) in &r.groups {
        for m in members {
            let _ = writeln!(out, "{h},{m}");
        }
    }
    out
}

/// Permutes `truth` into the node order of `estimate`.
///
/// `truth_hidden` lists the hidden indices of `truth`. The remaining truth
/// nodes are matched to estimate nodes by label; every other estimate node
/// is matched to the unique unmatched hidden truth node adjacent to all of
/// its already matched neighbours (at least two of them), repeating until
/// nothing changes.
pub fn align_truth(truth: &AdmittanceMatrix, truth_hidden: &[usize], estimate: &AdmittanceMatrix) -> Result<AdmittanceMatrix> {
    let n = estimate.n();
    if truth.n() != n {
        return Err(Error::Dimension(format!("truth has {} nodes, estimate has {n}", truth.n())));
    }
    let g_truth = graph_of(truth, 0.0);
    let g_est = graph_of(estimate, default_zero_threshold(estimate));
    let mut map = vec![usize::MAX; n];
    for t in (0..n).filter(|t| !truth_hidden.contains(t)) {
        let label = &truth.labels()[t];
        let e = estimate.index_of(label).ok_or_else(|| Error::UnknownBus(label.clone()))?;
        map[e] = t;
    }
    loop {
        let mut progress = false;
        for e in 0..n {
            if map[e] != usize::MAX {
                continue;
            }
            let known: Vec<usize> = g_est.neighbors(e).into_iter().map(|w| map[w]).filter(|&t| t != usize::MAX).collect();
            if known.len() < 2 {
                continue;
            }
            let candidates: Vec<usize> = truth_hidden
                .iter()
                .copied()
                .filter(|&t| !map.contains(&t) && known.iter().all(|&k| g_truth.has_edge(t, k)))
                .collect();
            if let [t] = candidates[..] {
                map[e] = t;
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    if let Some(e) = map.iter().position(|&t| t == usize::MAX) {
        return Err(Error::Recovery(format!("no truth node matches `{}`", estimate.labels()[e])));
    }
    let mut out = AdmittanceMatrix::zeros(estimate.labels().to_vec());
    for a in 0..n {
        for b in a..n {
            out.set(a, b, truth.get(map[a], map[b]));
        }
    }
    Ok(out)
}
