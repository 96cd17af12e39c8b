use std::collections::BTreeSet;

use crate::NetworkGraph;

/// All maximal cliques, by Bron-Kerbosch with Tomita pivoting.
///
/// Each clique is sorted; the list is ordered by size (largest first), then
/// lexicographically.
pub fn maximal_cliques(g: &NetworkGraph) -> Vec<Vec<usize>> {
    let adj: Vec<BTreeSet<usize>> = g.adjacency().into_iter().map(|v| v.into_iter().collect()).collect();
    let mut out = Vec::new();
    let mut r = Vec::new();
    expand(&adj, &mut r, (0..g.n()).collect(), BTreeSet::new(), &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out
}

fn expand(
    adj: &[BTreeSet<usize>],
    r: &mut Vec<usize>,
    mut p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    // Pivot maximising |P ∩ N(u)| over P ∪ X; ties go to the smallest index.
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by(|&a, &b| {
            let ca = adj[a].intersection(&p).count();
            let cb = adj[b].intersection(&p).count();
            ca.cmp(&cb).then(b.cmp(&a))
        })
        .expect("P is nonempty");
    let candidates: Vec<usize> = p.difference(&adj[pivot]).copied().collect();
    for v in candidates {
        r.push(v);
        let p_next = p.intersection(&adj[v]).copied().collect();
        let x_next = x.intersection(&adj[v]).copied().collect();
        expand(adj, r, p_next, x_next, out);
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}
