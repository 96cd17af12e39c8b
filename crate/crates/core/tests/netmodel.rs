use ipf::netmodel::{
    build_admittance, eliminate_in_order, graph_of, kron_reduce, kron_reduce_sequential, BuildMode,
};
use ipf::ingest::parse_case_script;
use ipf::{AdmittanceMatrix, NodePartition, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line_admittance(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random_range(0.5..5.0), -rng.random_range(1.0..20.0))
}

/// Shuntless matrix of a random connected graph: a random tree plus `extra` chords.
fn random_connected(n: usize, extra: usize, rng: &mut impl Rng) -> AdmittanceMatrix {
    let mut y = AdmittanceMatrix::zeros_indexed(n);
    let stamp = |y: &mut AdmittanceMatrix, a: usize, b: usize, v: C64| {
        y.add(a, a, v);
        y.add(b, b, v);
        y.add(a, b, -v);
    };
    for v in 1..n {
        let parent = rng.random_range(0..v);
        let w = line_admittance(rng);
        stamp(&mut y, parent, v, w);
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && y.get(a, b) == C64::new(0.0, 0.0) {
            let w = line_admittance(rng);
            stamp(&mut y, a, b, w);
        }
    }
    y
}

#[test]
fn sequential_equals_block_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let y = random_connected(6, 3, &mut rng);
        let mut hidden: Vec<usize> = (0..6).collect();
        hidden.shuffle(&mut rng);
        let h = rng.random_range(1..4);
        let mut hidden = hidden[..h].to_vec();
        let a = kron_reduce(&y, &NodePartition::from_hidden(6, &hidden).unwrap()).unwrap();
        hidden.shuffle(&mut rng);
        let b = eliminate_in_order(&y, &hidden).unwrap();
        let c = kron_reduce_sequential(&y, &NodePartition::from_hidden(6, &hidden).unwrap()).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-9, "order {hidden:?}: {}", a.max_abs_diff(&b));
        assert!(a.max_abs_diff(&c) <= 1e-9);
    }
}

#[test]
fn hidden_block_definiteness_on_random_trees() {
    // Positive conductance and inductive lines: Re(Y22) > 0 and Im(Y22) < 0.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.random_range(4..12);
        let y = random_connected(n, 0, &mut rng);
        let h = rng.random_range(1..n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut hidden = idx[..h].to_vec();
        hidden.sort_unstable();
        let y22 = y.submatrix(&hidden).to_dense();
        let re = DMatrix::from_fn(h, h, |i, j| y22[(i, j)].re);
        let im = DMatrix::from_fn(h, h, |i, j| -y22[(i, j)].im);
        for m in [re, im] {
            let min = m.symmetric_eigenvalues().min();
            assert!(min > 0.0, "smallest eigenvalue {min}");
        }
    }
}

#[test]
fn reduced_star_graph_is_one_edge() {
    let (t1, t2) = (C64::new(1.0, -2.0), C64::new(2.0, -1.0));
    let mut y = AdmittanceMatrix::zeros_indexed(3);
    y.set(0, 0, t1 + t2);
    y.set(0, 1, -t1);
    y.set(0, 2, -t2);
    y.set(1, 1, t1);
    y.set(2, 2, t2);
    let red = kron_reduce(&y, &NodePartition::from_hidden(3, &[0]).unwrap()).unwrap();
    assert_eq!(graph_of(&red, 0.0).edges().collect::<Vec<_>>(), vec![(0, 1)]);
}

#[test]
fn three_node_star_closed_forms() {
    let (t1, t2) = (C64::new(1.5, -2.0), C64::new(0.4, -3.0));
    let mut y = AdmittanceMatrix::zeros_indexed(3);
    y.set(0, 0, t1 + t2);
    y.set(0, 1, -t1);
    y.set(0, 2, -t2);
    y.set(1, 1, t1);
    y.set(2, 2, t2);
    let centre = kron_reduce(&y, &NodePartition::from_hidden(3, &[0]).unwrap()).unwrap();
    let leaf = kron_reduce(&y, &NodePartition::from_hidden(3, &[2]).unwrap()).unwrap();
    for (red, t) in [(centre, t1 * t2 / (t1 + t2)), (leaf, t1)] {
        for (i, j, s) in [(0, 0, 1.0), (0, 1, -1.0), (1, 1, 1.0)] {
            assert!((red.get(i, j) - t * s).norm() <= 1e-12 * t.norm(), "{i},{j}");
        }
    }
}

#[test]
fn ieee14_magnitude_range() {
    let case = parse_case_script(include_str!("../data/case14.m")).unwrap();
    assert_eq!(case.buses.len(), 14);
    assert_eq!(case.branches.len(), 20);
    assert_eq!(case.generators.len(), 5);
    assert_eq!(case.buses.iter().filter(|b| b.p_load != 0.0).count(), 11);
    let y = build_admittance(&case, BuildMode::Physical).unwrap();
    let mags: Vec<f64> = y.entries().map(|(_, _, v)| v.norm()).collect();
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().cloned().fold(0.0, f64::max);
    assert_eq!((lo * 100.0).round() / 100.0, 1.86);
    assert_eq!((hi * 100.0).round() / 100.0, 40.06);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_preserves_symmetry_and_row_sums(seed in any::<u64>(), n in 3usize..9, extra in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_connected(n, extra, &mut rng);
        let h = rng.random_range(1..n);
        let part = NodePartition::from_hidden(n, &(0..h).collect::<Vec<_>>()).unwrap();
        let red = kron_reduce(&y, &part).unwrap();
        let tol = 1e-9 * y.max_abs();
        for i in 0..red.n() {
            prop_assert!(red.row_sum(i).norm() <= tol);
        }
        let d = red.to_dense();
        prop_assert!(ipf::linalg::max_abs_diff(&d, &d.transpose()) == 0.0);
    }

    #[test]
    fn eliminating_a_node_joins_its_neighbours(seed in any::<u64>(), n in 3usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_connected(n, 2, &mut rng);
        let h = rng.random_range(0..n);
        let g = graph_of(&y, 0.0);
        let red = kron_reduce(&y, &NodePartition::from_hidden(n, &[h]).unwrap()).unwrap();
        let gr = graph_of(&red, 1e-12 * red.max_abs());
        let nb = g.neighbors(h);
        let map = |v: usize| if v > h { v - 1 } else { v };
        for a in 0..n {
            for b in a + 1..n {
                if a == h || b == h {
                    continue;
                }
                let expect = g.has_edge(a, b) || (nb.contains(&a) && nb.contains(&b));
                prop_assert_eq!(gr.has_edge(map(a), map(b)), expect);
            }
        }
    }
}
