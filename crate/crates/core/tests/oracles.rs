use std::collections::BTreeSet;

use valuetree_core::graph::{ranks, Digraph};
use valuetree_core::testing::{
    brute_cycles, brute_distances, digraph_from_mask, random_digraph, random_vcm, rng,
};
use valuetree_core::NodeId;

fn bfs_matches(g: &Digraph<usize>) -> bool {
    g.nodes()
        .all(|&s| g.distances_from(&s).unwrap() == brute_distances(g, s))
}

#[test]
fn bfs_on_every_small_digraph() {
    for n in 1..=5usize {
        let pairs = n * (n - 1);
        for mask in 0..(1u64 << pairs) {
            let g = digraph_from_mask(n, mask);
            assert!(bfs_matches(&g), "n={n} mask={mask:#b}");
        }
    }
}

#[test]
fn bfs_on_random_digraphs() {
    let mut r = rng(11);
    for i in 0..500 {
        let n = 1 + i % 8;
        let density = [0.1, 0.25, 0.5, 0.8][i % 4];
        let g = random_digraph(&mut r, n, density);
        assert!(bfs_matches(&g), "graph {i}");
    }
}

#[test]
fn cycles_on_every_small_digraph() {
    for n in 1..=4usize {
        for mask in 0..(1u64 << (n * (n - 1))) {
            let g = digraph_from_mask(n, mask);
            let found: BTreeSet<Vec<usize>> =
                g.elementary_cycles(usize::MAX).unwrap().into_iter().collect();
            assert_eq!(found, brute_cycles(&g), "n={n} mask={mask:#b}");
        }
    }
}

#[test]
fn cycles_on_random_digraphs() {
    let mut r = rng(12);
    for i in 0..200 {
        let g = random_digraph(&mut r, 2 + i % 6, 0.4);
        let found: Vec<Vec<usize>> = g.elementary_cycles(usize::MAX).unwrap();
        let unique: BTreeSet<Vec<usize>> = found.iter().cloned().collect();
        assert_eq!(unique.len(), found.len(), "graph {i} lists a cycle twice");
        assert_eq!(unique, brute_cycles(&g), "graph {i}");
    }
}

#[test]
fn rank_is_the_shortest_influence_path_to_the_fundamental() {
    let mut r = rng(13);
    for _ in 0..100 {
        let vcm = random_vcm(&mut r, 7);
        let ids: Vec<NodeId> = vcm.nodes().iter().map(|n| n.id.clone()).collect();
        let index = |id: &NodeId| ids.iter().position(|x| x == id).unwrap();
        let g = Digraph::new(
            0..ids.len(),
            vcm.arcs().iter().map(|a| (index(&a.from), index(&a.to))),
        )
        .unwrap();
        let root = index(vcm.fundamental());
        let got = ranks(&vcm).unwrap();
        for (i, id) in ids.iter().enumerate() {
            assert_eq!(got.get(id).copied(), brute_distances(&g, i).get(&root).copied(), "{id}");
        }
    }
}
