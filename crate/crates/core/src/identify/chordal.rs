use std::collections::BTreeSet;

use crate::model::SigmaGraph;

/// Maximum-cardinality-search visiting order. Ties go to the lowest index.
pub fn mcs_order(g: &SigmaGraph) -> Vec<usize> {
    let n = g.vertex_count();
    let mut weight = vec![0usize; n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !done[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited vertex remains");
        done[v] = true;
        order.push(v);
        for &u in g.neighbors(v) {
            if !done[u] {
                weight[u] += 1;
            }
        }
    }
    order
}

/// Checks that `peo` is a perfect elimination ordering of `g`
/// (Tarjan and Yannakakis).
fn is_perfect_elimination(g: &SigmaGraph, peo: &[usize]) -> bool {
    let n = g.vertex_count();
    let mut pos = vec![0; n];
    for (i, &v) in peo.iter().enumerate() {
        pos[v] = i;
    }
    for &v in peo {
        let later: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| pos[u] > pos[v]).collect();
        if let Some(&parent) = later.iter().min_by_key(|&&u| pos[u]) {
            if later.iter().any(|&u| u != parent && !g.has_edge(parent, u)) {
                return false;
            }
        }
    }
    true
}

/// True iff `g` is chordal.
pub fn is_decomposable(g: &SigmaGraph) -> bool {
    let mut peo = mcs_order(g);
    peo.reverse();
    is_perfect_elimination(g, &peo)
}

fn fill_in(g: &SigmaGraph, alive: &[bool], v: usize) -> usize {
    let nb: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| alive[u]).collect();
    let mut missing = 0;
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if !g.has_edge(a, b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Chordal supergraph by min-fill elimination, ties broken by lowest vertex
/// index. Chordal inputs come back unchanged.
pub fn triangulate(g: &SigmaGraph) -> SigmaGraph {
    let n = g.vertex_count();
    let mut h = g.clone();
    let mut alive = vec![true; n];
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (fill_in(&h, &alive, v), v))
            .expect("vertex remains");
        let nb: Vec<usize> = h.neighbors(v).iter().copied().filter(|&u| alive[u]).collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                h.add_edge(a, b);
            }
        }
        alive[v] = false;
    }
    h
}

/// Maximal cliques of a chordal graph, each sorted, listed in
/// lexicographic order. Returns `None` for non-chordal input.
pub fn maximal_cliques(g: &SigmaGraph) -> Option<Vec<Vec<usize>>> {
    let mut peo = mcs_order(g);
    peo.reverse();
    if !is_perfect_elimination(g, &peo) {
        return None;
    }
    let n = g.vertex_count();
    let mut pos = vec![0; n];
    for (i, &v) in peo.iter().enumerate() {
        pos[v] = i;
    }
    let candidates: Vec<BTreeSet<usize>> = peo
        .iter()
        .map(|&v| {
            let mut c: BTreeSet<usize> = g.neighbors(v).iter().copied().filter(|&u| pos[u] > pos[v]).collect();
            c.insert(v);
            c
        })
        .collect();
    let mut cliques: Vec<Vec<usize>> = candidates
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            !candidates
                .iter()
                .enumerate()
                .any(|(j, o)| j != *i && c.is_subset(o) && (c.len() < o.len() || j < *i))
        })
        .map(|(_, c)| c.iter().copied().collect())
        .collect();
    cliques.sort();
    Some(cliques)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cycle(n: usize) -> SigmaGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        SigmaGraph::from_edges(n, &edges)
    }

    /// Chordality by brute force: no induced cycle of length >= 4.
    fn chordal_brute(g: &SigmaGraph) -> bool {
        let n = g.vertex_count();
        for mask in 0u32..(1 << n) {
            let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            if vs.len() < 4 {
                continue;
            }
            // induced subgraph is a cycle iff connected and all degrees are 2
            let deg_two = vs
                .iter()
                .all(|&v| vs.iter().filter(|&&u| g.has_edge(u, v)).count() == 2);
            if !deg_two {
                continue;
            }
            let mut seen = vec![vs[0]];
            let mut stack = vec![vs[0]];
            while let Some(v) = stack.pop() {
                for &u in &vs {
                    if g.has_edge(u, v) && !seen.contains(&u) {
                        seen.push(u);
                        stack.push(u);
                    }
                }
            }
            if seen.len() == vs.len() {
                return false;
            }
        }
        true
    }

    #[test]
    fn decomposability_examples() {
        assert!(is_decomposable(&SigmaGraph::from_edges(3, &[(0, 1), (1, 2)])));
        assert!(is_decomposable(&SigmaGraph::new(4)));
        assert!(!is_decomposable(&cycle(4)));
        assert!(!chordal_brute(&cycle(4)));
    }

    #[test]
    fn four_cycle_gets_one_chord() {
        let g = cycle(4);
        let t = triangulate(&g);
        assert_eq!(t.edge_count(), 5);
        assert!(t.has_edge(1, 3));
        assert!(is_decomposable(&t));
        // no edgeless-fill alternative: the 4-cycle itself is not chordal
        assert!(!chordal_brute(&g));
    }

    #[test]
    fn chordal_input_unchanged() {
        let g = SigmaGraph::from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        assert_eq!(triangulate(&g), g);
        let tri = SigmaGraph::complete(3);
        assert_eq!(triangulate(&tri), tri);
    }

    #[test]
    fn cliques_of_path_and_isolated() {
        let g = SigmaGraph::from_edges(4, &[(0, 1), (1, 2)]);
        assert_eq!(maximal_cliques(&g).unwrap(), vec![vec![0, 1], vec![1, 2], vec![3]]);
        assert!(maximal_cliques(&cycle(5)).is_none());
    }

    fn arb_graph() -> impl Strategy<Value = SigmaGraph> {
        (1usize..7).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let mut g = SigmaGraph::new(n);
                let mut k = 0;
                for a in 0..n {
                    for b in a + 1..n {
                        if bits[k] {
                            g.add_edge(a, b);
                        }
                        k += 1;
                    }
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn mcs_agrees_with_brute_force(g in arb_graph()) {
            prop_assert_eq!(is_decomposable(&g), chordal_brute(&g));
        }

        #[test]
        fn triangulation_is_chordal_supergraph(g in arb_graph()) {
            let t = triangulate(&g);
            prop_assert!(chordal_brute(&t));
            for (a, b) in g.edges() {
                prop_assert!(t.has_edge(a, b));
            }
            if chordal_brute(&g) {
                prop_assert_eq!(t, g);
            }
        }

        #[test]
        fn cliques_cover_edges(g in arb_graph()) {
            let t = triangulate(&g);
            let cl = maximal_cliques(&t).unwrap();
            for c in &cl {
                prop_assert!(t.is_clique(c));
            }
            for (a, b) in t.edges() {
                prop_assert!(cl.iter().any(|c| c.contains(&a) && c.contains(&b)));
            }
            for v in 0..t.vertex_count() {
                prop_assert!(cl.iter().any(|c| c.contains(&v)));
            }
        }
    }
}
