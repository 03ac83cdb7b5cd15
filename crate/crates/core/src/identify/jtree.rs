use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::chordal::maximal_cliques;
use crate::error::{Error, Result};
use crate::model::SigmaGraph;

/// Tree edge between two hypervertices with their separator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
    pub separator: Vec<usize>,
}

/// Rooted junction tree over the maximal cliques of a chordal σ-graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JunctionTree {
    pub cliques: Vec<Vec<usize>>,
    pub edges: Vec<TreeEdge>,
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Union of the cliques in the subtree rooted at each hypervertex.
    pub descendants: Vec<Vec<usize>>,
    /// `descendants[k] ∩ cliques[parent[k]]`; empty at the root.
    pub boundary: Vec<Vec<usize>>,
}

fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

/// Eccentricity of every clique in the clique-intersection graph. Cliques
/// in other components count as unreachable and are ignored.
fn eccentricities(cliques: &[Vec<usize>]) -> Vec<usize> {
    let n = cliques.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && !intersection(&cliques[i], &cliques[j]).is_empty())
                .collect()
        })
        .collect();
    (0..n)
        .map(|s| {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &u in &adj[v] {
                    if dist[u] == usize::MAX {
                        dist[u] = dist[v] + 1;
                        q.push_back(u);
                    }
                }
            }
            dist.into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0)
        })
        .collect()
}

/// Builds a junction tree of a chordal graph.
///
/// Root: largest clique, then smallest eccentricity, then lowest index.
/// The tree is a maximum-weight spanning tree on separator sizes grown from
/// the root; ties attach to the shallowest hypervertex, then by lowest index.
pub fn build_junction_tree(g: &SigmaGraph) -> Result<JunctionTree> {
    let cliques = maximal_cliques(g).ok_or(Error::NotChordal)?;
    let n = cliques.len();
    let ecc = eccentricities(&cliques);
    let root = (0..n)
        .min_by_key(|&k| (std::cmp::Reverse(cliques[k].len()), ecc[k], k))
        .expect("at least one clique");

    let mut parent = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut in_tree = vec![false; n];
    in_tree[root] = true;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best: Option<(usize, usize, usize, usize)> = None; // (weight, depth, child, parent)
        for p in (0..n).filter(|&p| in_tree[p]) {
            for c in (0..n).filter(|&c| !in_tree[c]) {
                let w = intersection(&cliques[p], &cliques[c]).len();
                let better = match best {
                    None => true,
                    Some((bw, bd, bc, bp)) => {
                        (std::cmp::Reverse(w), depth[p], c, p) < (std::cmp::Reverse(bw), bd, bc, bp)
                    }
                };
                if better {
                    best = Some((w, depth[p], c, p));
                }
            }
        }
        let (_, _, c, p) = best.expect("a candidate edge exists");
        in_tree[c] = true;
        parent[c] = Some(p);
        depth[c] = depth[p] + 1;
        edges.push(TreeEdge {
            parent: p,
            child: c,
            separator: intersection(&cliques[p], &cliques[c]),
        });
    }

    let mut children = vec![Vec::new(); n];
    for (c, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(c);
        }
    }

    let mut descendants: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in postorder_from(root, &children) {
        let mut d: BTreeSet<usize> = cliques[k].iter().copied().collect();
        for &c in &children[k] {
            d.extend(descendants[c].iter().copied());
        }
        descendants[k] = d.into_iter().collect();
    }
    let boundary = (0..n)
        .map(|k| match parent[k] {
            Some(p) => intersection(&descendants[k], &cliques[p]),
            None => Vec::new(),
        })
        .collect();

    Ok(JunctionTree {
        cliques,
        edges,
        root,
        parent,
        children,
        descendants,
        boundary,
    })
}

fn postorder_from(root: usize, children: &[Vec<usize>]) -> Vec<usize> {
    let mut out = Vec::with_capacity(children.len());
    let mut stack = vec![(root, false)];
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            out.push(v);
        } else {
            stack.push((v, true));
            for &c in children[v].iter().rev() {
                stack.push((c, false));
            }
        }
    }
    out
}

impl JunctionTree {
    /// Hypervertices ordered so every child precedes its parent.
    pub fn postorder(&self) -> Vec<usize> {
        postorder_from(self.root, &self.children)
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// Path between two hypervertices, both ends included.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let ancestors = |mut v: usize| {
            let mut out = vec![v];
            while let Some(p) = self.parent[v] {
                out.push(p);
                v = p;
            }
            out
        };
        let pa = ancestors(a);
        let pb = ancestors(b);
        let lca = *pa.iter().find(|v| pb.contains(v)).expect("common root");
        let mut path: Vec<usize> = pa.iter().copied().take_while(|&v| v != lca).collect();
        path.push(lca);
        let tail: Vec<usize> = pb.iter().copied().take_while(|&v| v != lca).collect();
        path.extend(tail.into_iter().rev());
        path
    }

    /// Running intersection property over every pair of hypervertices.
    pub fn has_running_intersection(&self) -> bool {
        let n = self.len();
        (0..n).all(|a| {
            (a + 1..n).all(|b| {
                let s = intersection(&self.cliques[a], &self.cliques[b]);
                self.path(a, b)
                    .iter()
                    .all(|&k| s.iter().all(|x| self.cliques[k].binary_search(x).is_ok()))
            })
        })
    }
}
