//! Neighbor relations, reuse subgraphs and maximal cliques.
//!
//! Edges connect D2D pairs that interfere too much to share an RB. A reuse
//! subgraph collects the pairs allowed on one block of RBs (the RBs of a
//! CUE, or the default dedicated RBs of a pair); each maximal clique of it
//! is a group of pairs of which at most one may transmit.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::radio::{db_to_linear, LinkBudget};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborRelations {
    /// `(c, j)` true: pair `j` may not reuse the RBs of CUE `c`.
    pub cue_neighbor: Matrix<bool>,
    /// Symmetric, false diagonal. True: the pairs need orthogonal RBs.
    pub due_adjacency: Matrix<bool>,
}

impl NeighborRelations {
    pub fn num_cues(&self) -> usize {
        self.cue_neighbor.rows()
    }

    pub fn num_pairs(&self) -> usize {
        self.due_adjacency.rows()
    }
}

/// CUE neighbors: the single-reuse shared SINR (noise plus the CUE, no
/// other pairs) falls below `gamma_min` (linear).
pub fn cue_neighbors(link: &LinkBudget<'_>, gamma_min: f64) -> Matrix<bool> {
    let c = link.scenario.num_cues();
    let d = link.scenario.num_pairs();
    Matrix::from_fn(c, d, |cue, j| link.shared_sinr(cue, j, &[]) < gamma_min)
}

/// DUE neighbors: the power received from DUE-T `i` at DUE-R `j`, with `i`
/// at its dedicated power, exceeds `NI_Rj / τ_N`. Symmetrized by OR.
pub fn due_neighbors(link: &LinkBudget<'_>, tau_n_db: f64) -> Matrix<bool> {
    let d = link.scenario.num_pairs();
    let tau_n = db_to_linear(tau_n_db);
    let g = &link.scenario.gains.txi_rxj;
    let p = link.powers.p_due_dedicated;
    let hears = |i: usize, j: usize| g[(i, j)] * p > link.noise.ni_rx[j] / tau_n;
    Matrix::from_fn(d, d, |i, j| i != j && (hears(i, j) || hears(j, i)))
}

pub fn neighbor_relations(link: &LinkBudget<'_>, gamma_min: f64, tau_n_db: f64) -> NeighborRelations {
    NeighborRelations {
        cue_neighbor: cue_neighbors(link, gamma_min),
        due_adjacency: due_neighbors(link, tau_n_db),
    }
}

/// Pairs that may reuse one block of RBs, with their mutual adjacency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    /// Sorted pair ids.
    pub vertices: Vec<usize>,
    /// Indexed by position in `vertices`.
    pub adjacency: Matrix<bool>,
}

impl Subgraph {
    fn induced(vertices: Vec<usize>, adj: &Matrix<bool>) -> Self {
        let adjacency = Matrix::from_fn(vertices.len(), vertices.len(), |a, b| adj[(vertices[a], vertices[b])]);
        Self { vertices, adjacency }
    }

    pub fn contains(&self, pair: usize) -> bool {
        self.vertices.binary_search(&pair).is_ok()
    }

    pub fn maximal_cliques(&self) -> Vec<Vec<usize>> {
        let local = maximal_cliques_local(&self.adjacency);
        let mut out: Vec<Vec<usize>> = local
            .into_iter()
            .map(|c| c.into_iter().map(|v| self.vertices[v]).collect())
            .collect();
        out.sort();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgraphSet {
    /// One per CUE.
    pub shared: Vec<Subgraph>,
    /// One per pair; `dedicated[z]` always holds `z` when `z` is active.
    pub dedicated: Vec<Subgraph>,
}

pub fn build_subgraphs(relations: &NeighborRelations) -> SubgraphSet {
    let all = vec![true; relations.num_pairs()];
    build_subgraphs_among(relations, &all, &all)
}

/// Subgraphs restricted to the pairs flagged in `shared_active` (for the
/// CUE subgraphs) and `dedicated_active` (for the per-pair subgraphs).
/// Inactive owners get an empty dedicated subgraph.
pub fn build_subgraphs_among(
    relations: &NeighborRelations,
    shared_active: &[bool],
    dedicated_active: &[bool],
) -> SubgraphSet {
    let d = relations.num_pairs();
    let adj = &relations.due_adjacency;
    let shared = (0..relations.num_cues())
        .map(|z| {
            let members = (0..d)
                .filter(|&j| shared_active[j] && !relations.cue_neighbor[(z, j)])
                .collect();
            Subgraph::induced(members, adj)
        })
        .collect();
    let dedicated = (0..d)
        .map(|z| {
            let members = if dedicated_active[z] {
                (0..d)
                    .filter(|&i| dedicated_active[i] && (i == z || !adj[(z, i)]))
                    .collect()
            } else {
                Vec::new()
            };
            Subgraph::induced(members, adj)
        })
        .collect();
    SubgraphSet { shared, dedicated }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliqueSet {
    pub shared: Vec<Vec<Vec<usize>>>,
    pub dedicated: Vec<Vec<Vec<usize>>>,
}

impl CliqueSet {
    pub fn of(subgraphs: &SubgraphSet) -> Self {
        Self {
            shared: subgraphs.shared.iter().map(Subgraph::maximal_cliques).collect(),
            dedicated: subgraphs.dedicated.iter().map(Subgraph::maximal_cliques).collect(),
        }
    }

    /// N_mc per CUE subgraph.
    pub fn shared_counts(&self) -> Vec<usize> {
        self.shared.iter().map(Vec::len).collect()
    }

    /// N_mc per pair subgraph.
    pub fn dedicated_counts(&self) -> Vec<usize> {
        self.dedicated.iter().map(Vec::len).collect()
    }
}

/// Maximal cliques of the graph induced on `vertices`. Cliques come back
/// sorted internally, and the list is sorted lexicographically.
pub fn maximal_cliques(vertices: &[usize], adjacency: &Matrix<bool>) -> Vec<Vec<usize>> {
    let mut vs = vertices.to_vec();
    vs.sort_unstable();
    vs.dedup();
    Subgraph::induced(vs, adjacency).maximal_cliques()
}

#[derive(Clone, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn empty(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n {
            s.insert(v);
        }
        s
    }

    fn insert(&mut self, v: usize) {
        self.words[v / 64] |= 1 << (v % 64);
    }

    fn remove(&mut self, v: usize) {
        self.words[v / 64] &= !(1 << (v % 64));
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    fn and_not(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    fn or(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    fn count_and(&self, other: &BitSet) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

/// Bron-Kerbosch with Tomita pivoting over local indices `0..n`.
fn maximal_cliques_local(adjacency: &Matrix<bool>) -> Vec<Vec<usize>> {
    let n = adjacency.rows();
    if n == 0 {
        return Vec::new();
    }
    let neighbors: Vec<BitSet> = (0..n)
        .map(|v| {
            let mut s = BitSet::empty(n);
            for u in 0..n {
                if u != v && adjacency[(v, u)] {
                    s.insert(u);
                }
            }
            s
        })
        .collect();

    let mut out = Vec::new();
    let mut r = Vec::new();
    expand(&neighbors, &mut r, BitSet::full(n), BitSet::empty(n), &mut out);
    out
}

fn expand(neighbors: &[BitSet], r: &mut Vec<usize>, mut p: BitSet, mut x: BitSet, out: &mut Vec<Vec<usize>>) {
    if p.is_empty() {
        if x.is_empty() {
            let mut clique = r.clone();
            clique.sort_unstable();
            out.push(clique);
        }
        return;
    }
    let pivot = p
        .or(&x)
        .iter()
        .max_by_key(|&u| (p.count_and(&neighbors[u]), std::cmp::Reverse(u)))
        .expect("P is non-empty");
    let candidates: Vec<usize> = p.and_not(&neighbors[pivot]).iter().collect();
    for v in candidates {
        r.push(v);
        expand(neighbors, r, p.and(&neighbors[v]), x.and(&neighbors[v]), out);
        r.pop();
        p.remove(v);
        x.insert(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Matrix<bool> {
        let mut m = Matrix::filled(n, n, false);
        for &(a, b) in edges {
            m[(a, b)] = true;
            m[(b, a)] = true;
        }
        m
    }

    #[test]
    fn complete_graph_single_clique() {
        let n = 5;
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let g = graph(n, &edges);
        assert_eq!(maximal_cliques(&[0, 1, 2, 3, 4], &g), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn isolated_vertices_are_cliques() {
        let g = graph(4, &[(0, 1)]);
        assert_eq!(maximal_cliques(&[0, 3], &g), vec![vec![0], vec![3]]);
        assert_eq!(maximal_cliques(&[0, 1, 3], &g), vec![vec![0, 1], vec![3]]);
        assert!(maximal_cliques(&[], &g).is_empty());
    }

    #[test]
    fn path_and_triangle() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]);
        assert_eq!(
            maximal_cliques(&[0, 1, 2, 3, 4], &g),
            vec![vec![0, 1, 2], vec![2, 3], vec![3, 4]]
        );
    }

    #[test]
    fn wide_graph_crosses_word_boundary() {
        let n = 130;
        let edges: Vec<_> = (0..n - 1).map(|v| (v, v + 1)).collect();
        let g = graph(n, &edges);
        let vs: Vec<usize> = (0..n).collect();
        let cliques = maximal_cliques(&vs, &g);
        assert_eq!(cliques.len(), n - 1);
        assert_eq!(cliques[64], vec![64, 65]);
    }

    #[test]
    fn empty_relations() {
        let rel = NeighborRelations {
            cue_neighbor: Matrix::filled(3, 0, false),
            due_adjacency: Matrix::filled(0, 0, false),
        };
        let sg = build_subgraphs(&rel);
        assert_eq!(sg.shared.len(), 3);
        assert!(sg.shared.iter().all(|s| s.vertices.is_empty()));
        assert!(sg.dedicated.is_empty());
    }

    #[test]
    fn restricted_subgraphs() {
        let mut cue_neighbor = Matrix::filled(1, 3, false);
        cue_neighbor[(0, 2)] = true;
        let rel = NeighborRelations {
            cue_neighbor,
            due_adjacency: graph(3, &[(0, 1)]),
        };
        let sg = build_subgraphs_among(&rel, &[true, false, true], &[false, true, true]);
        assert_eq!(sg.shared[0].vertices, vec![0]);
        assert!(sg.dedicated[0].vertices.is_empty());
        assert_eq!(sg.dedicated[1].vertices, vec![1, 2]);
        assert_eq!(sg.dedicated[2].vertices, vec![1, 2]);
    }
}
