use std::collections::BTreeSet;

use d2d_csd::igraph::maximal_cliques;
use d2d_csd::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, p: f64, seed: u64) -> Matrix<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = Matrix::filled(n, n, false);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                adj[(i, j)] = true;
                adj[(j, i)] = true;
            }
        }
    }
    adj
}

/// Every subset that is a clique and cannot be extended by any vertex.
pub fn brute_force_maximal(vertices: &[usize], adj: &Matrix<bool>) -> BTreeSet<Vec<usize>> {
    let n = vertices.len();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| vertices[b]).collect();
        let is_clique = members
            .iter()
            .enumerate()
            .all(|(k, &a)| members[k + 1..].iter().all(|&b| adj[(a, b)]));
        if !is_clique {
            continue;
        }
        let extendable = vertices
            .iter()
            .any(|v| !members.contains(v) && members.iter().all(|&m| adj[(m, *v)]));
        if !extendable {
            out.insert(members);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn matches_brute_force(n in 0usize..=12, p in prop::sample::select(vec![0.2, 0.5, 0.8]), seed in any::<u64>()) {
        let adj = random_graph(n, p, seed);
        let vertices: Vec<usize> = (0..n).collect();
        let got = maximal_cliques(&vertices, &adj);
        let set: BTreeSet<Vec<usize>> = got.iter().cloned().collect();
        prop_assert_eq!(set.len(), got.len(), "duplicate cliques");
        prop_assert_eq!(set, brute_force_maximal(&vertices, &adj));
        let mut sorted = got.clone();
        sorted.sort();
        prop_assert_eq!(sorted, got);
    }

    #[test]
    fn induced_subsets_match(n in 1usize..=12, p in prop::sample::select(vec![0.2, 0.5, 0.8]), seed in any::<u64>(), keep in any::<u16>()) {
        let adj = random_graph(n, p, seed);
        let vertices: Vec<usize> = (0..n).filter(|b| keep >> b & 1 == 1).collect();
        let got: BTreeSet<Vec<usize>> = maximal_cliques(&vertices, &adj).into_iter().collect();
        prop_assert_eq!(got, brute_force_maximal(&vertices, &adj));
    }
}

#[test]
fn empty_vertex_set_has_no_cliques() {
    let adj = Matrix::filled(3, 3, false);
    assert!(maximal_cliques(&[], &adj).is_empty());
}
