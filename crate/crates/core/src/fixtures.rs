//! Small named graphs and seeded random generators used by tests, the
//! verification suites, and the CLI's built-in workloads.

use rand::Rng;

use crate::graph::{Graph, LabelSet};
use crate::rng::keyed_rng;

fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_unweighted(n, edges).expect("fixture edges are valid")
}

/// Star with center 0 and leaves `1..=leaves`.
pub fn star(leaves: usize) -> Graph {
    let e: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
    build(leaves + 1, &e)
}

pub fn path(n: usize) -> Graph {
    let e: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    build(n, &e)
}

pub fn complete(n: usize) -> Graph {
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            e.push((u, v));
        }
    }
    build(n, &e)
}

pub fn edgeless(n: usize) -> Graph {
    build(n, &[])
}

/// `count` triangles, triangle `k` on nodes `3k..3k+3`, consecutive
/// triangles joined by the edge `(3k+2, 3k+3)`.
pub fn k3_chain(count: usize) -> Graph {
    let mut e = Vec::new();
    for k in 0..count {
        let b = 3 * k;
        e.extend([(b, b + 1), (b + 1, b + 2), (b, b + 2)]);
        if k + 1 < count {
            e.push((b + 2, b + 3));
        }
    }
    build(3 * count, &e)
}

/// Two triangles `{0,1,2}` and `{3,4,5}` joined by the bridge `(2,3)`.
pub fn barbell_k3() -> Graph {
    k3_chain(2)
}

/// Labels `0` on the left triangle and `1` on the right one.
pub fn barbell_k3_labels() -> LabelSet {
    LabelSet::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap()
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = keyed_rng(seed, &[0xE5]);
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                e.push((u, v));
            }
        }
    }
    build(n, &e)
}

/// Erdős–Rényi graph with every component hooked onto the largest one, so
/// the result is connected.
pub fn connected_erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let g = erdos_renyi(n, p, seed);
    let mut e: Vec<_> = g.edges().map(|(u, v, _)| (u, v)).collect();
    connect_components(&g, &mut e, &vec![1.0; n], seed);
    build(n, &e)
}

/// Power-law expected degrees `w_i ∝ (i + i0)^{-1/(exponent-1)}`, scaled to
/// the requested average and capped at `max_weight`.
fn power_law_weights(n: usize, exponent: f64, avg_degree: f64, max_weight: f64) -> Vec<f64> {
    let gamma = 1.0 / (exponent - 1.0);
    let i0 = 1.0;
    let raw: Vec<f64> = (0..n).map(|i| (i as f64 + i0).powf(-gamma)).collect();
    let sum: f64 = raw.iter().sum();
    let scale = avg_degree * n as f64 / sum;
    raw.into_iter().map(|r| (r * scale).min(max_weight)).collect()
}

fn chung_lu_edges(weights: &[f64], affinity: impl Fn(usize, usize) -> f64, seed: u64) -> Vec<(usize, usize)> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let mut rng = keyed_rng(seed, &[0xC1]);
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = (weights[u] * weights[v] / total * affinity(u, v)).min(1.0);
            if rng.random::<f64>() < p {
                e.push((u, v));
            }
        }
    }
    e
}

/// Adds one edge from every non-giant component to a node of the largest
/// component picked with probability proportional to `weights`.
fn connect_components(g: &Graph, edges: &mut Vec<(usize, usize)>, weights: &[f64], seed: u64) {
    let comp = g.components();
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    if ncomp <= 1 {
        return;
    }
    let mut size = vec![0usize; ncomp];
    for &c in &comp {
        size[c] += 1;
    }
    let giant = (0..ncomp).max_by_key(|&c| (size[c], std::cmp::Reverse(c))).unwrap();
    let members: Vec<usize> = (0..comp.len()).filter(|&u| comp[u] == giant).collect();
    let total: f64 = members.iter().map(|&u| weights[u]).sum();
    let mut rng = keyed_rng(seed, &[0xCC]);
    let mut seen = vec![false; ncomp];
    for u in 0..comp.len() {
        let c = comp[u];
        if c == giant || seen[c] {
            continue;
        }
        seen[c] = true;
        let mut r = rng.random::<f64>() * total;
        let mut target = members[members.len() - 1];
        for &m in &members {
            r -= weights[m];
            if r <= 0.0 {
                target = m;
                break;
            }
        }
        edges.push((u, target));
    }
}

/// Connected Chung–Lu graph with a power-law expected degree sequence.
pub fn power_law(n: usize, exponent: f64, avg_degree: f64, seed: u64) -> Graph {
    power_law_capped(n, exponent, avg_degree, n as f64 / 3.0, seed)
}

/// As [`power_law`] with expected degrees capped at `max_weight`.
pub fn power_law_capped(n: usize, exponent: f64, avg_degree: f64, max_weight: f64, seed: u64) -> Graph {
    let w = power_law_weights(n, exponent, avg_degree, max_weight);
    let mut e = chung_lu_edges(&w, |_, _| 1.0, seed);
    let g = build(n, &e);
    connect_components(&g, &mut e, &w, seed);
    build(n, &e)
}

/// The 500-node heavy-tailed graph used throughout the verification suites.
pub fn power_law_500(seed: u64) -> Graph {
    power_law(500, 2.3, 6.0, seed)
}

/// Heavy-tailed stand-in at citation-network scale: 2110 nodes with a
/// degree profile close to the citeseer graph (average ≈ 3.5, median 2,
/// maximum near 100).
pub fn citation_like(seed: u64) -> Graph {
    power_law_capped(2110, 2.8, 3.2, 90.0, seed)
}

/// Degree-corrected planted partition: `blocks` equal blocks, power-law
/// expected degrees, and within/between affinity `p_in`/`p_out` relative to
/// a plain Chung–Lu graph. Hubs are spread across all blocks. Returns the
/// connected graph and the block labels.
pub fn planted_partition(
    n: usize,
    blocks: usize,
    avg_degree: f64,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> (Graph, LabelSet) {
    let w = power_law_weights(n, 2.5, avg_degree, n as f64 / 4.0);
    // round-robin block assignment puts hubs (low indices) in every block
    let label: Vec<usize> = (0..n).map(|u| u % blocks).collect();
    let norm = blocks as f64 / (p_in + (blocks - 1) as f64 * p_out);
    let mut e = chung_lu_edges(
        &w,
        |u, v| norm * if label[u] == label[v] { p_in } else { p_out },
        seed,
    );
    let g = build(n, &e);
    connect_components(&g, &mut e, &w, seed);
    (build(n, &e), LabelSet::new(label, blocks.max(2)).unwrap())
}

/// The 500-node two-block planted partition used by the clustering and
/// labeling checks.
pub fn planted_partition_500(seed: u64) -> (Graph, LabelSet) {
    planted_partition(500, 2, 8.0, 0.9, 0.1, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::degree_stats;

    #[test]
    fn named_graphs() {
        assert_eq!(star(3).degrees(), &[3.0, 1.0, 1.0, 1.0]);
        assert_eq!(path(3).degrees(), &[1.0, 2.0, 1.0]);
        assert_eq!(complete(3).edge_count(), 3);
        let b = barbell_k3();
        assert_eq!(b.edge_count(), 7);
        assert_eq!(b.weight(2, 3), 1.0);
        assert_eq!(k3_chain(3).edge_count(), 11);
    }

    #[test]
    fn generators_are_seeded_and_connected() {
        assert_eq!(power_law_500(3), power_law_500(3));
        let g = power_law_500(3);
        assert!(g.components().iter().all(|&c| c == 0));
        let (pp, labels) = planted_partition_500(1);
        assert_eq!(labels.len(), 500);
        assert!(pp.components().iter().all(|&c| c == 0));
        let er = connected_erdos_renyi(60, 0.02, 9);
        assert!(er.components().iter().all(|&c| c == 0));
    }

    #[test]
    fn power_law_is_heavy_tailed() {
        let st = degree_stats(&power_law_500(7)).unwrap();
        assert!(st.max_over_avg > 5.0, "{st:?}");
        assert!(st.median_degree < st.avg_degree);
    }
}
