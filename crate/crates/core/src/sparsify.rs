//! Offline edge sparsification with `1/p` reweighting, effective
//! resistances, and the label-aware edge ratio.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian_quadratic, laplacian_quadratic_with_degrees, Graph, LabelSet};
use crate::oracle::dense::{check_cap, dense_combinatorial_laplacian, symmetric_pinv, DEFAULT_DENSE_CAP};
use crate::rng::keyed_uniform;

/// How the keep probability of each undirected edge is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeProbabilityScheme {
    /// Same probability for every edge.
    Uniform { keep_prob: f64 },
    /// `min(1, q_bar / max(d_u, d_v))`: only edges touching a node of degree
    /// above `q_bar` are thinned.
    Influencer { q_bar: f64 },
    /// `min(1, scale * w_uv * R_uv)` with `R` the effective resistance.
    Resistive { scale: f64 },
}

/// Keep probability per undirected edge, in [`Graph::edges`] order.
pub fn edge_probabilities(g: &Graph, scheme: &EdgeProbabilityScheme) -> Result<Vec<f64>> {
    let probs: Vec<f64> = match *scheme {
        EdgeProbabilityScheme::Uniform { keep_prob } => vec![keep_prob; g.edge_count()],
        EdgeProbabilityScheme::Influencer { q_bar } => {
            if !(q_bar > 0.0) {
                return Err(Error::validation(format!("q_bar must be positive, got {q_bar}")));
            }
            g.edges()
                .map(|(u, v, _)| (q_bar / g.degree(u).max(g.degree(v))).min(1.0))
                .collect()
        }
        EdgeProbabilityScheme::Resistive { scale } => {
            if !(scale > 0.0) {
                return Err(Error::validation(format!("scale must be positive, got {scale}")));
            }
            let r = resistive_distances(g)?;
            g.edges()
                .map(|(u, v, w)| (scale * w * r[(u, v)]).min(1.0))
                .collect()
        }
    };
    if let Some(p) = probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::validation(format!("edge keep probability {p} outside (0, 1]")));
    }
    Ok(probs)
}

/// Keeps each edge independently with its scheme probability and reweights
/// kept edges to `w / p`. Edges with `p = 1` are kept as they are.
pub fn sparsify_offline(g: &Graph, scheme: &EdgeProbabilityScheme, seed: u64) -> Result<Graph> {
    let probs = edge_probabilities(g, scheme)?;
    sparsify_with_probabilities(g, &probs, seed)
}

/// As [`sparsify_offline`] with explicit per-edge probabilities.
///
/// Edge `k` (in [`Graph::edges`] order) draws its Bernoulli from the stream
/// keyed by `(seed, k)`, so the output does not depend on evaluation order.
pub fn sparsify_with_probabilities(g: &Graph, probs: &[f64], seed: u64) -> Result<Graph> {
    if probs.len() != g.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: g.edge_count(),
            got: probs.len(),
        });
    }
    let mut kept = Vec::new();
    for (k, ((u, v, w), &p)) in g.edges().zip(probs).enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::validation(format!("edge keep probability {p} outside (0, 1]")));
        }
        if p == 1.0 {
            kept.push((u, v, w));
        } else if keyed_uniform(seed, &[k as u64]) < p {
            kept.push((u, v, w / p));
        }
    }
    Graph::from_edges(g.node_count(), &kept)
}

/// Effective resistances `R_ij = L+_ii + L+_jj - 2 L+_ij` of `L = D - A`.
///
/// Pairs in different connected components get `+inf`.
pub fn resistive_distances(g: &Graph) -> Result<DMatrix<f64>> {
    resistive_distances_capped(g, DEFAULT_DENSE_CAP)
}

pub fn resistive_distances_capped(g: &Graph, cap: usize) -> Result<DMatrix<f64>> {
    let n = g.node_count();
    check_cap(n, cap, "use the influencer scheme, which needs no resistances")?;
    let pinv = symmetric_pinv(dense_combinatorial_laplacian(g));
    let comp = g.components();
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = if comp[i] == comp[j] {
                (pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)]).max(0.0)
            } else {
                f64::INFINITY
            };
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}

/// Finds the resistive `scale` whose expected kept-edge count equals
/// `target_ratio * m`, by bisection on `sum_e min(1, scale * w_e * R_e)`.
pub fn calibrate_resistive_scale(g: &Graph, r: &DMatrix<f64>, target_ratio: f64) -> Result<f64> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::validation(format!(
            "target ratio must lie in (0, 1], got {target_ratio}"
        )));
    }
    let wr: Vec<f64> = g.edges().map(|(u, v, w)| w * r[(u, v)]).collect();
    if wr.is_empty() {
        return Ok(1.0);
    }
    if let Some(bad) = wr.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Numerical(format!("edge with resistance product {bad}")));
    }
    let target = target_ratio * wr.len() as f64;
    let expected = |s: f64| wr.iter().map(|&x| (s * x).min(1.0)).sum::<f64>();
    let mut hi = wr.iter().map(|&x| 1.0 / x).fold(0.0, f64::max);
    if target_ratio == 1.0 {
        return Ok(hi);
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Per-edge `(u, v, max(d_u, d_v), 1 / R_uv)` rows.
pub fn edge_degree_resistance_pairs(g: &Graph, r: &DMatrix<f64>) -> Vec<(usize, usize, f64, f64)> {
    g.edges()
        .map(|(u, v, _)| (u, v, g.degree(u).max(g.degree(v)), 1.0 / r[(u, v)]))
        .collect()
}

/// Cross-label edge weight divided by same-label edge weight.
///
/// Returns `+inf` (and logs a warning) when no weight joins same-labeled nodes.
pub fn edge_ratio(g: &Graph, labels: &LabelSet) -> Result<f64> {
    if labels.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: labels.len(),
        });
    }
    let (mut cross, mut same) = (0.0, 0.0);
    for (u, v, w) in g.edges() {
        if labels.label(u) == labels.label(v) {
            same += w;
        } else {
            cross += w;
        }
    }
    if same == 0.0 {
        log::warn!("edge ratio undefined: no same-label edges (cross weight {cross})");
        return Ok(f64::INFINITY);
    }
    Ok(cross / same)
}

/// `x^T L~ x - x^T L x`, both normalized by the degrees of the original `g`.
pub fn quadratic_form_deviation(g: &Graph, g_sparse: &Graph, x: &[f64], beta: f64) -> Result<f64> {
    if g_sparse.node_count() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: g_sparse.node_count(),
        });
    }
    let sparse = laplacian_quadratic_with_degrees(g_sparse, g.degrees(), x, beta)?;
    Ok(sparse - laplacian_quadratic(g, x, beta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{complete, path, power_law, star};

    #[test]
    fn keep_all_is_identity() {
        let g = power_law(60, 2.5, 4.0, 1);
        let s = sparsify_offline(&g, &EdgeProbabilityScheme::Uniform { keep_prob: 1.0 }, 9).unwrap();
        assert_eq!(s, g);
        let q = g.max_degree();
        let s = sparsify_offline(&g, &EdgeProbabilityScheme::Influencer { q_bar: q }, 9).unwrap();
        assert_eq!(s, g);
    }

    #[test]
    fn same_seed_same_graph() {
        let g = power_law(80, 2.5, 5.0, 3);
        let sch = EdgeProbabilityScheme::Influencer { q_bar: 2.0 };
        assert_eq!(sparsify_offline(&g, &sch, 4).unwrap(), sparsify_offline(&g, &sch, 4).unwrap());
        assert_ne!(sparsify_offline(&g, &sch, 4).unwrap(), sparsify_offline(&g, &sch, 5).unwrap());
    }

    #[test]
    fn invalid_probability_rejected() {
        let g = path(3);
        assert!(sparsify_offline(&g, &EdgeProbabilityScheme::Uniform { keep_prob: 0.0 }, 1).is_err());
        assert!(sparsify_offline(&g, &EdgeProbabilityScheme::Uniform { keep_prob: 1.5 }, 1).is_err());
    }

    #[test]
    fn star_influencer_edge_mean() {
        let g = star(3);
        let sch = EdgeProbabilityScheme::Influencer { q_bar: 1.0 };
        let trials = 10_000;
        let mut sum = 0.0;
        for seed in 0..trials {
            let s = sparsify_offline(&g, &sch, seed).unwrap();
            let w = s.weight(0, 1);
            assert!(w == 0.0 || (w - 3.0).abs() < 1e-12);
            sum += w;
        }
        let mean = sum / trials as f64;
        // sd of a single draw is sqrt(2); 3 sigma over 1e4 draws is 0.042
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn star_deviation_is_unbiased() {
        let g = star(3);
        let sch = EdgeProbabilityScheme::Influencer { q_bar: 1.0 };
        let x = [1.0, 1.0, 0.0, 0.0];
        let trials = 10_000;
        let mut sum = 0.0;
        for seed in 0..trials {
            let s = sparsify_offline(&g, &sch, seed).unwrap();
            sum += quadratic_form_deviation(&g, &s, &x, 1.0).unwrap();
        }
        let mean = sum / trials as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert_eq!(quadratic_form_deviation(&g, &g, &x, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn resistances_of_small_graphs() {
        let r = resistive_distances(&path(3)).unwrap();
        assert!((r[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((r[(0, 2)] - 2.0).abs() < 1e-12);
        let r = resistive_distances(&complete(3)).unwrap();
        assert!((r[(0, 1)] - 2.0 / 3.0).abs() < 1e-12);
        let two = Graph::from_unweighted(4, &[(0, 1), (2, 3)]).unwrap();
        let r = resistive_distances(&two).unwrap();
        assert!(r[(0, 2)].is_infinite());
        assert!((r[(2, 3)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resistive_cap() {
        let g = path(20);
        assert!(matches!(resistive_distances_capped(&g, 10), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn calibration_hits_target() {
        let g = power_law(120, 2.5, 6.0, 5);
        let r = resistive_distances(&g).unwrap();
        let s = calibrate_resistive_scale(&g, &r, 0.5).unwrap();
        let probs = edge_probabilities(&g, &EdgeProbabilityScheme::Resistive { scale: s }).unwrap();
        let expected: f64 = probs.iter().sum();
        assert!((expected - 0.5 * g.edge_count() as f64).abs() < 1e-6);
    }

    #[test]
    fn edge_ratio_examples() {
        let e = path(2);
        let same = LabelSet::new(vec![0, 0], 2).unwrap();
        assert_eq!(edge_ratio(&e, &same).unwrap(), 0.0);
        let tri = LabelSet::new(vec![1, 1, 0], 2).unwrap();
        assert_eq!(edge_ratio(&complete(3), &tri).unwrap(), 2.0);
        let alt = LabelSet::new(vec![1, 0, 1], 2).unwrap();
        assert!(edge_ratio(&path(3), &alt).unwrap().is_infinite());
    }
}
