//! Clustering by seed columns of `(L + beta I)^{-1}`: every node joins the
//! seed whose column is largest at that node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelSet};
use crate::kernel::{solve_columns, KernelColumns, KernelSolver, ShiftedSystem};
use crate::sparse::SparseVector;

/// Default diagonal shift of the embedding.
pub const DEFAULT_SHIFT: f64 = 0.15;
/// Default Laplacian discount of the embedding.
pub const DEFAULT_BETA_L: f64 = 0.85;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub seeds: Vec<usize>,
    /// Index into `seeds` per node; `None` for nodes no column reached.
    pub assignment: Vec<Option<usize>>,
}

impl ClusterAssignment {
    pub fn unreached(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_none()).count()
    }

    /// Members of each cluster, in seed order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.seeds.len()];
        for (u, a) in self.assignment.iter().enumerate() {
            if let Some(j) = a {
                out[*j].push(u);
            }
        }
        out
    }
}

/// The `count` highest-degree nodes, ties broken by smaller id.
pub fn select_seeds(g: &Graph, count: usize) -> Result<Vec<usize>> {
    let n = g.node_count();
    if count == 0 || count > n {
        return Err(Error::validation(format!("seed count must lie in 1..={n}, got {count}")));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.sort_by(|&a, &b| g.degree(b).total_cmp(&g.degree(a)).then(a.cmp(&b)));
    ids.truncate(count);
    Ok(ids)
}

/// Columns `(L + shift I)^{-1} e_j` for each seed `j`, with
/// `L = I - beta_l D^{-1/2} A D^{-1/2}`.
pub fn embed_columns(
    g: &Graph,
    seeds: &[usize],
    shift: f64,
    beta_l: f64,
    solver: &KernelSolver,
) -> Result<KernelColumns> {
    for &s in seeds {
        g.check_active_node(s)?;
    }
    let sys = ShiftedSystem::embedding(shift, beta_l)?;
    solve_columns(g, &sys, seeds, solver)
}

/// Assigns each node to the seed with the largest column entry, smallest
/// seed id on ties. Nodes where every column is zero stay unassigned.
pub fn assign_clusters(columns: &[SparseVector], seeds: &[usize], n: usize) -> Result<ClusterAssignment> {
    if seeds.is_empty() {
        return Err(Error::validation("need at least one seed"));
    }
    if columns.len() != seeds.len() {
        return Err(Error::DimensionMismatch {
            expected: seeds.len(),
            got: columns.len(),
        });
    }
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    for (j, col) in columns.iter().enumerate() {
        for (u, v) in col.iter() {
            if u >= n {
                return Err(Error::NodeOutOfRange { node: u, n });
            }
            if v == 0.0 {
                continue;
            }
            let better = match best[u] {
                None => true,
                Some((bv, bj)) => v > bv || (v == bv && seeds[j] < seeds[bj]),
            };
            if better {
                best[u] = Some((v, j));
            }
        }
    }
    Ok(ClusterAssignment {
        seeds: seeds.to_vec(),
        assignment: best.into_iter().map(|b| b.map(|(_, j)| j)).collect(),
    })
}

/// Sum over clusters of the majority-class count, divided by `n`.
/// Unassigned nodes contribute nothing.
pub fn purity_score(assignment: &ClusterAssignment, labels: &LabelSet) -> Result<f64> {
    let n = assignment.assignment.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if n == 0 {
        return Err(Error::validation("empty assignment"));
    }
    let k = labels.classes();
    let mut counts = vec![vec![0usize; k]; assignment.seeds.len()];
    for (u, a) in assignment.assignment.iter().enumerate() {
        if let Some(j) = a {
            counts[*j][labels.label(u)] += 1;
        }
    }
    let pure: usize = counts.iter().map(|c| c.iter().copied().max().unwrap_or(0)).sum();
    Ok(pure as f64 / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub assignment: ClusterAssignment,
    pub score: Option<f64>,
    pub unreached: usize,
    pub nodes_queried: usize,
}

/// Seeds, embeds, assigns and (with labels) scores in one call.
pub fn cluster(
    g: &Graph,
    seeds: &[usize],
    shift: f64,
    beta_l: f64,
    solver: &KernelSolver,
    labels: Option<&LabelSet>,
) -> Result<ClusterReport> {
    let cols = embed_columns(g, seeds, shift, beta_l, solver)?;
    let assignment = assign_clusters(&cols.columns, seeds, g.node_count())?;
    let score = labels.map(|l| purity_score(&assignment, l)).transpose()?;
    Ok(ClusterReport {
        unreached: assignment.unreached(),
        assignment,
        score,
        nodes_queried: cols.nodes_queried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{barbell_k3, barbell_k3_labels, complete, path, star};
    use crate::graph::Graph;
    use crate::oracle::dense::dense_q;
    use nalgebra::DMatrix;

    fn dense_embedding(g: &Graph, shift: f64) -> DMatrix<f64> {
        let n = g.node_count();
        (dense_q(g, DEFAULT_BETA_L) + DMatrix::identity(n, n) * shift).try_inverse().unwrap()
    }

    #[test]
    fn seeds_by_degree() {
        assert_eq!(select_seeds(&star(3), 1).unwrap(), vec![0]);
        assert_eq!(select_seeds(&path(4), 4).unwrap(), vec![1, 2, 0, 3]);
        assert_eq!(select_seeds(&complete(3), 2).unwrap(), vec![0, 1]);
        assert!(select_seeds(&path(3), 4).is_err());
        assert!(select_seeds(&path(3), 0).is_err());
    }

    #[test]
    fn columns_peak_at_their_seed() {
        for g in [path(3), complete(3), star(3)] {
            let n = g.node_count();
            let z = dense_embedding(&g, DEFAULT_SHIFT);
            let seeds: Vec<usize> = (0..n).collect();
            let cols = embed_columns(&g, &seeds, DEFAULT_SHIFT, DEFAULT_BETA_L, &KernelSolver::Exact).unwrap();
            for j in 0..n {
                for i in 0..n {
                    assert!((cols.columns[j].get(i) - z[(i, j)]).abs() < 1e-12);
                    if i != j {
                        assert!(z[(j, j)] > z[(i, j)]);
                    }
                }
            }
        }
    }

    #[test]
    fn appr_embedding_matches_exact_on_k3() {
        let g = complete(3);
        let ex = embed_columns(&g, &[0, 2], 0.5, 1.0, &KernelSolver::Exact).unwrap();
        let ap = embed_columns(&g, &[0, 2], 0.5, 1.0, &KernelSolver::Appr { epsilon: 1e-10 }).unwrap();
        for (a, b) in ex.columns.iter().zip(&ap.columns) {
            let mut d = a.clone();
            d.axpy(-1.0, b);
            assert!(d.linf_norm() <= 1e-6);
        }
    }

    #[test]
    fn assignment_examples() {
        let col = SparseVector::from_pairs([(0, 0.3), (1, 0.1)]);
        let a = assign_clusters(&[col], &[0], 3).unwrap();
        assert_eq!(a.assignment, vec![Some(0), Some(0), None]);
        assert_eq!(a.unreached(), 1);

        let c1 = SparseVector::from_pairs([(0, 0.5), (1, 0.2)]);
        let c2 = SparseVector::from_pairs([(2, 0.5), (3, 0.2)]);
        let a = assign_clusters(&[c1, c2], &[0, 2], 4).unwrap();
        assert_eq!(a.assignment, vec![Some(0), Some(0), Some(1), Some(1)]);

        // ties go to the smaller seed id regardless of list order
        let c1 = SparseVector::from_pairs([(1, 0.5)]);
        let c2 = SparseVector::from_pairs([(1, 0.5)]);
        let a = assign_clusters(&[c1, c2], &[4, 2], 5).unwrap();
        assert_eq!(a.assignment[1], Some(1));
        assert!(assign_clusters(&[], &[], 3).is_err());
    }

    #[test]
    fn barbell_clusters_match_sides() {
        let g = barbell_k3();
        let labels = barbell_k3_labels();
        for solver in [KernelSolver::Exact, KernelSolver::Appr { epsilon: 1e-8 }] {
            let r = cluster(&g, &[0, 5], DEFAULT_SHIFT, DEFAULT_BETA_L, &solver, Some(&labels)).unwrap();
            assert_eq!(r.score, Some(1.0));
            assert_eq!(
                r.assignment.assignment,
                vec![Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)]
            );
        }
    }

    #[test]
    fn purity_examples() {
        let labels = LabelSet::new(vec![0, 0, 1], 2).unwrap();
        let a = ClusterAssignment {
            seeds: vec![0],
            assignment: vec![Some(0); 3],
        };
        assert!((purity_score(&a, &labels).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let labels = LabelSet::new(vec![0, 1, 0, 1], 2).unwrap();
        let a = ClusterAssignment {
            seeds: vec![0],
            assignment: vec![Some(0); 4],
        };
        assert_eq!(purity_score(&a, &labels).unwrap(), 0.5);
        let a = ClusterAssignment {
            seeds: vec![0, 1, 2, 3],
            assignment: vec![Some(0), Some(1), Some(2), Some(3)],
        };
        assert_eq!(purity_score(&a, &labels).unwrap(), 1.0);
    }
}
