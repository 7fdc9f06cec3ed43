//! Columns of shifted Laplacian inverses `c (I - beta' N)^{-1}`, where
//! `N = D^{-1/2} A D^{-1/2}`, computed exactly or by (randomized) push.
//!
//! Both the online-labeling kernel `(L/(2 gamma) + I/(2n))^{-1}` and the
//! clustering embedding `(L + beta I)^{-1}` reduce to this form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appr::{appr_solve, ApprParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::oracle::dense::{check_cap, dense_q, spd_inverse, DEFAULT_DENSE_CAP};
use crate::random_appr::{random_appr, RandomApprConfig};
use crate::rng::mix;
use crate::sparse::SparseVector;

/// How kernel columns are computed. For push solvers the teleportation
/// parameter follows from the system; only the tolerance is chosen here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSolver {
    Exact,
    Appr { epsilon: f64 },
    RandomAppr { epsilon: f64, config: RandomApprConfig },
}

/// `scale * (I - beta_prime N)^{-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedSystem {
    pub scale: f64,
    pub beta_prime: f64,
}

impl ShiftedSystem {
    /// `(L/(2 gamma) + I/(2n))^{-1}` with `L = I - beta N`.
    pub fn onl(n: usize, gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::validation(format!("gamma must be positive, got {gamma}")));
        }
        if n == 0 {
            return Err(Error::validation("empty graph"));
        }
        let shrink = 1.0 + gamma / n as f64;
        Self::new(2.0 * gamma / shrink, beta / shrink)
    }

    /// `(L + shift I)^{-1}` with `L = I - beta_l N`.
    pub fn embedding(shift: f64, beta_l: f64) -> Result<Self> {
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(Error::validation(format!("shift must be positive, got {shift}")));
        }
        Self::new(1.0 / (1.0 + shift), beta_l / (1.0 + shift))
    }

    fn new(scale: f64, beta_prime: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta_prime) {
            return Err(Error::validation(format!(
                "reduced discount must lie in [0, 1), got {beta_prime}"
            )));
        }
        Ok(Self { scale, beta_prime })
    }

    /// Teleportation parameter of the equivalent push system.
    pub fn alpha(&self) -> f64 {
        ApprParams::alpha_for_beta(self.beta_prime)
    }
}

#[derive(Clone, Debug, Default)]
pub struct KernelColumns {
    /// One column per requested node, in request order.
    pub columns: Vec<SparseVector>,
    pub nodes_queried: usize,
}

fn validate_solver(solver: &KernelSolver) -> Result<()> {
    match solver {
        KernelSolver::Exact => Ok(()),
        KernelSolver::Appr { epsilon } => ApprParams::new(0.5, *epsilon).map(|_| ()),
        KernelSolver::RandomAppr { epsilon, config } => {
            ApprParams::new(0.5, *epsilon)?;
            config.validate()
        }
    }
}

/// Columns `nodes` of the system's matrix. Push solvers map
/// `(I - beta' N)^{-1} e_t = (1 + alpha') sqrt(d_t) / (2 alpha') x(t)` where
/// `x(t)` solves the seeded system at `t`; isolated nodes get `scale e_t`.
/// Randomized columns use the sampler seed mixed with the column id.
pub fn solve_columns(g: &Graph, sys: &ShiftedSystem, nodes: &[usize], solver: &KernelSolver) -> Result<KernelColumns> {
    validate_solver(solver)?;
    for &t in nodes {
        g.check_node(t)?;
    }
    if let KernelSolver::Exact = solver {
        let n = g.node_count();
        check_cap(n, DEFAULT_DENSE_CAP, "use a push solver for large graphs")?;
        let inv = spd_inverse(dense_q(g, sys.beta_prime))?;
        let columns = nodes
            .iter()
            .map(|&t| (0..n).map(|i| (i, sys.scale * inv[(i, t)])).filter(|&(_, v)| v != 0.0).collect())
            .collect();
        return Ok(KernelColumns {
            columns,
            nodes_queried: 0,
        });
    }
    if sys.beta_prime == 0.0 {
        return Ok(KernelColumns {
            columns: nodes.iter().map(|&t| SparseVector::from_pairs([(t, sys.scale)])).collect(),
            nodes_queried: 0,
        });
    }
    let alpha = sys.alpha();
    let solve_one = |t: usize| -> Result<(SparseVector, usize)> {
        if g.degree(t) == 0.0 {
            return Ok((SparseVector::from_pairs([(t, sys.scale)]), 0));
        }
        let (mut x, queried) = match solver {
            KernelSolver::Exact => unreachable!(),
            KernelSolver::Appr { epsilon } => {
                let out = appr_solve(g, t, &ApprParams::new(alpha, *epsilon)?)?;
                (out.x, out.nodes_queried)
            }
            KernelSolver::RandomAppr { epsilon, config } => {
                let mut c = *config;
                c.sampler.rng_seed = mix(config.sampler.rng_seed, &[t as u64]);
                let out = random_appr(g, t, &ApprParams::new(alpha, *epsilon)?, &c)?;
                (out.x, out.nodes_queried)
            }
        };
        x.scale(sys.scale * (1.0 + alpha) * g.degree(t).sqrt() / (2.0 * alpha));
        Ok((x, queried))
    };
    let solved: Vec<(SparseVector, usize)> = nodes
        .par_iter()
        .map(|&t| {
            solve_one(t).map_err(|e| Error::Column {
                column: t,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let nodes_queried = solved.iter().map(|s| s.1).sum();
    Ok(KernelColumns {
        columns: solved.into_iter().map(|s| s.0).collect(),
        nodes_queried,
    })
}

/// Column `t` of `(L/(2 gamma) + I/(2n))^{-1}` with `L = I - beta N`.
pub fn kernel_column(g: &Graph, t: usize, gamma: f64, beta: f64, solver: &KernelSolver) -> Result<SparseVector> {
    let sys = ShiftedSystem::onl(g.node_count(), gamma, beta)?;
    Ok(solve_columns(g, &sys, &[t], solver)?.columns.pop().unwrap())
}
