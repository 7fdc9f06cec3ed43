//! Monte-Carlo checks of the concentration bounds for offline
//! sparsification and for premature threshold drops under subsampling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appr::{residual_exact, seed_rhs, ApprParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::random_appr::dual_correct;
use crate::rng::mix;
use crate::sampler::SamplerConfig;
use crate::sparse::SparseVector;
use crate::sparsify::{quadratic_form_deviation, sparsify_offline, EdgeProbabilityScheme};

/// Three binomial standard errors of a frequency with success probability `p`.
pub fn binomial_slack(p: f64, trials: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub epsilon: f64,
    pub exceedance: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub trials: usize,
    pub q_bar: f64,
    pub d_max: f64,
    pub x_inf: f64,
    /// Ordered node pairs `(i, j)`, `i != j`, `A_ij > 0`, with
    /// `max(d_i, d_j) >= q_bar`.
    pub influenced_pairs: usize,
    pub rows: Vec<ConcentrationRow>,
    pub pass: bool,
}

/// Number of ordered adjacent pairs touching a node of degree at least `q_bar`.
pub fn influenced_pairs(g: &Graph, q_bar: f64) -> usize {
    2 * g
        .edges()
        .filter(|&(u, v, _)| g.degree(u).max(g.degree(v)) >= q_bar)
        .count()
}

/// `exp(-eps^2 q_bar^2 / (d_max^2 ‖x‖_inf^4 |S_I|))`.
pub fn offline_bound(epsilon: f64, q_bar: f64, d_max: f64, x_inf: f64, pairs: usize) -> f64 {
    if epsilon <= 0.0 {
        return 1.0;
    }
    let denom = d_max.powi(2) * x_inf.powi(4) * pairs as f64;
    if denom == 0.0 {
        return 0.0;
    }
    (-(epsilon * q_bar).powi(2) / denom).exp()
}

/// Influencer-sparsifies `g` `trials` times and compares the frequency of
/// `x^T L~ x - x^T L x >= eps` (with `beta = 1`) against the offline bound.
pub fn offline_concentration_check(
    g: &Graph,
    q_bar: f64,
    x: &[f64],
    trials: usize,
    epsilon_grid: &[f64],
    seed: u64,
) -> Result<ConcentrationReport> {
    if trials == 0 {
        return Err(Error::validation("need at least one trial"));
    }
    if x.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: x.len(),
        });
    }
    let scheme = EdgeProbabilityScheme::Influencer { q_bar };
    let deviations: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = sparsify_offline(g, &scheme, mix(seed, &[t as u64]))?;
            quadratic_form_deviation(g, &s, x, 1.0)
        })
        .collect::<Result<_>>()?;
    let d_max = g.max_degree();
    let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pairs = influenced_pairs(g, q_bar);
    let rows: Vec<ConcentrationRow> = epsilon_grid
        .iter()
        .map(|&eps| {
            let exceed = deviations.iter().filter(|&&d| d >= eps).count() as f64 / trials as f64;
            let bound = offline_bound(eps, q_bar, d_max, x_inf, pairs);
            let slack = binomial_slack(bound, trials);
            ConcentrationRow {
                epsilon: eps,
                exceedance: exceed,
                bound,
                slack,
                pass: exceed <= bound + slack,
            }
        })
        .collect();
    Ok(ConcentrationReport {
        trials,
        q_bar,
        d_max,
        x_inf,
        influenced_pairs: pairs,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopRow {
    pub node: usize,
    /// `|z_i| / d_i` of the exact residual.
    pub exact_scaled: f64,
    pub drop_frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopReport {
    pub c: f64,
    pub epsilon: f64,
    pub replicates: usize,
    /// Largest per-coordinate sample standard deviation of `D^{-1} z~`.
    pub sigma_hat: f64,
    pub bound: f64,
    pub slack: f64,
    pub rows: Vec<EarlyStopRow>,
    pub max_drop_frequency: f64,
    pub pass: bool,
}

/// For a fixed primal `x` of the seeded system, draws `replicates` corrected
/// residual estimates `z~ = e_s - dual_correct(x)` and, at every node whose
/// exact residual satisfies `|z_i| / d_i > eps`, measures how often the
/// estimate falls to `|z~_i| / d_i < c eps`. The frequency must stay below
/// `exp(-(1-c)^2 eps^2 / (2 sigma^2))` plus three binomial standard errors.
#[allow(clippy::too_many_arguments)]
pub fn early_stopping_check(
    g: &Graph,
    s: usize,
    x: &SparseVector,
    params: &ApprParams,
    cfg: &SamplerConfig,
    c: f64,
    replicates: usize,
) -> Result<EarlyStopReport> {
    if replicates < 2 {
        return Err(Error::validation("need at least two replicates"));
    }
    let b = seed_rhs(g, s, params.alpha)?;
    let exact = residual_exact(g, x, &b, params);
    let eps = params.epsilon;
    let estimates: Vec<SparseVector> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rc = *cfg;
            rc.rng_seed = mix(cfg.rng_seed, &[r as u64]);
            let (zt, _) = dual_correct(g, x, &rc, params, 0)?;
            let mut z = SparseVector::unit(s);
            z.axpy(-1.0, &zt);
            Ok(z)
        })
        .collect::<Result<_>>()?;

    let mut nodes: Vec<usize> = estimates.iter().flat_map(|z| z.keys()).chain(exact.keys()).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let n = replicates as f64;
    let mut sigma_hat = 0.0f64;
    for &i in &nodes {
        let d = g.degree(i);
        if d == 0.0 {
            continue;
        }
        let vals: Vec<f64> = estimates.iter().map(|z| z.get(i) / d).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        sigma_hat = sigma_hat.max(var.sqrt());
    }
    let bound = if sigma_hat == 0.0 {
        0.0
    } else {
        (-((1.0 - c) * eps).powi(2) / (2.0 * sigma_hat * sigma_hat)).exp()
    };
    let slack = binomial_slack(bound, replicates);
    let mut rows = Vec::new();
    for &i in &nodes {
        let d = g.degree(i);
        if d == 0.0 {
            continue;
        }
        let ex = exact.get(i).abs() / d;
        if ex > eps {
            let drops = estimates.iter().filter(|z| z.get(i).abs() / d < c * eps).count();
            rows.push(EarlyStopRow {
                node: i,
                exact_scaled: ex,
                drop_frequency: drops as f64 / n,
            });
        }
    }
    let max_drop = rows.iter().map(|r| r.drop_frequency).fold(0.0, f64::max);
    Ok(EarlyStopReport {
        c,
        epsilon: eps,
        replicates,
        sigma_hat,
        bound,
        slack,
        max_drop_frequency: max_drop,
        pass: max_drop <= bound + slack,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::star;

    #[test]
    fn deterministic_when_threshold_exceeds_max_degree() {
        let g = star(3);
        let x = [1.0, 1.0, 0.0, 0.0];
        let r = offline_concentration_check(&g, 3.0, &x, 1000, &[0.1, 0.5], 1).unwrap();
        assert!(r.rows.iter().all(|row| row.exceedance == 0.0));
        assert!(r.pass);
    }

    #[test]
    fn zero_epsilon_bound_is_vacuous() {
        assert_eq!(offline_bound(0.0, 1.0, 3.0, 1.0, 6), 1.0);
    }

    #[test]
    fn star_grid_passes() {
        let g = star(3);
        let x = [1.0, 1.0, 0.0, 0.0];
        let r = offline_concentration_check(&g, 1.0, &x, 10_000, &[0.5, 1.0, 2.0], 3).unwrap();
        assert_eq!(r.influenced_pairs, 6);
        assert!(r.pass, "{r:?}");
    }
}
