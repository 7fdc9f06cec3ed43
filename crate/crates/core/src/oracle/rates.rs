//! Convergence-rate checks: gradient-norm traces against dense `Q`, noise
//! diagnostics of the subsampled push, and linear-rate fits.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dense::{check_cap, dense_q, DEFAULT_DENSE_CAP};
use super::sampling::bernoulli_subgauss_constant;
use crate::appr::{residual_exact, seed_rhs, ApprParams, ApprState, PushObserver, PushView};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::random_appr::{dual_correct, push_targets, random_appr_with, sampled_push, RandomApprConfig};
use crate::rng::mix;
use crate::sampler::{importance, inclusion_probabilities, SamplerConfig};
use crate::sparse::SparseVector;

/// Observer that stores the full primal iterate every `every` pushes.
#[derive(Clone, Debug)]
pub struct CheckpointRecorder {
    pub every: usize,
    pub points: Vec<(usize, SparseVector)>,
}

impl CheckpointRecorder {
    pub fn new(every: usize) -> Self {
        Self {
            every: every.max(1),
            points: Vec::new(),
        }
    }
}

impl PushObserver for CheckpointRecorder {
    fn after_push(&mut self, view: &PushView<'_>) {
        if view.push_count % self.every == 0 {
            self.points.push((view.push_count, view.total_x()));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientPoint {
    pub pushes: usize,
    /// `‖Q x - b‖_2^2`.
    pub grad_sq: f64,
    pub running_min: f64,
}

/// Squared gradient norms of `f(x) = x^T Q x / 2 - b^T x` at each checkpoint,
/// evaluated with a dense `Q`.
pub fn gradient_norm_trace(
    g: &Graph,
    checkpoints: &[(usize, SparseVector)],
    b: &SparseVector,
    params: &ApprParams,
) -> Result<Vec<GradientPoint>> {
    let n = g.node_count();
    check_cap(n, DEFAULT_DENSE_CAP, "gradient traces need full snapshots")?;
    let q = dense_q(g, params.beta());
    let bd = DVector::from_vec(b.to_dense(n));
    let mut best = f64::INFINITY;
    Ok(checkpoints
        .iter()
        .map(|(m, x)| {
            let r = &q * DVector::from_vec(x.to_dense(n)) - &bd;
            let grad_sq = r.norm_squared();
            best = best.min(grad_sq);
            GradientPoint {
                pushes: *m,
                grad_sq,
                running_min: best,
            }
        })
        .collect())
}

/// `1 / (alpha M) + alpha sigma_max^2 / 2`.
pub fn rate_bound(alpha: f64, pushes: usize, sigma_max: f64) -> f64 {
    1.0 / (alpha * pushes as f64) + alpha * sigma_max * sigma_max / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushNoise {
    pub epoch: usize,
    pub push: usize,
    pub node: usize,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticStats {
    /// Per-epoch largest coordinate standard deviation of the corrected
    /// residual estimate at the epoch start.
    pub sigma_t_hat: Vec<f64>,
    /// Per-push largest coordinate standard deviation of the residual update.
    pub sigma_ti_hat: Vec<PushNoise>,
    /// Running maximum of `‖z‖_inf` along the trajectory.
    pub r_hat: Vec<f64>,
    pub sigma_max_hat: f64,
    /// Smallest inclusion probability used by any subsampled push.
    pub p_min: f64,
    /// `S(p_min) / p_min^2`.
    pub bound_push: f64,
    /// `S(p_min) / p_min^2 * |supp(x*)|`.
    pub bound_epoch: f64,
}

fn max_coord_std(samples: &[SparseVector]) -> f64 {
    let n = samples.len() as f64;
    let mut keys: Vec<usize> = samples.iter().flat_map(|s| s.keys()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.iter()
        .map(|&k| {
            let mean = samples.iter().map(|s| s.get(k)).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s.get(k) - mean).powi(2)).sum::<f64>() / (n - 1.0);
            var.sqrt()
        })
        .fold(0.0, f64::max)
}

/// Estimates noise levels along one subsampled trajectory from `s`.
///
/// The trajectory runs FIFO epochs of subsampled pushes (no correction) for
/// at most `max_pushes` pushes. At each epoch start the corrected residual
/// estimate is redrawn `replicates` times; before each push the neighbor
/// update is redrawn `replicates` times. Sample standard deviations serve as
/// subgaussian-scale proxies.
pub fn estimate_diagnostics(
    g: &Graph,
    s: usize,
    params: &ApprParams,
    cfg: &RandomApprConfig,
    replicates: usize,
    max_pushes: usize,
) -> Result<DiagnosticStats> {
    if replicates < 30 {
        return Err(Error::validation(format!("need at least 30 replicates, got {replicates}")));
    }
    params.validate()?;
    cfg.validate()?;
    let sc = cfg.sampler;
    let mut state = ApprState::seeded(g, s, cfg.c * params.epsilon)?;
    let mut stats = DiagnosticStats {
        sigma_t_hat: Vec::new(),
        sigma_ti_hat: Vec::new(),
        r_hat: vec![1.0],
        sigma_max_hat: 0.0,
        p_min: 1.0,
        bound_push: 0.0,
        bound_epoch: 0.0,
    };
    let mut epoch = 0;
    let mut scratch = Vec::new();
    'outer: loop {
        let active = state.queue_snapshot();
        if active.is_empty() {
            break;
        }
        let x = state.x().clone();
        let sigma_t = if x.support_size() == 0 {
            0.0
        } else {
            let draws: Vec<SparseVector> = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let rc = SamplerConfig {
                        rng_seed: mix(sc.rng_seed, &[0xD1A6, epoch as u64, r as u64]),
                        ..sc
                    };
                    dual_correct(g, &x, &rc, params, 0).map(|(z, _)| z)
                })
                .collect::<Result<_>>()?;
            max_coord_std(&draws)
        };
        stats.sigma_t_hat.push(sigma_t);
        for (i, _) in active.iter().enumerate() {
            if state.push_count() >= max_pushes {
                break 'outer;
            }
            let Some(u) = state.pop_active(g) else { break };
            let zu = state.z().get(u);
            let spread = (1.0 - params.alpha) * zu / (2.0 * g.degree(u));
            let k = g.neighbor_count(u);
            if sc.subsamples(k) {
                let pi: Vec<f64> = g
                    .neighbors(u)
                    .map(|(v, w)| importance(sc.weighting, g, v, w))
                    .collect();
                let pm = inclusion_probabilities(&pi, &sc).into_iter().fold(1.0, f64::min);
                stats.p_min = stats.p_min.min(pm);
                let draws: Vec<SparseVector> = (0..replicates as u64)
                    .map(|r| {
                        push_targets(g, u, &sc, &[0xD1A7, epoch as u64, i as u64, r], &mut scratch)
                            .unwrap_or_default()
                            .into_iter()
                            .map(|(v, wp)| (v, spread * wp))
                            .collect()
                    })
                    .collect();
                stats.sigma_ti_hat.push(PushNoise {
                    epoch,
                    push: state.push_count(),
                    node: u,
                    sigma: max_coord_std(&draws),
                });
            } else {
                stats.sigma_ti_hat.push(PushNoise {
                    epoch,
                    push: state.push_count(),
                    node: u,
                    sigma: 0.0,
                });
            }
            let keys = [0xD1A8, epoch as u64, state.push_count() as u64, u as u64];
            sampled_push(g, &mut state, u, params, &sc, &keys);
            let last = *stats.r_hat.last().unwrap();
            stats.r_hat.push(last.max(state.z().linf_norm()));
        }
        epoch += 1;
    }
    stats.sigma_max_hat = stats
        .sigma_t_hat
        .iter()
        .copied()
        .chain(stats.sigma_ti_hat.iter().map(|p| p.sigma))
        .fold(0.0, f64::max);
    let comp = g.components();
    let support_star = comp.iter().filter(|&&c| c == comp[s]).count();
    stats.bound_push = bernoulli_subgauss_constant(stats.p_min)? / (stats.p_min * stats.p_min);
    stats.bound_epoch = stats.bound_push * support_star as f64;
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRateReport {
    /// `(M, ‖z_exact(mean x)‖_1)` at common checkpoints, starting at `M = 0`.
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_hat: f64,
    /// `-0.5 alpha eps / r_hat`.
    pub required_slope: f64,
    pub pass: bool,
}

struct RateRecorder {
    every: usize,
    points: Vec<SparseVector>,
    r_hat: f64,
}

impl PushObserver for RateRecorder {
    fn after_push(&mut self, view: &PushView<'_>) {
        self.r_hat = self.r_hat.max(view.z.linf_norm());
        if view.push_count % self.every == 0 {
            self.points.push(view.total_x());
        }
    }
}

/// Ordinary least squares `y = a + b t`; returns `(b, a)`.
pub fn ols(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mt)
}

/// Runs `replicates` subsampled solves, averages the primal iterate at every
/// `every`-th push (while all replicates are still running), and fits a line
/// to the log of the exact residual norm of the average.
pub fn linear_rate_fit(
    g: &Graph,
    s: usize,
    params: &ApprParams,
    cfg: &RandomApprConfig,
    replicates: usize,
    every: usize,
) -> Result<LinearRateReport> {
    if replicates == 0 {
        return Err(Error::validation("need at least one replicate"));
    }
    let runs: Vec<RateRecorder> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut c = *cfg;
            c.sampler.rng_seed = mix(cfg.sampler.rng_seed, &[r as u64]);
            let mut rec = RateRecorder {
                every: every.max(1),
                points: Vec::new(),
                r_hat: 1.0,
            };
            random_appr_with(g, s, params, &c, &mut rec)?;
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    let common = runs.iter().map(|r| r.points.len()).min().unwrap_or(0);
    if common < 2 {
        return Err(Error::validation("too few common checkpoints for a fit"));
    }
    let b = seed_rhs(g, s, params.alpha)?;
    let mut points = vec![(0, 1.0)];
    for k in 0..common {
        let mut mean = SparseVector::new();
        for run in &runs {
            mean.axpy(1.0 / replicates as f64, &run.points[k]);
        }
        points.push(((k + 1) * every.max(1), residual_exact(g, &mean, &b, params).l1_norm()));
    }
    let t: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = ols(&t, &y);
    let r_hat = runs.iter().map(|r| r.r_hat).fold(0.0, f64::max);
    let required = -0.5 * params.alpha * params.epsilon / r_hat;
    Ok(LinearRateReport {
        points,
        slope,
        intercept,
        r_hat,
        required_slope: required,
        pass: slope <= required,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appr::{appr_solve, appr_solve_with, SolveOptions};
    use crate::fixtures::{path, star};
    use crate::oracle::dense::dense_solve;
    use crate::sampler::Weighting;

    #[test]
    fn gradient_zero_at_optimum_and_b_at_origin() {
        let g = path(3);
        let p = ApprParams::new(0.5, 1e-6).unwrap();
        let b = seed_rhs(&g, 1, p.alpha).unwrap();
        let xs = dense_solve(&g, &b.to_dense(3), &p).unwrap();
        let pts = vec![(0, SparseVector::new()), (1, SparseVector::from_dense(&xs))];
        let tr = gradient_norm_trace(&g, &pts, &b, &p).unwrap();
        assert!((tr[0].grad_sq - b.l2_norm().powi(2)).abs() < 1e-15);
        assert!(tr[1].grad_sq < 1e-25);
    }

    #[test]
    fn deterministic_path_running_min_decreases() {
        let g = path(3);
        let p = ApprParams::new(0.5, 1e-8).unwrap();
        let mut rec = CheckpointRecorder::new(1);
        let out = appr_solve_with(&g, 1, &p, SolveOptions::default(), &mut rec).unwrap();
        assert_eq!(rec.points.len(), out.pushes);
        let b = seed_rhs(&g, 1, p.alpha).unwrap();
        let tr = gradient_norm_trace(&g, &rec.points, &b, &p).unwrap();
        for w in tr.windows(2) {
            assert!(w[1].running_min < w[0].running_min);
        }
    }

    #[test]
    fn diagnostics_without_subsampling_are_zero() {
        let g = star(3);
        let p = ApprParams::new(0.3, 1e-3).unwrap();
        let cfg = RandomApprConfig::new(SamplerConfig::new(3, Weighting::Uniform, 1).unwrap());
        let d = estimate_diagnostics(&g, 0, &p, &cfg, 30, 10_000).unwrap();
        assert!(d.sigma_max_hat < 1e-12);
        assert!(d.r_hat.windows(2).all(|w| w[1] >= w[0]));
        assert!(d.r_hat.iter().all(|&r| r <= 1.0));
        assert!(estimate_diagnostics(&g, 0, &p, &cfg, 10, 100).is_err());
    }

    #[test]
    fn star_noise_below_analytic_bounds() {
        let g = star(3);
        let p = ApprParams::new(0.3, 1e-3).unwrap();
        let cfg = RandomApprConfig::new(SamplerConfig::new(1, Weighting::Uniform, 5).unwrap());
        let d = estimate_diagnostics(&g, 0, &p, &cfg, 1000, 10_000).unwrap();
        assert!((d.p_min - 1.0 / 3.0).abs() < 1e-15);
        assert!(d.sigma_max_hat > 0.0);
        for pn in &d.sigma_ti_hat {
            assert!(pn.sigma.powi(2) <= d.bound_push);
        }
        for &st in &d.sigma_t_hat {
            assert!(st.powi(2) <= d.bound_epoch);
        }
    }

    #[test]
    fn ols_recovers_line() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = t.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (b, a) = ols(&t, &y);
        assert!((b + 0.5).abs() < 1e-15 && (a - 2.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_linear_rate() {
        let g = crate::fixtures::power_law(100, 2.5, 4.0, 1);
        let p = ApprParams::new(0.2, 1e-4).unwrap();
        let q = g.max_neighbor_count();
        let cfg = RandomApprConfig::new(SamplerConfig::new(q, Weighting::Uniform, 0).unwrap());
        let rep = linear_rate_fit(&g, 0, &p, &cfg, 2, 10).unwrap();
        assert!(rep.pass, "{rep:?}");
        let det = appr_solve(&g, 0, &ApprParams::new(0.2, 0.9e-4).unwrap()).unwrap();
        assert!(rep.points.last().unwrap().0 <= det.pushes);
    }
}
