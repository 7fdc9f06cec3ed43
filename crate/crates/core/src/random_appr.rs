//! Push solver with online neighbor subsampling and periodic dual
//! correction.
//!
//! Each push at a node with more than `q_bar` neighbors spreads residual only
//! to a sampled subset, reweighted by inverse inclusion probabilities. Every
//! `correction_period` epochs the current primal is folded into an
//! accumulator, the residual is re-estimated from it, and the solver restarts
//! on the residual system.

use serde::{Deserialize, Serialize};

use crate::appr::{gradient_residual_l2, residual_exact, seed_rhs, ApprParams, ApprState, PushObserver, DEFAULT_PUSH_CAP};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::keyed_rng;
use crate::sampler::{draw, importance, SamplerConfig};
use crate::sparse::SparseVector;

const PUSH_STREAM: u64 = 0x5055_5348;
const CORRECT_STREAM: u64 = 0x4445_4249;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomApprConfig {
    pub sampler: SamplerConfig,
    /// Threshold deflation: a node is active when `|z_k| >= c * d_k * epsilon`.
    pub c: f64,
    /// Push epochs between dual corrections; 0 disables correction.
    pub correction_period: usize,
    /// The correction samples `ceil(q_factor * q_bar)` neighbors per node.
    pub correction_q_factor: f64,
    /// Pushes beyond this count abort the run with an error.
    pub push_cap: usize,
    /// Stop (successfully) once this many pushes have been made.
    pub push_budget: Option<usize>,
    pub max_epochs: Option<usize>,
    /// Record the exact residual of `x_bar + x` after every epoch.
    pub trace_exact: bool,
}

impl RandomApprConfig {
    pub fn new(sampler: SamplerConfig) -> Self {
        Self {
            sampler,
            c: 0.9,
            correction_period: 5,
            correction_q_factor: 8.0,
            push_cap: DEFAULT_PUSH_CAP,
            push_budget: None,
            max_epochs: None,
            trace_exact: false,
        }
    }

    /// Sampler used by the dual correction.
    pub fn correction_sampler(&self) -> SamplerConfig {
        let q = (self.correction_q_factor * self.sampler.q_bar as f64).ceil();
        SamplerConfig {
            q_bar: if q >= usize::MAX as f64 { usize::MAX } else { q as usize },
            ..self.sampler
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if !(self.correction_q_factor >= 1.0) {
            return Err(Error::validation(format!(
                "correction_q_factor must be at least 1, got {}",
                self.correction_q_factor
            )));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::validation(format!("c must lie in (0, 1], got {}", self.c)));
        }
        Ok(())
    }
}

/// Accumulated primal and corrected dual of the refinement loop.
#[derive(Clone, Debug, Default)]
pub struct RefinementState {
    pub x_bar: SparseVector,
    pub z_bar: SparseVector,
    pub epoch: usize,
    pub corrections: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Cumulative pushes at the end of the epoch.
    pub pushes: usize,
    pub nodes_queried: usize,
    /// Size of the active list the epoch started from.
    pub active: usize,
    /// Whether a dual correction ran right before this epoch.
    pub corrected: bool,
    /// `‖z‖_1` of the solver's maintained residual.
    pub l1_residual_maintained: f64,
    pub support_x: usize,
    /// `‖z_exact‖_1` of `x_bar + x`, if traced.
    pub l1_residual_exact: Option<f64>,
    /// `‖Q (x_bar + x) - b‖_2`, if traced.
    pub l2_residual_exact: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No node above the deflated threshold.
    Converged,
    /// Two consecutive corrections left `‖z_bar‖_1` unchanged.
    Stalled,
    PushBudget,
    EpochLimit,
}

#[derive(Clone, Debug)]
pub struct RandomApprOutput {
    /// `x_bar + x`.
    pub x: SparseVector,
    /// Maintained residual at exit.
    pub z: SparseVector,
    pub refinement: RefinementState,
    pub trace: Vec<EpochStats>,
    pub pushes: usize,
    pub nodes_queried: usize,
    pub stop: StopReason,
}

/// Neighbors of `u` that receive residual in one push, as `(v, A_uv / p_v)`.
/// Also reports whether the list was subsampled.
pub(crate) fn push_targets(
    g: &Graph,
    u: usize,
    cfg: &SamplerConfig,
    keys: &[u64],
    scratch: &mut Vec<f64>,
) -> Option<Vec<(usize, f64)>> {
    let k = g.neighbor_count(u);
    if !cfg.subsamples(k) {
        return None;
    }
    let ids = g.neighbor_ids(u);
    let ws = g.neighbor_weights(u);
    scratch.clear();
    scratch.extend((0..k).map(|i| importance(cfg.weighting, g, ids[i], ws[i])));
    let mut rng = keyed_rng(cfg.rng_seed, keys);
    Some(
        draw(scratch, cfg, &mut rng)
            .into_iter()
            .map(|(i, p)| (ids[i], ws[i] / p))
            .collect(),
    )
}

/// One push at `u` whose neighbor update is subsampled when `u` has more
/// than `q_bar` neighbors. Returns true when subsampling happened.
pub fn sampled_push(
    g: &Graph,
    state: &mut ApprState,
    u: usize,
    params: &ApprParams,
    cfg: &SamplerConfig,
    keys: &[u64],
) -> bool {
    let mut scratch = Vec::new();
    sampled_push_with(g, state, u, params, cfg, keys, &mut scratch)
}

fn sampled_push_with(
    g: &Graph,
    state: &mut ApprState,
    u: usize,
    params: &ApprParams,
    cfg: &SamplerConfig,
    keys: &[u64],
    scratch: &mut Vec<f64>,
) -> bool {
    match push_targets(g, u, cfg, keys, scratch) {
        None => {
            state.push(g, u, params);
            false
        }
        Some(targets) => {
            let (zu, spread) = state.begin_push(g, u, params.alpha);
            for &(v, w_over_p) in &targets {
                state.spread_to(g, v, spread * w_over_p);
            }
            state.finish_push(g, u, zu, params.alpha, targets.len());
            true
        }
    }
}

/// Pushes every node of `active` in order, skipping nodes that dropped below
/// threshold before their turn. `epoch` and the state's push counter key the
/// random streams. Returns the number of subsampled pushes.
pub fn push_appr(
    g: &Graph,
    state: &mut ApprState,
    active: &[usize],
    params: &ApprParams,
    cfg: &SamplerConfig,
    epoch: usize,
) -> usize {
    let mut scratch = Vec::new();
    let mut sampled = 0;
    for &u in active {
        if !state.is_active(g, u, state.z().get(u)) {
            continue;
        }
        let keys = [PUSH_STREAM, epoch as u64, state.push_count() as u64, u as u64];
        if sampled_push_with(g, state, u, params, cfg, &keys, &mut scratch) {
            sampled += 1;
        }
    }
    sampled
}

/// Unbiased estimate of `(1+alpha)/(2 alpha) D^{1/2} Q x`.
///
/// The diagonal part is exact; the off-diagonal part subsamples the
/// neighbors of every `u` in the support of `x` (processed in ascending id
/// order, `q_bar` nodes per batch) and reweights by `1 / p`. `round` keys the
/// random streams. Also returns the number of neighbor touches.
pub fn dual_correct(
    g: &Graph,
    x: &SparseVector,
    cfg: &SamplerConfig,
    params: &ApprParams,
    round: u64,
) -> Result<(SparseVector, usize)> {
    cfg.validate()?;
    let support = x.support();
    if support.is_empty() {
        return Err(Error::validation("dual correction needs a nonempty primal"));
    }
    let mut support = support;
    support.sort_unstable();
    let diag = params.z_scale();
    let off = (1.0 - params.alpha) / (2.0 * params.alpha);
    let mut z = SparseVector::new();
    let mut queried = 0;
    let mut scratch = Vec::new();
    for (batch, chunk) in support.chunks(cfg.q_bar).enumerate() {
        for &u in chunk {
            g.check_active_node(u)?;
            let xu = x.get(u);
            z.add(u, diag * g.degree(u).sqrt() * xu);
            let share = off * xu / g.degree(u).sqrt();
            let keys = [CORRECT_STREAM, round, batch as u64, u as u64];
            match push_targets(g, u, cfg, &keys, &mut scratch) {
                None => {
                    for (v, w) in g.neighbors(u) {
                        z.add(v, -share * w);
                    }
                    queried += g.neighbor_count(u);
                }
                Some(targets) => {
                    for &(v, w_over_p) in &targets {
                        z.add(v, -share * w_over_p);
                    }
                    queried += targets.len();
                }
            }
        }
    }
    Ok((z, queried))
}

/// Runs the subsampled solver from seed `s`.
pub fn random_appr(g: &Graph, s: usize, params: &ApprParams, cfg: &RandomApprConfig) -> Result<RandomApprOutput> {
    random_appr_with(g, s, params, cfg, &mut ())
}

pub fn random_appr_with(
    g: &Graph,
    s: usize,
    params: &ApprParams,
    cfg: &RandomApprConfig,
    observer: &mut impl PushObserver,
) -> Result<RandomApprOutput> {
    params.validate()?;
    cfg.validate()?;
    let b = seed_rhs(g, s, params.alpha)?;
    let threshold = cfg.c * params.epsilon;
    let mut state = ApprState::seeded(g, s, threshold)?;
    let mut refine = RefinementState {
        z_bar: SparseVector::unit(s),
        ..Default::default()
    };
    let mut trace = Vec::new();
    let mut epochs_since_correction = 0;
    let mut sampled_since_correction = 0;
    let mut last_corrected_l1: Option<f64> = None;
    let mut unchanged_corrections = 0;
    let mut nodes_queried_base = 0;
    let mut pushes_base = 0;
    let mut scratch = Vec::new();

    let stop = loop {
        let mut corrected = false;
        if cfg.correction_period > 0
            && epochs_since_correction >= cfg.correction_period
            && sampled_since_correction > 0
            && state.x().support_size() > 0
        {
            let (z_tilde, queried) = dual_correct(g, state.x(), &cfg.correction_sampler(), params, refine.corrections as u64)?;
            refine.z_bar.axpy(-1.0, &z_tilde);
            refine.x_bar.axpy(1.0, state.x());
            refine.corrections += 1;
            corrected = true;
            pushes_base += state.push_count();
            nodes_queried_base += state.nodes_queried() + queried;
            state = ApprState::with_residual(g, refine.z_bar.clone(), threshold);
            epochs_since_correction = 0;
            sampled_since_correction = 0;

            let l1 = refine.z_bar.l1_norm();
            if let Some(prev) = last_corrected_l1 {
                if (l1 - prev).abs() <= 1e-12 {
                    unchanged_corrections += 1;
                } else {
                    unchanged_corrections = 0;
                }
            }
            last_corrected_l1 = Some(l1);
            if unchanged_corrections >= 1 {
                log::warn!("residual unchanged across consecutive corrections; stopping");
                break StopReason::Stalled;
            }
        }

        let active = state.queue_snapshot();
        if active.is_empty() {
            break StopReason::Converged;
        }
        if cfg.max_epochs.is_some_and(|m| refine.epoch >= m) {
            break StopReason::EpochLimit;
        }
        let mut budget_hit = false;
        for _ in 0..active.len() {
            let Some(u) = state.pop_active(g) else { break };
            let total = pushes_base + state.push_count();
            if cfg.push_budget.is_some_and(|b| total >= b) {
                budget_hit = true;
                break;
            }
            if total >= cfg.push_cap {
                return Err(Error::PushCapExceeded {
                    cap: cfg.push_cap,
                    pushes: total,
                    context: format!(
                        "epoch {}, corrections {}, |z_bar|_1 {:.3e}",
                        refine.epoch,
                        refine.corrections,
                        refine.z_bar.l1_norm()
                    ),
                });
            }
            let keys = [PUSH_STREAM, refine.epoch as u64, total as u64, u as u64];
            if sampled_push_with(g, &mut state, u, params, &cfg.sampler, &keys, &mut scratch) {
                sampled_since_correction += 1;
            }
            let mut view = state.view(u, Some(&refine.x_bar));
            view.push_count += pushes_base;
            view.nodes_queried += nodes_queried_base;
            observer.after_push(&view);
        }
        let mut stats = EpochStats {
            epoch: refine.epoch,
            pushes: pushes_base + state.push_count(),
            nodes_queried: nodes_queried_base + state.nodes_queried(),
            active: active.len(),
            corrected,
            l1_residual_maintained: state.z().l1_norm(),
            support_x: 0,
            l1_residual_exact: None,
            l2_residual_exact: None,
        };
        let mut total_x = refine.x_bar.clone();
        total_x.axpy(1.0, state.x());
        stats.support_x = total_x.support_size();
        if cfg.trace_exact {
            stats.l1_residual_exact = Some(residual_exact(g, &total_x, &b, params).l1_norm());
            stats.l2_residual_exact = Some(gradient_residual_l2(g, &total_x, &b, params.beta()));
        }
        trace.push(stats);
        refine.epoch += 1;
        epochs_since_correction += 1;
        if budget_hit {
            break StopReason::PushBudget;
        }
    };

    let pushes = pushes_base + state.push_count();
    let nodes_queried = nodes_queried_base + state.nodes_queried();
    let (x, z) = state.into_parts();
    let mut total = refine.x_bar.clone();
    total.axpy(1.0, &x);
    Ok(RandomApprOutput {
        x: total,
        z,
        refinement: refine,
        trace,
        pushes,
        nodes_queried,
        stop,
    })
}
