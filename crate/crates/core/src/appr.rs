//! Deterministic local push solver for the symmetrized PageRank system
//! `Q x = b`, `Q = I - beta D^{-1/2} A D^{-1/2}`, `beta = (1 - alpha) / (1 + alpha)`.
//!
//! The solver keeps the scaled residual `z = (1+alpha)/(2 alpha) D^{1/2} (b - Q x)`
//! and pushes from any node with `|z_u| >= d_u * epsilon`.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{q_apply, Graph};
use crate::sparse::SparseVector;

/// Default ceiling on the number of pushes in one solve.
pub const DEFAULT_PUSH_CAP: usize = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApprParams {
    pub alpha: f64,
    pub epsilon: f64,
}

impl ApprParams {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        let p = Self { alpha, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::validation(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        (1.0 - self.alpha) / (1.0 + self.alpha)
    }

    /// The teleportation parameter whose discount equals `beta`.
    pub fn alpha_for_beta(beta: f64) -> f64 {
        (1.0 - beta) / (1.0 + beta)
    }

    /// `(1 + alpha) / (2 alpha)`, the factor between `D^{1/2}(b - Qx)` and `z`.
    #[inline]
    pub fn z_scale(&self) -> f64 {
        (1.0 + self.alpha) / (2.0 * self.alpha)
    }
}

/// Right-hand side `b = 2 alpha / (1 + alpha) D^{-1/2} e_s` of the seeded system.
pub fn seed_rhs(g: &Graph, s: usize, alpha: f64) -> Result<SparseVector> {
    g.check_active_node(s)?;
    let mut b = SparseVector::new();
    b.set(s, 2.0 * alpha / (1.0 + alpha) / g.degree(s).sqrt());
    Ok(b)
}

/// Snapshot handed to a [`PushObserver`] after every push.
pub struct PushView<'a> {
    /// Total pushes so far, including this one.
    pub push_count: usize,
    pub node: usize,
    pub x: &'a SparseVector,
    pub z: &'a SparseVector,
    /// Accumulated primal of earlier refinement rounds, if any.
    pub x_bar: Option<&'a SparseVector>,
    pub nodes_queried: usize,
}

impl PushView<'_> {
    /// Full primal iterate `x_bar + x`.
    pub fn total_x(&self) -> SparseVector {
        let mut t = self.x.clone();
        if let Some(xb) = self.x_bar {
            t.axpy(1.0, xb);
        }
        t
    }
}

pub trait PushObserver {
    fn after_push(&mut self, view: &PushView<'_>);
}

impl PushObserver for () {
    fn after_push(&mut self, _: &PushView<'_>) {}
}

impl<F: FnMut(&PushView<'_>)> PushObserver for F {
    fn after_push(&mut self, view: &PushView<'_>) {
        self(view)
    }
}

/// Mutable state of a push solver: primal `x`, scaled residual `z`, and the
/// FIFO queue of nodes that were above threshold when last touched.
#[derive(Clone, Debug)]
pub struct ApprState {
    x: SparseVector,
    z: SparseVector,
    queue: VecDeque<usize>,
    queued: HashSet<usize>,
    threshold: f64,
    push_count: usize,
    nodes_queried: usize,
}

impl ApprState {
    /// State with `x = 0` and the given residual; every node with
    /// `|z_v| >= d_v * threshold` is queued in ascending id order.
    pub fn with_residual(g: &Graph, z: SparseVector, threshold: f64) -> Self {
        let mut s = Self {
            x: SparseVector::new(),
            z,
            queue: VecDeque::new(),
            queued: HashSet::new(),
            threshold,
            push_count: 0,
            nodes_queried: 0,
        };
        s.rebuild_queue(g);
        s
    }

    /// State of the seeded system: `x = 0`, `z = e_s`.
    pub fn seeded(g: &Graph, s: usize, threshold: f64) -> Result<Self> {
        g.check_active_node(s)?;
        Ok(Self::with_residual(g, SparseVector::unit(s), threshold))
    }

    pub fn x(&self) -> &SparseVector {
        &self.x
    }

    pub fn z(&self) -> &SparseVector {
        &self.z
    }

    pub fn push_count(&self) -> usize {
        self.push_count
    }

    pub fn nodes_queried(&self) -> usize {
        self.nodes_queried
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Unscaled residual `r = 2 alpha / (1 + alpha) D^{-1/2} z`.
    pub fn r(&self, g: &Graph, alpha: f64) -> SparseVector {
        let k = 2.0 * alpha / (1.0 + alpha);
        self.z
            .iter()
            .map(|(v, zv)| (v, k * zv / g.degree(v).sqrt()))
            .collect()
    }

    /// PageRank-scale vector `pi = D x`.
    pub fn pi(&self, g: &Graph) -> SparseVector {
        self.x.iter().map(|(v, xv)| (v, g.degree(v) * xv)).collect()
    }

    pub fn into_parts(self) -> (SparseVector, SparseVector) {
        (self.x, self.z)
    }

    #[inline]
    pub(crate) fn is_active(&self, g: &Graph, v: usize, zv: f64) -> bool {
        let d = g.degree(v);
        d > 0.0 && zv != 0.0 && zv.abs() >= d * self.threshold
    }

    #[inline]
    fn enqueue_if_active(&mut self, g: &Graph, v: usize, zv: f64) {
        if self.is_active(g, v, zv) && self.queued.insert(v) {
            self.queue.push_back(v);
        }
    }

    /// Clears the queue and re-queues every active node in ascending id order.
    pub(crate) fn rebuild_queue(&mut self, g: &Graph) {
        self.queue.clear();
        self.queued.clear();
        for (v, zv) in self.z.sorted() {
            self.enqueue_if_active(g, v, zv);
        }
    }

    /// Pops queued nodes until one is still above threshold.
    pub fn pop_active(&mut self, g: &Graph) -> Option<usize> {
        while let Some(u) = self.queue.pop_front() {
            self.queued.remove(&u);
            if self.is_active(g, u, self.z.get(u)) {
                return Some(u);
            }
        }
        None
    }

    /// Snapshot of the queue contents in FIFO order.
    pub(crate) fn queue_snapshot(&self) -> Vec<usize> {
        self.queue.iter().copied().collect()
    }

    /// First half of a push: moves `alpha z_u / sqrt(d_u)` into `x_u` and
    /// returns `(z_u, (1 - alpha) z_u / (2 d_u))`, the per-unit-weight share
    /// that each neighbor receives.
    #[inline]
    pub(crate) fn begin_push(&mut self, g: &Graph, u: usize, alpha: f64) -> (f64, f64) {
        let zu = self.z.get(u);
        let du = g.degree(u);
        self.x.add(u, alpha * zu / du.sqrt());
        (zu, (1.0 - alpha) * zu / (2.0 * du))
    }

    #[inline]
    pub(crate) fn spread_to(&mut self, g: &Graph, v: usize, amount: f64) {
        let zv = self.z.add(v, amount);
        self.enqueue_if_active(g, v, zv);
    }

    /// Second half of a push: shrinks `z_u` and re-queues `u` if needed.
    #[inline]
    pub(crate) fn finish_push(&mut self, g: &Graph, u: usize, zu: f64, alpha: f64, queried: usize) {
        let zu_new = (1.0 - alpha) * zu / 2.0;
        self.z.set(u, zu_new);
        self.push_count += 1;
        self.nodes_queried += queried;
        self.enqueue_if_active(g, u, zu_new);
    }

    /// One deterministic push at `u`.
    pub fn push(&mut self, g: &Graph, u: usize, params: &ApprParams) {
        let (zu, spread) = self.begin_push(g, u, params.alpha);
        for (v, w) in g.neighbors(u) {
            self.spread_to(g, v, spread * w);
        }
        self.finish_push(g, u, zu, params.alpha, g.neighbor_count(u));
    }

    pub(crate) fn view<'a>(&'a self, u: usize, x_bar: Option<&'a SparseVector>) -> PushView<'a> {
        PushView {
            push_count: self.push_count,
            node: u,
            x: &self.x,
            z: &self.z,
            x_bar,
            nodes_queried: self.nodes_queried,
        }
    }
}

/// Result of a push solve.
#[derive(Clone, Debug)]
pub struct ApprOutput {
    pub x: SparseVector,
    pub z: SparseVector,
    pub pushes: usize,
    pub nodes_queried: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub push_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            push_cap: DEFAULT_PUSH_CAP,
        }
    }
}

/// Runs FIFO pushes from `s` until `|z_v| < d_v * epsilon` everywhere.
pub fn appr_solve(g: &Graph, s: usize, params: &ApprParams) -> Result<ApprOutput> {
    appr_solve_with(g, s, params, SolveOptions::default(), &mut ())
}

pub fn appr_solve_with(
    g: &Graph,
    s: usize,
    params: &ApprParams,
    opts: SolveOptions,
    observer: &mut impl PushObserver,
) -> Result<ApprOutput> {
    params.validate()?;
    let state = ApprState::seeded(g, s, params.epsilon)?;
    run(g, state, params, opts, observer)
}

/// Solves `Q x = b` for a nonnegative sparse `b` supported on non-isolated nodes.
pub fn appr_solve_rhs(g: &Graph, b: &SparseVector, params: &ApprParams) -> Result<ApprOutput> {
    appr_solve_rhs_with(g, b, params, SolveOptions::default(), &mut ())
}

pub fn appr_solve_rhs_with(
    g: &Graph,
    b: &SparseVector,
    params: &ApprParams,
    opts: SolveOptions,
    observer: &mut impl PushObserver,
) -> Result<ApprOutput> {
    params.validate()?;
    let z0 = rhs_to_residual(g, b, params)?;
    let state = ApprState::with_residual(g, z0, params.epsilon);
    run(g, state, params, opts, observer)
}

/// `z^{(0)} = (1+alpha)/(2 alpha) D^{1/2} b`, validating `b`.
pub(crate) fn rhs_to_residual(g: &Graph, b: &SparseVector, params: &ApprParams) -> Result<SparseVector> {
    let k = params.z_scale();
    let mut z = SparseVector::new();
    for (v, bv) in b.sorted() {
        if bv == 0.0 {
            continue;
        }
        g.check_active_node(v)?;
        if bv < 0.0 || !bv.is_finite() {
            return Err(Error::validation(format!(
                "right-hand side must be nonnegative and finite, got b[{v}] = {bv}"
            )));
        }
        z.set(v, k * g.degree(v).sqrt() * bv);
    }
    Ok(z)
}

fn run(
    g: &Graph,
    mut state: ApprState,
    params: &ApprParams,
    opts: SolveOptions,
    observer: &mut impl PushObserver,
) -> Result<ApprOutput> {
    while let Some(u) = state.pop_active(g) {
        if state.push_count >= opts.push_cap {
            return Err(Error::PushCapExceeded {
                cap: opts.push_cap,
                pushes: state.push_count,
                context: format!(
                    "alpha={}, epsilon={}, |supp x|={}, |z|_1={:.3e}",
                    params.alpha,
                    params.epsilon,
                    state.x.support_size(),
                    state.z.l1_norm()
                ),
            });
        }
        state.push(g, u, params);
        observer.after_push(&state.view(u, None));
    }
    let pushes = state.push_count;
    let nodes_queried = state.nodes_queried;
    let (x, z) = state.into_parts();
    Ok(ApprOutput {
        x,
        z,
        pushes,
        nodes_queried,
    })
}

/// Recomputes `z = (1+alpha)/(2 alpha) D^{1/2} (b - Q x)` from scratch.
pub fn residual_exact(g: &Graph, x: &SparseVector, b: &SparseVector, params: &ApprParams) -> SparseVector {
    let mut r = b.clone();
    r.axpy(-1.0, &q_apply(g, x, params.beta()));
    let k = params.z_scale();
    r.iter().map(|(v, rv)| (v, k * g.degree(v).sqrt() * rv)).collect()
}

/// `‖Q x - b‖_2` without the `z` scaling.
pub fn gradient_residual_l2(g: &Graph, x: &SparseVector, b: &SparseVector, beta: f64) -> f64 {
    let mut r = q_apply(g, x, beta);
    r.axpy(-1.0, b);
    r.l2_norm()
}

/// `‖D^{1/2} x‖_1`, the primal mass in conservation identities.
pub fn primal_mass(g: &Graph, x: &SparseVector) -> f64 {
    x.iter().map(|(v, xv)| g.degree(v).sqrt() * xv.abs()).sum()
}
