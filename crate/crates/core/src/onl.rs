//! Online node labeling: relaxation and regularization learners over the
//! kernel `(L/(2 gamma) + I/(2n))^{-1}`, neighborhood-vote baselines, and
//! regret accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian_quadratic, Graph, LabelSet};
use crate::kernel::{solve_columns, KernelSolver, ShiftedSystem};
use crate::rng::keyed_uniform;
use crate::sparse::SparseVector;

const PREDICT_STREAM: u64 = 0x0A1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OnlMethod {
    Relaxation,
    Regularize,
    /// One-hop weighted majority vote.
    Wma,
    /// Discounted multi-hop vote.
    WmaStar { beta: f64, k_hops: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlConfig {
    /// Smoothness budget; `None` uses the measured smoothness of the labels.
    pub gamma: Option<f64>,
    pub method: OnlMethod,
    pub solver: KernelSolver,
    /// Regret constant `D`; `None` uses the number of classes.
    pub d_const: Option<f64>,
    /// Discount of the Laplacian `L = I - beta D^{-1/2} A D^{-1/2}`.
    pub beta: f64,
    pub seed: u64,
    /// Predict the argmax instead of sampling from the prediction distribution.
    pub argmax: bool,
}

impl OnlConfig {
    pub fn new(method: OnlMethod, solver: KernelSolver) -> Self {
        Self {
            gamma: None,
            method,
            solver,
            d_const: None,
            beta: 1.0,
            seed: 0,
            argmax: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    /// Visited nodes in order.
    pub order: Vec<usize>,
    pub predictions: Vec<usize>,
    pub truths: Vec<usize>,
    pub losses: Vec<u8>,
    pub cumulative_loss: Vec<usize>,
    /// Raw per-class scores at each step.
    pub scores: Vec<Vec<f64>>,
    /// Loss of the comparator; the zero comparator is used, so regret is
    /// reported as an upper bound.
    pub comparator_loss: f64,
    pub gamma: f64,
    /// `D sqrt(2 n^{1+rho})`.
    pub regret_bound: f64,
    /// `sqrt(tr(M))`, from the kernel diagonal (kernel methods only).
    pub trace_bound: Option<f64>,
    pub nodes_queried: usize,
}

impl RegretTrace {
    pub fn mistakes(&self) -> usize {
        self.cumulative_loss.last().copied().unwrap_or(0)
    }

    pub fn mistake_rate(&self) -> f64 {
        if self.losses.is_empty() {
            0.0
        } else {
            self.mistakes() as f64 / self.losses.len() as f64
        }
    }

    pub fn regret(&self) -> f64 {
        self.mistakes() as f64 - self.comparator_loss
    }
}

/// Projection onto the probability simplex: `max(0, z - tau)` with `tau`
/// chosen so the result sums to one. Returns the distribution and `tau`.
pub fn waterfill(z: &[f64]) -> Result<(Vec<f64>, f64)> {
    if z.is_empty() {
        return Err(Error::validation("waterfill needs at least one entry"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite score {z:?}")));
    }
    let mut s = z.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = s[0] - 1.0;
    for (k, &v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    Ok((z.iter().map(|v| (v - tau).max(0.0)).collect(), tau))
}

/// Index of the largest entry, smallest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn draw_class(p: &[f64], seed: u64, step: usize, use_argmax: bool) -> usize {
    if use_argmax {
        return argmax(p);
    }
    let u = keyed_uniform(seed, &[PREDICT_STREAM, step as u64]);
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            last = i;
            acc += pi;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// `tr(Y^T L Y)` for the one-hot label matrix `Y`.
pub fn smoothness(g: &Graph, labels: &LabelSet, beta: f64) -> Result<f64> {
    check_labels(g, labels)?;
    let mut total = 0.0;
    for c in 0..labels.classes() {
        let y: Vec<f64> = labels.as_slice().iter().map(|&l| f64::from(u8::from(l == c))).collect();
        total += laplacian_quadratic(g, &y, beta)?;
    }
    Ok(total)
}

/// `log(gamma) / log(n)`.
pub fn rho(n: usize, gamma: f64) -> f64 {
    gamma.ln() / (n as f64).ln()
}

/// `D sqrt(2 n^{1+rho})`, written as `D sqrt(2 n gamma)` so that it stays
/// defined at `n = 1`.
pub fn relaxation_regret_bound(n: usize, gamma: f64, d_const: f64) -> f64 {
    d_const * (2.0 * n as f64 * gamma).sqrt()
}

/// `D sqrt(2 n^{1+rho}) + sqrt(eps n / (1 - beta))`.
pub fn regret_bound_sparsified(n: usize, epsilon: f64, beta: f64, d_const: f64, rho: f64) -> Result<f64> {
    if beta >= 1.0 {
        return Err(Error::validation(format!("beta must be below 1, got {beta}")));
    }
    if epsilon < 0.0 {
        return Err(Error::validation(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let n = n as f64;
    Ok(d_const * (2.0 * n.powf(1.0 + rho)).sqrt() + (epsilon * n / (1.0 - beta)).sqrt())
}

/// Per-class revealed neighbor mass `e_t^T A D^{-1} y~`.
pub fn wma_scores(g: &Graph, revealed: &[Option<usize>], k: usize, t: usize) -> Result<Vec<f64>> {
    g.check_node(t)?;
    let mut s = vec![0.0; k];
    for (v, w) in g.neighbors(t) {
        if let Some(c) = revealed[v] {
            s[c] += w / g.degree(v);
        }
    }
    Ok(s)
}

/// Class with the largest revealed neighbor mass, smallest class on ties.
/// Isolated nodes get a seeded uniformly random class.
pub fn wma_predict(g: &Graph, revealed: &[Option<usize>], k: usize, t: usize, seed: u64) -> Result<usize> {
    if g.degree(t) == 0.0 {
        g.check_node(t)?;
        let u = keyed_uniform(seed, &[PREDICT_STREAM, t as u64]);
        return Ok(((u * k as f64) as usize).min(k - 1));
    }
    Ok(argmax(&wma_scores(g, revealed, k, t)?))
}

/// `beta^{-1} sum_{j=0}^{k_hops} e_t^T (beta A D^{-1})^j y~_c` for each class.
pub fn wma_star_scores(
    g: &Graph,
    revealed: &[Option<usize>],
    k: usize,
    t: usize,
    beta: f64,
    k_hops: usize,
) -> Result<Vec<f64>> {
    g.check_node(t)?;
    if k_hops == 0 {
        return Err(Error::validation("k_hops must be at least 1"));
    }
    if !(beta > 0.0) {
        return Err(Error::validation(format!("beta must be positive, got {beta}")));
    }
    let n = g.node_count();
    let mut out = vec![0.0; k];
    for (c, o) in out.iter_mut().enumerate() {
        let mut v: Vec<f64> = revealed.iter().map(|r| f64::from(u8::from(*r == Some(c)))).collect();
        let mut score = v[t];
        for _ in 0..k_hops {
            let mut next = vec![0.0; n];
            for (u, nu) in next.iter_mut().enumerate() {
                *nu = beta * g.neighbors(u).map(|(j, w)| w * v[j] / g.degree(j)).sum::<f64>();
            }
            v = next;
            score += v[t];
        }
        *o = score / beta;
    }
    Ok(out)
}

pub fn wma_star_predict(
    g: &Graph,
    revealed: &[Option<usize>],
    k: usize,
    t: usize,
    beta: f64,
    k_hops: usize,
) -> Result<usize> {
    Ok(argmax(&wma_star_scores(g, revealed, k, t, beta, k_hops)?))
}

fn check_labels(g: &Graph, labels: &LabelSet) -> Result<()> {
    if labels.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: labels.len(),
        });
    }
    Ok(())
}

fn check_order(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &t in order {
        if t >= n {
            return Err(Error::NodeOutOfRange { node: t, n });
        }
        if std::mem::replace(&mut seen[t], true) {
            return Err(Error::validation(format!("node {t} visited twice")));
        }
    }
    Ok(())
}

struct Setup {
    gamma: f64,
    d_const: f64,
    columns: Vec<SparseVector>,
    trace: f64,
    nodes_queried: usize,
}

fn setup(g: &Graph, labels: &LabelSet, cfg: &OnlConfig, order: &[usize], kernel: bool) -> Result<Setup> {
    check_labels(g, labels)?;
    check_order(g.node_count(), order)?;
    let gamma = match cfg.gamma {
        Some(v) => v,
        None => smoothness(g, labels, cfg.beta)?,
    };
    let d_const = cfg.d_const.unwrap_or(labels.classes() as f64);
    if !(d_const > 0.0) {
        return Err(Error::validation(format!("D must be positive, got {d_const}")));
    }
    let mut s = Setup {
        gamma,
        d_const,
        columns: Vec::new(),
        trace: 0.0,
        nodes_queried: 0,
    };
    if kernel {
        if !(gamma > 0.0) {
            return Err(Error::validation(format!(
                "gamma must be positive, got {gamma}; pass an explicit gamma for perfectly smooth labels"
            )));
        }
        let n = g.node_count();
        let sys = ShiftedSystem::onl(n, gamma, cfg.beta)?;
        let all: Vec<usize> = (0..n).collect();
        let cols = solve_columns(g, &sys, &all, &cfg.solver)?;
        s.trace = cols.columns.iter().enumerate().map(|(t, c)| c.get(t)).sum();
        s.columns = cols.columns;
        s.nodes_queried = cols.nodes_queried;
    }
    Ok(s)
}

/// `G M_{:,t}` from the stored columns of `G` and the sparse column `M_{:,t}`.
fn g_times_column(gm: &[Option<Vec<f64>>], col: &SparseVector, k: usize) -> Vec<f64> {
    let mut s = vec![0.0; k];
    for (j, m) in col.iter() {
        if let Some(gj) = &gm[j] {
            for (si, gi) in s.iter_mut().zip(gj) {
                *si += gi * m;
            }
        }
    }
    s
}

fn new_trace(order: &[usize], s: &Setup, n: usize, kernel: bool) -> RegretTrace {
    RegretTrace {
        order: order.to_vec(),
        predictions: Vec::with_capacity(order.len()),
        truths: Vec::with_capacity(order.len()),
        losses: Vec::with_capacity(order.len()),
        cumulative_loss: Vec::with_capacity(order.len()),
        scores: Vec::with_capacity(order.len()),
        comparator_loss: 0.0,
        gamma: s.gamma,
        regret_bound: relaxation_regret_bound(n, s.gamma, s.d_const),
        trace_bound: kernel.then(|| s.trace.max(0.0).sqrt()),
        nodes_queried: s.nodes_queried,
    }
}

fn record(tr: &mut RegretTrace, pred: usize, truth: usize, scores: Vec<f64>) {
    let loss = u8::from(pred != truth);
    let prev = tr.mistakes();
    tr.predictions.push(pred);
    tr.truths.push(truth);
    tr.losses.push(loss);
    tr.cumulative_loss.push(prev + loss as usize);
    tr.scores.push(scores);
}

/// Relaxation learner. Scores are `z_t = -2 G M_{:,t} / sqrt(a_t + D^2 tau_t)`,
/// the prediction distribution is `waterfill(z_t)`, and `G_{:,t}` stores the
/// surrogate gradient `p_t - e_{y_t}`.
pub fn relaxation_run(g: &Graph, labels: &LabelSet, cfg: &OnlConfig, order: &[usize]) -> Result<RegretTrace> {
    let s = setup(g, labels, cfg, order, true)?;
    let n = g.node_count();
    let k = labels.classes();
    let mut tr = new_trace(order, &s, n, true);
    let mut gm: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut a = 0.0;
    let mut tau = s.trace;
    let d2 = s.d_const * s.d_const;
    for (step, &t) in order.iter().enumerate() {
        let col = &s.columns[t];
        let gmt = g_times_column(&gm, col, k);
        let denom = a + d2 * tau;
        if !(denom > 0.0) {
            return Err(Error::Numerical(format!(
                "relaxation normalizer not positive at step {step} (node {t}): a = {a:e}, tau = {tau:e}, D = {}",
                s.d_const
            )));
        }
        let z: Vec<f64> = gmt.iter().map(|v| -2.0 * v / denom.sqrt()).collect();
        let (p, _) = waterfill(&z)?;
        let pred = draw_class(&p, cfg.seed, step, cfg.argmax);
        let y = labels.label(t);
        let mut grad = p;
        grad[y] -= 1.0;
        let mtt = col.get(t);
        let cross: f64 = grad.iter().zip(&gmt).map(|(x, y)| x * y).sum();
        let gnorm2: f64 = grad.iter().map(|x| x * x).sum();
        a += 2.0 * cross + mtt * gnorm2;
        tau -= mtt;
        gm[t] = Some(grad);
        record(&mut tr, pred, y, z);
    }
    Ok(tr)
}

/// Regularization learner. Scores are `z_t = -2 G M_{:,t}` with `G` holding
/// the revealed one-hot labels; predictions waterfill the negated scores so
/// that classes with more kernel mass win.
pub fn regularize_run(g: &Graph, labels: &LabelSet, cfg: &OnlConfig, order: &[usize]) -> Result<RegretTrace> {
    let s = setup(g, labels, cfg, order, true)?;
    let n = g.node_count();
    let k = labels.classes();
    let mut tr = new_trace(order, &s, n, true);
    let mut gm: Vec<Option<Vec<f64>>> = vec![None; n];
    for (step, &t) in order.iter().enumerate() {
        let gmt = g_times_column(&gm, &s.columns[t], k);
        let z: Vec<f64> = gmt.iter().map(|v| -2.0 * v).collect();
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let (p, _) = waterfill(&neg)?;
        let pred = draw_class(&p, cfg.seed, step, cfg.argmax);
        let y = labels.label(t);
        let mut onehot = vec![0.0; k];
        onehot[y] = 1.0;
        gm[t] = Some(onehot);
        record(&mut tr, pred, y, z);
    }
    Ok(tr)
}

fn vote_run(g: &Graph, labels: &LabelSet, cfg: &OnlConfig, order: &[usize]) -> Result<RegretTrace> {
    let s = setup(g, labels, cfg, order, false)?;
    let n = g.node_count();
    let k = labels.classes();
    let mut tr = new_trace(order, &s, n, false);
    let mut revealed = vec![None; n];
    for &t in order {
        let (pred, scores) = match cfg.method {
            OnlMethod::WmaStar { beta, k_hops } => {
                let sc = wma_star_scores(g, &revealed, k, t, beta, k_hops)?;
                (argmax(&sc), sc)
            }
            _ => (
                wma_predict(g, &revealed, k, t, cfg.seed)?,
                wma_scores(g, &revealed, k, t)?,
            ),
        };
        tr.nodes_queried += g.neighbor_count(t);
        let y = labels.label(t);
        revealed[t] = Some(y);
        record(&mut tr, pred, y, scores);
    }
    Ok(tr)
}

/// Runs the configured method over `order`.
pub fn onl_run(g: &Graph, labels: &LabelSet, cfg: &OnlConfig, order: &[usize]) -> Result<RegretTrace> {
    match cfg.method {
        OnlMethod::Relaxation => relaxation_run(g, labels, cfg, order),
        OnlMethod::Regularize => regularize_run(g, labels, cfg, order),
        OnlMethod::Wma | OnlMethod::WmaStar { .. } => vote_run(g, labels, cfg, order),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{barbell_k3, barbell_k3_labels, complete, edgeless, path, star};
    use crate::oracle::dense::dense_q;

    #[test]
    fn waterfill_examples() {
        let (p, tau) = waterfill(&[2.0, 0.0]).unwrap();
        assert_eq!((p, tau), (vec![1.0, 0.0], 1.0));
        let (p, tau) = waterfill(&[0.5, 0.5]).unwrap();
        assert_eq!((p, tau), (vec![0.5, 0.5], 0.0));
        let (p, tau) = waterfill(&[1.5, 0.5, 0.0]).unwrap();
        assert_eq!((p, tau), (vec![1.0, 0.0, 0.0], 0.5));
        let (p, _) = waterfill(&[-3.0, -3.0, -3.0]).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert!(waterfill(&[]).is_err());
    }

    #[test]
    fn wma_examples() {
        let g = star(3);
        let mut rev = vec![None; 4];
        rev[0] = Some(1);
        assert_eq!(wma_predict(&g, &rev, 2, 1, 0).unwrap(), 1);
        assert_eq!(wma_predict(&g, &vec![None; 4], 2, 0, 0).unwrap(), 0);
        let rev = vec![None, Some(1), Some(1), Some(0)];
        assert_eq!(wma_predict(&g, &rev, 2, 0, 0).unwrap(), 1);
        let e = edgeless(2);
        let a = wma_predict(&e, &[None, None], 2, 0, 7).unwrap();
        assert_eq!(a, wma_predict(&e, &[None, None], 2, 0, 7).unwrap());
    }

    #[test]
    fn wma_star_examples() {
        let g = path(5);
        let mut rev = vec![None; 5];
        rev[0] = Some(1);
        let s = wma_star_scores(&g, &rev, 2, 4, 0.5, 4).unwrap();
        assert!(s[1] > 0.0 && s[0] == 0.0);
        assert_eq!(wma_star_predict(&g, &rev, 2, 4, 0.5, 4).unwrap(), 1);
        // one hop agrees with the plain vote up to the factor
        let g = star(3);
        let rev = vec![None, Some(1), Some(1), Some(0)];
        let a = wma_scores(&g, &rev, 2, 0).unwrap();
        let b = wma_star_scores(&g, &rev, 2, 0, 0.3, 1).unwrap();
        for c in 0..2 {
            assert!((b[c] - a[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn smoothness_matches_dense() {
        assert_eq!(smoothness(&edgeless(4), &LabelSet::new(vec![0, 1, 0, 1], 2).unwrap(), 1.0).unwrap(), 4.0);
        let g = complete(3);
        let l = dense_q(&g, 1.0);
        let lab = LabelSet::new(vec![0, 0, 0], 2).unwrap();
        let y = nalgebra::DVector::from_element(3, 1.0);
        let want = (y.transpose() * &l * &y)[(0, 0)];
        assert!((smoothness(&g, &lab, 1.0).unwrap() - want).abs() < 1e-12);
        assert!(want.abs() < 1e-12);
        // flipping one label on the barbell
        let g = barbell_k3();
        let l = dense_q(&g, 1.0);
        let lab = LabelSet::new(vec![0, 0, 1, 1, 1, 1], 2).unwrap();
        let mut want = 0.0;
        for c in 0..2 {
            let y = nalgebra::DVector::from_iterator(6, lab.as_slice().iter().map(|&v| f64::from(u8::from(v == c))));
            want += (y.transpose() * &l * &y)[(0, 0)];
        }
        assert!((smoothness(&g, &lab, 1.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn bound_formulas() {
        assert!((regret_bound_sparsified(100, 0.0, 0.5, 1.0, 0.5).unwrap() - 2000f64.sqrt()).abs() < 1e-9);
        let b = regret_bound_sparsified(100, 0.01, 0.5, 1.0, rho(100, 10.0)).unwrap();
        assert!((b - 2000f64.sqrt() - 2f64.sqrt()).abs() < 1e-9);
        assert!(regret_bound_sparsified(100, 0.02, 0.5, 1.0, 0.5).unwrap() > b);
        assert!(regret_bound_sparsified(100, 0.01, 1.0, 1.0, 0.5).is_err());
        assert!((relaxation_regret_bound(100, 10.0, 1.0) - 2000f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn single_node_is_uniform() {
        let g = edgeless(1);
        let lab = LabelSet::new(vec![1], 2).unwrap();
        let mut cfg = OnlConfig::new(OnlMethod::Relaxation, KernelSolver::Exact);
        cfg.gamma = Some(1.0);
        let tr = relaxation_run(&g, &lab, &cfg, &[0]).unwrap();
        assert_eq!(tr.scores[0], vec![0.0, 0.0]);
        assert!(tr.losses[0] <= 1);
    }

    #[test]
    fn seeded_predictions_are_reproducible() {
        let g = barbell_k3();
        let lab = barbell_k3_labels();
        let cfg = OnlConfig::new(OnlMethod::Relaxation, KernelSolver::Exact);
        let order: Vec<usize> = (0..6).collect();
        let a = relaxation_run(&g, &lab, &cfg, &order).unwrap();
        let b = relaxation_run(&g, &lab, &cfg, &order).unwrap();
        assert_eq!(a, b);
        assert!(a.cumulative_loss.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn barbell_relaxation_within_bounds() {
        let g = barbell_k3();
        let lab = barbell_k3_labels();
        let order: Vec<usize> = (0..6).collect();
        for argmax in [false, true] {
            let mut cfg = OnlConfig::new(OnlMethod::Relaxation, KernelSolver::Exact);
            cfg.argmax = argmax;
            let tr = relaxation_run(&g, &lab, &cfg, &order).unwrap();
            assert!(tr.regret() <= tr.regret_bound);
            assert!(tr.regret() <= tr.trace_bound.unwrap());
        }
    }

    #[test]
    fn regularize_copies_uniform_labels() {
        let g = path(3);
        let lab = LabelSet::new(vec![1, 1, 1], 2).unwrap();
        let mut cfg = OnlConfig::new(OnlMethod::Regularize, KernelSolver::Exact);
        cfg.gamma = Some(1.0);
        let tr = regularize_run(&g, &lab, &cfg, &[1, 0, 2]).unwrap();
        assert_eq!(tr.scores[0], vec![0.0, 0.0]);
        assert_eq!(&tr.predictions[1..], &[1, 1]);
    }

    #[test]
    fn appr_scores_track_exact() {
        let (g, lab) = (barbell_k3(), barbell_k3_labels());
        let order = [0, 5, 1, 4, 2, 3];
        for method in [OnlMethod::Relaxation, OnlMethod::Regularize] {
            let mut cfg = OnlConfig::new(method, KernelSolver::Exact);
            cfg.argmax = true;
            let ex = onl_run(&g, &lab, &cfg, &order).unwrap();
            cfg.solver = KernelSolver::Appr { epsilon: 1e-10 };
            let ap = onl_run(&g, &lab, &cfg, &order).unwrap();
            for (a, b) in ex.scores.iter().zip(&ap.scores) {
                for (x, y) in a.iter().zip(b) {
                    assert!((x - y).abs() <= 1e-6);
                }
            }
            assert_eq!(ex.predictions, ap.predictions);
        }
    }

    #[test]
    fn rejects_bad_orders() {
        let (g, lab) = (barbell_k3(), barbell_k3_labels());
        let cfg = OnlConfig::new(OnlMethod::Wma, KernelSolver::Exact);
        assert!(onl_run(&g, &lab, &cfg, &[0, 0]).is_err());
        assert!(onl_run(&g, &lab, &cfg, &[9]).is_err());
    }
}
