//! Unbiased neighbor subsampling.
//!
//! When a vector has more than `q_bar` nonzeros, exactly `q_bar` of them are
//! drawn without replacement and each kept entry is divided by its inclusion
//! probability, so the expectation of the result equals the input.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::keyed_rng;
use crate::sparse::SparseVector;

/// Importance measure used for the inclusion probabilities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Simple random sampling without replacement, `p_i = q_bar / k`.
    #[default]
    Uniform,
    /// Inclusion proportional to `|w_i|` (capped at 1).
    EdgeWeighted,
    /// Inclusion proportional to the degree of the target node (capped at 1).
    DegreeWeighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub q_bar: usize,
    pub weighting: Weighting,
    pub rng_seed: u64,
}

impl SamplerConfig {
    pub fn new(q_bar: usize, weighting: Weighting, rng_seed: u64) -> Result<Self> {
        let c = Self {
            q_bar,
            weighting,
            rng_seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_bar < 1 {
            return Err(Error::validation("q_bar must be at least 1"));
        }
        Ok(())
    }

    /// True when a candidate list of length `k` will be subsampled.
    #[inline]
    pub fn subsamples(&self, k: usize) -> bool {
        k > self.q_bar
    }
}

/// Inclusion probabilities `p_i = min(1, c * pi_i)` with `c` chosen so that
/// `sum p_i = q_bar`. Requires `0 < q_bar < pi.len()` and all `pi_i > 0`.
pub fn capped_inclusion_probabilities(pi: &[f64], q_bar: usize) -> Vec<f64> {
    let k = pi.len();
    debug_assert!(q_bar >= 1 && q_bar < k);
    let mut capped = vec![false; k];
    let mut p = vec![0.0; k];
    loop {
        let n_capped = capped.iter().filter(|&&c| c).count();
        let free_mass: f64 = (0..k).filter(|&i| !capped[i]).map(|i| pi[i]).sum();
        let c = (q_bar - n_capped) as f64 / free_mass;
        let mut changed = false;
        for i in 0..k {
            if capped[i] {
                p[i] = 1.0;
            } else {
                p[i] = c * pi[i];
                if p[i] >= 1.0 {
                    capped[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return p;
        }
    }
}

/// Cumulative boundaries `0 = C_0 <= ... <= C_k = sum p` used by
/// systematic sampling, with the last entry pinned to the exact integer sum.
fn boundaries(p: &[f64], total: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(p.len() + 1);
    c.push(0.0);
    let mut acc = 0.0;
    for &x in p {
        acc += x;
        c.push(acc);
    }
    *c.last_mut().unwrap() = total as f64;
    c
}

/// Systematic (Madow) selection: item `i` is chosen when some point
/// `u + m`, `m = 0, 1, ...`, falls in `[C_{i-1}, C_i)`.
pub fn systematic_select(p: &[f64], total: usize, u: f64) -> Vec<usize> {
    let c = boundaries(p, total);
    let mut out = Vec::with_capacity(total);
    let mut m = 0usize;
    for i in 0..p.len() {
        while (m as f64 + u) < c[i + 1] && m < total {
            if (m as f64 + u) >= c[i] {
                out.push(i);
            }
            m += 1;
        }
    }
    out.dedup();
    out
}

/// The fractional breakpoints of the systematic design, sorted and unique,
/// starting at 0. Between consecutive breakpoints the selection is constant.
pub fn systematic_breakpoints(p: &[f64], total: usize) -> Vec<f64> {
    let mut b: Vec<f64> = boundaries(p, total)
        .iter()
        .map(|&x| x - x.floor())
        .collect();
    b.push(0.0);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Inclusion probabilities that the configured design assigns to a list with
/// importance weights `pi`. Only meaningful when `pi.len() > q_bar`.
pub fn inclusion_probabilities(pi: &[f64], cfg: &SamplerConfig) -> Vec<f64> {
    match cfg.weighting {
        Weighting::Uniform => vec![cfg.q_bar as f64 / pi.len() as f64; pi.len()],
        _ => capped_inclusion_probabilities(pi, cfg.q_bar),
    }
}

/// Draws a subsample of `0..pi.len()` and returns `(index, p_index)` pairs in
/// ascending index order. Returns every index with `p = 1` when no
/// subsampling is needed.
pub fn draw(pi: &[f64], cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> Vec<(usize, f64)> {
    let k = pi.len();
    if !cfg.subsamples(k) {
        return (0..k).map(|i| (i, 1.0)).collect();
    }
    match cfg.weighting {
        Weighting::Uniform => {
            let p = cfg.q_bar as f64 / k as f64;
            let mut idx = index::sample(rng, k, cfg.q_bar).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| (i, p)).collect()
        }
        _ => {
            let p = capped_inclusion_probabilities(pi, cfg.q_bar);
            let u: f64 = rng.random();
            systematic_select(&p, cfg.q_bar, u)
                .into_iter()
                .map(|i| (i, p[i]))
                .collect()
        }
    }
}

/// Importance weight of candidate `v` carrying value `w_v`.
#[inline]
pub(crate) fn importance(weighting: Weighting, g: &Graph, v: usize, w_v: f64) -> f64 {
    match weighting {
        Weighting::Uniform => 1.0,
        Weighting::EdgeWeighted => w_v.abs(),
        Weighting::DegreeWeighted => g.degree(v),
    }
}

/// Subsamples the support of `w` and reweights by `1 / p_i`.
///
/// `g` supplies target degrees for [`Weighting::DegreeWeighted`]; `keys`
/// select the random stream.
pub fn sampler(w: &SparseVector, cfg: &SamplerConfig, g: &Graph, keys: &[u64]) -> Result<SparseVector> {
    cfg.validate()?;
    let support: Vec<(usize, f64)> = w.sorted().into_iter().filter(|&(_, x)| x != 0.0).collect();
    if support.is_empty() {
        return Err(Error::validation("sampler needs a nonempty support"));
    }
    if !cfg.subsamples(support.len()) {
        return Ok(w.clone());
    }
    let pi: Vec<f64> = support
        .iter()
        .map(|&(v, x)| importance(cfg.weighting, g, v, x))
        .collect();
    let mut rng = keyed_rng(cfg.rng_seed, keys);
    Ok(draw(&pi, cfg, &mut rng)
        .into_iter()
        .map(|(i, p)| (support[i].0, support[i].1 / p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{edgeless, star};

    #[test]
    fn small_support_returned_unchanged() {
        let g = edgeless(3);
        let cfg = SamplerConfig::new(3, Weighting::Uniform, 1).unwrap();
        let w = SparseVector::from_pairs([(0, 1.0), (2, 5.0)]);
        assert_eq!(sampler(&w, &cfg, &g, &[0]).unwrap(), w);
        let cfg = SamplerConfig::new(1, Weighting::EdgeWeighted, 1).unwrap();
        let w = SparseVector::from_pairs([(0, 4.0)]);
        assert_eq!(sampler(&w, &cfg, &g, &[0]).unwrap().sorted(), vec![(0, 4.0)]);
    }

    #[test]
    fn zero_q_bar_rejected() {
        assert!(SamplerConfig::new(0, Weighting::Uniform, 1).is_err());
    }

    #[test]
    fn uniform_pairs_reweighted_by_two() {
        let g = edgeless(4);
        let cfg = SamplerConfig::new(2, Weighting::Uniform, 7).unwrap();
        let w = SparseVector::from_pairs((0..4).map(|i| (i, 1.0)));
        let trials = 20_000;
        let mut sum0 = 0.0;
        for t in 0..trials {
            let s = sampler(&w, &cfg, &g, &[t]).unwrap();
            assert_eq!(s.support_size(), 2);
            assert!(s.iter().all(|(_, x)| x == 2.0));
            sum0 += s.get(0);
        }
        let mean = sum0 / trials as f64;
        // single-draw sd is 1, so 3 sigma over 2e4 draws is 0.021
        assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn capped_probabilities_sum_to_q_bar() {
        let pi = [10.0, 1.0, 1.0, 1.0, 0.5];
        let p = capped_inclusion_probabilities(&pi, 2);
        assert_eq!(p[0], 1.0);
        assert!((p.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!((p[1] / p[4] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn systematic_selects_exactly_total() {
        let p = capped_inclusion_probabilities(&[3.0, 1.0, 2.0, 0.5, 0.5], 3);
        for k in 0..1000 {
            let u = k as f64 / 1000.0;
            let s = systematic_select(&p, 3, u);
            assert_eq!(s.len(), 3, "u={u} s={s:?}");
        }
    }

    #[test]
    fn degree_weighting_favours_hubs() {
        let g = star(4);
        let cfg = SamplerConfig::new(1, Weighting::DegreeWeighted, 3).unwrap();
        let w = SparseVector::from_pairs((0..5).map(|i| (i, 1.0)));
        let s = sampler(&w, &cfg, &g, &[0]).unwrap();
        // the center holds half of the degree mass
        let pi = [4.0, 1.0, 1.0, 1.0, 1.0];
        let p = capped_inclusion_probabilities(&pi, 1);
        assert!((p[0] - 0.5).abs() < 1e-15);
        let (i, x) = s.iter().next().unwrap();
        assert!((x - 1.0 / p[i]).abs() < 1e-12);
    }
}
