//! Exhaustive enumeration of sampler outcomes and the Bernoulli
//! subgaussian constant.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampler::{
    capped_inclusion_probabilities, importance, systematic_breakpoints, systematic_select, SamplerConfig, Weighting,
};
use crate::sparse::SparseVector;

/// Largest support [`enumerate_sampler_outcomes`] will expand.
pub const MAX_ENUMERATED_SUPPORT: usize = 12;

fn combinations(k: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            if k - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, k, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, r, &mut Vec::with_capacity(r), &mut out);
    out
}

/// Every outcome of the sampler on `w` with its exact probability.
///
/// Uniform designs list all `C(k, q_bar)` subsets with probability
/// `1 / C(k, q_bar)`. Weighted (systematic) designs list one outcome per
/// interval of the uniform start point between consecutive breakpoints, with
/// the interval length as probability.
pub fn enumerate_sampler_outcomes(w: &SparseVector, cfg: &SamplerConfig, g: &Graph) -> Result<Vec<(SparseVector, f64)>> {
    cfg.validate()?;
    let support: Vec<(usize, f64)> = w.sorted().into_iter().filter(|&(_, x)| x != 0.0).collect();
    let k = support.len();
    if k == 0 {
        return Err(Error::validation("sampler needs a nonempty support"));
    }
    if k > MAX_ENUMERATED_SUPPORT {
        return Err(Error::SizeCap {
            n: k,
            cap: MAX_ENUMERATED_SUPPORT,
            hint: "enumeration is combinatorial; use Monte-Carlo checks for larger supports".into(),
        });
    }
    if !cfg.subsamples(k) {
        return Ok(vec![(w.clone(), 1.0)]);
    }
    let build = |chosen: &[usize], p: &[f64]| -> SparseVector {
        chosen.iter().map(|&i| (support[i].0, support[i].1 / p[i])).collect()
    };
    match cfg.weighting {
        Weighting::Uniform => {
            let p = vec![cfg.q_bar as f64 / k as f64; k];
            let subsets = combinations(k, cfg.q_bar);
            let prob = 1.0 / subsets.len() as f64;
            Ok(subsets.iter().map(|s| (build(s, &p), prob)).collect())
        }
        _ => {
            let pi: Vec<f64> = support
                .iter()
                .map(|&(v, x)| importance(cfg.weighting, g, v, x))
                .collect();
            let p = capped_inclusion_probabilities(&pi, cfg.q_bar);
            let mut b = systematic_breakpoints(&p, cfg.q_bar);
            b.push(1.0);
            let mut out = Vec::new();
            for win in b.windows(2) {
                let len = win[1] - win[0];
                if len <= 0.0 {
                    continue;
                }
                let chosen = systematic_select(&p, cfg.q_bar, 0.5 * (win[0] + win[1]));
                out.push((build(&chosen, &p), len));
            }
            Ok(out)
        }
    }
}

/// `max(|sum prob - 1|, max_i |E[w~]_i - w_i|)` over an enumerated design.
pub fn enumeration_bias(w: &SparseVector, outcomes: &[(SparseVector, f64)]) -> f64 {
    let total: f64 = outcomes.iter().map(|(_, p)| p).sum();
    let mut mean = SparseVector::new();
    for (o, p) in outcomes {
        mean.axpy(*p, o);
    }
    mean.axpy(-1.0, w);
    (total - 1.0).abs().max(mean.linf_norm())
}

/// Subgaussian constant bound of a Bernoulli(p) variable:
/// `S(p) = min(1/4, -(p - 2)^2 / (4 ln p))`, with `S(1) = 1/4`.
pub fn bernoulli_subgauss_constant(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::validation(format!("p must lie in (0, 1], got {p}")));
    }
    if p == 1.0 {
        return Ok(0.25);
    }
    Ok((-(p - 2.0).powi(2) / (4.0 * p.ln())).min(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::edgeless;

    #[test]
    fn forced_and_symmetric_designs() {
        let g = edgeless(3);
        let cfg = SamplerConfig::new(2, Weighting::Uniform, 0).unwrap();
        let w = SparseVector::from_pairs([(0, 1.0), (1, 3.0)]);
        let o = enumerate_sampler_outcomes(&w, &cfg, &g).unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!(o[0].1, 1.0);

        let cfg = SamplerConfig::new(1, Weighting::Uniform, 0).unwrap();
        let w = SparseVector::from_pairs([(0, 1.0), (1, 1.0)]);
        let o = enumerate_sampler_outcomes(&w, &cfg, &g).unwrap();
        let got: Vec<_> = o.iter().map(|(v, p)| (v.sorted(), *p)).collect();
        assert_eq!(got, vec![(vec![(0, 2.0)], 0.5), (vec![(1, 2.0)], 0.5)]);
    }

    #[test]
    fn three_entry_uniform_design() {
        let g = edgeless(3);
        let cfg = SamplerConfig::new(2, Weighting::Uniform, 0).unwrap();
        let w = SparseVector::from_pairs([(0, 1.0), (1, 2.0), (2, 3.0)]);
        let o = enumerate_sampler_outcomes(&w, &cfg, &g).unwrap();
        assert_eq!(o.len(), 3);
        for (v, p) in &o {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
            for (i, x) in v.iter() {
                assert!((x - w.get(i) * 1.5).abs() < 1e-15);
            }
        }
        assert!(enumeration_bias(&w, &o) < 1e-12);
    }

    #[test]
    fn weighted_design_is_unbiased() {
        let g = edgeless(6);
        let cfg = SamplerConfig::new(2, Weighting::EdgeWeighted, 0).unwrap();
        let w = SparseVector::from_pairs([(0, 5.0), (1, 0.3), (2, -1.2), (3, 0.7), (5, 2.0)]);
        let o = enumerate_sampler_outcomes(&w, &cfg, &g).unwrap();
        assert!(enumeration_bias(&w, &o) < 1e-12);
        assert!(o.iter().all(|(v, _)| v.support_size() == 2));
    }

    #[test]
    fn guard_on_support_size() {
        let g = edgeless(13);
        let cfg = SamplerConfig::new(2, Weighting::Uniform, 0).unwrap();
        let w = SparseVector::from_pairs((0..13).map(|i| (i, 1.0)));
        assert!(matches!(enumerate_sampler_outcomes(&w, &cfg, &g), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn subgauss_constant_values() {
        assert_eq!(bernoulli_subgauss_constant(1.0).unwrap(), 0.25);
        assert_eq!(bernoulli_subgauss_constant(1.0 - 1e-9).unwrap(), 0.25);
        // at 1/e the formula gives (2 - 1/e)^2 / 4 > 1/4
        let e_inv = (-1.0f64).exp();
        assert!((2.0 - e_inv).powi(2) / 4.0 > 0.25);
        assert_eq!(bernoulli_subgauss_constant(e_inv).unwrap(), 0.25);
        let s = bernoulli_subgauss_constant(0.001).unwrap();
        let want = (0.001f64 - 2.0).powi(2) / (4.0 * 1000f64.ln());
        assert!((s - want).abs() < 1e-15);
        assert!((s - 0.1446).abs() < 1e-4);
        assert!(bernoulli_subgauss_constant(0.0).is_err());
        assert!(bernoulli_subgauss_constant(1.5).is_err());
    }
}
