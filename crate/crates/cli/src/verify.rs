//! Desk-scale verification suites behind `appr verify`.

use std::collections::HashSet;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use appr_core::appr::{appr_solve, appr_solve_with, seed_rhs, ApprParams, PushView, SolveOptions};
use appr_core::fixtures::{connected_erdos_renyi, k3_chain, power_law, power_law_500, star};
use appr_core::graph::degree_stats;
use appr_core::oracle::concentration::{early_stopping_check, influenced_pairs, offline_concentration_check};
use appr_core::oracle::rates::{
    estimate_diagnostics, gradient_norm_trace, linear_rate_fit, rate_bound, CheckpointRecorder,
};
use appr_core::oracle::sampling::{enumerate_sampler_outcomes, enumeration_bias};
use appr_core::random_appr::{random_appr_with, RandomApprConfig};
use appr_core::rng::{keyed_uniform, mix};
use appr_core::sampler::{SamplerConfig, Weighting};
use appr_core::{Graph, SparseVector};

use crate::spec::Suite;

const WEIGHTINGS: [Weighting; 3] = [Weighting::Uniform, Weighting::EdgeWeighted, Weighting::DegreeWeighted];

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub suite: Suite,
    pub pass: bool,
    pub summary: String,
    pub details: Value,
}

impl CheckReport {
    pub fn file_stem(&self) -> &'static str {
        match self.suite {
            Suite::Invariants => "invariants",
            Suite::Offline => "offline",
            Suite::Sampler => "sampler",
            Suite::Rates => "rates",
            Suite::EarlyStop => "early_stop",
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<CheckReport> {
    let (pass, summary, details) = match suite {
        Suite::Invariants => invariants(seed)?,
        Suite::Offline => offline(seed)?,
        Suite::Sampler => sampler(seed)?,
        Suite::Rates => rates(seed)?,
        Suite::EarlyStop => early_stop(seed)?,
    };
    Ok(CheckReport {
        suite,
        pass,
        summary,
        details,
    })
}

type Check = (bool, String, Value);

fn unit(seed: u64, keys: &[u64]) -> f64 {
    keyed_uniform(seed, keys)
}

fn hub(g: &Graph) -> usize {
    (0..g.node_count())
        .max_by(|&a, &b| g.degree(a).total_cmp(&g.degree(b)).then(b.cmp(&a)))
        .unwrap_or(0)
}

fn twice_median(g: &Graph) -> Result<usize> {
    Ok(((2.0 * degree_stats(g)?.median_degree).round() as usize).max(1))
}

fn random_case(seed: u64, case: u64) -> Result<(Graph, ApprParams, usize)> {
    let u = |k| unit(seed, &[case, k]);
    let n = 5 + (u(0) * 196.0) as usize;
    let gseed = mix(seed, &[case]);
    let g = if case % 2 == 0 {
        connected_erdos_renyi(n, ((2.0 + 6.0 * u(1)) / n as f64).min(1.0), gseed)
    } else {
        power_law(n, 2.1 + 0.9 * u(1), 2.0 + 4.0 * u(2), gseed)
    };
    let params = ApprParams::new(0.05 + 0.85 * u(3), 10f64.powf(-6.0 + 4.0 * u(4)))?;
    let start = (u(5) * n as f64) as usize;
    let s = (0..n).map(|i| (start + i) % n).find(|&v| g.degree(v) > 0.0).unwrap_or(0);
    Ok((g, params, s))
}

/// Push invariants at every push of 40 random deterministic solves.
fn invariants(seed: u64) -> Result<Check> {
    let runs: Vec<(usize, Option<String>)> = (0..40u64)
        .into_par_iter()
        .map(|case| -> Result<(usize, Option<String>)> {
            let (g, p, s) = random_case(seed, case)?;
            let mut prev_l1 = 1.0f64;
            let mut prev_support: HashSet<usize> = HashSet::new();
            let mut bad = None;
            let mut obs = |v: &PushView<'_>| {
                if bad.is_some() {
                    return;
                }
                let z1 = v.z.l1_norm();
                let mass: f64 = v.x.iter().map(|(u, xu)| g.degree(u).sqrt() * xu.abs()).sum();
                let support: HashSet<usize> = v.x.iter().filter(|&(_, xu)| xu != 0.0).map(|(u, _)| u).collect();
                let msg = if v.x.iter().any(|(_, xu)| xu < 0.0) || v.z.iter().any(|(_, zu)| zu < 0.0) {
                    Some("negative entry")
                } else if z1 > prev_l1 {
                    Some("residual grew")
                } else if (z1 + mass - 1.0).abs() > 1e-9 * v.push_count as f64 {
                    Some("mass not conserved")
                } else if !prev_support.is_subset(&support) {
                    Some("support shrank")
                } else {
                    None
                };
                if let Some(m) = msg {
                    bad = Some(format!("case {case}: {m} at push {}", v.push_count));
                }
                prev_l1 = z1;
                prev_support = support;
            };
            let out = appr_solve_with(&g, s, &p, SolveOptions::default(), &mut obs)?;
            Ok((out.pushes, bad))
        })
        .collect::<Result<_>>()?;
    let pushes: usize = runs.iter().map(|r| r.0).sum();
    let violations: Vec<String> = runs.into_iter().filter_map(|r| r.1).collect();
    Ok((
        violations.is_empty(),
        format!("40 runs, {pushes} pushes, {} violations", violations.len()),
        json!({ "runs": 40, "pushes_checked": pushes, "violations": violations }),
    ))
}

fn eps_for_bounds(g: &Graph, q_bar: f64, x: &[f64], targets: &[f64]) -> Vec<f64> {
    let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pairs = influenced_pairs(g, q_bar) as f64;
    targets
        .iter()
        .map(|b| g.max_degree() * x_inf * x_inf * (pairs * (1.0 / b).ln()).sqrt() / q_bar)
        .collect()
}

/// Offline sparsification concentration on small named graphs.
fn offline(seed: u64) -> Result<Check> {
    let mut cases: Vec<(String, Graph, f64, Vec<f64>, Vec<f64>)> =
        vec![("S3".into(), star(3), 1.0, vec![1.0, 1.0, 0.0, 0.0], vec![0.5, 1.0, 2.0])];
    for count in [3usize, 10] {
        let g = k3_chain(count);
        let n = g.node_count();
        let x: Vec<f64> = (0..n).map(|u| if u < n / 2 { 1.0 } else { 0.0 }).collect();
        let grid = eps_for_bounds(&g, 2.0, &x, &[0.9, 0.5, 0.1]);
        cases.push((format!("K3x{count}"), g, 2.0, x, grid));
    }
    let mut pass = true;
    let mut reports = Vec::new();
    for (i, (name, g, q, x, grid)) in cases.iter().enumerate() {
        let r = offline_concentration_check(g, *q, x, 2000, grid, mix(seed, &[i as u64]))?;
        pass &= r.pass;
        reports.push(json!({ "graph": name, "report": r }));
    }
    Ok((pass, format!("{} graphs, 2000 trials each", cases.len()), Value::Array(reports)))
}

/// Exact enumeration of the neighbor sampler on supports up to 6.
fn sampler(seed: u64) -> Result<Check> {
    let g = power_law(60, 2.3, 4.0, seed);
    let nodes: Vec<usize> = (0..g.node_count()).filter(|&u| g.degree(u) > 0.0).collect();
    let mut worst = 0.0f64;
    let mut designs = 0;
    for size in 1..=6usize.min(nodes.len()) {
        for q in 1..=size {
            for (wi, &w) in WEIGHTINGS.iter().enumerate() {
                let key = [size as u64, q as u64, wi as u64];
                let offset = (unit(seed, &key) * nodes.len() as f64) as usize;
                let v = SparseVector::from_pairs((0..size).map(|i| {
                    let mag = 0.1 + 4.9 * unit(seed, &[size as u64, q as u64, wi as u64, i as u64]);
                    (nodes[(offset + 7 * i) % nodes.len()], if i % 2 == 0 { mag } else { -mag })
                }));
                let cfg = SamplerConfig::new(q, w, seed)?;
                let outcomes = enumerate_sampler_outcomes(&v, &cfg, &g)?;
                worst = worst.max(enumeration_bias(&v, &outcomes));
                designs += 1;
            }
        }
    }
    Ok((
        worst <= 1e-12,
        format!("{designs} designs, max bias {worst:e}"),
        json!({ "designs": designs, "max_bias": worst, "tolerance": 1e-12 }),
    ))
}

/// Gradient-norm and linear-rate checks on two small graphs.
fn rates(seed: u64) -> Result<Check> {
    let p = ApprParams::new(0.2, 1e-5)?;
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, g, q) in [("star20", star(20), 4usize), ("K3x10", k3_chain(10), 2)] {
        let s = hub(&g);
        let cfg = RandomApprConfig::new(SamplerConfig::new(q, Weighting::Uniform, seed)?);
        let diag = estimate_diagnostics(&g, s, &p, &cfg, 30, 5_000)?;
        let mut rec = CheckpointRecorder::new(10);
        random_appr_with(&g, s, &p, &cfg, &mut rec)?;
        let b = seed_rhs(&g, s, p.alpha)?;
        let trace = gradient_norm_trace(&g, &rec.points, &b, &p)?;
        let grad_ok = trace
            .iter()
            .all(|pt| pt.running_min <= rate_bound(p.alpha, pt.pushes, diag.sigma_max_hat));
        let fit = linear_rate_fit(&g, s, &p, &cfg, 50, 10)?;
        pass &= grad_ok && fit.pass;
        rows.push(json!({
            "graph": name,
            "q_bar": q,
            "sigma_max_hat": diag.sigma_max_hat,
            "checkpoints": trace.len(),
            "gradient_ok": grad_ok,
            "slope": fit.slope,
            "required_slope": fit.required_slope,
            "rate_ok": fit.pass,
        }));
    }
    Ok((pass, "star20 and K3x10".into(), Value::Array(rows)))
}

/// Premature threshold drops of the corrected residual estimate.
fn early_stop(seed: u64) -> Result<Check> {
    let g = power_law_500(seed);
    let s = hub(&g);
    let cfg = SamplerConfig::new(twice_median(&g)?, Weighting::Uniform, seed)?;
    let eps = 1e-3;
    let p = ApprParams::new(0.1, eps)?;
    let x = appr_solve(&g, s, &ApprParams::new(p.alpha, 4.0 * eps)?)?.x;
    let mut pass = true;
    let mut reports = Vec::new();
    for c in [0.5, 0.9] {
        let r = early_stopping_check(&g, s, &x, &p, &cfg, c, 300)?;
        pass &= r.pass && !r.rows.is_empty();
        reports.push(r);
    }
    Ok((
        pass,
        format!("power-law-500 hub, eps={eps}, c in {{0.5, 0.9}}"),
        serde_json::to_value(reports)?,
    ))
}
