//! Task execution. Every task renders its outputs in memory first; files are
//! written only once the whole task has succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use appr_core::appr::{appr_solve, gradient_residual_l2, residual_exact, seed_rhs, ApprParams};
use appr_core::cluster::{cluster, select_seeds};
use appr_core::fixtures::{barbell_k3, barbell_k3_labels, citation_like, planted_partition_500, power_law_500};
use appr_core::graph::{degree_histogram, degree_stats, load_edge_list, load_labels};
use appr_core::kernel::KernelSolver;
use appr_core::onl::{onl_run, OnlConfig};
use appr_core::random_appr::{random_appr, EpochStats, RandomApprConfig};
use appr_core::rng::mix;
use appr_core::sampler::SamplerConfig;
use appr_core::sparsify::{
    edge_degree_resistance_pairs, edge_ratio, resistive_distances, sparsify_offline, EdgeProbabilityScheme,
};
use appr_core::{DegreeStats, Graph, IdMap, LabelSet, SparseVector};

use crate::spec::{
    Builtin, ExperimentSpec, SolveMode, SolverKind, SolverSpec, SparsifyScheme, Task, VisitOrder, SCHEMA_VERSION,
};
use crate::verify::{run_suite, CheckReport};

/// What a finished run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// False when a verification check failed.
    pub pass: bool,
    /// Text meant for standard output (the primal of a single solve).
    pub stdout: Option<String>,
}

struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    pass: bool,
    stdout: Option<String>,
}

impl Outputs {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            pass: true,
            stdout: None,
        }
    }

    fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut body = serde_json::to_vec_pretty(value).context("serializing JSON output")?;
        body.push(b'\n');
        self.files.push((name.to_string(), body));
        Ok(())
    }
}

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn versioned<T: Serialize>(body: T) -> Versioned<T> {
    Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    }
}

struct Input {
    graph: Graph,
    ids: IdMap,
    labels: Option<LabelSet>,
}

fn builtin_graph(b: Builtin, seed: u64) -> (Graph, Option<LabelSet>) {
    match b {
        Builtin::Barbell => (barbell_k3(), Some(barbell_k3_labels())),
        Builtin::PowerLaw500 => (power_law_500(seed), None),
        Builtin::CitationLike => (citation_like(seed), None),
        Builtin::Planted500 => {
            let (g, l) = planted_partition_500(seed);
            (g, Some(l))
        }
    }
}

fn load_input(spec: &ExperimentSpec) -> Result<Input> {
    let (graph, ids, builtin_labels) = match (&spec.dataset, spec.builtin) {
        (Some(path), None) => {
            let lg = load_edge_list(path, spec.weighted).with_context(|| format!("loading {}", path.display()))?;
            (lg.graph, lg.ids, None)
        }
        (None, Some(b)) => {
            let (g, l) = builtin_graph(b, spec.seed);
            let ids = IdMap::identity(g.node_count());
            (g, ids, l)
        }
        _ => bail!("specify exactly one of a dataset path or a built-in graph"),
    };
    let labels = match &spec.labels {
        Some(path) => Some(load_labels(path, &ids).with_context(|| format!("loading labels {}", path.display()))?),
        None => builtin_labels,
    };
    Ok(Input { graph, ids, labels })
}

/// `ceil(mult * median degree)`, at least 1.
pub fn q_bar_from_mult(g: &Graph, mult: f64) -> Result<usize> {
    if !(mult > 0.0 && mult.is_finite()) {
        bail!("q_bar multiplier must be positive and finite, got {mult}");
    }
    let median = degree_stats(g)?.median_degree;
    Ok(((mult * median).ceil() as usize).max(1))
}

fn hub(g: &Graph) -> usize {
    (0..g.node_count())
        .max_by(|&a, &b| g.degree(a).total_cmp(&g.degree(b)).then(b.cmp(&a)))
        .unwrap_or(0)
}

fn kernel_solver(g: &Graph, s: &SolverSpec, seed: u64) -> Result<KernelSolver> {
    Ok(match s.kind {
        SolverKind::Exact => KernelSolver::Exact,
        SolverKind::Appr => KernelSolver::Appr { epsilon: s.epsilon },
        SolverKind::Random => {
            let sampler = SamplerConfig::new(q_bar_from_mult(g, s.qbar_mult)?, s.weighting, seed)?;
            let mut config = RandomApprConfig::new(sampler);
            config.correction_period = s.correction_period;
            KernelSolver::RandomAppr {
                epsilon: s.epsilon,
                config,
            }
        }
    })
}

/// Runs the experiment and writes its outputs plus `spec.toml` into
/// `spec.out`. Nothing is written when the task fails.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary> {
    spec.validate()?;
    let mut out = Outputs::new();
    match &spec.task {
        Task::Verify { suites } => {
            let reports: Vec<CheckReport> = suites.iter().map(|&s| run_suite(s, spec.seed)).collect::<Result<_>>()?;
            for r in &reports {
                log::info!("{:?}: {} ({})", r.suite, if r.pass { "PASS" } else { "FAIL" }, r.summary);
                out.pass &= r.pass;
                out.json(&format!("verify_{}.json", r.file_stem()), &versioned(r))?;
            }
        }
        task => {
            let input = load_input(spec)?;
            log::info!(
                "graph: {} nodes, {} edges",
                input.graph.node_count(),
                input.graph.edge_count()
            );
            match task {
                Task::Stats => stats(&input, &mut out)?,
                Task::Sparsify {
                    scheme,
                    resistance_pairs,
                } => sparsify(&input, scheme, *resistance_pairs, spec.seed, &mut out)?,
                Task::Solve {
                    alpha,
                    epsilons,
                    modes,
                    source,
                    trials,
                } => solve(&input, *alpha, epsilons, modes, *source, *trials, spec.seed, &mut out)?,
                Task::Onl {
                    method,
                    solver,
                    gamma,
                    order,
                    argmax,
                } => {
                    let mut cfg = OnlConfig::new(*method, kernel_solver(&input.graph, solver, spec.seed)?);
                    cfg.gamma = *gamma;
                    cfg.seed = spec.seed;
                    cfg.argmax = *argmax;
                    onl(&input, &cfg, *order, &mut out)?
                }
                Task::Cluster {
                    seeds,
                    shift,
                    beta_l,
                    solver,
                } => {
                    let solver = kernel_solver(&input.graph, solver, spec.seed)?;
                    clustering(&input, *seeds, *shift, *beta_l, &solver, &mut out)?
                }
                Task::Verify { .. } => unreachable!(),
            }
        }
    }
    out.text("spec.toml", spec.to_toml()?);
    let files = commit(&spec.out, &out.files)?;
    Ok(RunSummary {
        files,
        pass: out.pass,
        stdout: out.stdout,
    })
}

/// Writes all files; on any failure removes what was already written.
fn commit(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    let created_dir = !dir.exists();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, body) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            return Err(e).with_context(|| format!("writing {}", path.display()));
        }
        written.push(path);
    }
    Ok(written)
}

fn stats(input: &Input, out: &mut Outputs) -> Result<()> {
    let stats: DegreeStats = degree_stats(&input.graph)?;
    let mut csv = String::from("degree,count\n");
    for (d, c) in degree_histogram(&input.graph) {
        writeln!(csv, "{d},{c}")?;
    }
    out.text("degree_histogram.csv", csv);
    out.json("stats.json", &versioned(stats))
}

#[derive(Serialize)]
struct SparsifySidecar {
    scheme: EdgeProbabilityScheme,
    seed: u64,
    kept_edges: usize,
    edge_ratio_before: Option<f64>,
    edge_ratio_after: Option<f64>,
}

fn sparsify(input: &Input, scheme: &SparsifyScheme, pairs: bool, seed: u64, out: &mut Outputs) -> Result<()> {
    let g = &input.graph;
    let scheme = match *scheme {
        SparsifyScheme::Uniform { keep_prob } => EdgeProbabilityScheme::Uniform { keep_prob },
        SparsifyScheme::Influencer { qbar_mult } => EdgeProbabilityScheme::Influencer {
            q_bar: q_bar_from_mult(g, qbar_mult)? as f64,
        },
        SparsifyScheme::Resistive { scale } => EdgeProbabilityScheme::Resistive { scale },
    };
    let sparse = sparsify_offline(g, &scheme, seed)?;
    let ratio = |h: &Graph| input.labels.as_ref().map(|l| edge_ratio(h, l)).transpose();
    let sidecar = SparsifySidecar {
        scheme,
        seed,
        kept_edges: sparse.edge_count(),
        edge_ratio_before: ratio(g)?,
        edge_ratio_after: ratio(&sparse)?,
    };
    let mut edges = String::new();
    for (u, v, w) in sparse.edges() {
        writeln!(edges, "{} {} {}", input.ids.original(u), input.ids.original(v), w)?;
    }
    out.text("sparsified.txt", edges);
    out.json("sparsify.json", &versioned(sidecar))?;
    if pairs {
        let r = resistive_distances(g)?;
        let mut csv = String::from("u,v,max_degree,inverse_resistance\n");
        for (u, v, d, inv) in edge_degree_resistance_pairs(g, &r) {
            writeln!(csv, "{},{},{d},{inv}", input.ids.original(u), input.ids.original(v))?;
        }
        out.text("edge_pairs.csv", csv);
    }
    Ok(())
}

struct Cell {
    epsilon: f64,
    mode_id: usize,
    trial: usize,
    x: SparseVector,
    z: SparseVector,
    pushes: usize,
    nodes_queried: usize,
    epochs: Vec<EpochStats>,
}

fn mode_name(m: &SolveMode) -> &'static str {
    match m {
        SolveMode::Deterministic => "deterministic",
        SolveMode::Online { .. } => "online",
        SolveMode::Offline { .. } => "offline",
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    input: &Input,
    alpha: f64,
    epsilons: &[f64],
    modes: &[SolveMode],
    source: Option<u64>,
    trials: usize,
    seed: u64,
    out: &mut Outputs,
) -> Result<()> {
    let g = &input.graph;
    let s = match source {
        Some(o) => input.ids.dense(o).ok_or_else(|| anyhow!("source node {o} is not in the graph"))?,
        None => hub(g),
    };
    let mut jobs = Vec::new();
    for (ei, &eps) in epsilons.iter().enumerate() {
        for (mi, m) in modes.iter().enumerate() {
            let reps = if matches!(m, SolveMode::Deterministic) { 1 } else { trials };
            jobs.extend((0..reps).map(|t| (ei, eps, mi, *m, t)));
        }
    }
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(ei, eps, mi, mode, trial)| -> Result<Cell> {
            let params = ApprParams::new(alpha, eps)?;
            let key = mix(seed, &[ei as u64, mi as u64, trial as u64]);
            let ctx = || format!("{} solve at eps={eps}, trial {trial}", mode_name(&mode));
            let cell = |x, z, pushes, nodes_queried, epochs| Cell {
                epsilon: eps,
                mode_id: mi,
                trial,
                x,
                z,
                pushes,
                nodes_queried,
                epochs,
            };
            Ok(match mode {
                SolveMode::Deterministic => {
                    let o = appr_solve(g, s, &params).with_context(ctx)?;
                    cell(o.x, o.z, o.pushes, o.nodes_queried, Vec::new())
                }
                SolveMode::Online {
                    qbar_mult,
                    weighting,
                    correction_period,
                    c,
                } => {
                    let sampler = SamplerConfig::new(q_bar_from_mult(g, qbar_mult)?, weighting, key)?;
                    let mut cfg = RandomApprConfig::new(sampler);
                    cfg.correction_period = correction_period;
                    cfg.c = c;
                    cfg.trace_exact = true;
                    let o = random_appr(g, s, &params, &cfg).with_context(ctx)?;
                    cell(o.x, o.z, o.pushes, o.nodes_queried, o.trace)
                }
                SolveMode::Offline { qbar_mult } => {
                    let scheme = EdgeProbabilityScheme::Influencer {
                        q_bar: q_bar_from_mult(g, qbar_mult)? as f64,
                    };
                    let sparse = sparsify_offline(g, &scheme, key)?;
                    if sparse.degree(s) == 0.0 {
                        log::warn!("{}: sparsification isolated the seed node; reporting x = 0", ctx());
                        let z = SparseVector::from_pairs([(s, 1.0)]);
                        return Ok(cell(SparseVector::new(), z, 0, 0, Vec::new()));
                    }
                    let o = appr_solve(&sparse, s, &params).with_context(ctx)?;
                    cell(o.x, o.z, o.pushes, o.nodes_queried, Vec::new())
                }
            })
        })
        .collect::<Result<_>>()?;

    let beta = (1.0 - alpha) / (1.0 + alpha);
    let mut csv = String::from("epsilon,mode_id,mode,trial,nodes_queried,pushes,l1_residual,l2_residual,support_x\n");
    let mut epochs = String::from(
        "epsilon,mode_id,trial,epoch,pushes,nodes_queried,corrected,l1_residual_exact,l2_residual_exact,support_x\n",
    );
    let mut any_epochs = false;
    for c in &cells {
        let params = ApprParams::new(alpha, c.epsilon)?;
        let b = seed_rhs(g, s, alpha)?;
        let l1 = residual_exact(g, &c.x, &b, &params).l1_norm();
        let l2 = gradient_residual_l2(g, &c.x, &b, beta);
        writeln!(
            csv,
            "{},{},{},{},{},{},{l1},{l2},{}",
            c.epsilon,
            c.mode_id,
            mode_name(&modes[c.mode_id]),
            c.trial,
            c.nodes_queried,
            c.pushes,
            c.x.support_size()
        )?;
        for e in &c.epochs {
            any_epochs = true;
            writeln!(
                epochs,
                "{},{},{},{},{},{},{},{},{},{}",
                c.epsilon,
                c.mode_id,
                c.trial,
                e.epoch,
                e.pushes,
                e.nodes_queried,
                e.corrected,
                opt(e.l1_residual_exact),
                opt(e.l2_residual_exact),
                e.support_x
            )?;
        }
    }
    out.text("solve.csv", csv);
    if any_epochs {
        out.text("epochs.csv", epochs);
    }
    if let [c] = cells.as_slice() {
        let mut text = String::new();
        for (u, v) in c.x.sorted() {
            writeln!(text, "{} {v}", input.ids.original(u))?;
        }
        let footer = serde_json::json!({
            "pushes": c.pushes,
            "residual_linf": c.z.linf_norm(),
            "support_x": c.x.support_size(),
            "support_z": c.z.support_size(),
        });
        writeln!(text, "{footer}")?;
        out.stdout = Some(text.clone());
        out.text("x.txt", text);
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `0..n` in natural order, or permuted by keyed hashes of the node ids.
pub fn visit_order(n: usize, order: VisitOrder) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..n).collect();
    if let VisitOrder::Shuffled(seed) = order {
        nodes.sort_by_key(|&u| (mix(seed, &[u as u64]), u));
    }
    nodes
}

#[derive(Serialize)]
struct OnlSummary {
    method: appr_core::onl::OnlMethod,
    mistakes: usize,
    mistake_rate: f64,
    regret_bound: f64,
    trace_bound: Option<f64>,
    gamma: f64,
    nodes_queried: usize,
}

fn onl(input: &Input, cfg: &OnlConfig, order: VisitOrder, out: &mut Outputs) -> Result<()> {
    let labels = input
        .labels
        .as_ref()
        .ok_or_else(|| anyhow!("online labeling needs node labels"))?;
    let order = visit_order(input.graph.node_count(), order);
    let tr = onl_run(&input.graph, labels, cfg, &order)?;
    let mut csv = String::from("t,node,prediction,truth,cumulative_mistakes\n");
    for (t, &u) in tr.order.iter().enumerate() {
        writeln!(
            csv,
            "{t},{},{},{},{}",
            input.ids.original(u),
            tr.predictions[t],
            tr.truths[t],
            tr.cumulative_loss[t]
        )?;
    }
    out.text("steps.csv", csv);
    out.json(
        "summary.json",
        &versioned(OnlSummary {
            method: cfg.method,
            mistakes: tr.mistakes(),
            mistake_rate: tr.mistake_rate(),
            regret_bound: tr.regret_bound,
            trace_bound: tr.trace_bound,
            gamma: tr.gamma,
            nodes_queried: tr.nodes_queried,
        }),
    )
}

#[derive(Serialize)]
struct ClusterSummary {
    seeds: Vec<u64>,
    score: Option<f64>,
    unreached_count: usize,
    nodes_queried: usize,
}

fn clustering(
    input: &Input,
    seeds: Option<usize>,
    shift: f64,
    beta_l: f64,
    solver: &KernelSolver,
    out: &mut Outputs,
) -> Result<()> {
    let count = match (seeds, &input.labels) {
        (Some(k), _) => k,
        (None, Some(l)) => l.classes(),
        (None, None) => bail!("the number of seeds is required when no labels are given"),
    };
    let seeds = select_seeds(&input.graph, count)?;
    let r = cluster(&input.graph, &seeds, shift, beta_l, solver, input.labels.as_ref())?;
    let mut csv = String::from("node,seed\n");
    for (u, a) in r.assignment.assignment.iter().enumerate() {
        let seed = a.map(|j| input.ids.original(seeds[j]).to_string()).unwrap_or_default();
        writeln!(csv, "{},{seed}", input.ids.original(u))?;
    }
    out.text("assignment.csv", csv);
    out.json(
        "summary.json",
        &versioned(ClusterSummary {
            seeds: seeds.iter().map(|&s| input.ids.original(s)).collect(),
            score: r.score,
            unreached_count: r.unreached,
            nodes_queried: r.nodes_queried,
        }),
    )
}
