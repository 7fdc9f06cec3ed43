use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use appr_cli::spec::{
    Builtin, ExperimentSpec, SolveMode, SolverKind, SolverSpec, SparsifyScheme, Suite, Task, VisitOrder,
};
use appr_cli::run_experiment;
use appr_core::cluster::{DEFAULT_BETA_L, DEFAULT_SHIFT};
use appr_core::onl::OnlMethod;
use appr_core::sampler::Weighting;

#[derive(Parser)]
#[command(name = "appr", version, about = "Local push solvers with neighbor subsampling")]
struct Cli {
    /// Global RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list file (`u v` or `u v w` per line).
    #[arg(long, conflicts_with = "builtin")]
    dataset: Option<PathBuf>,
    /// Built-in graph instead of a dataset.
    #[arg(long)]
    builtin: Option<Builtin>,
    /// `node label` file.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Read edge weights from the third column.
    #[arg(long)]
    weighted: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Uniform,
    Edge,
    Degree,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::Edge => Weighting::EdgeWeighted,
            WeightingArg::Degree => Weighting::DegreeWeighted,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Uniform,
    Influencer,
    Resistive,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Relax,
    Reg,
    Wma,
    Wmastar,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "appr")]
    solver: SolverKind,
    /// Push tolerance of the kernel solver.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// `q_bar` as a multiple of the median degree.
    #[arg(long, default_value_t = 2.0)]
    qbar_mult: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    weighting: WeightingArg,
    /// Epochs between dual corrections (0 disables).
    #[arg(long, default_value_t = 5)]
    period: usize,
}

impl SolverArgs {
    fn spec(&self) -> SolverSpec {
        SolverSpec {
            kind: self.solver,
            epsilon: self.epsilon,
            qbar_mult: self.qbar_mult,
            weighting: self.weighting.into(),
            correction_period: self.period,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Degree statistics and histogram.
    Stats(GraphArgs),
    /// Offline edge sparsification.
    Sparsify {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum, default_value = "influencer")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 0.5)]
        keep_prob: f64,
        #[arg(long, default_value_t = 2.0)]
        qbar_mult: f64,
        /// Resistive scheme scale.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Also write per-edge (max degree, 1/R) pairs.
        #[arg(long)]
        pairs: bool,
    },
    /// Seeded push solves, optionally swept over tolerances and modes.
    Solve {
        #[command(flatten)]
        graph: GraphArgs,
        /// Original id of the seed node (default: a maximum-degree node).
        #[arg(long)]
        seed_node: Option<u64>,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// One or more tolerances, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1e-4")]
        epsilon: Vec<f64>,
        /// Include the deterministic solver (implied when no other mode is chosen).
        #[arg(long)]
        deterministic: bool,
        /// Include the solver with online neighbor subsampling.
        #[arg(long)]
        online: bool,
        /// Include a deterministic solve on an offline-sparsified graph.
        #[arg(long)]
        offline: bool,
        #[arg(long, default_value_t = 2.0)]
        qbar_mult: f64,
        #[arg(long, value_enum, default_value = "uniform")]
        weighting: WeightingArg,
        #[arg(long, default_value_t = 0.9)]
        c: f64,
        #[arg(long, default_value_t = 5)]
        period: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Online node labeling.
    Onl {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum, default_value = "relax")]
        method: MethodArg,
        /// Discount of the multi-hop vote.
        #[arg(long, default_value_t = 0.5)]
        wma_beta: f64,
        #[arg(long, default_value_t = 2)]
        k_hops: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// Smoothness budget (default: measured from the labels).
        #[arg(long)]
        gamma: Option<f64>,
        /// `natural` or `shuffled:SEED`.
        #[arg(long, default_value = "natural")]
        order: VisitOrder,
        /// Predict the argmax instead of sampling.
        #[arg(long)]
        argmax: bool,
    },
    /// Seeded clustering.
    Cluster {
        #[command(flatten)]
        graph: GraphArgs,
        /// Number of seeds (default: number of label classes).
        #[arg(long)]
        seeds: Option<usize>,
        /// Laplacian discount of the embedding.
        #[arg(long, default_value_t = DEFAULT_BETA_L)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_SHIFT)]
        shift: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Verification suites; exits nonzero if any check fails.
    Verify {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "invariants,offline,sampler,rates,early-stop")]
        suite: Vec<Suite>,
    },
    /// Runs an experiment described by a TOML file.
    Run { spec: PathBuf },
}

fn spec_for(cli: &Cli) -> Result<ExperimentSpec> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let (graph, task) = match &cli.command {
        Command::Run { spec } => {
            let mut s = ExperimentSpec::load(spec)?;
            if let Some(o) = &cli.out {
                s.out = o.clone();
            }
            return Ok(s);
        }
        Command::Stats(g) => (Some(g), Task::Stats),
        Command::Sparsify {
            graph,
            scheme,
            keep_prob,
            qbar_mult,
            scale,
            pairs,
        } => {
            let scheme = match scheme {
                SchemeArg::Uniform => SparsifyScheme::Uniform { keep_prob: *keep_prob },
                SchemeArg::Influencer => SparsifyScheme::Influencer { qbar_mult: *qbar_mult },
                SchemeArg::Resistive => SparsifyScheme::Resistive { scale: *scale },
            };
            (
                Some(graph),
                Task::Sparsify {
                    scheme,
                    resistance_pairs: *pairs,
                },
            )
        }
        Command::Solve {
            graph,
            seed_node,
            alpha,
            epsilon,
            deterministic,
            online,
            offline,
            qbar_mult,
            weighting,
            c,
            period,
            trials,
        } => {
            let mut modes = Vec::new();
            if *deterministic || !(*online || *offline) {
                modes.push(SolveMode::Deterministic);
            }
            if *online {
                modes.push(SolveMode::Online {
                    qbar_mult: *qbar_mult,
                    weighting: (*weighting).into(),
                    correction_period: *period,
                    c: *c,
                });
            }
            if *offline {
                modes.push(SolveMode::Offline { qbar_mult: *qbar_mult });
            }
            (
                Some(graph),
                Task::Solve {
                    alpha: *alpha,
                    epsilons: epsilon.clone(),
                    modes,
                    source: *seed_node,
                    trials: *trials,
                },
            )
        }
        Command::Onl {
            graph,
            method,
            wma_beta,
            k_hops,
            solver,
            gamma,
            order,
            argmax,
        } => {
            let method = match method {
                MethodArg::Relax => OnlMethod::Relaxation,
                MethodArg::Reg => OnlMethod::Regularize,
                MethodArg::Wma => OnlMethod::Wma,
                MethodArg::Wmastar => OnlMethod::WmaStar {
                    beta: *wma_beta,
                    k_hops: *k_hops,
                },
            };
            (
                Some(graph),
                Task::Onl {
                    method,
                    solver: solver.spec(),
                    gamma: *gamma,
                    order: *order,
                    argmax: *argmax,
                },
            )
        }
        Command::Cluster {
            graph,
            seeds,
            beta,
            shift,
            solver,
        } => (
            Some(graph),
            Task::Cluster {
                seeds: *seeds,
                shift: *shift,
                beta_l: *beta,
                solver: solver.spec(),
            },
        ),
        Command::Verify { suite } => (None, Task::Verify { suites: suite.clone() }),
    };
    let mut spec = ExperimentSpec::new(task, out);
    spec.seed = cli.seed;
    if let Some(g) = graph {
        spec.dataset = g.dataset.clone();
        spec.builtin = g.builtin;
        spec.labels = g.labels.clone();
        spec.weighted = g.weighted;
    }
    Ok(spec)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let spec = spec_for(cli)?;
    let summary = run_experiment(&spec)?;
    if let Some(text) = &summary.stdout {
        print!("{text}");
    }
    for f in &summary.files {
        log::info!("wrote {}", f.display());
    }
    Ok(summary.pass)
}
