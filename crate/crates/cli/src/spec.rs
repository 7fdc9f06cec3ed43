//! Serializable experiment descriptions.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use appr_core::onl::OnlMethod;
use appr_core::sampler::Weighting;

pub const SCHEMA_VERSION: u32 = 1;

/// Built-in graphs usable in place of a dataset file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Barbell,
    PowerLaw500,
    CitationLike,
    Planted500,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Appr,
    Random,
}

/// Kernel solver settings shared by the labeling and clustering tasks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub kind: SolverKind,
    pub epsilon: f64,
    /// `q_bar = ceil(qbar_mult * median degree)` for the randomized solver.
    pub qbar_mult: f64,
    pub weighting: Weighting,
    pub correction_period: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            kind: SolverKind::Appr,
            epsilon: 1e-6,
            qbar_mult: 2.0,
            weighting: Weighting::Uniform,
            correction_period: 5,
        }
    }
}

fn default_c() -> f64 {
    0.9
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveMode {
    Deterministic,
    /// Subsampling inside each push.
    Online {
        qbar_mult: f64,
        weighting: Weighting,
        correction_period: usize,
        /// Threshold deflation of the randomized solver.
        #[serde(default = "default_c")]
        c: f64,
    },
    /// Influencer sparsification followed by a deterministic solve.
    Offline { qbar_mult: f64 },
}

/// Edge keep probabilities for offline sparsification. The influencer
/// threshold is `ceil(qbar_mult * median degree)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SparsifyScheme {
    Uniform { keep_prob: f64 },
    Influencer { qbar_mult: f64 },
    Resistive { scale: f64 },
}

/// Node visiting order of the labeling task, written `natural` or
/// `shuffled:SEED`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum VisitOrder {
    Natural,
    Shuffled(u64),
}

impl FromStr for VisitOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            None if s == "natural" => Ok(Self::Natural),
            Some(("shuffled", seed)) => seed
                .parse()
                .map(Self::Shuffled)
                .map_err(|e| format!("bad shuffle seed {seed:?}: {e}")),
            _ => Err(format!("expected `natural` or `shuffled:SEED`, got {s:?}")),
        }
    }
}

impl TryFrom<String> for VisitOrder {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<VisitOrder> for String {
    fn from(o: VisitOrder) -> String {
        match o {
            VisitOrder::Natural => "natural".into(),
            VisitOrder::Shuffled(seed) => format!("shuffled:{seed}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Invariants,
    Offline,
    Sampler,
    Rates,
    EarlyStop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Stats,
    Sparsify {
        scheme: SparsifyScheme,
        /// Also emit per-edge `(max degree, 1 / R)` rows (dense, small graphs).
        #[serde(default)]
        resistance_pairs: bool,
    },
    Solve {
        alpha: f64,
        epsilons: Vec<f64>,
        modes: Vec<SolveMode>,
        /// Original id of the seed node; defaults to a maximum-degree node.
        source: Option<u64>,
        trials: usize,
    },
    Onl {
        method: OnlMethod,
        solver: SolverSpec,
        gamma: Option<f64>,
        order: VisitOrder,
        argmax: bool,
    },
    Cluster {
        seeds: Option<usize>,
        shift: f64,
        beta_l: f64,
        solver: SolverSpec,
    },
    Verify {
        suites: Vec<Suite>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub dataset: Option<PathBuf>,
    pub builtin: Option<Builtin>,
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub weighted: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub task: Task,
}

impl ExperimentSpec {
    pub fn new(task: Task, out: impl Into<PathBuf>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dataset: None,
            builtin: None,
            labels: None,
            weighted: false,
            seed: 0,
            out: out.into(),
            task,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        let needs_graph = !matches!(self.task, Task::Verify { .. });
        if needs_graph && self.dataset.is_some() == self.builtin.is_some() {
            bail!("specify exactly one of a dataset path or a built-in graph");
        }
        match &self.task {
            Task::Solve {
                epsilons,
                modes,
                trials,
                ..
            } => {
                if epsilons.is_empty() || modes.is_empty() {
                    bail!("a solve sweep needs at least one epsilon and one mode");
                }
                if *trials == 0 {
                    bail!("trials must be at least 1");
                }
            }
            Task::Verify { suites } if suites.is_empty() => bail!("no verification suites selected"),
            _ => {}
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing experiment spec")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing experiment spec")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }
}
