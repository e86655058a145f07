//! Run configuration: TOML file, command-line overrides, resolution.
//!
//! ```toml
//! command = "denoise"        # generate | basis | roundtrip | denoise | locality | verify
//! out = "out/denoise"
//! seed = 7
//! depth = 3
//! eps = 0.3
//! sampling = "greedy"        # greedy | alternating
//! trials = 20
//! sigma = 0.5
//! keep = []                  # k values for the compression sweep; empty picks 10
//! verbose = false
//!
//! [graph]
//! kind = "grid"              # ring | path | complete | grid | random_geometric | file
//! rows = 10
//! cols = 10
//!
//! [filter]
//! design = "hstar"           # hstar | minimax
//! hstar = 2.0
//!
//! [threshold]
//! rule = "median"            # median | fixed
//! r = 0.0
//! direction = "zero_above"   # zero_above | zero_below
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use graph_filterbank::filterbank::FilterDesign;
use graph_filterbank::multires::{SamplingRule, ThresholdRule};
use graph_filterbank::GraphKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Generate,
    Basis,
    Roundtrip,
    Denoise,
    Locality,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    Ring { n: usize },
    Path { n: usize },
    Complete { n: usize },
    Grid { rows: usize, cols: usize },
    RandomGeometric { n: usize, radius: f64 },
    File { path: PathBuf },
}

impl GraphSource {
    pub fn generator(&self) -> Option<GraphKind> {
        Some(match *self {
            GraphSource::Ring { n } => GraphKind::Ring { n },
            GraphSource::Path { n } => GraphKind::Path { n },
            GraphSource::Complete { n } => GraphKind::Complete { n },
            GraphSource::Grid { rows, cols } => GraphKind::Grid { rows, cols },
            GraphSource::RandomGeometric { n, radius } => GraphKind::RandomGeometric { n, radius },
            GraphSource::File { .. } => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    Hstar { hstar: f64 },
    Minimax,
}

impl FilterSpec {
    pub fn design(&self) -> FilterDesign {
        match *self {
            FilterSpec::Hstar { hstar } => FilterDesign::ConstantHStar(hstar),
            FilterSpec::Minimax => FilterDesign::MinimaxHalfBand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdChoice {
    /// Median absolute value of the injected noise.
    Median,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    pub rule: ThresholdChoice,
    pub r: f64,
    pub direction: ThresholdRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub seed: u64,
    pub depth: usize,
    pub eps: f64,
    pub sampling: SamplingRule,
    pub trials: usize,
    pub sigma: f64,
    pub keep: Vec<usize>,
    pub verbose: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pyramid: Option<PathBuf>,
    pub graph: GraphSource,
    pub filter: FilterSpec,
    pub threshold: ThresholdSpec,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let depth = match command {
            Command::Denoise | Command::Locality => 3,
            _ => 1,
        };
        RunConfig {
            command,
            out: PathBuf::from("out"),
            seed: 0,
            depth,
            eps: 0.3,
            sampling: SamplingRule::Greedy,
            trials: 20,
            sigma: 0.5,
            keep: Vec::new(),
            verbose: false,
            pyramid: None,
            graph: GraphSource::Ring { n: 16 },
            filter: FilterSpec::Hstar { hstar: 2.0 },
            threshold: ThresholdSpec { rule: ThresholdChoice::Median, r: 0.0, direction: ThresholdRule::ZeroAbove },
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.depth == 0 {
            bail!("depth must be at least 1");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            bail!("eps = {} outside (0, 1)", self.eps);
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            bail!("sigma = {} must be a non-negative number", self.sigma);
        }
        if let FilterSpec::Hstar { hstar } = self.filter {
            if !(0.0..=2.0).contains(&hstar) {
                bail!("hstar = {hstar} outside [0, 2]");
            }
        }
        if self.threshold.rule == ThresholdChoice::Fixed && !(self.threshold.r >= 0.0) {
            bail!("threshold r = {} must be non-negative", self.threshold.r);
        }
        if self.keep.contains(&0) {
            bail!("kept-coefficient counts must be positive");
        }
        Ok(())
    }
}

/// Flags shared by every verb. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration; flags given alongside take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Generator name (ring, path, complete, grid, random_geometric) or an edge-list file.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// Connection radius for random geometric graphs.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Constant h* in [0, 2], or `minimax` for the half-band fit.
    #[arg(long)]
    pub hstar: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Fixed threshold, or `median` for the median absolute noise value.
    #[arg(long)]
    pub threshold: Option<String>,
    /// Zero highpass entries above (default) or below the threshold.
    #[arg(long, value_enum)]
    pub threshold_direction: Option<Direction>,
    #[arg(long, value_enum)]
    pub sampling: Option<Sampling>,
    /// Number of random signals for roundtrip.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Noise standard deviation for denoise.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated kept-coefficient counts for the compression sweep.
    #[arg(long, value_delimiter = ',')]
    pub keep: Option<Vec<usize>>,
    /// Saved pyramid directory to audit.
    #[arg(long)]
    pub pyramid: Option<PathBuf>,
    /// Also write the dual bisection trace.
    #[arg(long)]
    pub verbose: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sampling {
    Greedy,
    Alternating,
}

fn default_radius(n: usize) -> f64 {
    (2.0 * (n as f64).ln() / n as f64).sqrt()
}

pub fn resolve(command: Command, o: &Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let mut c = RunConfig::load(path)?;
            c.command = command;
            c
        }
        None => RunConfig::defaults(command),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(d) = o.depth {
        cfg.depth = d;
    }
    if let Some(e) = o.eps {
        cfg.eps = e;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if let Some(s) = o.sigma {
        cfg.sigma = s;
    }
    if let Some(k) = &o.keep {
        cfg.keep = k.clone();
    }
    if let Some(p) = &o.pyramid {
        cfg.pyramid = Some(p.clone());
    }
    if let Some(out) = &o.out {
        cfg.out = out.clone();
    }
    cfg.verbose |= o.verbose;
    if let Some(s) = o.sampling {
        cfg.sampling = match s {
            Sampling::Greedy => SamplingRule::Greedy,
            Sampling::Alternating => SamplingRule::Alternating,
        };
    }
    if let Some(d) = o.threshold_direction {
        cfg.threshold.direction = match d {
            Direction::Above => ThresholdRule::ZeroAbove,
            Direction::Below => ThresholdRule::ZeroBelow,
        };
    }
    if let Some(t) = &o.threshold {
        if t.eq_ignore_ascii_case("median") {
            cfg.threshold.rule = ThresholdChoice::Median;
        } else {
            cfg.threshold.rule = ThresholdChoice::Fixed;
            cfg.threshold.r = t.parse().with_context(|| format!("--threshold {t:?} is neither `median` nor a number"))?;
        }
    }
    if let Some(h) = &o.hstar {
        cfg.filter = if h.eq_ignore_ascii_case("minimax") {
            FilterSpec::Minimax
        } else {
            FilterSpec::Hstar { hstar: h.parse().with_context(|| format!("--hstar {h:?} is neither `minimax` nor a number"))? }
        };
    }
    cfg.graph = resolve_graph(&cfg.graph, o)?;
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_graph(current: &GraphSource, o: &Overrides) -> anyhow::Result<GraphSource> {
    let size = |fallback: usize| o.n.unwrap_or(fallback);
    let current_n = match *current {
        GraphSource::Ring { n } | GraphSource::Path { n } | GraphSource::Complete { n } => n,
        GraphSource::RandomGeometric { n, .. } => n,
        GraphSource::Grid { rows, cols } => rows * cols,
        GraphSource::File { .. } => 16,
    };
    let name = match &o.graph {
        Some(name) => name.as_str(),
        None => {
            // Only size flags given: apply them to the configured generator.
            return Ok(match current.clone() {
                GraphSource::Ring { n } => GraphSource::Ring { n: size(n) },
                GraphSource::Path { n } => GraphSource::Path { n: size(n) },
                GraphSource::Complete { n } => GraphSource::Complete { n: size(n) },
                GraphSource::Grid { rows, cols } => {
                    GraphSource::Grid { rows: o.rows.unwrap_or(rows), cols: o.cols.unwrap_or(cols) }
                }
                GraphSource::RandomGeometric { n, radius } => {
                    let n2 = size(n);
                    let radius = o.radius.unwrap_or(if n2 == n { radius } else { default_radius(n2) });
                    GraphSource::RandomGeometric { n: n2, radius }
                }
                file @ GraphSource::File { .. } => file,
            });
        }
    };
    let n = size(current_n);
    Ok(match name {
        "ring" => GraphSource::Ring { n },
        "path" => GraphSource::Path { n },
        "complete" => GraphSource::Complete { n },
        "grid" => {
            let side = (n as f64).sqrt().round() as usize;
            GraphSource::Grid { rows: o.rows.unwrap_or(side), cols: o.cols.unwrap_or(side) }
        }
        "random_geometric" | "rgg" => {
            GraphSource::RandomGeometric { n, radius: o.radius.unwrap_or_else(|| default_radius(n)) }
        }
        path => {
            let p = PathBuf::from(path);
            if !p.exists() {
                bail!("--graph {path:?} is neither a generator name nor an existing file");
            }
            GraphSource::File { path: p }
        }
    })
}
