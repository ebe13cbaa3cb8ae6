//! Run configuration from a TOML file merged with command-line flags.
//! Flags win over the file.
//!
//! ```toml
//! problem = "lattice:20"        # or a table: [problem] kind = "lattice" side = 20
//! rules = ["mr", "md", "uniform"]
//! iters = 5000
//! seeds = [0, 1, 2]
//! graph = "exact"
//! out = "results"
//! runs = 1000                   # validate: runs for statistical checks
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use kaczmarz::io::read_system;
use kaczmarz::linalg::LinearSystem;
use kaczmarz::orthogonality::{
    build_exact_graph, build_support_graph, OrthogonalityGraph, DEFAULT_ORTHOGONALITY_TOL,
};
use kaczmarz::problems::{GeneratorSpec, ProblemKind};
use kaczmarz::selection::RuleKind;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const DEFAULT_ITERS: u64 = 1000;
pub const DEFAULT_RUNS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphChoice {
    Exact,
    Support,
    None,
}

impl FromStr for GraphChoice {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        <Self as ValueEnum>::from_str(s, true)
            .map_err(|_| CliError::Usage(format!("unknown graph mode '{s}'")))
    }
}

impl GraphChoice {
    pub fn build(self, sys: &LinearSystem) -> Option<OrthogonalityGraph> {
        match self {
            GraphChoice::Exact => Some(build_exact_graph(sys, DEFAULT_ORTHOGONALITY_TOL)),
            GraphChoice::Support => Some(build_support_graph(sys)),
            GraphChoice::None => None,
        }
    }
}

/// Flags shared by the run subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Problem, e.g. `lattice:20`, `overdetermined:500x200`, `two-moons:2000:100:5`,
    /// `diagonal:1,2`, `random:50x20:0.3`, `feasible:30x5`, `box:4`
    #[arg(long)]
    pub problem: Option<String>,
    /// Directory holding matrix.mtx and rhs.txt instead of a generated problem
    #[arg(long, conflicts_with = "problem")]
    pub system: Option<PathBuf>,
    /// Selection rule; repeat for several
    #[arg(long = "rule")]
    pub rules: Vec<String>,
    #[arg(long)]
    pub iters: Option<u64>,
    /// Seed; repeat for several. Each seed drives both the generator and the rule.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Fixed generator seed for every run
    #[arg(long)]
    pub problem_seed: Option<u64>,
    #[arg(long, value_enum)]
    pub graph: Option<GraphChoice>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Generated(ProblemKind),
    Files(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub rules: Vec<RuleKind>,
    pub iters: u64,
    pub seeds: Vec<u64>,
    pub problem_seed: Option<u64>,
    pub graph: GraphChoice,
    pub out: PathBuf,
    pub runs: usize,
}

/// A problem instance and the seed that generated it.
pub struct Instance {
    pub system: LinearSystem,
    pub seed_used: Option<u64>,
    pub graph: Option<OrthogonalityGraph>,
}

#[derive(Debug, Default)]
struct FileConfig {
    problem: Option<ProblemSource>,
    rules: Vec<String>,
    iters: Option<u64>,
    seeds: Vec<u64>,
    problem_seed: Option<u64>,
    graph: Option<GraphChoice>,
    out: Option<PathBuf>,
    runs: Option<usize>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn as_u64(v: &toml::Value, key: &str) -> CliResult<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(usage(format!(
            "config key '{key}' must be a nonnegative integer"
        ))),
    }
}

fn as_str<'a>(v: &'a toml::Value, key: &str) -> CliResult<&'a str> {
    v.as_str()
        .ok_or_else(|| usage(format!("config key '{key}' must be a string")))
}

/// A single value or an array of them.
fn list(v: &toml::Value) -> Vec<&toml::Value> {
    match v {
        toml::Value::Array(a) => a.iter().collect(),
        other => vec![other],
    }
}

fn parse_file_config(text: &str, base: &Path) -> CliResult<FileConfig> {
    let table: toml::Table = toml::from_str(text).map_err(|e| usage(format!("config: {e}")))?;
    let mut cfg = FileConfig::default();
    for (key, v) in &table {
        match key.as_str() {
            "problem" => {
                cfg.problem = Some(match v {
                    toml::Value::String(s) => ProblemSource::Generated(s.parse()?),
                    toml::Value::Table(t) => {
                        let text = toml::to_string(t).map_err(|e| usage(e.to_string()))?;
                        let spec = GeneratorSpec::from_config_str(&text)?;
                        if t.contains_key("seed") {
                            cfg.problem_seed = Some(spec.seed);
                        }
                        ProblemSource::Generated(spec.kind)
                    }
                    _ => return Err(usage("config key 'problem' must be a string or a table")),
                })
            }
            "system" => cfg.problem = Some(ProblemSource::Files(base.join(as_str(v, key)?))),
            "rules" | "rule" => {
                for r in list(v) {
                    cfg.rules.push(as_str(r, key)?.to_string());
                }
            }
            "iters" => cfg.iters = Some(as_u64(v, key)?),
            "seeds" | "seed" => {
                for s in list(v) {
                    cfg.seeds.push(as_u64(s, key)?);
                }
            }
            "problem_seed" => cfg.problem_seed = Some(as_u64(v, key)?),
            "graph" => cfg.graph = Some(as_str(v, key)?.parse()?),
            "out" => cfg.out = Some(base.join(as_str(v, key)?)),
            "runs" => cfg.runs = Some(as_u64(v, key)? as usize),
            other => return Err(usage(format!("unknown config key '{other}'"))),
        }
    }
    Ok(cfg)
}

impl RunConfig {
    /// Merges the config file named by `--config` (if any) with the flags.
    /// `need_rules` is false for commands that only need the problem.
    pub fn resolve(args: &RunArgs, runs: Option<usize>, need_rules: bool) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new("."));
                parse_file_config(&text, base)?
            }
            None => FileConfig::default(),
        };
        let problem = if let Some(p) = &args.problem {
            ProblemSource::Generated(p.parse()?)
        } else if let Some(dir) = &args.system {
            ProblemSource::Files(dir.clone())
        } else {
            file.problem
                .ok_or_else(|| usage("no problem given (use --problem, --system or --config)"))?
        };
        let rule_names = if args.rules.is_empty() {
            file.rules
        } else {
            args.rules.clone()
        };
        let rules = rule_names
            .iter()
            .map(|r| r.parse::<RuleKind>())
            .collect::<Result<Vec<_>, _>>()?;
        let seeds = if args.seeds.is_empty() {
            file.seeds
        } else {
            args.seeds.clone()
        };
        let cfg = RunConfig {
            problem,
            rules,
            iters: args.iters.or(file.iters).unwrap_or(DEFAULT_ITERS),
            seeds: if seeds.is_empty() { vec![0] } else { seeds },
            problem_seed: args.problem_seed.or(file.problem_seed),
            graph: args.graph.or(file.graph).unwrap_or(GraphChoice::Exact),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("kacz-out")),
            runs: runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
        };
        if need_rules {
            cfg.validate()?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.rules.is_empty() {
            return Err(usage("at least one --rule is required"));
        }
        if self.iters == 0 {
            return Err(usage("--iters must be positive"));
        }
        if self.runs == 0 {
            return Err(usage("--runs must be positive"));
        }
        if self.graph == GraphChoice::None {
            if let Some(r) = self.rules.iter().find(|r| r.is_adaptive()) {
                return Err(usage(format!(
                    "rule {r} needs an orthogonality graph (use --graph exact or support)"
                )));
            }
        }
        Ok(())
    }

    pub fn problem_label(&self) -> String {
        match &self.problem {
            ProblemSource::Generated(k) => k.to_string(),
            ProblemSource::Files(p) => p.display().to_string(),
        }
    }

    /// Problem instance for run seed `seed`.
    pub fn instance(&self, seed: u64) -> CliResult<Instance> {
        let (system, seed_used) = match &self.problem {
            ProblemSource::Generated(kind) => {
                let g = GeneratorSpec::new(kind.clone(), self.problem_seed.unwrap_or(seed))
                    .generate()?;
                (g.system, Some(g.seed_used))
            }
            ProblemSource::Files(dir) => (read_system(dir)?, None),
        };
        let graph = self.graph.build(&system);
        Ok(Instance {
            system,
            seed_used,
            graph,
        })
    }

    /// Whether every seed sees the same system.
    pub fn shared_instance(&self) -> bool {
        matches!(self.problem, ProblemSource::Files(_)) || self.problem_seed.is_some()
    }
}

/// File-name-safe form of a rule name.
pub fn rule_file_stem(rule: RuleKind) -> String {
    rule.to_string().replace([':', '.'], "_")
}
