use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use kaczmarz::io::write_system;
use kaczmarz::linalg::{dist_sq, LinearSystem};
use kaczmarz::problems::GeneratorSpec;
use kaczmarz::rates::{
    adaptive_factors, bounds_general, validate_trace, AdaptiveFactors, RateBound, StatisticalCheck,
    StatisticalReport,
};
use kaczmarz::selection::{CdRule, CoordinateDescent, RuleConfig, RuleKind};
use kaczmarz::solver::{normalize, solve, ConvergenceTrace, KaczmarzRun, StoppingCriteria};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{rule_file_stem, Instance, ProblemSource, RunConfig};
use crate::error::{CliError, CliResult};

pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.json";
pub const COMPARE_FILE: &str = "compare.json";
pub const PROBLEM_FILE: &str = "problem.toml";

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut f =
        fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn stop(iters: u64) -> StoppingCriteria {
    StoppingCriteria::max_iters(iters)
}

/// Instances for every seed, or a single shared one.
fn instances(cfg: &RunConfig) -> CliResult<Vec<Instance>> {
    if cfg.shared_instance() {
        Ok(vec![cfg.instance(cfg.seeds[0])?])
    } else {
        cfg.seeds.par_iter().map(|&s| cfg.instance(s)).collect()
    }
}

fn instance_for<'a>(cfg: &RunConfig, all: &'a [Instance], seed_index: usize) -> &'a Instance {
    if cfg.shared_instance() {
        &all[0]
    } else {
        &all[seed_index]
    }
}

#[derive(Debug, Serialize)]
pub struct GenerateReport {
    pub problem: String,
    pub seed_used: Option<u64>,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub out: PathBuf,
}

/// Writes the system for the first seed to the output directory together
/// with the generator configuration that reproduces it.
pub fn generate(cfg: &RunConfig) -> CliResult<GenerateReport> {
    let ProblemSource::Generated(kind) = &cfg.problem else {
        return Err(CliError::Usage("generate needs --problem".into()));
    };
    let seed = cfg.problem_seed.unwrap_or(cfg.seeds[0]);
    let g = GeneratorSpec::new(kind.clone(), seed).generate()?;
    create_dir(&cfg.out)?;
    write_system(&g.system, &cfg.out)?;
    let spec = GeneratorSpec::new(kind.clone(), g.seed_used);
    fs::write(cfg.out.join(PROBLEM_FILE), spec.to_config_string())?;
    Ok(GenerateReport {
        problem: kind.to_string(),
        seed_used: Some(g.seed_used),
        rows: g.system.nrows(),
        cols: g.system.ncols(),
        nnz: g.system.matrix().nnz(),
        out: cfg.out.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub seed: u64,
    pub problem_seed: Option<u64>,
    pub iterations: usize,
    pub final_sq_error_norm: f64,
    pub final_sq_dist_norm: Option<f64>,
    pub file: String,
}

#[derive(Debug, Serialize)]
pub struct RuleSummary {
    pub rule: String,
    pub label: String,
    /// Median over seeds.
    pub final_sq_error_norm: f64,
    pub final_sq_dist_norm: Option<f64>,
    pub runs: Vec<CellSummary>,
}

#[derive(Debug, Serialize)]
pub struct BenchSummary {
    pub problem: String,
    pub iterations: u64,
    pub graph: crate::config::GraphChoice,
    pub seeds: Vec<u64>,
    pub rules: Vec<RuleSummary>,
}

/// One trace per (rule, seed) and a summary of medians over seeds.
pub fn bench(cfg: &RunConfig) -> CliResult<BenchSummary> {
    create_dir(&cfg.out)?;
    let inst = instances(cfg)?;
    let cells: Vec<(usize, usize)> = (0..cfg.rules.len())
        .flat_map(|r| (0..cfg.seeds.len()).map(move |s| (r, s)))
        .collect();
    let results: Vec<CellSummary> = cells
        .par_iter()
        .map(|&(r, s)| -> CliResult<CellSummary> {
            let rule = cfg.rules[r];
            let seed = cfg.seeds[s];
            let instance = instance_for(cfg, &inst, s);
            let (_, trace) = solve(
                &instance.system,
                &RuleConfig::new(rule, seed),
                None,
                &stop(cfg.iters),
                instance.graph.as_ref(),
            )?;
            let file = format!("{}_seed{seed}.csv", rule_file_stem(rule));
            let path = cfg.out.join(&file);
            let f = fs::File::create(&path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            trace.write_csv(std::io::BufWriter::new(f))?;
            Ok(CellSummary {
                seed,
                problem_seed: instance.seed_used,
                iterations: trace.len(),
                final_sq_error_norm: trace.final_sq_error_norm(),
                final_sq_dist_norm: trace.final_sq_dist_norm(),
                file,
            })
        })
        .collect::<CliResult<_>>()?;
    let per_rule = cfg.seeds.len();
    let rules = cfg
        .rules
        .iter()
        .zip(results.chunks(per_rule))
        .map(|(rule, runs)| {
            let errs: Vec<f64> = runs.iter().map(|c| c.final_sq_error_norm).collect();
            let dists: Option<Vec<f64>> = runs.iter().map(|c| c.final_sq_dist_norm).collect();
            RuleSummary {
                rule: rule.to_string(),
                label: rule.label(),
                final_sq_error_norm: median(&errs),
                final_sq_dist_norm: dists.map(|d| median(&d)),
                runs: runs.to_vec(),
            }
        })
        .collect();
    let summary = BenchSummary {
        problem: cfg.problem_label(),
        iterations: cfg.iters,
        graph: cfg.graph,
        seeds: cfg.seeds.clone(),
        rules,
    };
    write_json(&cfg.out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct Constants {
    pub sigma_two: f64,
    pub sigma_two_bar: f64,
    pub sigma_inf: f64,
    pub sigma_inf_bar: f64,
    /// `sigma_inf` and `sigma_inf_bar` are lower bounds, not exact values.
    pub sigma_inf_substituted: bool,
    pub u_inf: f64,
    pub u_tight: f64,
    pub nu: f64,
    pub mr_inf: f64,
    pub md: f64,
}

impl From<&RateBound> for Constants {
    fn from(b: &RateBound) -> Self {
        Self {
            sigma_two: b.sigma_two,
            sigma_two_bar: b.sigma_two_bar,
            sigma_inf: b.sigma_inf,
            sigma_inf_bar: b.sigma_inf_bar,
            sigma_inf_substituted: b.sigma_inf_substituted,
            u_inf: b.u_inf,
            u_tight: b.u_tight,
            nu: b.nu,
            mr_inf: b.mr_inf,
            md: b.md,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RuleReport {
    pub rule: String,
    pub label: String,
    /// `deterministic`, `statistical`, or `none` for rules without a bound.
    pub check: &'static str,
    pub bound: Option<f64>,
    pub worst_ratio: f64,
    pub mean_ratio: f64,
    pub violations: usize,
    pub checked_steps: usize,
    pub statistical: Option<StatisticalReport>,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub problem: String,
    /// Constants of the first instance.
    pub constants: Constants,
    pub rules: Vec<RuleReport>,
    pub passed: bool,
}

fn require_reference(sys: &LinearSystem) -> CliResult<()> {
    if !sys.is_equality_only() {
        return Err(CliError::Usage(
            "bound validation needs an equality system".into(),
        ));
    }
    if sys.reference().is_none() {
        return Err(CliError::Usage(
            "bound validation needs a reference solution".into(),
        ));
    }
    Ok(())
}

fn deterministic_report(
    rule: RuleKind,
    reports: &[kaczmarz::rates::ValidationReport],
) -> RuleReport {
    let checked: usize = reports.iter().map(|r| r.checked_steps).sum();
    let mean = if checked > 0 {
        reports
            .iter()
            .map(|r| r.mean_ratio * r.checked_steps as f64)
            .sum::<f64>()
            / checked as f64
    } else {
        0.0
    };
    let violations = reports.iter().map(|r| r.violations).sum();
    let has_bound = reports.first().is_some_and(|r| r.deterministic);
    RuleReport {
        rule: rule.to_string(),
        label: rule.label(),
        check: if has_bound { "deterministic" } else { "none" },
        bound: reports.first().and_then(|r| r.bound),
        worst_ratio: reports.iter().map(|r| r.worst_ratio).fold(0.0, f64::max),
        mean_ratio: mean,
        violations,
        checked_steps: checked,
        statistical: None,
        passed: violations == 0,
    }
}

/// Expected-rate check of a random rule over `cfg.runs` runs on one
/// instance, with per-step factors from the selectable set for adaptive
/// rules.
fn statistical_report(
    cfg: &RunConfig,
    instance: &Instance,
    bound: &RateBound,
    rule: RuleKind,
) -> CliResult<RuleReport> {
    let sys = &instance.system;
    let horizon = cfg.iters as usize;
    let base = cfg.seeds[0];
    let runs: Vec<(ConvergenceTrace, Vec<f64>)> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| -> CliResult<(ConvergenceTrace, Vec<f64>)> {
            let mut run = KaczmarzRun::new(
                sys,
                &RuleConfig::new(rule, base.wrapping_add(r)),
                None,
                &stop(cfg.iters),
                instance.graph.as_ref(),
            )?;
            let mut cache: HashMap<Vec<bool>, AdaptiveFactors> = HashMap::new();
            let mut factors = Vec::with_capacity(horizon);
            loop {
                let factor = match rule {
                    RuleKind::Uniform => bound.u_tight,
                    RuleKind::NonUniform => bound.nu,
                    _ => {
                        let set = run.selector().selectable().expect("adaptive rule");
                        let f = match cache.get(set.flags()) {
                            Some(f) => *f,
                            None => {
                                let f = adaptive_factors(sys, set)?;
                                cache.insert(set.flags().to_vec(), f);
                                f
                            }
                        };
                        if rule == RuleKind::AdaptiveUniform {
                            f.uniform
                        } else {
                            f.nonuniform
                        }
                    }
                };
                if run.step()?.is_none() {
                    break;
                }
                factors.push(factor);
            }
            Ok((run.trace().clone(), factors))
        })
        .collect::<CliResult<_>>()?;
    let mut check = StatisticalCheck::new(horizon);
    for (trace, factors) in &runs {
        check.add_run(trace, factors)?;
    }
    let rep = check.report();
    Ok(RuleReport {
        rule: rule.to_string(),
        label: rule.label(),
        check: "statistical",
        bound: bound.factor_for(rule),
        worst_ratio: f64::NAN,
        mean_ratio: rep.mean_ratio,
        violations: 0,
        checked_steps: 0,
        statistical: Some(rep),
        passed: rep.passed,
    })
}

/// Checks every rule against its bound. Greedy rules are checked at every
/// step on every seed; U, NU and the adaptive rules by their mean over
/// `cfg.runs` runs on the first instance.
pub fn validate(cfg: &RunConfig) -> CliResult<ValidateReport> {
    let inst = instances(cfg)?;
    for i in &inst {
        require_reference(&i.system)?;
    }
    let bounds: Vec<RateBound> = inst
        .par_iter()
        .map(|i| bounds_general(&i.system))
        .collect::<Result<_, _>>()?;
    let mut rules = Vec::new();
    for &rule in &cfg.rules {
        let statistical = matches!(
            rule,
            RuleKind::Uniform
                | RuleKind::NonUniform
                | RuleKind::AdaptiveUniform
                | RuleKind::AdaptiveNonUniform
        );
        if statistical {
            rules.push(statistical_report(cfg, &inst[0], &bounds[0], rule)?);
            continue;
        }
        let reports = (0..cfg.seeds.len())
            .into_par_iter()
            .map(|s| -> CliResult<_> {
                let k = if cfg.shared_instance() { 0 } else { s };
                let instance = &inst[k];
                let (_, trace) = solve(
                    &instance.system,
                    &RuleConfig::new(rule, cfg.seeds[s]),
                    None,
                    &stop(cfg.iters),
                    instance.graph.as_ref(),
                )?;
                Ok(validate_trace(&trace, &bounds[k], rule)?)
            })
            .collect::<CliResult<Vec<_>>>()?;
        rules.push(deterministic_report(rule, &reports));
    }
    let passed = rules.iter().all(|r| r.passed);
    Ok(ValidateReport {
        problem: cfg.problem_label(),
        constants: Constants::from(&bounds[0]),
        rules,
        passed,
    })
}

/// Checks a recorded trace of the first rule against the first instance.
pub fn validate_trace_file(cfg: &RunConfig, path: &Path) -> CliResult<ValidateReport> {
    let instance = cfg.instance(cfg.seeds[0])?;
    require_reference(&instance.system)?;
    let rule = cfg.rules[0];
    if !rule.is_greedy() {
        return Err(CliError::Usage(format!(
            "a single trace can only be checked for a greedy rule, not {rule}"
        )));
    }
    let f = fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let trace = ConvergenceTrace::read_csv(std::io::BufReader::new(f))?;
    let bound = bounds_general(&instance.system)?;
    let rep = validate_trace(&trace, &bound, rule)?;
    let rules = vec![deterministic_report(rule, &[rep])];
    let passed = rules[0].passed;
    Ok(ValidateReport {
        problem: cfg.problem_label(),
        constants: Constants::from(&bound),
        rules,
        passed,
    })
}

#[derive(Debug, Serialize)]
struct PassRow {
    iter: u64,
    effective_passes: f64,
    sq_error: f64,
    sq_error_norm: f64,
    sq_dist: Option<f64>,
    sq_dist_norm: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub file: String,
    pub iterations: u64,
    pub effective_passes: f64,
    pub final_sq_error_norm: f64,
    pub final_sq_dist_norm: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CompareSummary {
    pub problem: String,
    pub rows: usize,
    pub cols: usize,
    pub methods: Vec<MethodSummary>,
}

fn write_pass_rows(path: &Path, rows: &[PassRow]) -> CliResult<()> {
    let f = fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn summarize(method: String, file: String, rows: &[PassRow]) -> MethodSummary {
    let last = rows.last().expect("rows include the initial state");
    MethodSummary {
        method,
        file,
        iterations: last.iter,
        effective_passes: last.effective_passes,
        final_sq_error_norm: last.sq_error_norm,
        final_sq_dist_norm: last.sq_dist_norm,
    }
}

/// Kaczmarz traces for each rule and coordinate-descent traces for the
/// Gauss-Southwell rules over the same number of effective passes. One
/// Kaczmarz pass is `m` iterations and one coordinate-descent pass is `n`.
pub fn compare_cd(cfg: &RunConfig) -> CliResult<CompareSummary> {
    create_dir(&cfg.out)?;
    let instance = cfg.instance(cfg.seeds[0])?;
    let sys = &instance.system;
    if !sys.is_equality_only() {
        return Err(CliError::Usage(
            "compare-cd needs an equality system".into(),
        ));
    }
    let (m, n) = (sys.nrows() as f64, sys.ncols() as f64);
    let z = sys.reference();
    let mut methods = Vec::new();

    for &rule in &cfg.rules {
        let (_, trace) = solve(
            sys,
            &RuleConfig::new(rule, cfg.seeds[0]),
            None,
            &stop(cfg.iters),
            instance.graph.as_ref(),
        )?;
        let errors = trace.sq_errors();
        let dists = trace.sq_dists().ok();
        let rows: Vec<PassRow> = errors
            .iter()
            .enumerate()
            .map(|(k, &e)| PassRow {
                iter: k as u64,
                effective_passes: k as f64 / m,
                sq_error: e,
                sq_error_norm: normalize(e, errors[0]),
                sq_dist: dists.as_ref().map(|d| d[k]),
                sq_dist_norm: dists.as_ref().map(|d| normalize(d[k], d[0])),
            })
            .collect();
        let file = format!("kaczmarz_{}.csv", rule_file_stem(rule));
        write_pass_rows(&cfg.out.join(&file), &rows)?;
        methods.push(summarize(format!("kaczmarz-{rule}"), file, &rows));
    }

    let passes = cfg.iters as f64 / m;
    let cd_iters = (passes * n).round() as u64;
    for cd_rule in [CdRule::GaussSouthwell, CdRule::GaussSouthwellLipschitz] {
        let x0 = vec![0.0; sys.ncols()];
        let mut cd = CoordinateDescent::new(sys.matrix(), sys.rhs(), &x0, cd_rule)?;
        let e0 = cd.sq_error();
        let d0 = z.map(|z| dist_sq(&x0, z));
        let row = |k: u64, cd: &CoordinateDescent| {
            let e = cd.sq_error();
            let d = z.map(|z| dist_sq(cd.x(), z));
            PassRow {
                iter: k,
                effective_passes: k as f64 / n,
                sq_error: e,
                sq_error_norm: normalize(e, e0),
                sq_dist: d,
                sq_dist_norm: d.zip(d0).map(|(d, d0)| normalize(d, d0)),
            }
        };
        let mut rows = vec![row(0, &cd)];
        for k in 1..=cd_iters {
            cd.step()?;
            rows.push(row(k, &cd));
        }
        let file = format!("cd_{}.csv", cd_rule.label().to_lowercase());
        write_pass_rows(&cfg.out.join(&file), &rows)?;
        methods.push(summarize(format!("cd-{}", cd_rule.label()), file, &rows));
    }

    let summary = CompareSummary {
        problem: cfg.problem_label(),
        rows: sys.nrows(),
        cols: sys.ncols(),
        methods,
    };
    write_json(&cfg.out.join(COMPARE_FILE), &summary)?;
    Ok(summary)
}

/// Writes the validation report to the output directory.
pub fn write_report(cfg: &RunConfig, report: &ValidateReport) -> CliResult<()> {
    create_dir(&cfg.out)?;
    write_json(&cfg.out.join(REPORT_FILE), report)
}
