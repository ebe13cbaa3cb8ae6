//! Browser bindings. Each exported function takes plain strings and numbers
//! and returns a JSON document; errors are returned as JavaScript strings.
//! The `*_json` functions hold the logic and are usable natively.

use kaczmarz::linalg::{LinearSystem, SparseMatrix};
use kaczmarz::orthogonality::{build_exact_graph, DEFAULT_ORTHOGONALITY_TOL};
use kaczmarz::problems::{GeneratorSpec, ProblemKind};
use kaczmarz::rates::{bounds_diagonal, DiagonalSpectrum};
use kaczmarz::selection::{RuleConfig, RuleKind};
use kaczmarz::solver::{normalize, solve, KaczmarzRun, StoppingCriteria};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest system the page will generate.
pub const MAX_ROWS: usize = 20_000;
pub const MAX_ITERS: u32 = 200_000;
/// Points per series sent back for plotting.
pub const MAX_POINTS: usize = 400;

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, String> {
    s.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("bad {what} value '{t}'"))
        })
        .collect()
}

fn parse_rules(s: &str) -> Result<Vec<RuleKind>, String> {
    let rules = s
        .split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<RuleKind>().map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    if rules.is_empty() {
        return Err("no rule given".into());
    }
    Ok(rules)
}

fn check_iters(iters: u32) -> Result<u64, String> {
    if iters == 0 || iters > MAX_ITERS {
        return Err(format!("iterations must be in 1..={MAX_ITERS}"));
    }
    Ok(u64::from(iters))
}

/// Evenly spaced indices into `0..len`, always keeping the last one.
fn sample_indices(len: usize, points: usize) -> Vec<usize> {
    if len <= points {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..points).map(|k| k * (len - 1) / (points - 1)).collect();
    idx.dedup();
    idx
}

#[derive(Debug, Serialize)]
pub struct Series {
    pub rule: String,
    pub label: String,
    pub iters: Vec<usize>,
    pub sq_error_norm: Vec<f64>,
    pub sq_dist_norm: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub problem: String,
    pub rows: usize,
    pub cols: usize,
    pub series: Vec<Series>,
}

/// Runs each rule on a generated problem and returns normalized error and
/// distance curves.
pub fn compare_rules_json(
    problem: &str,
    rules: &str,
    iters: u32,
    seed: u64,
) -> Result<String, String> {
    let kind: ProblemKind = problem.parse().map_err(err)?;
    let rules = parse_rules(rules)?;
    let iters = check_iters(iters)?;
    let sys = GeneratorSpec::new(kind.clone(), seed)
        .generate()
        .map_err(err)?
        .system;
    if sys.nrows() > MAX_ROWS {
        return Err(format!("at most {MAX_ROWS} rows in the browser"));
    }
    let graph = rules
        .iter()
        .any(|r| r.is_adaptive())
        .then(|| build_exact_graph(&sys, DEFAULT_ORTHOGONALITY_TOL));
    let stop = StoppingCriteria::max_iters(iters);
    let mut series = Vec::new();
    for rule in rules {
        let (_, trace) = solve(
            &sys,
            &RuleConfig::new(rule, seed),
            None,
            &stop,
            graph.as_ref(),
        )
        .map_err(err)?;
        let e = trace.sq_errors();
        let d = trace.sq_dists().ok();
        let idx = sample_indices(e.len(), MAX_POINTS);
        series.push(Series {
            rule: rule.to_string(),
            label: rule.label(),
            sq_error_norm: idx.iter().map(|&k| normalize(e[k], e[0])).collect(),
            sq_dist_norm: d.map(|d| idx.iter().map(|&k| normalize(d[k], d[0])).collect()),
            iters: idx,
        });
    }
    serde_json::to_string(&Comparison {
        problem: kind.to_string(),
        rows: sys.nrows(),
        cols: sys.ncols(),
        series,
    })
    .map_err(err)
}

/// Rate constants of a diagonal matrix, e.g. `"1, 2, 5"`.
pub fn diagonal_rates_json(lambda: &str) -> Result<String, String> {
    let spec = DiagonalSpectrum::new(parse_list(lambda, "diagonal")?).map_err(err)?;
    serde_json::to_string(&bounds_diagonal(&spec).map_err(err)?).map_err(err)
}

#[derive(Debug, Serialize)]
pub struct Trajectory {
    pub points: Vec<[f64; 2]>,
    pub rows: Vec<usize>,
    pub solution: [f64; 2],
}

/// Iterates of a rule on the lines `a_i . x = a_i . z` in the plane.
/// `rows` lists the coefficients `a_i` as `"a,b; c,d; ..."`.
pub fn trajectory_2d_json(
    rows: &str,
    solution: &str,
    start: &str,
    rule: &str,
    iters: u32,
    seed: u64,
) -> Result<String, String> {
    let a: Vec<Vec<f64>> = rows
        .split(';')
        .filter(|r| !r.trim().is_empty())
        .map(|r| parse_list(r, "row"))
        .collect::<Result<_, _>>()?;
    if a.is_empty() || a.iter().any(|r| r.len() != 2) {
        return Err("each row needs two coefficients".into());
    }
    let z = parse_list(solution, "solution")?;
    let x0 = parse_list(start, "start")?;
    if z.len() != 2 || x0.len() != 2 {
        return Err("points need two coordinates".into());
    }
    let rule: RuleKind = rule.parse().map_err(err)?;
    let iters = check_iters(iters)?;
    let matrix = SparseMatrix::from_dense_rows(&a).map_err(err)?;
    let b = matrix.mul_vec(&z).map_err(err)?;
    let sys = LinearSystem::new(matrix, b)
        .and_then(|s| s.with_reference(z.clone()))
        .map_err(err)?;
    let graph = rule
        .is_adaptive()
        .then(|| build_exact_graph(&sys, DEFAULT_ORTHOGONALITY_TOL));
    let stop = StoppingCriteria::max_iters(iters);
    let mut run = KaczmarzRun::new(
        &sys,
        &RuleConfig::new(rule, seed),
        Some(&x0),
        &stop,
        graph.as_ref(),
    )
    .map_err(err)?;
    let mut points = vec![[x0[0], x0[1]]];
    let mut chosen = Vec::new();
    while let Some(step) = run.step().map_err(err)? {
        chosen.push(step.row);
        points.push([run.x()[0], run.x()[1]]);
    }
    serde_json::to_string(&Trajectory {
        points,
        rows: chosen,
        solution: [z[0], z[1]],
    })
    .map_err(err)
}

#[wasm_bindgen]
pub fn compare_rules(problem: &str, rules: &str, iters: u32, seed: u32) -> Result<String, JsValue> {
    compare_rules_json(problem, rules, iters, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn diagonal_rates(lambda: &str) -> Result<String, JsValue> {
    diagonal_rates_json(lambda).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn trajectory_2d(
    rows: &str,
    solution: &str,
    start: &str,
    rule: &str,
    iters: u32,
    seed: u32,
) -> Result<String, JsValue> {
    trajectory_2d_json(rows, solution, start, rule, iters, u64::from(seed))
        .map_err(|e| JsValue::from_str(&e))
}
