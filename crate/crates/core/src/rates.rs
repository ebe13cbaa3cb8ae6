//! Convergence-rate constants of each selection rule and checks of recorded
//! traces against them.
//!
//! Every constant is a contraction factor `rho` in
//! `||x_{k+1} - x*||^2 <= rho ||x_k - x*||^2` (in expectation for random
//! rules), so smaller is faster.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    restricted_sigma_two, sigma_infinity_oracle, sigma_two, LinearSystem, SIGMA_INF_MAX_COLS,
};
use crate::orthogonality::{star_bound, OrthogonalityGraph, SelectableSet, StarBoundResult};
use crate::selection::{GreedyTarget, RuleKind};
use crate::solver::ConvergenceTrace;

/// Slack for per-step deterministic bound checks.
pub const DETERMINISTIC_SLACK: f64 = 1e-9;
/// Steps whose previous squared distance is below this fraction of the
/// initial one are not checked: the ratio is dominated by rounding there.
pub const DISTANCE_FLOOR_REL: f64 = 1e-12;
/// Tolerance for the ordering checks between constants.
pub const ORDERING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBound {
    pub m: usize,
    /// `sigma(A, 2)`
    pub sigma_two: f64,
    /// `sigma(A_bar, 2)` for the row-normalized matrix
    pub sigma_two_bar: f64,
    /// `sigma(A, inf)`, or a lower bound when `sigma_inf_substituted`
    pub sigma_inf: f64,
    /// `sigma(A_bar, inf)`, or a lower bound when `sigma_inf_substituted`
    pub sigma_inf_bar: f64,
    pub sigma_inf_substituted: bool,
    pub frobenius_sq: f64,
    /// `||A||_{inf,2}^2`
    pub max_norm_sq: f64,
    pub row_norms_sq: Vec<f64>,
    /// Uniform, loose: `1 - sigma(A,2)^2 / (m ||A||_{inf,2}^2)`
    pub u_inf: f64,
    /// Uniform: `1 - sigma(A_bar,2)^2 / m`
    pub u_tight: f64,
    /// Non-uniform: `1 - sigma(A,2)^2 / ||A||_F^2`
    pub nu: f64,
    /// Maximum residual: `1 - sigma(A,inf)^2 / ||A||_{inf,2}^2`
    pub mr_inf: f64,
    /// Maximum distance: `1 - sigma(A_bar,inf)^2`
    pub md: f64,
}

impl RateBound {
    fn assemble(
        sigma_two: f64,
        sigma_two_bar: f64,
        sigma_inf: f64,
        sigma_inf_bar: f64,
        sigma_inf_substituted: bool,
        row_norms_sq: Vec<f64>,
    ) -> Self {
        let m = row_norms_sq.len();
        let frobenius_sq: f64 = row_norms_sq.iter().sum();
        let max_norm_sq = row_norms_sq.iter().copied().fold(0.0, f64::max);
        let mf = m as f64;
        Self {
            m,
            sigma_two,
            sigma_two_bar,
            sigma_inf,
            sigma_inf_bar,
            sigma_inf_substituted,
            frobenius_sq,
            max_norm_sq,
            u_inf: 1.0 - sigma_two * sigma_two / (mf * max_norm_sq),
            u_tight: 1.0 - sigma_two_bar * sigma_two_bar / mf,
            nu: 1.0 - sigma_two * sigma_two / frobenius_sq,
            mr_inf: 1.0 - sigma_inf * sigma_inf / max_norm_sq,
            md: 1.0 - sigma_inf_bar * sigma_inf_bar,
            row_norms_sq,
        }
    }

    /// Maximum-residual factor for a step on row `i`:
    /// `1 - sigma(A,inf)^2 / ||a_i||^2`.
    pub fn mr_tight_factor(&self, i: usize) -> f64 {
        1.0 - self.sigma_inf * self.sigma_inf / self.row_norms_sq[i]
    }

    /// Factors along a sequence of selected rows.
    pub fn mr_tight_seq(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.mr_tight_factor(i)).collect()
    }

    /// Checks that every constant lies in `[0, 1)` and that the orderings
    /// between them hold.
    pub fn check_ordering(&self) -> Result<()> {
        let named = [
            ("u_inf", self.u_inf),
            ("u_tight", self.u_tight),
            ("nu", self.nu),
            ("mr_inf", self.mr_inf),
            ("md", self.md),
        ];
        for (name, v) in named {
            if !(-ORDERING_TOL..1.0).contains(&v) {
                return Err(Error::RateOrdering(format!("{name} = {v} outside [0, 1)")));
            }
        }
        for (name, v) in &named[1..] {
            if self.u_inf < v - ORDERING_TOL {
                return Err(Error::RateOrdering(format!(
                    "u_inf = {} < {name} = {v}",
                    self.u_inf
                )));
            }
        }
        for (name, v) in [
            ("u_tight", self.u_tight),
            ("nu", self.nu),
            ("mr_inf", self.mr_inf),
        ] {
            if self.md > v + ORDERING_TOL {
                return Err(Error::RateOrdering(format!(
                    "md = {} > {name} = {v}",
                    self.md
                )));
            }
        }
        for i in 0..self.m {
            if self.mr_tight_factor(i) > self.mr_inf + ORDERING_TOL {
                return Err(Error::RateOrdering(format!(
                    "tight factor of row {i} exceeds mr_inf"
                )));
            }
        }
        Ok(())
    }

    /// Constant factor for rules that have one.
    pub fn factor_for(&self, rule: RuleKind) -> Option<f64> {
        match rule {
            RuleKind::Uniform => Some(self.u_tight),
            RuleKind::NonUniform => Some(self.nu),
            RuleKind::MaxResidual => Some(self.mr_inf),
            RuleKind::MaxDistance => Some(self.md),
            RuleKind::ApproxMultiplicative {
                eps,
                target: GreedyTarget::Distance,
            } => Some(1.0 - (1.0 - eps).powi(2) * self.sigma_inf_bar * self.sigma_inf_bar),
            _ => None,
        }
    }
}

/// Positive diagonal entries of a diagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSpectrum {
    lambda: Vec<f64>,
}

impl DiagonalSpectrum {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        if let Some(l) = lambda.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "diagonal entry {l} is not positive"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda
    }
}

/// All constants from closed forms for a diagonal matrix.
pub fn bounds_diagonal(spec: &DiagonalSpectrum) -> Result<RateBound> {
    let l = spec.values();
    let m = l.len() as f64;
    let min = l.iter().copied().fold(f64::INFINITY, f64::min);
    let inv_sq_sum: f64 = l.iter().map(|v| 1.0 / (v * v)).sum();
    Ok(RateBound::assemble(
        min,
        1.0,
        inv_sq_sum.powf(-0.5),
        1.0 / m.sqrt(),
        false,
        l.iter().map(|v| v * v).collect(),
    ))
}

/// All constants for a general system. `sigma(A, inf)` is computed exactly
/// for diagonal matrices and for at most three columns; otherwise it is
/// replaced by the lower bound `sigma(A,2) / sqrt(m)`, `sigma(A_bar, inf)` by
/// the largest available lower bound, and the result is flagged.
pub fn bounds_general(sys: &LinearSystem) -> Result<RateBound> {
    let a = sys.matrix();
    let abar = sys.normalized_matrix()?;
    let m = sys.nrows();
    let s2 = sigma_two(a)?;
    let s2bar = sigma_two(&abar)?;
    let row_norms_sq: Vec<f64> = (0..m).map(|i| sys.norms().norm_sq(i)).collect();
    let exact = a.is_diagonal() || a.ncols() <= SIGMA_INF_MAX_COLS;
    let bound = if exact {
        let (sinf, _) = sigma_infinity_oracle(a)?;
        let (sinf_bar, _) = sigma_infinity_oracle(&abar)?;
        RateBound::assemble(s2, s2bar, sinf, sinf_bar, false, row_norms_sq)
    } else {
        let sqrt_m = (m as f64).sqrt();
        let sinf = s2 / sqrt_m;
        let frob = sys.norms().frobenius_sq().sqrt();
        let sinf_bar = (s2bar / sqrt_m)
            .max(s2 / frob)
            .max(sinf / sys.norms().max_norm());
        RateBound::assemble(s2, s2bar, sinf, sinf_bar, true, row_norms_sq)
    };
    bound.check_ordering()?;
    Ok(bound)
}

/// Factors of the adaptive rules given the current selectable set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveFactors {
    pub m_k: usize,
    /// `1 - sigma_W(A_bar_k)^2 / m_k`
    pub uniform: f64,
    /// `1 - sigma_W(A_k)^2 / ||A_k||_F^2`
    pub nonuniform: f64,
}

/// Adaptive factors with `sigma_W`, the Hoffman constant of the selectable
/// rows restricted to errors orthogonal to every unselectable row (see
/// [`restricted_sigma_two`]). Both factors are at most their non-adaptive
/// counterparts. A solved state gives factors of 0.
pub fn adaptive_factors(sys: &LinearSystem, set: &SelectableSet) -> Result<AdaptiveFactors> {
    let flags = set.flags();
    if flags.len() != sys.nrows() {
        return Err(Error::DimensionMismatch {
            what: "selectable flags",
            expected: sys.nrows(),
            got: flags.len(),
        });
    }
    let m_k = set.count();
    if m_k == 0 {
        return Ok(AdaptiveFactors {
            m_k,
            uniform: 0.0,
            nonuniform: 0.0,
        });
    }
    let abar = sys.normalized_matrix()?;
    let sw = restricted_sigma_two(sys.matrix(), flags)?;
    let sw_bar = restricted_sigma_two(&abar, flags)?;
    let frob_k: f64 = set.selectable_rows().map(|i| sys.norms().norm_sq(i)).sum();
    Ok(AdaptiveFactors {
        m_k,
        uniform: sw_bar.map_or(0.0, |s| 1.0 - s * s / m_k as f64),
        nonuniform: sw.map_or(0.0, |s| 1.0 - s * s / frob_k),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub slack: f64,
    pub floor_rel: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            slack: DETERMINISTIC_SLACK,
            floor_rel: DISTANCE_FLOOR_REL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rule: String,
    /// Constant factor of the rule, if it has one.
    pub bound: Option<f64>,
    pub worst_ratio: f64,
    pub mean_ratio: f64,
    /// Steps whose ratio exceeds the per-step factor plus slack. Always 0
    /// for rules without a deterministic bound.
    pub violations: usize,
    pub checked_steps: usize,
    /// Largest `ratio - factor` over checked steps.
    pub worst_excess: f64,
    pub deterministic: bool,
}

/// Per-step deterministic factor for `rule` at 0-based step `k` on `row`,
/// given the previous squared distance.
pub fn step_factor(
    bound: &RateBound,
    rule: RuleKind,
    k: usize,
    row: usize,
    prev_sq_dist: f64,
) -> Option<f64> {
    let sinf2 = bound.sigma_inf * bound.sigma_inf;
    let sbar2 = bound.sigma_inf_bar * bound.sigma_inf_bar;
    let norm2 = bound.row_norms_sq[row];
    match rule {
        RuleKind::MaxResidual => Some(bound.mr_tight_factor(row)),
        RuleKind::MaxDistance => Some(bound.md),
        RuleKind::Hybrid if k.is_multiple_of(2) => Some(bound.mr_tight_factor(row)),
        RuleKind::Hybrid => Some(bound.md),
        RuleKind::ApproxMultiplicative { eps, target } => {
            let s = (1.0 - eps).powi(2);
            Some(match target {
                GreedyTarget::Residual => 1.0 - s * sinf2 / norm2,
                GreedyTarget::Distance => 1.0 - s * sbar2,
            })
        }
        RuleKind::ApproxAdditive { eps, target } => Some(match target {
            GreedyTarget::Residual => 1.0 - sinf2 / norm2 + eps / (norm2 * prev_sq_dist),
            GreedyTarget::Distance => 1.0 - sbar2 + eps / prev_sq_dist,
        }),
        _ => None,
    }
}

pub fn validate_trace(
    trace: &ConvergenceTrace,
    bound: &RateBound,
    rule: RuleKind,
) -> Result<ValidationReport> {
    validate_trace_with(trace, bound, rule, ValidationOptions::default())
}

/// Checks every step of a greedy-rule trace against its per-step factor.
/// For other rules the ratios are summarized without a verdict; see
/// [`StatisticalCheck`].
pub fn validate_trace_with(
    trace: &ConvergenceTrace,
    bound: &RateBound,
    rule: RuleKind,
    opts: ValidationOptions,
) -> Result<ValidationReport> {
    let d = trace.sq_dists()?;
    let floor = opts.floor_rel * d[0];
    let mut report = ValidationReport {
        rule: rule.label(),
        bound: bound.factor_for(rule),
        worst_ratio: 0.0,
        mean_ratio: 0.0,
        violations: 0,
        checked_steps: 0,
        worst_excess: f64::NEG_INFINITY,
        deterministic: rule.is_greedy(),
    };
    let mut sum = 0.0;
    for (k, rec) in trace.records.iter().enumerate() {
        let prev = d[k];
        if prev <= floor || prev == 0.0 {
            continue;
        }
        if rec.row >= bound.m {
            return Err(Error::IndexOutOfBounds {
                index: rec.row,
                len: bound.m,
            });
        }
        let ratio = d[k + 1] / prev;
        report.checked_steps += 1;
        sum += ratio;
        report.worst_ratio = report.worst_ratio.max(ratio);
        if let Some(f) = step_factor(bound, rule, k, rec.row, prev) {
            report.worst_excess = report.worst_excess.max(ratio - f);
            let mut bad = ratio > f + opts.slack;
            if matches!(rule, RuleKind::MaxResidual) {
                bad |= ratio > bound.mr_inf + opts.slack;
            }
            if bad {
                report.violations += 1;
            }
        }
    }
    if report.checked_steps > 0 {
        report.mean_ratio = sum / report.checked_steps as f64;
    }
    Ok(report)
}

/// Monte-Carlo check of an expected per-step bound over independent runs.
///
/// For each run the statistic is `(1/K) sum_k (ratio_k - factor_k)` over the
/// first `K` steps, counting only steps that start above the distance floor.
/// Its expectation is at most 0 when the bound holds, so the check passes
/// when the mean over runs is at most three standard errors.
#[derive(Debug, Clone)]
pub struct StatisticalCheck {
    horizon: usize,
    floor_rel: f64,
    excess: Vec<f64>,
    ratio_sum: f64,
    factor_sum: f64,
    ratio_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatisticalReport {
    pub runs: usize,
    pub horizon: usize,
    pub mean_ratio: f64,
    pub mean_factor: f64,
    pub mean_excess: f64,
    pub std_error: f64,
    pub passed: bool,
}

impl StatisticalCheck {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            floor_rel: DISTANCE_FLOOR_REL,
            excess: Vec::new(),
            ratio_sum: 0.0,
            factor_sum: 0.0,
            ratio_count: 0,
        }
    }

    /// Adds one run; `factors[k]` is the bound for step `k`.
    pub fn add_run(&mut self, trace: &ConvergenceTrace, factors: &[f64]) -> Result<()> {
        let d = trace.sq_dists()?;
        let floor = self.floor_rel * d[0];
        let steps = self.horizon.min(trace.len());
        if factors.len() < steps {
            return Err(Error::DimensionMismatch {
                what: "per-step factors",
                expected: steps,
                got: factors.len(),
            });
        }
        let mut total = 0.0;
        for k in 0..steps {
            if d[k] > floor && d[k] > 0.0 {
                let ratio = d[k + 1] / d[k];
                total += ratio - factors[k];
                self.ratio_sum += ratio;
                self.factor_sum += factors[k];
                self.ratio_count += 1;
            }
        }
        self.excess.push(total / self.horizon as f64);
        Ok(())
    }

    /// Adds one run with the same factor at every step.
    pub fn add_run_constant(&mut self, trace: &ConvergenceTrace, factor: f64) -> Result<()> {
        let factors = vec![factor; self.horizon.min(trace.len())];
        self.add_run(trace, &factors)
    }

    pub fn report(&self) -> StatisticalReport {
        let n = self.excess.len();
        let mean = self.excess.iter().sum::<f64>() / n.max(1) as f64;
        let var = if n > 1 {
            self.excess
                .iter()
                .map(|e| (e - mean) * (e - mean))
                .sum::<f64>()
                / (n - 1) as f64
        } else {
            0.0
        };
        let se = (var / n.max(1) as f64).sqrt();
        let count = self.ratio_count.max(1) as f64;
        StatisticalReport {
            runs: n,
            horizon: self.horizon,
            mean_ratio: self.ratio_sum / count,
            mean_factor: self.factor_sum / count,
            mean_excess: mean,
            std_error: se,
            passed: mean <= 3.0 * se,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiStepReport {
    /// The graph has no edges, so there is no star bound.
    pub skipped: bool,
    /// Steps taken before the error fell below the floor.
    pub steps: usize,
    /// Per-step geometric mean of `1 - sigma_inf^2 / ||a_{i_j}||^2` over
    /// those steps.
    pub realized_gm: f64,
    pub star: Option<StarBoundResult>,
    /// Whether enough steps were taken for the comparison to be asserted.
    pub asserted: bool,
    pub passed: bool,
}

/// Compares the realized per-step geometric mean of the maximum-residual
/// factors with the best star subgraph of `graph` under node weights
/// `1 - sigma_inf^2 / ||a_i||^2`. The comparison is asserted once at least
/// `4 m` steps were taken.
pub fn multi_step_bound_check(
    trace: &ConvergenceTrace,
    sys: &LinearSystem,
    graph: &OrthogonalityGraph,
    sigma_inf: f64,
    rule: RuleKind,
    slack: f64,
) -> Result<MultiStepReport> {
    if rule != RuleKind::MaxResidual {
        return Err(Error::InvalidParameter(format!(
            "multi-step bound applies to the maximum residual rule, not {}",
            rule.label()
        )));
    }
    let m = sys.nrows();
    let weights: Vec<f64> = (0..m)
        .map(|i| {
            (1.0 - sigma_inf * sigma_inf / sys.norms().norm_sq(i)).clamp(f64::MIN_POSITIVE, 1.0)
        })
        .collect();
    let errors = trace.sq_errors();
    let floor = DISTANCE_FLOOR_REL * errors[0];
    let mut log_sum = 0.0;
    let mut steps = 0;
    for (k, rec) in trace.records.iter().enumerate() {
        if errors[k] <= floor || errors[k] == 0.0 {
            break;
        }
        log_sum += weights[rec.row].ln();
        steps += 1;
    }
    let realized_gm = if steps > 0 {
        (log_sum / steps as f64).exp()
    } else {
        0.0
    };
    if graph.edge_count() == 0 {
        return Ok(MultiStepReport {
            skipped: true,
            steps,
            realized_gm,
            star: None,
            asserted: false,
            passed: true,
        });
    }
    let star = star_bound(graph, &weights)?;
    let asserted = steps >= 4 * m;
    let passed = !asserted || realized_gm <= star.geometric_mean + slack;
    Ok(MultiStepReport {
        skipped: false,
        steps,
        realized_gm,
        star: Some(star),
        asserted,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::orthogonality::GraphMode;
    use crate::selection::RuleConfig;
    use crate::solver::{solve, StoppingCriteria, TraceRecord};
    use approx::assert_relative_eq;

    fn diag(l: &[f64]) -> LinearSystem {
        let z = vec![1.0; l.len()];
        LinearSystem::new(SparseMatrix::diagonal(l).unwrap(), l.to_vec())
            .unwrap()
            .with_reference(z)
            .unwrap()
    }

    #[test]
    fn identity_constants() {
        for m in [1usize, 3, 10] {
            let b = bounds_general(&diag(&vec![1.0; m])).unwrap();
            let want = 1.0 - 1.0 / m as f64;
            assert_relative_eq!(b.u_tight, want, epsilon = 1e-12);
            assert_relative_eq!(b.md, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn diag_one_two() {
        let b = bounds_general(&diag(&[1.0, 2.0])).unwrap();
        assert_relative_eq!(b.nu, 0.8, epsilon = 1e-12);
        assert_relative_eq!(b.u_inf, 0.875, epsilon = 1e-12);
        assert_relative_eq!(b.mr_inf, 0.8, epsilon = 1e-12);
        let closed = bounds_diagonal(&DiagonalSpectrum::new(vec![1.0, 2.0]).unwrap()).unwrap();
        for (u, v) in [
            (b.u_inf, closed.u_inf),
            (b.u_tight, closed.u_tight),
            (b.nu, closed.nu),
            (b.mr_inf, closed.mr_inf),
            (b.md, closed.md),
        ] {
            assert_relative_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn equal_spectrum_collapses_every_rate() {
        let b = bounds_diagonal(&DiagonalSpectrum::new(vec![3.0; 4]).unwrap()).unwrap();
        for v in [
            b.u_inf,
            b.u_tight,
            b.nu,
            b.mr_inf,
            b.md,
            b.mr_tight_factor(2),
        ] {
            assert_relative_eq!(v, 0.75, epsilon = 1e-15);
        }
    }

    #[test]
    fn extreme_spectrum_chain() {
        // four unit entries and one small one
        let (alpha, beta, m) = (1.0f64, 0.01f64, 5.0f64);
        let b = bounds_diagonal(&DiagonalSpectrum::new(vec![1.0, 1.0, 1.0, 1.0, 0.1]).unwrap())
            .unwrap();
        assert_relative_eq!(1.0 - b.u_inf, beta / (m * alpha), epsilon = 1e-15);
        assert_relative_eq!(
            1.0 - b.nu,
            beta / (alpha * (m - 1.0) + beta),
            epsilon = 1e-15
        );
        assert!(b.u_inf > b.nu && b.nu > b.mr_inf && b.mr_inf > b.u_tight);
        assert_relative_eq!(b.u_tight, b.md, epsilon = 1e-15);
        b.check_ordering().unwrap();
    }

    #[test]
    fn nonpositive_spectrum_is_rejected() {
        assert!(DiagonalSpectrum::new(vec![1.0, 0.0]).is_err());
        assert!(DiagonalSpectrum::new(vec![-1.0]).is_err());
    }

    #[test]
    fn large_dense_instances_are_flagged() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                (0..4)
                    .map(|j| ((i * 4 + j) as f64 * 0.7).sin() + if i == j { 2.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let sys =
            LinearSystem::new(SparseMatrix::from_dense_rows(&rows).unwrap(), vec![0.0; 6]).unwrap();
        let b = bounds_general(&sys).unwrap();
        assert!(b.sigma_inf_substituted);
        b.check_ordering().unwrap();
    }

    #[test]
    fn md_on_diag_stays_under_its_bound() {
        let sys = diag(&[1.0, 2.0]);
        let b = bounds_general(&sys).unwrap();
        let (_, trace) = solve(
            &sys,
            &RuleConfig::max_distance(),
            None,
            &StoppingCriteria::max_iters(5),
            None,
        )
        .unwrap();
        let rep = validate_trace(&trace, &b, RuleKind::MaxDistance).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.worst_ratio <= 0.5 + 1e-9);
    }

    #[test]
    fn injected_fault_is_flagged() {
        let sys = diag(&[1.0, 2.0, 3.0]);
        let b = bounds_general(&sys).unwrap();
        let (_, mut trace) = solve(
            &sys,
            &RuleConfig::max_distance(),
            None,
            &StoppingCriteria::max_iters(2),
            None,
        )
        .unwrap();
        let d0 = trace.initial_sq_dist.unwrap();
        trace.records[0].sq_dist = Some(1.5 * d0);
        let rep = validate_trace(&trace, &b, RuleKind::MaxDistance).unwrap();
        assert!(rep.violations >= 1);
    }

    #[test]
    fn missing_distance_is_an_error() {
        let mut t = ConvergenceTrace::new(1.0, None);
        t.records.push(TraceRecord {
            iter: 1,
            row: 0,
            sq_error: 0.0,
            sq_dist: None,
            wall_ns: 0,
        });
        let b = bounds_diagonal(&DiagonalSpectrum::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(
            validate_trace(&t, &b, RuleKind::MaxResidual).unwrap_err(),
            Error::MissingDistance
        );
    }

    #[test]
    fn adaptive_factors_beat_the_plain_ones() {
        let a = SparseMatrix::from_dense_rows(&[
            vec![1.0, 0.0, 0.5],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 2.0],
        ])
        .unwrap();
        let sys = LinearSystem::new(a, vec![1.0, 1.0, 1.0]).unwrap();
        let b = bounds_general(&sys).unwrap();
        for flags in [
            vec![false, true, true],
            vec![true, false, true],
            vec![false, false, true],
        ] {
            let f = adaptive_factors(&sys, &SelectableSet::from_flags(flags)).unwrap();
            assert!(f.uniform <= b.u_tight + 1e-12);
            assert!(f.nonuniform <= b.nu + 1e-12);
        }
        let all = adaptive_factors(&sys, &SelectableSet::all(3)).unwrap();
        assert_relative_eq!(all.uniform, b.u_tight, epsilon = 1e-12);
        assert_relative_eq!(all.nonuniform, b.nu, epsilon = 1e-12);
        let none = adaptive_factors(&sys, &SelectableSet::from_flags(vec![false; 3])).unwrap();
        assert_eq!((none.uniform, none.nonuniform), (0.0, 0.0));
    }

    #[test]
    fn multi_step_equal_norms_and_edgeless() {
        let sys = diag(&[1.0, 1.0]);
        let (_, trace) = solve(
            &sys,
            &RuleConfig::max_residual(),
            None,
            &StoppingCriteria::max_iters(2),
            None,
        )
        .unwrap();
        let edgeless = OrthogonalityGraph::from_edges(2, &[], GraphMode::Exact);
        let rep = multi_step_bound_check(&trace, &sys, &edgeless, 0.5, RuleKind::MaxResidual, 0.0)
            .unwrap();
        assert!(rep.skipped);
        let edge = OrthogonalityGraph::from_edges(2, &[(0, 1)], GraphMode::Exact);
        let rep =
            multi_step_bound_check(&trace, &sys, &edge, 0.5, RuleKind::MaxResidual, 0.0).unwrap();
        assert_relative_eq!(rep.star.unwrap().geometric_mean, 0.75, epsilon = 1e-15);
        assert_relative_eq!(rep.realized_gm, 0.75, epsilon = 1e-15);
        assert!(
            multi_step_bound_check(&trace, &sys, &edge, 0.5, RuleKind::MaxDistance, 0.0).is_err()
        );
    }

    #[test]
    fn statistical_check_on_a_contracting_sequence() {
        let mut check = StatisticalCheck::new(3);
        for _ in 0..10 {
            let mut t = ConvergenceTrace::new(1.0, Some(1.0));
            for (k, d) in [0.5, 0.25, 0.125].into_iter().enumerate() {
                t.records.push(TraceRecord {
                    iter: k as u64 + 1,
                    row: 0,
                    sq_error: d,
                    sq_dist: Some(d),
                    wall_ns: 0,
                });
            }
            check.add_run_constant(&t, 0.5).unwrap();
        }
        let rep = check.report();
        assert_eq!(rep.runs, 10);
        assert_relative_eq!(rep.mean_ratio, 0.5);
        assert!(rep.passed);
    }
}
