use std::time::Duration;

use web_time::Instant;

use super::feasibility::{analytic_distance, max_violation};
use super::step::project_in_place;
use super::trace::{ConvergenceTrace, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, norm_sq, LinearSystem};
use crate::orthogonality::OrthogonalityGraph;
use crate::selection::{CoordinateDelta, RuleConfig, Selector};

/// Wall time is read once per block of this many iterations; times inside a
/// block are interpolated.
pub const TIMER_BLOCK: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StoppingCriteria {
    pub max_iters: Option<u64>,
    /// Stop once `||e(Ax - b)||_inf <= tolerance`.
    pub tolerance: Option<f64>,
    pub time_budget: Option<Duration>,
}

impl StoppingCriteria {
    pub fn max_iters(k: u64) -> Self {
        Self {
            max_iters: Some(k),
            ..Self::default()
        }
    }

    pub fn tolerance(tol: f64) -> Self {
        Self {
            tolerance: Some(tol),
            ..Self::default()
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_time_budget(mut self, budget: Duration) -> Self {
        self.time_budget = Some(budget);
        self
    }

    /// At least one bound must be set and finite.
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("tolerance {t}")));
            }
        }
        if self.max_iters.is_none() && self.tolerance.is_none() && self.time_budget.is_none() {
            return Err(Error::InvalidParameter(
                "stopping criteria need at least one bound".into(),
            ));
        }
        Ok(())
    }
}

/// What one call to [`KaczmarzRun::step`] did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub iter: u64,
    pub row: usize,
    pub deltas: Vec<CoordinateDelta>,
}

struct BlockTimer {
    start: Instant,
    block_start_ns: u64,
    block_first: usize,
}

impl BlockTimer {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            block_start_ns: 0,
            block_first: 0,
        }
    }

    /// Fills `wall_ns` for records `block_first..` by linear interpolation
    /// between the block start and now.
    fn flush(&mut self, records: &mut [TraceRecord]) {
        let now = self.start.elapsed().as_nanos() as u64;
        let pending = &mut records[self.block_first..];
        let count = pending.len() as u64;
        for (k, r) in pending.iter_mut().enumerate() {
            r.wall_ns =
                self.block_start_ns + (now - self.block_start_ns) * (k as u64 + 1) / count.max(1);
        }
        self.block_start_ns = now;
        self.block_first = records.len();
    }
}

/// A Kaczmarz run driven one step at a time.
///
/// The residual `Ax - b` is updated incrementally through the column
/// adjacency after each step and recomputed from scratch every `m` steps.
pub struct KaczmarzRun<'a> {
    sys: &'a LinearSystem,
    selector: Selector<'a>,
    stop: StoppingCriteria,
    x: Vec<f64>,
    r: Vec<f64>,
    k: u64,
    gap: f64,
    trace: ConvergenceTrace,
    timer: BlockTimer,
    equality_only: bool,
    done: bool,
}

impl<'a> KaczmarzRun<'a> {
    pub fn new(
        sys: &'a LinearSystem,
        rule: &RuleConfig,
        x0: Option<&[f64]>,
        stop: &StoppingCriteria,
        graph: Option<&'a OrthogonalityGraph>,
    ) -> Result<Self> {
        stop.validate()?;
        let n = sys.ncols();
        let x = match x0 {
            Some(v) if v.len() != n => {
                return Err(Error::DimensionMismatch {
                    what: "starting point",
                    expected: n,
                    got: v.len(),
                })
            }
            Some(v) => v.to_vec(),
            None => vec![0.0; n],
        };
        let x0_is_zero = x.iter().all(|&v| v == 0.0);
        let r = sys.residual_vector(&x)?;
        let selector = Selector::new(sys, *rule, x0_is_zero, &r, graph)?;
        let equality_only = sys.is_equality_only();
        let mut run = Self {
            sys,
            selector,
            stop: *stop,
            x,
            r,
            k: 0,
            gap: 0.0,
            trace: ConvergenceTrace::new(0.0, None),
            timer: BlockTimer::new(),
            equality_only,
            done: false,
        };
        let (err, dist) = run.metrics()?;
        run.gap = max_violation(sys, &run.r);
        run.trace = ConvergenceTrace::new(err, dist);
        run.timer = BlockTimer::new();
        Ok(run)
    }

    fn metrics(&self) -> Result<(f64, Option<f64>)> {
        if self.equality_only {
            let dist = self.sys.reference().map(|z| dist_sq(&self.x, z));
            Ok((norm_sq(&self.r), dist))
        } else {
            let dist = analytic_distance(self.sys, &self.x)?.map(|d| d * d);
            Ok((max_violation(self.sys, &self.r), dist))
        }
    }

    fn should_stop(&self) -> bool {
        self.stop.max_iters.is_some_and(|k| self.k >= k)
            || self.stop.tolerance.is_some_and(|t| self.gap <= t)
            || self
                .stop
                .time_budget
                .is_some_and(|b| self.timer.start.elapsed() >= b)
    }

    /// Performs one iteration. `None` once a stopping criterion holds or an
    /// adaptive rule has nothing left to select.
    pub fn step(&mut self) -> Result<Option<StepInfo>> {
        if self.done {
            return Ok(None);
        }
        if self.should_stop() {
            self.finish();
            return Ok(None);
        }
        let Some(i) = self.selector.select(self.k)? else {
            self.finish();
            return Ok(None);
        };
        let mut deltas = Vec::new();
        project_in_place(self.sys, &mut self.x, i, &mut deltas)?;
        self.k += 1;
        let m = self.sys.nrows() as u64;
        if self.k.is_multiple_of(m) {
            self.r = self.sys.residual_vector(&self.x)?;
        } else {
            let a = self.sys.matrix();
            for d in &deltas {
                let change = d.new - d.old;
                for (row, v) in a.col(d.index).iter() {
                    self.r[row] += v * change;
                }
            }
        }
        self.selector.after_step(self.sys, i, &deltas, &self.x)?;
        let (sq_error, sq_dist) = self.metrics()?;
        self.gap = if self.equality_only {
            self.r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
        } else {
            sq_error
        };
        self.trace.records.push(TraceRecord {
            iter: self.k,
            row: i,
            sq_error,
            sq_dist,
            wall_ns: 0,
        });
        if self.k.is_multiple_of(TIMER_BLOCK) {
            self.timer.flush(&mut self.trace.records);
        }
        Ok(Some(StepInfo {
            iter: self.k,
            row: i,
            deltas,
        }))
    }

    fn finish(&mut self) {
        if !self.done {
            self.timer.flush(&mut self.trace.records);
            self.done = true;
        }
    }

    /// Steps until stopping and returns the final iterate and the trace.
    pub fn run_to_end(mut self) -> Result<(Vec<f64>, ConvergenceTrace)> {
        while self.step()?.is_some() {}
        self.finish();
        Ok((self.x, self.trace))
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Tracked residual `Ax - b`.
    pub fn residual(&self) -> &[f64] {
        &self.r
    }

    pub fn iterations(&self) -> u64 {
        self.k
    }

    /// Current `||e(Ax - b)||_inf`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn selector(&self) -> &Selector<'a> {
        &self.selector
    }

    pub fn trace(&self) -> &ConvergenceTrace {
        &self.trace
    }
}

/// Runs the rule from `x0` (zero when `None`) until `stop` holds. Adaptive
/// rules need `graph`; greedy rules update their residual heap through it
/// when given, and through the column adjacency otherwise.
pub fn solve(
    sys: &LinearSystem,
    rule: &RuleConfig,
    x0: Option<&[f64]>,
    stop: &StoppingCriteria,
    graph: Option<&OrthogonalityGraph>,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    KaczmarzRun::new(sys, rule, x0, stop, graph)?.run_to_end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ConstraintKind, SparseMatrix};
    use crate::orthogonality::{build_exact_graph, DEFAULT_ORTHOGONALITY_TOL};
    use crate::selection::RuleKind;

    fn identity(m: usize) -> LinearSystem {
        let b: Vec<f64> = (0..m).map(|i| i as f64 + 1.0).collect();
        LinearSystem::new(SparseMatrix::identity(m), b.clone())
            .unwrap()
            .with_reference(b)
            .unwrap()
    }

    #[test]
    fn identity_mr_takes_m_steps() {
        let sys = identity(6);
        let stop = StoppingCriteria::max_iters(1000).with_tolerance(1e-12);
        let (x, trace) = solve(&sys, &RuleConfig::max_residual(), None, &stop, None).unwrap();
        assert_eq!(trace.len(), 6);
        assert_eq!(x, sys.rhs().to_vec());
        assert_eq!(trace.rows(), vec![5, 4, 3, 2, 1, 0]);
    }

    #[test]
    fn adaptive_stops_when_nothing_is_selectable() {
        let sys = identity(4);
        let g = build_exact_graph(&sys, DEFAULT_ORTHOGONALITY_TOL);
        let rule = RuleConfig::new(RuleKind::AdaptiveUniform, 5);
        let (x, trace) = solve(
            &sys,
            &rule,
            None,
            &StoppingCriteria::max_iters(100),
            Some(&g),
        )
        .unwrap();
        assert_eq!(trace.len(), 4);
        assert_eq!(x, sys.rhs().to_vec());
    }

    #[test]
    fn traces_are_reproducible() {
        let a = SparseMatrix::from_dense_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![0.0, 1.0, -1.0],
            vec![3.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let z = vec![1.0, -2.0, 0.5];
        let b = a.mul_vec(&z).unwrap();
        let sys = LinearSystem::new(a, b).unwrap().with_reference(z).unwrap();
        for kind in [
            RuleKind::Uniform,
            RuleKind::NonUniform,
            RuleKind::RandomPermutation,
        ] {
            let rule = RuleConfig::new(kind, 42);
            let stop = StoppingCriteria::max_iters(200);
            let (_, t1) = solve(&sys, &rule, None, &stop, None).unwrap();
            let (_, t2) = solve(&sys, &rule, None, &stop, None).unwrap();
            assert_eq!(t1.rows(), t2.rows());
            let d = t1.sq_dists().unwrap();
            for w in d.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-24 * d[0], "{kind:?} {w:?}");
            }
        }
    }

    #[test]
    fn tracked_residual_stays_close() {
        let a = SparseMatrix::from_dense_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![0.0, 1.0, -1.0],
            vec![3.0, 0.0, 1.0],
        ])
        .unwrap();
        let sys = LinearSystem::new(a, vec![1.0, 2.0, 3.0]).unwrap();
        let mut run = KaczmarzRun::new(
            &sys,
            &RuleConfig::new(RuleKind::Cyclic, 0),
            None,
            &StoppingCriteria::max_iters(50),
            None,
        )
        .unwrap();
        while run.step().unwrap().is_some() {
            let exact = sys.residual_vector(run.x()).unwrap();
            for (u, v) in run.residual().iter().zip(&exact) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inequality_trace_uses_the_gap() {
        let sys = LinearSystem::with_kinds(
            SparseMatrix::from_dense_rows(&[vec![1.0, 0.0]]).unwrap(),
            vec![1.0],
            vec![ConstraintKind::LessEqual],
        )
        .unwrap();
        let (x, trace) = solve(
            &sys,
            &RuleConfig::max_residual(),
            Some(&[3.0, 0.0]),
            &StoppingCriteria::max_iters(3),
            None,
        )
        .unwrap();
        assert_eq!(x, vec![1.0, 0.0]);
        assert_eq!(trace.initial_sq_error, 2.0);
        assert_eq!(trace.initial_sq_dist, Some(4.0));
        assert_eq!(trace.records[0].sq_error, 0.0);
    }

    #[test]
    fn wall_time_is_monotone() {
        let sys = identity(3);
        let (_, trace) = solve(
            &sys,
            &RuleConfig::new(RuleKind::Cyclic, 0),
            None,
            &StoppingCriteria::max_iters(250),
            None,
        )
        .unwrap();
        assert_eq!(trace.len(), 250);
        assert!(trace
            .records
            .windows(2)
            .all(|w| w[0].wall_ns <= w[1].wall_ns));
    }

    #[test]
    fn stopping_criteria_validation() {
        assert!(StoppingCriteria::default().validate().is_err());
        assert!(StoppingCriteria::tolerance(f64::NAN).validate().is_err());
        assert!(StoppingCriteria::max_iters(3).validate().is_ok());
    }
}
