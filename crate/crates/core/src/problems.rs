//! Seeded generators for the benchmark problems.
//!
//! All randomness comes from ChaCha8 seeded with the 64-bit seed. Normal
//! variates use `rand_distr::StandardNormal` (ziggurat) and uniform ones
//! `Rng::random::<f64>()` (53 random mantissa bits in `[0, 1)`), so a seed
//! reproduces a system bit for bit.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, ConstraintKind, LinearSystem, SparseMatrix};

/// Probability that a row of the overdetermined problem is scaled.
pub const DEFAULT_SCALE_PROB: f64 = 1.0 / 11.0;
pub const DEFAULT_SCALE_FACTOR: f64 = 1e4;
pub const DEFAULT_MOON_NOISE: f64 = 0.1;
/// Attempts made by [`GeneratorSpec::generate`] when a label-propagation
/// graph has an unlabeled component without labels.
pub const MOON_ATTEMPTS: u64 = 16;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

fn consistent(matrix: SparseMatrix, z: Vec<f64>) -> Result<LinearSystem> {
    let b = matrix.mul_vec(&z)?;
    LinearSystem::new(matrix, b)?.with_reference(z)
}

/// Square matrix on a `side x side` grid of unknowns. Row `i` couples
/// unknown `i` with its horizontal neighbour `i + 1` (unless `i` ends a grid
/// row) and its vertical neighbour `i + side`, symmetrically. Entries are
/// independent standard normals, `b = A z` with standard normal `z`.
pub fn gen_lattice(side: usize, seed: u64) -> Result<LinearSystem> {
    if side < 2 {
        return Err(Error::InvalidParameter(format!("lattice side {side} < 2")));
    }
    let n = side * side;
    let mut rng = rng(seed);
    let mut triplets = Vec::with_capacity(5 * n);
    for i in 0..n {
        triplets.push((i, i, normal(&mut rng)));
        if (i + 1) % side != 0 {
            triplets.push((i, i + 1, normal(&mut rng)));
            triplets.push((i + 1, i, normal(&mut rng)));
        }
        if i + side < n {
            triplets.push((i, i + side, normal(&mut rng)));
            triplets.push((i + side, i, normal(&mut rng)));
        }
    }
    let matrix = SparseMatrix::from_triplets(n, n, &triplets)?;
    let z = normals(&mut rng, n);
    consistent(matrix, z)
}

/// Sparse `m x n` system with each entry nonzero with probability
/// `ln(m) / (2m)` and value uniform in `(0, 1]`. Empty rows are redrawn.
/// Each row is then scaled by `scale_factor` with probability `scale_prob`.
pub fn gen_overdetermined(
    m: usize,
    n: usize,
    scale_prob: f64,
    scale_factor: f64,
    seed: u64,
) -> Result<LinearSystem> {
    if m <= n || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "overdetermined needs m > n > 0, got {m} x {n}"
        )));
    }
    if !(0.0..=1.0).contains(&scale_prob) || !(scale_factor > 0.0 && scale_factor.is_finite()) {
        return Err(Error::InvalidParameter(
            "scale probability or factor out of range".into(),
        ));
    }
    let p = (m as f64).ln() / (2.0 * m as f64);
    let mut rng = rng(seed);
    let mut triplets = Vec::new();
    for i in 0..m {
        let mut row = Vec::new();
        while row.is_empty() {
            for j in 0..n {
                if rng.random::<f64>() < p {
                    row.push((i, j, 1.0 - rng.random::<f64>()));
                }
            }
        }
        if rng.random::<f64>() < scale_prob {
            for t in &mut row {
                t.2 *= scale_factor;
            }
        }
        triplets.extend(row);
    }
    let matrix = SparseMatrix::from_triplets(m, n, &triplets)?;
    let z = normals(&mut rng, n);
    consistent(matrix, z)
}

/// Random `m x n` system with entry density `density` and standard normal
/// values; empty rows are redrawn.
pub fn gen_random_consistent(m: usize, n: usize, density: f64, seed: u64) -> Result<LinearSystem> {
    if m == 0 || n == 0 || !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "random system needs m, n > 0 and density in (0, 1], got {m} x {n}, {density}"
        )));
    }
    let mut rng = rng(seed);
    let mut triplets = Vec::new();
    for i in 0..m {
        let mut row = Vec::new();
        while row.is_empty() {
            for j in 0..n {
                if density >= 1.0 || rng.random::<f64>() < density {
                    row.push((i, j, normal(&mut rng)));
                }
            }
        }
        triplets.extend(row);
    }
    let matrix = SparseMatrix::from_triplets(m, n, &triplets)?;
    let z = normals(&mut rng, n);
    consistent(matrix, z)
}

/// `diag(lambda) x = lambda * z`.
pub fn diagonal_system(lambda: &[f64], z: &[f64]) -> Result<LinearSystem> {
    if let Some(l) = lambda.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "diagonal entry {l} is not positive"
        )));
    }
    if z.len() != lambda.len() {
        return Err(Error::DimensionMismatch {
            what: "diagonal solution",
            expected: lambda.len(),
            got: z.len(),
        });
    }
    consistent(SparseMatrix::diagonal(lambda)?, z.to_vec())
}

/// Diagonal system with standard normal solution.
pub fn gen_diagonal(lambda: &[f64], seed: u64) -> Result<LinearSystem> {
    let z = normals(&mut rng(seed), lambda.len());
    diagonal_system(lambda, &z)
}

/// Feasible `a_i . x <= b_i` system with standard normal dense rows and
/// `b = A x_f + s`, `s` uniform in `[0, 1)`, for a standard normal `x_f`.
pub fn gen_random_feasible(m: usize, n: usize, seed: u64) -> Result<LinearSystem> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "feasible system needs m, n > 0".into(),
        ));
    }
    let mut rng = rng(seed);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| normals(&mut rng, n)).collect();
    let xf = normals(&mut rng, n);
    let matrix = SparseMatrix::from_dense_rows(&rows)?;
    let b: Vec<f64> = matrix
        .mul_vec(&xf)?
        .into_iter()
        .map(|v| v + rng.random::<f64>())
        .collect();
    LinearSystem::with_kinds(matrix, b, vec![ConstraintKind::LessEqual; m])
}

/// Axis-aligned box `lo_j <= x_j <= hi_j` in `n` dimensions written as `2n`
/// scaled halfspaces, with `lo` standard normal and widths uniform in
/// `[0, 2)`.
pub fn gen_axis_box(n: usize, seed: u64) -> Result<LinearSystem> {
    if n == 0 {
        return Err(Error::InvalidParameter("box needs n > 0".into()));
    }
    let mut rng = rng(seed);
    let mut triplets = Vec::with_capacity(2 * n);
    let mut b = Vec::with_capacity(2 * n);
    for j in 0..n {
        let lo = normal(&mut rng);
        let hi = lo + 2.0 * rng.random::<f64>();
        let (s_lo, s_hi) = (0.5 + rng.random::<f64>(), 0.5 + rng.random::<f64>());
        triplets.push((2 * j, j, -s_lo));
        b.push(-s_lo * lo);
        triplets.push((2 * j + 1, j, s_hi));
        b.push(s_hi * hi);
    }
    let matrix = SparseMatrix::from_triplets(2 * n, n, &triplets)?;
    LinearSystem::with_kinds(matrix, b, vec![ConstraintKind::LessEqual; 2 * n])
}

/// Two interleaving half circles with Gaussian noise: the first half of the
/// points lie near `(cos t, sin t)` with label `-1`, the rest near
/// `(1 - cos t, 0.5 - sin t)` with label `+1`, `t` evenly spaced in
/// `[0, pi]`.
pub fn two_moons(samples: usize, noise: f64, rng: &mut ChaCha8Rng) -> (Vec<[f64; 2]>, Vec<f64>) {
    let outer = samples / 2;
    let inner = samples - outer;
    let noise = Normal::new(0.0, noise).expect("noise is finite and nonnegative");
    let t = |k: usize, count: usize| {
        if count > 1 {
            PI * k as f64 / (count - 1) as f64
        } else {
            0.0
        }
    };
    let mut points = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for k in 0..outer {
        let t = t(k, outer);
        points.push([t.cos(), t.sin()]);
        labels.push(-1.0);
    }
    for k in 0..inner {
        let t = t(k, inner);
        points.push([1.0 - t.cos(), 0.5 - t.sin()]);
        labels.push(1.0);
    }
    for p in &mut points {
        p[0] += noise.sample(rng);
        p[1] += noise.sample(rng);
    }
    (points, labels)
}

/// Edges of the k-nearest-neighbour graph, symmetrized by union. Distance
/// ties are broken by index.
pub fn knn_edges(points: &[[f64; 2]], k: usize) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n * k);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i).map(|j| {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            (dx * dx + dy * dy, j)
        }));
        let kk = k.min(order.len());
        if kk == 0 {
            continue;
        }
        order.select_nth_unstable_by(kk - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in &order[..kk] {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Label propagation restricted to the unlabeled nodes. With symmetric
/// weights `w` and labels `y` on the labeled set `S`, unknown `k` of the
/// unlabeled set has the equation
/// `(sum_j w_kj) y_k - sum_{i unlabeled, i != k} w_ki y_i = sum_{i in S} w_ki y_i`.
///
/// Every unlabeled component must touch a labeled node, otherwise the
/// system is singular and `DisconnectedComponent` names one of its nodes.
pub fn label_propagation_system(
    n: usize,
    edges: &[(usize, usize, f64)],
    labels: &[Option<f64>],
) -> Result<LinearSystem> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: n,
            got: labels.len(),
        });
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, w) in edges {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfBounds {
                index: i.max(j),
                len: n,
            });
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("edge weight {w}")));
        }
        if i != j && w > 0.0 {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
    }
    let unknowns: Vec<usize> = (0..n).filter(|&i| labels[i].is_none()).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &node) in unknowns.iter().enumerate() {
        index[node] = k;
    }
    // every unlabeled component needs a labeled neighbour
    let mut seen = vec![false; n];
    for &start in &unknowns {
        if seen[start] {
            continue;
        }
        let mut anchored = false;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if labels[v].is_some() {
                    anchored = true;
                } else if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if !anchored {
            return Err(Error::DisconnectedComponent(start));
        }
    }
    let mut triplets = Vec::new();
    let mut b = vec![0.0; unknowns.len()];
    for (k, &node) in unknowns.iter().enumerate() {
        let mut degree = 0.0;
        for &(v, w) in &adj[node] {
            degree += w;
            match labels[v] {
                Some(y) => b[k] += w * y,
                None => triplets.push((k, index[v], -w)),
            }
        }
        triplets.push((k, k, degree));
    }
    let u = unknowns.len();
    let matrix = SparseMatrix::from_triplets(u, u, &triplets)?;
    let sys = LinearSystem::new(matrix, b)?;
    if u == 0 {
        return Ok(sys);
    }
    let z = conjugate_gradient(&sys)?;
    sys.with_reference(z)
}

/// Conjugate gradients for a symmetric positive definite system, run to
/// `||Ax - b||_inf <= 1e-13 (1 + ||b||_inf)`.
fn conjugate_gradient(sys: &LinearSystem) -> Result<Vec<f64>> {
    let a = sys.matrix();
    let b = sys.rhs();
    let n = b.len();
    let target = 1e-13 * (1.0 + inf_norm(b));
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for it in 0..20 * n.max(50) {
        if inf_norm(&r) <= target {
            break;
        }
        let ap = a.mul_vec(&p)?;
        let pap: f64 = p.iter().zip(&ap).map(|(u, v)| u * v).sum();
        if pap <= 0.0 {
            return Err(Error::InvalidParameter(
                "label propagation matrix is not positive definite".into(),
            ));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        // periodic true residual against drift
        if it % 50 == 49 {
            r = a
                .mul_vec(&x)?
                .iter()
                .zip(b)
                .map(|(ax, bi)| bi - ax)
                .collect();
        }
        let rr_next: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok(x)
}

/// Semi-supervised label propagation on two moons: `labeled` random points
/// keep their labels (at least one per class), the graph joins each point
/// to its `k` nearest neighbours with unit weights, and the unknowns are the
/// labels of the remaining points.
pub fn gen_two_moons_label_prop(
    samples: usize,
    labeled: usize,
    k: usize,
    noise: f64,
    seed: u64,
) -> Result<LinearSystem> {
    if labeled < 2 || labeled > samples || k == 0 || !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "two moons needs 2 <= labeled <= samples, k >= 1, noise >= 0 (got {samples}, {labeled}, {k}, {noise})"
        )));
    }
    let mut rng = rng(seed);
    let (points, y) = two_moons(samples, noise, &mut rng);
    let mut chosen = sample(&mut rng, samples, labeled).into_vec();
    chosen.sort_unstable();
    for class in [-1.0, 1.0] {
        if !chosen.iter().any(|&i| y[i] == class) {
            // swap in the first point of the missing class
            let pick = (0..samples)
                .find(|&i| y[i] == class)
                .expect("both classes are present");
            let other = chosen
                .iter()
                .position(|&i| chosen.iter().filter(|&&j| y[j] == y[i]).count() > 1);
            let slot = other.unwrap_or(0);
            chosen[slot] = pick;
        }
    }
    let mut labels = vec![None; samples];
    for &i in &chosen {
        labels[i] = Some(y[i]);
    }
    let edges: Vec<(usize, usize, f64)> = knn_edges(&points, k)
        .into_iter()
        .map(|(i, j)| (i, j, 1.0))
        .collect();
    label_propagation_system(samples, &edges, &labels)
}

/// Problem family and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemKind {
    Lattice {
        side: usize,
    },
    Overdetermined {
        m: usize,
        n: usize,
        #[serde(default = "default_scale_prob")]
        scale_prob: f64,
        #[serde(default = "default_scale_factor")]
        scale_factor: f64,
    },
    TwoMoons {
        samples: usize,
        labeled: usize,
        k: usize,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    Diagonal {
        lambda: Vec<f64>,
    },
    Random {
        m: usize,
        n: usize,
        density: f64,
    },
    Feasible {
        m: usize,
        n: usize,
    },
    Box {
        n: usize,
    },
}

fn default_scale_prob() -> f64 {
    DEFAULT_SCALE_PROB
}
fn default_scale_factor() -> f64 {
    DEFAULT_SCALE_FACTOR
}
fn default_noise() -> f64 {
    DEFAULT_MOON_NOISE
}

impl ProblemKind {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            ProblemKind::Lattice { side } if *side < 2 => bad(format!("lattice side {side} < 2")),
            ProblemKind::Overdetermined { m, n, .. } if m <= n || *n == 0 => {
                bad(format!("overdetermined {m} x {n}"))
            }
            ProblemKind::TwoMoons {
                samples,
                labeled,
                k,
                ..
            } if *labeled < 2 || labeled >= samples || *k == 0 => bad(format!(
                "two moons samples={samples} labeled={labeled} k={k}"
            )),
            ProblemKind::Diagonal { lambda }
                if lambda.is_empty() || lambda.iter().any(|&l| l.is_nan() || l <= 0.0) =>
            {
                bad("diagonal entries must be positive".into())
            }
            ProblemKind::Random { m, n, density }
                if *m == 0 || *n == 0 || !(*density > 0.0 && *density <= 1.0) =>
            {
                bad(format!("random {m} x {n} density {density}"))
            }
            ProblemKind::Feasible { m, n } if *m == 0 || *n == 0 => {
                bad(format!("feasible {m} x {n}"))
            }
            ProblemKind::Box { n } if *n == 0 => bad("box n = 0".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemKind::Lattice { side } => write!(f, "lattice:{side}"),
            ProblemKind::Overdetermined {
                m,
                n,
                scale_prob,
                scale_factor,
            } => write!(f, "overdetermined:{m}x{n}:{scale_prob}:{scale_factor}"),
            ProblemKind::TwoMoons {
                samples,
                labeled,
                k,
                noise,
            } => write!(f, "two-moons:{samples}:{labeled}:{k}:{noise}"),
            ProblemKind::Diagonal { lambda } => {
                let parts: Vec<String> = lambda.iter().map(|l| l.to_string()).collect();
                write!(f, "diagonal:{}", parts.join(","))
            }
            ProblemKind::Random { m, n, density } => write!(f, "random:{m}x{n}:{density}"),
            ProblemKind::Feasible { m, n } => write!(f, "feasible:{m}x{n}"),
            ProblemKind::Box { n } => write!(f, "box:{n}"),
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse {what} from '{s}'")))
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (m, n) = s
        .split_once('x')
        .ok_or_else(|| Error::InvalidParameter(format!("expected MxN, got '{s}'")))?;
    Ok((parse_num(m, "m")?, parse_num(n, "n")?))
}

impl FromStr for ProblemKind {
    type Err = Error;

    /// Compact forms: `lattice:20`, `overdetermined:500x200[:prob:factor]`,
    /// `two-moons:2000:100:5[:noise]`, `diagonal:1,2,3`, `identity:M`,
    /// `random:50x20:0.3`, `feasible:30x5`, `box:4`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let arity = |lo: usize, hi: usize| {
            if args.len() < lo || args.len() > hi {
                Err(Error::InvalidParameter(format!(
                    "wrong number of fields in problem '{s}'"
                )))
            } else {
                Ok(())
            }
        };
        let kind = match name {
            "lattice" => {
                arity(1, 1)?;
                ProblemKind::Lattice {
                    side: parse_num(args[0], "side")?,
                }
            }
            "overdetermined" => {
                arity(1, 3)?;
                let (m, n) = parse_dims(args[0])?;
                ProblemKind::Overdetermined {
                    m,
                    n,
                    scale_prob: args.get(1).map_or(Ok(DEFAULT_SCALE_PROB), |v| {
                        parse_num(v, "scale probability")
                    })?,
                    scale_factor: args
                        .get(2)
                        .map_or(Ok(DEFAULT_SCALE_FACTOR), |v| parse_num(v, "scale factor"))?,
                }
            }
            "two-moons" => {
                arity(3, 4)?;
                ProblemKind::TwoMoons {
                    samples: parse_num(args[0], "samples")?,
                    labeled: parse_num(args[1], "labeled")?,
                    k: parse_num(args[2], "k")?,
                    noise: args
                        .get(3)
                        .map_or(Ok(DEFAULT_MOON_NOISE), |v| parse_num(v, "noise"))?,
                }
            }
            "diagonal" => {
                arity(1, 1)?;
                let lambda = args[0]
                    .split(',')
                    .map(|v| parse_num(v, "diagonal entry"))
                    .collect::<Result<Vec<f64>>>()?;
                ProblemKind::Diagonal { lambda }
            }
            "identity" => {
                arity(1, 1)?;
                let m: usize = parse_num(args[0], "size")?;
                ProblemKind::Diagonal {
                    lambda: vec![1.0; m],
                }
            }
            "random" => {
                arity(2, 2)?;
                let (m, n) = parse_dims(args[0])?;
                ProblemKind::Random {
                    m,
                    n,
                    density: parse_num(args[1], "density")?,
                }
            }
            "feasible" => {
                arity(1, 1)?;
                let (m, n) = parse_dims(args[0])?;
                ProblemKind::Feasible { m, n }
            }
            "box" => {
                arity(1, 1)?;
                ProblemKind::Box {
                    n: parse_num(args[0], "n")?,
                }
            }
            _ => return Err(Error::InvalidParameter(format!("unknown problem '{s}'"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// A problem family with its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: ProblemKind,
    pub seed: u64,
}

/// A generated system and the seed that produced it, which differs from the
/// requested one when a label-propagation graph had to be redrawn.
#[derive(Debug, Clone)]
pub struct Generated {
    pub system: LinearSystem,
    pub seed_used: u64,
}

impl GeneratorSpec {
    pub fn new(kind: ProblemKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn generate(&self) -> Result<Generated> {
        self.kind.validate()?;
        let seed = self.seed;
        let system = match &self.kind {
            ProblemKind::Lattice { side } => gen_lattice(*side, seed)?,
            ProblemKind::Overdetermined {
                m,
                n,
                scale_prob,
                scale_factor,
            } => gen_overdetermined(*m, *n, *scale_prob, *scale_factor, seed)?,
            ProblemKind::TwoMoons {
                samples,
                labeled,
                k,
                noise,
            } => {
                let mut last = None;
                for attempt in 0..MOON_ATTEMPTS {
                    let s = seed.wrapping_add(attempt);
                    match gen_two_moons_label_prop(*samples, *labeled, *k, *noise, s) {
                        Ok(system) => {
                            return Ok(Generated {
                                system,
                                seed_used: s,
                            })
                        }
                        Err(e @ Error::DisconnectedComponent(_)) => last = Some(e),
                        Err(e) => return Err(e),
                    }
                }
                return Err(last.expect("at least one attempt"));
            }
            ProblemKind::Diagonal { lambda } => gen_diagonal(lambda, seed)?,
            ProblemKind::Random { m, n, density } => gen_random_consistent(*m, *n, *density, seed)?,
            ProblemKind::Feasible { m, n } => gen_random_feasible(*m, *n, seed)?,
            ProblemKind::Box { n } => gen_axis_box(*n, seed)?,
        };
        Ok(Generated {
            system,
            seed_used: seed,
        })
    }

    /// Plain `key = value` text (TOML), e.g.
    ///
    /// ```text
    /// kind = "lattice"
    /// side = 20
    /// seed = 7
    /// ```
    pub fn to_config_string(&self) -> String {
        let mut table =
            toml::Table::try_from(&self.kind).expect("problem kinds serialize to a table");
        table.insert("seed".into(), toml::Value::Integer(self.seed as i64));
        toml::to_string(&table).expect("table serializes")
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        let seed = match table.remove("seed") {
            Some(toml::Value::Integer(s)) if s >= 0 => s as u64,
            Some(other) => {
                return Err(Error::InvalidParameter(format!(
                    "seed must be a nonnegative integer, got {other}"
                )))
            }
            None => 0,
        };
        let kind: ProblemKind = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse {
                line: 0,
                message: e.to_string(),
            })?;
        kind.validate()?;
        Ok(Self { kind, seed })
    }
}
