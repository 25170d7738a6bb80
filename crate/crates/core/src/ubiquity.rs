//! Coverage of balls by the rectangles `Δ(ω_j, ρ(N)) = ∏ (ω_{j,i} − ρ_i, ω_{j,i} + ρ_i)`.
//!
//! Balls are sup-metric cubes clipped to `[0,1]^n`. A point `c` is covered by
//! `Δ(ω_j, ρ)` iff `ω_j` lies in the open box `(c − ρ, c + ρ)`, so every
//! estimator below reduces to "is there an index of the block in this box?"
//! queries against a [`CoverSource`].

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dss::{RateFunction, Schedule};
use crate::error::{invalid, Error, Result};
use crate::rng::UniformStream;
use crate::sequences::{radical_inverse, LazyVanDerCorput, Point, PointList};

/// `ρ_i(N) = base(N)^{exponents_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoProfile {
    pub base: RateFunction,
    pub exponents: Vec<f64>,
}

impl RhoProfile {
    pub fn new(base: RateFunction, exponents: Vec<f64>) -> Result<Self> {
        let p = Self { base, exponents };
        let errs = p.validate();
        if errs.is_empty() {
            Ok(p)
        } else {
            Err(invalid(errs.join("; ")))
        }
    }

    /// Equal exponents `1/n`, so that `∏ ρ_i = base`.
    pub fn uniform(base: RateFunction, dim: usize) -> Result<Self> {
        Self::new(base, vec![1.0 / dim as f64; dim])
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.base.validate();
        if self.exponents.is_empty() {
            errs.push("rho profile needs at least one exponent".to_string());
        }
        for (i, e) in self.exponents.iter().enumerate() {
            if !(e.is_finite() && *e > 0.0) {
                errs.push(format!("rho exponent {} = {e} must be positive", i + 1));
            }
        }
        errs
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Whether the exponents sum to one, i.e. `∏ ρ_i(N) = base(N)`.
    pub fn is_normalized(&self) -> bool {
        (self.exponents.iter().sum::<f64>() - 1.0).abs() <= 1e-12
    }

    pub fn radii(&self, n: u64) -> Vec<f64> {
        let b = self.base.eval(n);
        self.exponents.iter().map(|e| b.powf(*e)).collect()
    }

    /// `∏ ρ_i(N)`.
    pub fn product(&self, n: u64) -> f64 {
        self.radii(n).iter().product()
    }
}

/// Sup-metric ball clipped to the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        let b = Self { center, radius };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(invalid(format!("ball radius {} must be positive", self.radius)));
        }
        if !(self.volume() > 0.0) {
            return Err(invalid("ball has zero volume inside the unit cube"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn low(&self) -> Vec<f64> {
        self.center
            .coords()
            .iter()
            .map(|c| (c - self.radius).max(0.0))
            .collect()
    }

    pub fn high(&self) -> Vec<f64> {
        self.center
            .coords()
            .iter()
            .map(|c| (c + self.radius).min(1.0))
            .collect()
    }

    pub fn sides(&self) -> Vec<f64> {
        self.low().iter().zip(self.high()).map(|(l, h)| h - l).collect()
    }

    pub fn volume(&self) -> f64 {
        self.sides().iter().product()
    }
}

/// `count` balls of a common radius with seeded uniform centers.
pub fn random_balls(seed: u64, dim: usize, count: usize, radius: f64) -> Result<Vec<Ball>> {
    let mut s = UniformStream::new(seed);
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..dim).map(|_| s.next_f64()).collect();
            Ball::new(Point::new(c)?, radius)
        })
        .collect()
}

/// Block of a sequence prepared for box queries.
pub trait BlockQuery: Sync {
    /// Is some point of the block inside the open box `(a, b)`?
    fn any_in_box(&self, a: &[f64], b: &[f64]) -> bool;
    /// Points of a one-dimensional block inside `(a, b)`, ascending.
    fn sorted_in(&self, a: f64, b: f64) -> Vec<f64>;

    /// Length of `[l, h] ∩ ⋃ (x − r, x + r)` over a one-dimensional block.
    fn union_length(&self, l: f64, h: f64, r: f64) -> f64 {
        let mut acc = UnionAcc::default();
        for x in self.sorted_in(l - r, h + r) {
            acc.interval((x - r).max(l), (x + r).min(h));
        }
        acc.covered
    }
}

/// Running length of a union of intervals fed in ascending order of both ends.
#[derive(Debug)]
struct UnionAcc {
    covered: f64,
    end: f64,
}

impl Default for UnionAcc {
    fn default() -> Self {
        Self {
            covered: 0.0,
            end: f64::NEG_INFINITY,
        }
    }
}

impl UnionAcc {
    fn interval(&mut self, a: f64, b: f64) {
        self.covered += (b - a.max(self.end)).max(0.0);
        self.end = self.end.max(b);
    }

    /// A run of equal-radius intervals summarized by `s` (absolute offsets).
    fn run(&mut self, s: RunSummary, r: f64) {
        self.covered += s.total - (self.end - (s.first - r)).max(0.0);
        self.end = s.last + r;
    }
}

/// Union of `(x − r, x + r)` over a set of points: extreme points and length.
#[derive(Debug, Clone, Copy)]
struct RunSummary {
    first: f64,
    last: f64,
    total: f64,
}

impl RunSummary {
    fn shifted(self, by: f64) -> Self {
        Self {
            first: self.first + by,
            last: self.last + by,
            ..self
        }
    }
}

/// Anything whose index blocks `(lo, hi]` can be queried.
pub trait CoverSource: Sync {
    fn dim(&self) -> usize;
    /// Number of addressable points, `None` when unbounded.
    fn available(&self) -> Option<u64>;
    fn prepare(&self, lo: u64, hi: u64) -> Result<Box<dyn BlockQuery + '_>>;
}

fn check_block(src: &(impl CoverSource + ?Sized), lo: u64, hi: u64) -> Result<()> {
    if lo > hi {
        return Err(invalid(format!("empty index range ({lo}, {hi}]")));
    }
    if let Some(n) = src.available() {
        if hi > n {
            return Err(Error::OutOfRange(format!(
                "index {hi} requested but only {n} points are available"
            )));
        }
    }
    Ok(())
}

/// Block points sorted by their first coordinate.
struct SortedBlock<'a> {
    seq: &'a PointList,
    order: Vec<(f64, u32)>,
}

impl BlockQuery for SortedBlock<'_> {
    fn any_in_box(&self, a: &[f64], b: &[f64]) -> bool {
        let start = self.order.partition_point(|(x, _)| *x <= a[0]);
        self.order[start..]
            .iter()
            .take_while(|(x, _)| *x < b[0])
            .any(|&(_, j)| {
                let p = self.seq.point(j as usize);
                (1..p.len()).all(|i| a[i] < p[i] && p[i] < b[i])
            })
    }

    fn sorted_in(&self, a: f64, b: f64) -> Vec<f64> {
        let start = self.order.partition_point(|(x, _)| *x <= a);
        self.order[start..]
            .iter()
            .take_while(|(x, _)| *x < b)
            .map(|(x, _)| *x)
            .collect()
    }
}

impl CoverSource for PointList {
    fn dim(&self) -> usize {
        PointList::dim(self)
    }

    fn available(&self) -> Option<u64> {
        Some(self.len() as u64)
    }

    fn prepare(&self, lo: u64, hi: u64) -> Result<Box<dyn BlockQuery + '_>> {
        check_block(self, lo, hi)?;
        if hi > u64::from(u32::MAX) {
            return Err(Error::Guard(
                "point lists beyond 2^32 points are not indexed".to_string(),
            ));
        }
        let mut order: Vec<(f64, u32)> = (lo + 1..=hi)
            .map(|j| (self.point(j as usize)[0], j as u32))
            .collect();
        order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        Ok(Box::new(SortedBlock { seq: self, order }))
    }
}

/// Van der Corput block answered by b-adic descent: `x_j` lies in the
/// level-`ℓ` interval `[p/b^ℓ, (p+1)/b^ℓ)` iff `j mod b^ℓ` is the digit
/// reversal of `p`, so no point is ever materialized.
struct DigitBlock {
    vdc: LazyVanDerCorput,
    lo: u64,
    hi: u64,
}

impl DigitBlock {
    /// Range `[t0, t1]` of `t` with `r + t·m` in `(lo, hi]`; empty when `t0 > t1`.
    fn t_range(&self, r: u128, m: u128) -> (u128, u128) {
        let (first, last) = (u128::from(self.lo) + 1, u128::from(self.hi));
        if last < r {
            return (1, 0);
        }
        let t0 = if first > r { (first - r).div_ceil(m) } else { 0 };
        (t0, (last - r) / m)
    }

    /// Union summary of the points `φ(t)/m`, `t0 <= t <= t1`, relative to
    /// the node's left edge. Nodes of one level differ only by translation,
    /// so the memo holds a handful of entries per level.
    fn summary(
        &self,
        m: u128,
        (t0, t1): (u128, u128),
        r: f64,
        memo: &mut HashMap<(u128, u128, u128), RunSummary>,
    ) -> RunSummary {
        if t0 == t1 {
            let x = radical_inverse(t0 as u64, self.vdc.base()) / m as f64;
            return RunSummary {
                first: x,
                last: x,
                total: 2.0 * r,
            };
        }
        if let Some(s) = memo.get(&(m, t0, t1)) {
            return *s;
        }
        let base = u128::from(self.vdc.base());
        let mut out: Option<RunSummary> = None;
        for d in 0..base {
            if t1 < d {
                break;
            }
            let s0 = if t0 > d { (t0 - d).div_ceil(base) } else { 0 };
            let s1 = (t1 - d) / base;
            if s0 > s1 {
                continue;
            }
            let child = self
                .summary(m * base, (s0, s1), r, memo)
                .shifted(d as f64 / (m * base) as f64);
            out = Some(match out {
                None => child,
                Some(acc) => RunSummary {
                    first: acc.first,
                    last: child.last,
                    total: acc.total + child.total - (2.0 * r - (child.first - acc.last)).max(0.0),
                },
            });
        }
        let s = out.expect("a nonempty range has points");
        memo.insert((m, t0, t1), s);
        s
    }

    fn union_walk(
        &self,
        p: u128,
        r: u128,
        m: u128,
        (l, h, rad): (f64, f64, f64),
        memo: &mut HashMap<(u128, u128, u128), RunSummary>,
        acc: &mut UnionAcc,
    ) {
        let (left, right) = (p as f64 / m as f64, (p + 1) as f64 / m as f64);
        let (t0, t1) = self.t_range(r, m);
        if t0 > t1 || right <= l - rad || left >= h + rad {
            return;
        }
        if left >= l + rad && right <= h - rad {
            // no interval of this node reaches the ball's boundary
            acc.run(self.summary(m, (t0, t1), rad, memo).shifted(left), rad);
            return;
        }
        if t0 == t1 {
            let x = self.vdc.point((r + t0 * m) as u64);
            if l - rad < x && x < h + rad {
                acc.interval((x - rad).max(l), (x + rad).min(h));
            }
            return;
        }
        let base = u128::from(self.vdc.base());
        for d in 0..base {
            self.union_walk(p * base + d, r + d * m, m * base, (l, h, rad), memo, acc);
        }
    }

    /// Some `j` in `(lo, hi]` with `j ≡ r (mod m)`?
    fn hits(&self, r: u128, m: u128) -> bool {
        let first = u128::from(self.lo) + 1;
        let j0 = first + (r + m - first % m) % m;
        j0 <= u128::from(self.hi)
    }

    fn any(&self, p: u128, r: u128, m: u128, a: f64, b: f64) -> bool {
        let (left, right) = (p as f64 / m as f64, (p + 1) as f64 / m as f64);
        if right <= a || left >= b || !self.hits(r, m) {
            return false;
        }
        if m > u128::from(self.hi) {
            let x = self.vdc.point(r as u64);
            return a < x && x < b;
        }
        if left > a && right <= b {
            return true;
        }
        let base = u128::from(self.vdc.base());
        (0..base).any(|d| self.any(p * base + d, r + d * m, m * base, a, b))
    }

    fn collect(&self, p: u128, r: u128, m: u128, a: f64, b: f64, out: &mut Vec<f64>) {
        let (left, right) = (p as f64 / m as f64, (p + 1) as f64 / m as f64);
        if right <= a || left >= b || !self.hits(r, m) {
            return;
        }
        if m > u128::from(self.hi) {
            let x = self.vdc.point(r as u64);
            if a < x && x < b {
                out.push(x);
            }
            return;
        }
        let base = u128::from(self.vdc.base());
        for d in 0..base {
            self.collect(p * base + d, r + d * m, m * base, a, b, out);
        }
    }
}

impl BlockQuery for DigitBlock {
    fn any_in_box(&self, a: &[f64], b: &[f64]) -> bool {
        self.lo < self.hi && self.any(0, 0, 1, a[0], b[0])
    }

    fn sorted_in(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if self.lo < self.hi {
            self.collect(0, 0, 1, a, b, &mut out);
        }
        out
    }

    fn union_length(&self, l: f64, h: f64, r: f64) -> f64 {
        let mut acc = UnionAcc::default();
        if self.lo < self.hi {
            let mut memo = HashMap::new();
            self.union_walk(0, 0, 1, (l, h, r), &mut memo, &mut acc);
        }
        acc.covered
    }
}

impl CoverSource for LazyVanDerCorput {
    fn dim(&self) -> usize {
        1
    }

    fn available(&self) -> Option<u64> {
        None
    }

    fn prepare(&self, lo: u64, hi: u64) -> Result<Box<dyn BlockQuery + '_>> {
        check_block(self, lo, hi)?;
        if hi > i64::MAX as u64 {
            return Err(invalid("indices must stay below 2^63"));
        }
        Ok(Box::new(DigitBlock { vdc: *self, lo, hi }))
    }
}

/// How the covered fraction of a ball is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CoverMethod {
    /// Cell centers of a uniform grid with per-axis spacing at most `resolution`.
    Grid {
        resolution: f64,
    },
    MonteCarlo {
        samples: u64,
        seed: u64,
    },
    /// Interval union, one-dimensional only.
    Exact,
}

impl CoverMethod {
    pub fn default_grid(dim: usize) -> Self {
        CoverMethod::Grid {
            resolution: if dim == 1 { 1e-4 } else { 1e-3 },
        }
    }

    pub fn label(&self) -> String {
        match self {
            CoverMethod::Grid { resolution } => format!("grid({resolution})"),
            CoverMethod::MonteCarlo { samples, seed } => format!("monte_carlo({samples},{seed})"),
            CoverMethod::Exact => "exact".to_string(),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        match self {
            CoverMethod::Grid { resolution } if !(resolution.is_finite() && *resolution > 0.0) => {
                vec![format!("grid resolution {resolution} must be positive")]
            }
            CoverMethod::MonteCarlo { samples: 0, .. } => {
                vec!["monte carlo needs at least one sample".to_string()]
            }
            _ => Vec::new(),
        }
    }
}

/// Largest grid the estimator will sweep.
pub const MAX_GRID_CELLS: u64 = 200_000_000;

/// Covered fraction of `ball` and its error bound.
fn measure(q: &dyn BlockQuery, rho: &[f64], ball: &Ball, method: &CoverMethod) -> Result<(f64, f64)> {
    let n = ball.dim();
    let (low, high) = (ball.low(), ball.high());
    let sides = ball.sides();
    match *method {
        CoverMethod::Exact => {
            if n != 1 {
                return Err(invalid("the exact method handles one dimension only"));
            }
            let covered = q.union_length(low[0], high[0], rho[0]);
            Ok(((covered / sides[0]).clamp(0.0, 1.0), 1e-12))
        }
        CoverMethod::Grid { resolution } => {
            let min_side = sides.iter().copied().fold(f64::INFINITY, f64::min);
            if min_side < resolution {
                return Err(Error::Guard(format!(
                    "ball side {min_side} is below the grid resolution {resolution}; use a finer resolution"
                )));
            }
            let cells: Vec<u64> = sides.iter().map(|s| (s / resolution).ceil() as u64).collect();
            let total = cells
                .iter()
                .try_fold(1u64, |acc, &c| acc.checked_mul(c))
                .filter(|t| *t <= MAX_GRID_CELLS)
                .ok_or_else(|| {
                    Error::Guard(format!(
                        "grid of {cells:?} cells exceeds {MAX_GRID_CELLS}; use a coarser resolution or monte_carlo"
                    ))
                })?;
            let width: Vec<f64> = sides.iter().zip(&cells).map(|(s, c)| s / *c as f64).collect();
            let hit = (0..total)
                .into_par_iter()
                .map_init(
                    || (vec![0.0; n], vec![0.0; n]),
                    |(a, b), idx| {
                        let mut rest = idx;
                        for i in 0..n {
                            let c = low[i] + ((rest % cells[i]) as f64 + 0.5) * width[i];
                            rest /= cells[i];
                            a[i] = c - rho[i];
                            b[i] = c + rho[i];
                        }
                        q.any_in_box(a, b) as u64
                    },
                )
                .sum::<u64>();
            Ok((hit as f64 / total as f64, 2.0 * n as f64 * resolution / min_side))
        }
        CoverMethod::MonteCarlo { samples, seed } => {
            const CHUNK: u64 = 4096;
            let hit = (0..samples.div_ceil(CHUNK))
                .into_par_iter()
                .map(|chunk| {
                    let mut s = UniformStream::new(seed);
                    s.seek(chunk * CHUNK * n as u64);
                    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
                    let mut hits = 0u64;
                    for _ in chunk * CHUNK..((chunk + 1) * CHUNK).min(samples) {
                        for i in 0..n {
                            let c = low[i] + s.next_f64() * sides[i];
                            a[i] = c - rho[i];
                            b[i] = c + rho[i];
                        }
                        hits += q.any_in_box(&a, &b) as u64;
                    }
                    hits
                })
                .sum::<u64>();
            let p = hit as f64 / samples as f64;
            let s = samples as f64;
            // variance floored at 1/S so that the bound stays positive at p ∈ {0, 1}
            Ok((p, 3.0 * ((p * (1.0 - p)).max(1.0 / s) / s).sqrt()))
        }
    }
}

fn check_inputs(
    src: &(impl CoverSource + ?Sized),
    rho: &RhoProfile,
    ball: &Ball,
    method: &CoverMethod,
) -> Result<()> {
    let mut errs = rho.validate();
    errs.extend(method.validate());
    if rho.dim() != src.dim() || ball.dim() != src.dim() {
        errs.push(format!(
            "dimension mismatch: sequence {}, rho {}, ball {}",
            src.dim(),
            rho.dim(),
            ball.dim()
        ));
    }
    if errs.is_empty() {
        ball.check()
    } else {
        Err(invalid(errs.join("; ")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Block index, absent for a full-prefix union.
    pub k: Option<usize>,
    /// Index range `(lo, hi]` of the union.
    pub block: (u64, u64),
    /// Index at which `ρ` is evaluated.
    pub rho_at: u64,
    pub fraction: f64,
    #[serde(flatten)]
    pub method: CoverMethod,
    pub error_bound: f64,
}

/// Covered fraction of `ball` by the rectangles of indices `(lo, hi]`
/// with radii `ρ(rho_at)`.
pub fn cover_fraction(
    src: &(impl CoverSource + ?Sized),
    (lo, hi): (u64, u64),
    rho_at: u64,
    rho: &RhoProfile,
    ball: &Ball,
    method: &CoverMethod,
) -> Result<CoverageReport> {
    check_inputs(src, rho, ball, method)?;
    let q = src.prepare(lo, hi)?;
    let (fraction, error_bound) = measure(q.as_ref(), &rho.radii(rho_at), ball, method)?;
    Ok(CoverageReport {
        k: None,
        block: (lo, hi),
        rho_at,
        fraction,
        method: *method,
        error_bound,
    })
}

/// Fraction of `ball` covered by the block `(N_{k−1}, N_k]` at radii `ρ(N_k)`.
pub fn block_cover_fraction(
    src: &(impl CoverSource + ?Sized),
    sched: &Schedule,
    k: usize,
    rho: &RhoProfile,
    ball: &Ball,
    method: &CoverMethod,
) -> Result<CoverageReport> {
    let (lo, hi) = sched.block(k)?;
    let mut r = cover_fraction(src, (lo, hi), hi, rho, ball, method)?;
    r.k = Some(k);
    Ok(r)
}

/// Fraction of `ball` covered by the first `n_k` rectangles at radii `ρ(n_k)`.
pub fn full_cover_fraction(
    src: &(impl CoverSource + ?Sized),
    n_k: u64,
    rho: &RhoProfile,
    ball: &Ball,
    method: &CoverMethod,
) -> Result<CoverageReport> {
    cover_fraction(src, (0, n_k), n_k, rho, ball, method)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorBlockRecord {
    pub k: usize,
    /// Covered fraction of the ball by indices `1..=N_{k−1}` at radii `ρ(N_k)`.
    pub lhs: f64,
    /// `(1+δ)(1+η)^n · N_{k−1} · ∏ ρ_i(N_k)`
    pub rhs: f64,
    /// `lhs < rhs`; also true when the prior union is empty.
    pub holds: bool,
    pub error_bound: f64,
}

/// Compares the measure already covered before block `k` with its union bound.
#[allow(clippy::too_many_arguments)]
pub fn prior_block_excess(
    src: &(impl CoverSource + ?Sized),
    sched: &Schedule,
    k: usize,
    rho: &RhoProfile,
    ball: &Ball,
    delta: f64,
    eta: f64,
    method: &CoverMethod,
) -> Result<PriorBlockRecord> {
    if !(delta > 0.0 && eta > 0.0) {
        return Err(invalid(format!(
            "delta = {delta} and eta = {eta} must be positive"
        )));
    }
    let (prev, n_k) = sched.block(k)?;
    let cov = cover_fraction(src, (0, prev), n_k, rho, ball, method)?;
    let rhs = (1.0 + delta) * (1.0 + eta).powi(rho.dim() as i32) * prev as f64 * rho.product(n_k);
    Ok(PriorBlockRecord {
        k,
        lhs: cov.fraction,
        rhs,
        holds: prev == 0 || cov.fraction < rhs,
        error_bound: cov.error_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UbiquityRow {
    pub ball_id: usize,
    pub k: usize,
    pub fraction: f64,
    pub method: String,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UbiquityReport {
    /// Smallest block-coverage fraction over every ball and block.
    pub c_hat: f64,
    pub table: Vec<UbiquityRow>,
}

impl UbiquityReport {
    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.table)
    }
}

pub fn rows_to_csv(rows: &[UbiquityRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Block-coverage fractions for every ball and block index in `ks`.
pub fn verify_local_ubiquity(
    src: &(impl CoverSource + ?Sized),
    sched: &Schedule,
    rho: &RhoProfile,
    balls: &[Ball],
    ks: &[usize],
    method: &CoverMethod,
) -> Result<UbiquityReport> {
    if balls.is_empty() {
        return Err(invalid("at least one ball is required"));
    }
    if ks.is_empty() {
        return Err(invalid("at least one block index is required"));
    }
    for ball in balls {
        check_inputs(src, rho, ball, method)?;
    }
    let mut table = Vec::with_capacity(balls.len() * ks.len());
    for &k in ks {
        let (lo, hi) = sched.block(k)?;
        let q = src.prepare(lo, hi)?;
        let radii = rho.radii(hi);
        let rows = balls
            .par_iter()
            .enumerate()
            .map(|(ball_id, ball)| {
                let (fraction, error_bound) = measure(q.as_ref(), &radii, ball, method)?;
                Ok(UbiquityRow {
                    ball_id,
                    k,
                    fraction,
                    method: method.label(),
                    error_bound,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        table.extend(rows);
    }
    table.sort_by_key(|r| (r.ball_id, r.k));
    let c_hat = table.iter().map(|r| r.fraction).fold(f64::INFINITY, f64::min);
    Ok(UbiquityReport { c_hat, table })
}
