//! Hit counting and exact discrepancies.
//!
//! Rectangles are half-open, `∏ [a_i, b_i)`. The suprema defining `D_N` and
//! `D*_N` are generally not attained, so the searches evaluate every critical
//! corner twice: once counting boundary points ("closed", the limit of boxes
//! growing onto the points) and once excluding them ("open", the limit of
//! boxes shrinking off them). The larger deviation of the two is the
//! supremum contribution of that corner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sequences::PointList;

/// Half-open axis rectangle `∏ [low_i, high_i)` inside the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    low: Vec<f64>,
    high: Vec<f64>,
}

impl Rect {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.is_empty() || low.len() != high.len() {
            return Err(invalid(format!(
                "rectangle corners have lengths {} and {}",
                low.len(),
                high.len()
            )));
        }
        for (i, (a, b)) in low.iter().zip(&high).enumerate() {
            if !(0.0 <= *a && a < b && *b <= 1.0) {
                return Err(invalid(format!(
                    "rectangle side {i} is [{a}, {b}), need 0 <= a < b <= 1"
                )));
            }
        }
        Ok(Self { low, high })
    }

    /// Anchored box `[0, t_1) × … × [0, t_n)`.
    pub fn anchored(t: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0; t.len()], t)
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }

    pub fn volume(&self) -> f64 {
        self.low.iter().zip(&self.high).map(|(a, b)| b - a).product()
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.low.iter().zip(&self.high))
            .all(|(x, (a, b))| a <= x && x < b)
    }
}

/// `A(R; N, ω)`: how many of `ω_1..ω_N` fall in `rect`.
pub fn count_hits(seq: &PointList, rect: &Rect, n: usize) -> Result<usize> {
    seq.require(n)?;
    if rect.dim() != seq.dim() {
        return Err(invalid(format!(
            "rectangle has dimension {}, sequence has {}",
            rect.dim(),
            seq.dim()
        )));
    }
    Ok(seq.iter().take(n).filter(|p| rect.contains(p)).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "closed_form_1d")]
    ClosedForm1d,
    CriticalGrid,
    Oracle,
}

/// Which points a witness box is meant to count in the limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// `low <= x <= high`: limit of boxes growing onto their boundary points.
    Closed,
    /// `low <= x < high`: an ordinary half-open box.
    HalfOpen,
    /// `low < x < high`: limit of boxes shrinking off their boundary points.
    Open,
}

impl WitnessKind {
    #[inline]
    pub fn contains(self, low: &[f64], high: &[f64], x: &[f64]) -> bool {
        let inside = |(x, (a, b)): (&f64, (&f64, &f64))| match self {
            WitnessKind::Closed => a <= x && x <= b,
            WitnessKind::HalfOpen => a <= x && x < b,
            WitnessKind::Open => a < x && x < b,
        };
        x.iter().zip(low.iter().zip(high)).all(inside)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub star: Option<f64>,
    pub extreme: Option<f64>,
    pub witness_low: Vec<f64>,
    pub witness_high: Vec<f64>,
    pub method: Method,
    #[serde(skip)]
    pub witness_kind: Option<WitnessKind>,
}

impl DiscrepancyReport {
    /// Deviation `|A/N − vol|` of the witness box under its counting rule.
    pub fn witness_deviation(&self, seq: &PointList) -> f64 {
        let kind = self.witness_kind.unwrap_or(WitnessKind::HalfOpen);
        let hits = seq
            .iter()
            .take(self.count)
            .filter(|p| kind.contains(&self.witness_low, &self.witness_high, p))
            .count();
        let vol: f64 = self
            .witness_low
            .iter()
            .zip(&self.witness_high)
            .map(|(a, b)| b - a)
            .product();
        (hits as f64 / self.count as f64 - vol).abs()
    }
}

/// Size limits for the exact multi-dimensional searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGuard {
    pub max_points_2d: usize,
    pub max_points_3d: usize,
    /// Cost ceiling for `n >= 4`, in critical configurations times points.
    pub budget: f64,
}

impl SearchGuard {
    pub const STAR: Self = Self {
        max_points_2d: 500,
        max_points_3d: 80,
        budget: 1e9,
    };
    pub const EXTREME: Self = Self {
        max_points_2d: 250,
        max_points_3d: 30,
        budget: 1e9,
    };

    fn check(&self, what: &str, dim: usize, n: usize, cost_exponent: usize) -> Result<()> {
        let ok = match dim {
            1 => true,
            2 => n <= self.max_points_2d,
            3 => n <= self.max_points_3d,
            _ => (n as f64).powi(cost_exponent as i32) <= self.budget,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Guard(format!(
                "exact {what} discrepancy for N = {n} in dimension {dim} is beyond the \
                 search limit; use a smaller N, a one-dimensional projection, or a \
                 sampling estimate"
            )))
        }
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn sorted_unique(v: Vec<f64>) -> Vec<f64> {
    let mut v = sorted(v);
    v.dedup();
    v
}

/// One-dimensional star discrepancy from the order statistics:
/// `1/(2N) + max_i |x_(i) − (2i−1)/(2N)|`.
pub fn star_closed_form_1d(xs: &[f64]) -> f64 {
    closed_form_1d_with_witness(xs).0
}

fn closed_form_1d_with_witness(xs: &[f64]) -> (f64, f64, WitnessKind) {
    let s = sorted(xs.to_vec());
    let n = s.len() as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, WitnessKind::Closed);
    for (i, &x) in s.iter().enumerate() {
        let mid = (2 * i + 1) as f64 / (2.0 * n);
        let dev = (x - mid).abs();
        if dev > best.0 {
            // below the midpoint the closed box [0, x] is overfull,
            // above it the half-open box [0, x) is underfull
            let kind = if x < mid {
                WitnessKind::Closed
            } else {
                WitnessKind::HalfOpen
            };
            best = (dev, x, kind);
        }
    }
    (1.0 / (2.0 * n) + best.0, best.1, best.2)
}

/// One-dimensional extreme discrepancy, `1/N + max(i/N − x_(i)) − min(i/N − x_(i))`.
pub fn extreme_closed_form_1d(xs: &[f64]) -> f64 {
    let s = sorted(xs.to_vec());
    let n = s.len() as f64;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, &x) in s.iter().enumerate() {
        let d = (i + 1) as f64 / n - x;
        hi = hi.max(d);
        lo = lo.min(d);
    }
    1.0 / n + hi - lo
}

#[derive(Debug, Clone)]
struct Best {
    value: f64,
    low: Vec<f64>,
    high: Vec<f64>,
    kind: WitnessKind,
}

impl Best {
    fn none(dim: usize) -> Self {
        Self {
            value: f64::NEG_INFINITY,
            low: vec![0.0; dim],
            high: vec![1.0; dim],
            kind: WitnessKind::HalfOpen,
        }
    }

    // strict comparison keeps the earliest corner in enumeration order
    fn offer(&mut self, other: Best) {
        if other.value > self.value {
            *self = other;
        }
    }
}

fn reduce_in_order(dim: usize, parts: Vec<Best>) -> Best {
    parts.into_iter().fold(Best::none(dim), |mut acc, b| {
        acc.offer(b);
        acc
    })
}

/// Anchored scan on the last axis. `closed` holds last coordinates of points
/// inside `[0, t]` on the fixed axes, `open` those inside `[0, t)`.
fn star_last_axis(nf: f64, vol: f64, closed: &mut [f64], open: &mut [f64], prefix_t: &[f64]) -> Best {
    let dim = prefix_t.len() + 1;
    let mut best = Best::none(dim);
    let corner = |s: f64| {
        let mut t = prefix_t.to_vec();
        t.push(s);
        t
    };

    closed.sort_by(f64::total_cmp);
    // count(≤ s)/N − vol·s, best at the last copy of each value
    for (k, &s) in closed.iter().enumerate() {
        if k + 1 < closed.len() && closed[k + 1] == s {
            continue;
        }
        let v = (k + 1) as f64 / nf - vol * s;
        if v > best.value {
            best = Best {
                value: v,
                low: vec![0.0; dim],
                high: corner(s),
                kind: WitnessKind::Closed,
            };
        }
    }

    open.sort_by(f64::total_cmp);
    // vol·s − count(< s)/N, best at each distinct value and at s = 1
    let mut k = 0usize;
    while k <= open.len() {
        let s = if k < open.len() { open[k] } else { 1.0 };
        let v = vol * s - k as f64 / nf;
        if v > best.value {
            best = Best {
                value: v,
                low: vec![0.0; dim],
                high: corner(s),
                kind: WitnessKind::HalfOpen,
            };
        }
        if k == open.len() {
            break;
        }
        let x = open[k];
        while k < open.len() && open[k] == x {
            k += 1;
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn star_recurse(
    pts: &[&[f64]],
    nf: f64,
    axis: usize,
    t: &mut Vec<f64>,
    vol: f64,
    grids: &[Vec<f64>],
    closed_idx: &[usize],
    open_idx: &[usize],
) -> Best {
    let dim = grids.len();
    if axis + 1 == dim {
        let mut closed: Vec<f64> = closed_idx.iter().map(|&i| pts[i][axis]).collect();
        let mut open: Vec<f64> = open_idx.iter().map(|&i| pts[i][axis]).collect();
        return star_last_axis(nf, vol, &mut closed, &mut open, t);
    }
    let mut best = Best::none(dim);
    for &ti in &grids[axis] {
        let c: Vec<usize> = closed_idx
            .iter()
            .copied()
            .filter(|&i| pts[i][axis] <= ti)
            .collect();
        let o: Vec<usize> = open_idx.iter().copied().filter(|&i| pts[i][axis] < ti).collect();
        t.push(ti);
        best.offer(star_recurse(pts, nf, axis + 1, t, vol * ti, grids, &c, &o));
        t.pop();
    }
    best
}

fn star_search(seq: &PointList, n: usize) -> Best {
    let dim = seq.dim();
    let pts: Vec<&[f64]> = seq.iter().take(n).collect();
    let nf = n as f64;
    let grids: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let mut g = sorted_unique(seq.axis(a, n));
            if g.last() != Some(&1.0) {
                g.push(1.0);
            }
            g
        })
        .collect();
    let all: Vec<usize> = (0..n).collect();
    if dim == 1 {
        return star_recurse(&pts, nf, 0, &mut Vec::new(), 1.0, &grids, &all, &all);
    }
    let parts: Vec<Best> = grids[0]
        .par_iter()
        .map(|&t0| {
            let c: Vec<usize> = all.iter().copied().filter(|&i| pts[i][0] <= t0).collect();
            let o: Vec<usize> = all.iter().copied().filter(|&i| pts[i][0] < t0).collect();
            star_recurse(&pts, nf, 1, &mut vec![t0], t0, &grids, &c, &o)
        })
        .collect();
    reduce_in_order(dim, parts)
}

/// Exact `D*_N` of the first `n` points.
pub fn star_discrepancy_exact(seq: &PointList, n: usize) -> Result<DiscrepancyReport> {
    star_discrepancy_exact_with(seq, n, &SearchGuard::STAR)
}

pub fn star_discrepancy_exact_with(
    seq: &PointList,
    n: usize,
    guard: &SearchGuard,
) -> Result<DiscrepancyReport> {
    seq.require(n)?;
    let dim = seq.dim();
    if dim == 1 {
        let (value, t, kind) = closed_form_1d_with_witness(&seq.axis(0, n));
        return Ok(DiscrepancyReport {
            n: 1,
            count: n,
            star: Some(value),
            extreme: None,
            witness_low: vec![0.0],
            witness_high: vec![t],
            method: Method::ClosedForm1d,
            witness_kind: Some(kind),
        });
    }
    guard.check("star", dim, n, dim + 1)?;
    let best = star_search(seq, n);
    Ok(DiscrepancyReport {
        n: dim,
        count: n,
        star: Some(best.value),
        extreme: None,
        witness_low: best.low,
        witness_high: best.high,
        method: Method::CriticalGrid,
        witness_kind: Some(best.kind),
    })
}

/// Best interval on the last axis for fixed sides on the other axes.
///
/// `closed` holds last coordinates of points in the closed partial box (volume
/// `vol_c`), `open` those in the open partial box (volume `vol_o`).
fn extreme_last_axis(
    nf: f64,
    vol_c: f64,
    vol_o: f64,
    closed: &mut [f64],
    open: &mut [f64],
    low: &[f64],
    high: &[f64],
) -> Best {
    let dim = low.len() + 1;
    let mut best = Best::none(dim);
    let with = |fixed: &[f64], s: f64| {
        let mut v = fixed.to_vec();
        v.push(s);
        v
    };

    // overfull: max over i <= k of (k − i + 1)/N − vol_c·(y_k − y_i)
    closed.sort_by(f64::total_cmp);
    let mut run_best = f64::NEG_INFINITY; // max over i <= k of vol_c·y_i − i/N
    let mut run_arg = 0usize;
    for (k, &y) in closed.iter().enumerate() {
        let cand = vol_c * y - k as f64 / nf;
        if cand > run_best {
            run_best = cand;
            run_arg = k;
        }
        let v = (k + 1) as f64 / nf - vol_c * y + run_best;
        if v > best.value {
            best = Best {
                value: v,
                low: with(low, closed[run_arg]),
                high: with(high, y),
                kind: WitnessKind::Closed,
            };
        }
    }

    if vol_o > 0.0 {
        // underfull: vol_o·(b − a) − #{a < y < b}/N with a ∈ {0} ∪ ys, b ∈ ys ∪ {1}
        open.sort_by(f64::total_cmp);
        let zeros = open.iter().take_while(|&&y| y <= 0.0).count();
        // running min of vol_o·a − #{y <= a}/N over lower ends seen so far
        let (mut min_h, mut arg_a) = (-(zeros as f64) / nf, 0.0);
        let offer = |best: &mut Best, b: f64, below_b: usize, min_h: f64, a: f64| {
            let v = vol_o * b - below_b as f64 / nf - min_h;
            if v > best.value {
                *best = Best {
                    value: v,
                    low: with(low, a),
                    high: with(high, b),
                    kind: WitnessKind::Open,
                };
            }
        };
        let mut k = zeros;
        while k < open.len() {
            let u = open[k];
            let mut e = k;
            while e < open.len() && open[e] == u {
                e += 1;
            }
            offer(&mut best, u, k, min_h, arg_a);
            let h = vol_o * u - e as f64 / nf;
            if h < min_h {
                min_h = h;
                arg_a = u;
            }
            k = e;
        }
        offer(&mut best, 1.0, open.len(), min_h, arg_a);
    }
    best
}

struct ExtremeCtx<'a> {
    pts: Vec<&'a [f64]>,
    nf: f64,
    lows: Vec<Vec<f64>>,
    highs: Vec<Vec<f64>>,
}

impl ExtremeCtx<'_> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        axis: usize,
        low: &mut Vec<f64>,
        high: &mut Vec<f64>,
        vol_c: f64,
        vol_o: f64,
        closed_idx: &[usize],
        open_idx: &[usize],
    ) -> Best {
        let dim = self.lows.len();
        if axis + 1 == dim {
            let mut c: Vec<f64> = closed_idx.iter().map(|&i| self.pts[i][axis]).collect();
            let mut o: Vec<f64> = open_idx.iter().map(|&i| self.pts[i][axis]).collect();
            return extreme_last_axis(self.nf, vol_c, vol_o, &mut c, &mut o, low, high);
        }
        let mut best = Best::none(dim);
        for &a in &self.lows[axis] {
            for &b in self.highs[axis].iter().filter(|&&b| b >= a) {
                best.offer(self.side(axis, a, b, low, high, vol_c, vol_o, closed_idx, open_idx));
            }
        }
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn side(
        &self,
        axis: usize,
        a: f64,
        b: f64,
        low: &mut Vec<f64>,
        high: &mut Vec<f64>,
        vol_c: f64,
        vol_o: f64,
        closed_idx: &[usize],
        open_idx: &[usize],
    ) -> Best {
        let c: Vec<usize> = closed_idx
            .iter()
            .copied()
            .filter(|&i| (a..=b).contains(&self.pts[i][axis]))
            .collect();
        let o: Vec<usize> = if b > a {
            open_idx
                .iter()
                .copied()
                .filter(|&i| {
                    let x = self.pts[i][axis];
                    a < x && x < b
                })
                .collect()
        } else {
            Vec::new()
        };
        low.push(a);
        high.push(b);
        let r = self.recurse(axis + 1, low, high, vol_c * (b - a), vol_o * (b - a), &c, &o);
        low.pop();
        high.pop();
        r
    }
}

fn extreme_search(seq: &PointList, n: usize) -> Best {
    let dim = seq.dim();
    let uniq: Vec<Vec<f64>> = (0..dim).map(|a| sorted_unique(seq.axis(a, n))).collect();
    let lows = uniq
        .iter()
        .map(|u| {
            let mut v = vec![0.0];
            v.extend(u.iter().copied().filter(|&x| x > 0.0));
            v
        })
        .collect();
    let highs = uniq
        .iter()
        .map(|u| {
            let mut v = u.clone();
            v.push(1.0);
            v
        })
        .collect();
    let ctx = ExtremeCtx {
        pts: seq.iter().take(n).collect(),
        nf: n as f64,
        lows,
        highs,
    };
    let all: Vec<usize> = (0..n).collect();
    if dim == 1 {
        return ctx.recurse(0, &mut Vec::new(), &mut Vec::new(), 1.0, 1.0, &all, &all);
    }
    let pairs: Vec<(f64, f64)> = ctx.lows[0]
        .iter()
        .flat_map(|&a| {
            ctx.highs[0]
                .iter()
                .filter(move |&&b| b >= a)
                .map(move |&b| (a, b))
        })
        .collect();
    let parts: Vec<Best> = pairs
        .par_iter()
        .map(|&(a, b)| ctx.side(0, a, b, &mut Vec::new(), &mut Vec::new(), 1.0, 1.0, &all, &all))
        .collect();
    reduce_in_order(dim, parts)
}

/// Exact `D_N` (and `D*_N`) of the first `n` points.
pub fn extreme_discrepancy_exact(seq: &PointList, n: usize) -> Result<DiscrepancyReport> {
    extreme_discrepancy_exact_with(seq, n, &SearchGuard::EXTREME)
}

pub fn extreme_discrepancy_exact_with(
    seq: &PointList,
    n: usize,
    guard: &SearchGuard,
) -> Result<DiscrepancyReport> {
    seq.require(n)?;
    let dim = seq.dim();
    guard.check("extreme", dim, n, 2 * dim - 1)?;
    let star = if dim == 1 {
        star_closed_form_1d(&seq.axis(0, n))
    } else {
        star_search(seq, n).value
    };
    let best = extreme_search(seq, n);
    Ok(DiscrepancyReport {
        n: dim,
        count: n,
        star: Some(star),
        extreme: Some(best.value),
        witness_low: best.low,
        witness_high: best.high,
        method: if dim == 1 {
            Method::ClosedForm1d
        } else {
            Method::CriticalGrid
        },
        witness_kind: Some(best.kind),
    })
}

/// Normalized discrepancy diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRatios {
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub star: f64,
    pub extreme: f64,
    /// `D*_N · sqrt(2N / log log N)`
    pub kiefer: f64,
    /// `N · D_N / (log N)^n`
    pub low_disc: f64,
    /// `N · D_N / (log N)^((n−1)/2)`
    pub roth: f64,
    /// `N · D*_N`
    pub n_star: f64,
    /// Set when `D_N` could not be computed exactly and `D*_N` stands in for it.
    pub estimated: bool,
}

pub fn discrepancy_ratios(seq: &PointList, n: usize) -> Result<DiscrepancyRatios> {
    seq.require(n)?;
    if n < 16 {
        return Err(Error::Domain(format!(
            "N = {n}: the Kiefer normalization needs N >= 16 so that log log N > 0"
        )));
    }
    let dim = seq.dim();
    let (star, extreme, estimated) = match extreme_discrepancy_exact(seq, n) {
        Ok(r) => (r.star.unwrap_or_default(), r.extreme.unwrap_or_default(), false),
        Err(Error::Guard(_)) => {
            let star = star_discrepancy_exact(seq, n)?.star.unwrap_or_default();
            (star, star, true)
        }
        Err(e) => return Err(e),
    };
    let nf = n as f64;
    let log_n = nf.ln();
    Ok(DiscrepancyRatios {
        n: dim,
        count: n,
        star,
        extreme,
        kiefer: star * (2.0 * nf / log_n.ln()).sqrt(),
        low_disc: nf * extreme / log_n.powi(dim as i32),
        roth: nf * extreme / log_n.powf((dim as f64 - 1.0) / 2.0),
        n_star: nf * star,
        estimated,
    })
}
