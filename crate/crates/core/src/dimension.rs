//! Weighted Hausdorff-dimension formulas for limsup sets of rectangles with
//! side exponents `τ`, the matching lower bound through ubiquity exponents
//! `(a, t)`, and an empirical box-counting slope.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::limsup::{ApproxProfile, HitIndex, Window};
use crate::rng::{derive_seed, UniformStream};
use crate::sequences::PointList;

/// Exponents `τ = (τ_1, …, τ_n)` with `min τ_i > 0` and `Σ τ_i > 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector {
    tau: Vec<f64>,
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(tau: Vec<f64>) -> Result<Self> {
        WeightVector::new(tau)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.tau
    }
}

impl WeightVector {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::Domain("tau needs at least one coordinate".to_string()));
        }
        if let Some(t) = tau.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::Domain(format!(
                "tau coordinate {t} must be positive and finite"
            )));
        }
        let sum: f64 = tau.iter().sum();
        if !(sum > 1.0) {
            return Err(Error::Domain(format!("tau sums to {sum}; it must exceed 1")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn dim(&self) -> usize {
        self.tau.len()
    }
}

/// `a` with `Σ a_i = 1` and `t = τ − a >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UbiquityExponents {
    pub a: Vec<f64>,
    pub t: Vec<f64>,
}

pub const SUM_TOLERANCE: f64 = 1e-12;

impl UbiquityExponents {
    pub fn new(a: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        let e = Self { a, t };
        e.check()?;
        Ok(e)
    }

    pub fn check(&self) -> Result<()> {
        if self.a.is_empty() || self.a.len() != self.t.len() {
            return Err(invalid("a and t must be nonempty and of equal length"));
        }
        if self.a.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(invalid("every a_i must be positive"));
        }
        if self.t.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("every t_i must be non-negative"));
        }
        let sum: f64 = self.a.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid(format!("a sums to {sum}, not 1")));
        }
        Ok(())
    }

    /// Coordinates with `t_i = 0`, on the boundary of the admissible cone.
    pub fn boundary(&self) -> Vec<usize> {
        (0..self.t.len())
            .filter(|&i| self.t[i] == 0.0)
            .map(|i| i + 1)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DimensionMethod {
    ClosedForm,
    WwLower {
        /// `(A, score)` for every distinct candidate, ascending in `A`.
        candidates: Vec<(f64, f64)>,
        /// Smallest `A` attaining the minimum.
        witness: f64,
    },
    BoxCounting {
        scales: Vec<f64>,
        counts: Vec<u64>,
        slope: f64,
        intercept: f64,
        r2: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub value: f64,
    /// 1-based coordinate attaining the minimum, for the closed form.
    pub argmin: Option<usize>,
    /// Per-coordinate values of the minimized expression.
    pub per_j: Vec<f64>,
    #[serde(flatten)]
    pub method: DimensionMethod,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// `min_j (1 + Σ_{i: τ_j ≥ τ_i} (τ_j − τ_i)) / τ_j`, lowest `j` on ties.
pub fn dimension_formula(tau: &WeightVector) -> DimensionReport {
    let t = tau.tau();
    let per_j: Vec<f64> = t
        .iter()
        .map(|&tj| (1.0 + t.iter().filter(|&&ti| tj >= ti).map(|ti| tj - ti).sum::<f64>()) / tj)
        .collect();
    let (argmin, value) = lowest_min(&per_j);
    DimensionReport {
        value,
        argmin: Some(argmin + 1),
        per_j,
        method: DimensionMethod::ClosedForm,
        notes: Vec::new(),
    }
}

fn lowest_min(v: &[f64]) -> (usize, f64) {
    v.iter().enumerate().fold(
        (0, f64::INFINITY),
        |best, (i, &x)| if x < best.1 { (i, x) } else { best },
    )
}

/// `(1 + Σ_{i: τ_k > τ_i} (τ_k − τ_i)) / τ_k`, the covering exponent at
/// scale `j^{−τ_k}` (1-based `k`).
pub fn upper_bound_exponent(tau: &WeightVector, k: usize) -> Result<f64> {
    let t = tau.tau();
    if k == 0 || k > t.len() {
        return Err(Error::OutOfRange(format!(
            "coordinate {k} outside 1..={}",
            t.len()
        )));
    }
    let tk = t[k - 1];
    Ok((1.0 + t.iter().filter(|&&ti| tk > ti).map(|ti| tk - ti).sum::<f64>()) / tk)
}

/// Minimum over candidates `A ∈ {a_i} ∪ {a_i + t_i}` of
/// `#K₁ + #K₂ + (Σ_{K₃} a_j − Σ_{K₂} t_j) / A`, where `K₁ = {a_j ≥ A}`,
/// `K₂ = {a_j + t_j ≤ A} \ K₁` and `K₃` is the rest.
pub fn ww_lower_bound(exps: &UbiquityExponents) -> Result<DimensionReport> {
    exps.check()?;
    let (a, t) = (&exps.a, &exps.t);
    let mut cands: Vec<f64> = a
        .iter()
        .copied()
        .chain(a.iter().zip(t).map(|(a, t)| a + t))
        .collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let candidates: Vec<(f64, f64)> = cands
        .iter()
        .map(|&big_a| {
            assert!(big_a > 0.0, "candidate A must be positive");
            let (mut k1, mut k2) = (0usize, 0usize);
            let (mut sum_a3, mut sum_t2) = (0.0, 0.0);
            for j in 0..a.len() {
                if a[j] >= big_a {
                    k1 += 1;
                } else if a[j] + t[j] <= big_a {
                    k2 += 1;
                    sum_t2 += t[j];
                } else {
                    sum_a3 += a[j];
                }
            }
            (big_a, (k1 + k2) as f64 + (sum_a3 - sum_t2) / big_a)
        })
        .collect();
    let scores: Vec<f64> = candidates.iter().map(|c| c.1).collect();
    let (best, value) = lowest_min(&scores);
    let boundary = exps.boundary();
    let notes = if boundary.is_empty() {
        Vec::new()
    } else {
        vec![format!("t_i = 0 at coordinates {boundary:?}")]
    };
    Ok(DimensionReport {
        value,
        argmin: None,
        per_j: scores,
        method: DimensionMethod::WwLower {
            witness: candidates[best].0,
            candidates,
        },
        notes,
    })
}

/// Ubiquity exponents for `τ`: `a_i = 1/n` when every `τ_i ≥ 1/n`; otherwise
/// the `u` largest coordinates share `D̃ = (1 − Σ_{i>u} τ_i)/u` (in descending
/// order, with `τ_u > D̃ ≥ τ_{u+1}`) and the rest keep `a_i = τ_i`.
pub fn choose_weights(tau: &WeightVector) -> UbiquityExponents {
    let t = tau.tau();
    let n = t.len();
    let inv = 1.0 / n as f64;
    let a: Vec<f64> = if t.iter().all(|&x| x >= inv) {
        vec![inv; n]
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| t[j].total_cmp(&t[i]).then(i.cmp(&j)));
        let sorted: Vec<f64> = order.iter().map(|&i| t[i]).collect();
        // suffix sums Σ_{i>u} τ_i in the descending order
        let mut tail = vec![0.0; n + 1];
        for u in (0..n).rev() {
            tail[u] = tail[u + 1] + sorted[u];
        }
        let (u, d) = (1..=n)
            .map(|u| (u, (1.0 - tail[u]) / u as f64))
            .find(|&(u, d)| {
                let next = if u < n { sorted[u] } else { 0.0 };
                sorted[u - 1] > d && d >= next
            })
            .expect("a splitting index exists whenever some τ_i < 1/n and Σ τ_i > 1");
        let mut a = t.to_vec();
        for &i in &order[..u] {
            a[i] = d;
        }
        a
    };
    let tt = t.iter().zip(&a).map(|(t, a)| t - a).collect();
    UbiquityExponents { a, t: tt }
}

/// How occupancy of a `δ`-box is decided.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "occupancy", rename_all = "snake_case")]
pub enum Occupancy {
    /// Box meets some rectangle of the layer (interval arithmetic).
    #[default]
    Exact,
    /// Some of `per_box` seeded points of the box is a hit.
    Sampled { per_box: u32, seed: u64 },
}

pub const DEFAULT_SAMPLES_PER_BOX: u32 = 16;
/// Boxes a sampled count may visit at one scale.
pub const MAX_SAMPLED_BOXES: u64 = 50_000_000;

/// Indices at scale `δ`: from `K`, the first `j` of the window with
/// `0 < max_i ψ_i(j) ≤ δ` (the last `j` with positive `ψ` when none is that
/// small), up to `2K − 1`.
fn layer(psi: &ApproxProfile, win: &Window, delta: f64) -> Option<(u64, u64)> {
    let size = |j: u64| psi.eval(j).into_iter().fold(0.0, f64::max);
    let mut last_positive = None;
    let mut k = None;
    for j in win.j_min..=win.j_max {
        let s = size(j);
        if s > 0.0 {
            if s <= delta {
                k = Some(j);
                break;
            }
            last_positive = Some(j);
        }
    }
    let k = k.or(last_positive)?;
    Some((k, (2 * k - 1).min(win.j_max)))
}

/// Occupied `δ`-boxes of `[0,1]^n`, `n ∈ {1, 2}`, met by the open rectangles
/// of indices `lo..=hi`, as merged runs of second-axis box indices per row.
fn box_rows(
    seq: &PointList,
    psi: &ApproxProfile,
    (lo, hi): (u64, u64),
    delta: f64,
) -> BTreeMap<u64, Vec<(u64, u64)>> {
    let boxes = (1.0 / delta).ceil() as u64;
    let range = |w: f64, r: f64| -> Option<(u64, u64)> {
        let (a, b) = ((w - r).max(0.0), (w + r).min(1.0));
        if !(a < b) {
            return None;
        }
        let first = ((a / delta).floor() as u64).min(boxes - 1);
        let last = (((b / delta).ceil() as u64).max(1) - 1).min(boxes - 1);
        Some((first, last))
    };
    let mut rows: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
    for j in lo..=hi {
        let w = seq.point(j as usize);
        let r = psi.eval(j);
        let Some(x) = range(w[0], r[0]) else { continue };
        let y = if w.len() == 2 {
            match range(w[1], r[1]) {
                Some(y) => y,
                None => continue,
            }
        } else {
            (0, 0)
        };
        for row in x.0..=x.1 {
            rows.entry(row).or_default().push(y);
        }
    }
    for runs in rows.values_mut() {
        runs.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(runs.len());
        for &(s, e) in runs.iter() {
            match merged.last_mut() {
                Some(last) if s <= last.1 + 1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        *runs = merged;
    }
    rows
}

fn count_boxes(
    seq: &PointList,
    psi: &ApproxProfile,
    win: &Window,
    delta: f64,
    scale_index: u64,
    occupancy: &Occupancy,
) -> Result<u64> {
    let Some(layer) = layer(psi, win, delta) else {
        return Ok(0);
    };
    let rows = box_rows(seq, psi, layer, delta);
    match *occupancy {
        Occupancy::Exact => Ok(rows.values().flatten().map(|(s, e)| e - s + 1).sum()),
        Occupancy::Sampled { per_box, seed } => {
            let total: u64 = rows.values().flatten().map(|(s, e)| e - s + 1).sum();
            if total > MAX_SAMPLED_BOXES {
                return Err(Error::Guard(format!(
                    "{total} candidate boxes at delta = {delta}; use exact occupancy"
                )));
            }
            let n = seq.dim();
            let index = HitIndex::new(seq, Window::new(layer.0, layer.1)?, psi)?;
            let mut stream = UniformStream::new(derive_seed(seed, scale_index));
            let mut x = vec![0.0; n];
            let mut occupied = 0u64;
            for (&row, runs) in &rows {
                for &(s, e) in runs {
                    for col in s..=e {
                        let cell = [row, col];
                        let hit = (0..per_box).any(|_| {
                            for (i, v) in x.iter_mut().enumerate() {
                                *v = ((cell[i] as f64 + stream.next_f64()) * delta).min(1.0);
                            }
                            index.any_hit(&x)
                        });
                        occupied += hit as u64;
                    }
                }
            }
            Ok(occupied)
        }
    }
}

/// Least-squares slope, intercept and `r²` of `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(invalid("a regression needs at least 3 points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("regression abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, my - slope * mx, r2))
}

/// Slope of `log count(δ)` against `log(1/δ)`.
///
/// At each scale the truncated set is represented by the indices whose
/// rectangles have size comparable to `δ` (see [`layer`]); the count is the
/// number of `δ`-boxes that set occupies.
pub fn box_dimension_estimate(
    seq: &PointList,
    psi: &ApproxProfile,
    win: &Window,
    scales: &[f64],
    occupancy: &Occupancy,
) -> Result<DimensionReport> {
    let errs = psi.validate();
    if !errs.is_empty() {
        return Err(invalid(errs.join("; ")));
    }
    if !(1..=2).contains(&seq.dim()) || psi.dim() != seq.dim() {
        return Err(invalid(
            "box counting supports dimensions 1 and 2 with a matching profile",
        ));
    }
    if win.j_max > seq.len() as u64 {
        return Err(Error::OutOfRange(format!(
            "window ends at {} but only {} points are available",
            win.j_max,
            seq.len()
        )));
    }
    if scales.len() < 3 {
        return Err(invalid("box counting needs at least 3 scales"));
    }
    if scales.iter().any(|d| !(d.is_finite() && *d > 0.0 && *d < 1.0)) {
        return Err(invalid("scales must lie in (0, 1)"));
    }
    if scales.windows(2).any(|w| w[0] <= w[1]) {
        return Err(invalid("scales must be strictly decreasing"));
    }
    if let Occupancy::Sampled { per_box: 0, .. } = occupancy {
        return Err(invalid("sampled occupancy needs at least one point per box"));
    }
    let counts = scales
        .par_iter()
        .enumerate()
        .map(|(i, &d)| count_boxes(seq, psi, win, d, i as u64, occupancy))
        .collect::<Result<Vec<u64>>>()?;
    if counts.contains(&0) {
        return Err(Error::Domain(
            "some scale has no occupied box; psi vanishes on the window".to_string(),
        ));
    }
    let x: Vec<f64> = scales.iter().map(|d| -d.ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, r2) = fit_line(&x, &y)?;
    Ok(DimensionReport {
        value: slope,
        argmin: None,
        per_j: Vec::new(),
        method: DimensionMethod::BoxCounting {
            scales: scales.to_vec(),
            counts,
            slope,
            intercept,
            r2,
        },
        notes: Vec::new(),
    })
}

/// `delta,count` rows of a box-counting report.
pub fn box_counts_csv(report: &DimensionReport) -> Result<String> {
    let DimensionMethod::BoxCounting { scales, counts, .. } = &report.method else {
        return Err(invalid("not a box-counting report"));
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["delta", "count"])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for (d, c) in scales.iter().zip(counts) {
        w.write_record([d.to_string(), c.to_string()])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
