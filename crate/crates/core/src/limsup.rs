//! Hits of shrinking rectangles `|x_i − ω_{j,i}| < ψ_i(j)`, Monte Carlo
//! measure of the truncated limsup set over a window of indices, and
//! partial sums of the series that decide its measure.
//!
//! Distances are plain differences on `[0,1]`; nothing wraps around.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dss::{make_schedule, RateFunction, ScheduleKind};
use crate::error::{invalid, Error, Result};
use crate::rng::UniformStream;
use crate::sequences::PointList;

/// One coordinate `ψ_i` of an approximation profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PsiFunction {
    /// `c · j^{−tau}`
    Power { c: f64, tau: f64 },
    /// `v(j)^{tau}`
    RatePower { v: RateFunction, tau: f64 },
    /// Step function through `(j, value)` pairs, as for rate tables.
    Table { pairs: Vec<(u64, f64)> },
}

impl PsiFunction {
    pub fn eval(&self, j: u64) -> f64 {
        self.eval_f(j as f64)
    }

    pub fn eval_f(&self, jf: f64) -> f64 {
        match self {
            PsiFunction::Power { c, tau } => c * jf.powf(-tau),
            PsiFunction::RatePower { v, tau } => v.eval_f(jf).powf(*tau),
            PsiFunction::Table { pairs } => RateFunction::Table { pairs: pairs.clone() }.eval_f(jf),
        }
    }

    /// `ln ψ(N)` from `ln N`.
    pub fn ln_eval(&self, ln_n: f64) -> f64 {
        match self {
            PsiFunction::Power { c, tau } => c.ln() - tau * ln_n,
            PsiFunction::RatePower { v, tau } => tau * v.ln_eval(ln_n),
            PsiFunction::Table { pairs } => RateFunction::Table { pairs: pairs.clone() }.ln_eval(ln_n),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        match self {
            PsiFunction::Power { c, tau } => {
                let mut e = Vec::new();
                if !(c.is_finite() && *c >= 0.0) {
                    e.push(format!("psi power: c = {c} must be finite and >= 0"));
                }
                if !(tau.is_finite() && *tau >= 0.0) {
                    e.push(format!("psi power: tau = {tau} must be finite and >= 0"));
                }
                e
            }
            PsiFunction::RatePower { v, tau } => {
                let mut e = v.validate();
                if !(tau.is_finite() && *tau > 0.0) {
                    e.push(format!("psi rate_power: tau = {tau} must be positive"));
                }
                e
            }
            PsiFunction::Table { pairs } => RateFunction::Table { pairs: pairs.clone() }.validate(),
        }
    }
}

/// `Ψ = (ψ_1, …, ψ_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApproxProfile {
    pub coords: Vec<PsiFunction>,
}

impl ApproxProfile {
    pub fn new(coords: Vec<PsiFunction>) -> Result<Self> {
        let p = Self { coords };
        let errs = p.validate();
        if errs.is_empty() {
            Ok(p)
        } else {
            Err(invalid(errs.join("; ")))
        }
    }

    /// The same `ψ` in every coordinate.
    pub fn repeated(psi: PsiFunction, dim: usize) -> Result<Self> {
        Self::new(vec![psi; dim])
    }

    pub fn validate(&self) -> Vec<String> {
        let mut e: Vec<String> = self.coords.iter().flat_map(|c| c.validate()).collect();
        if self.coords.is_empty() {
            e.push("approximation profile needs at least one coordinate".to_string());
        }
        e
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn eval(&self, j: u64) -> Vec<f64> {
        self.coords.iter().map(|c| c.eval(j)).collect()
    }

    /// `Σ ln ψ_i(N)` from `ln N`.
    pub fn ln_product(&self, ln_n: f64) -> f64 {
        self.coords.iter().map(|c| c.ln_eval(ln_n)).sum()
    }

    /// `∏ ψ_i(N)` at a real argument.
    pub fn product_f(&self, nf: f64) -> f64 {
        self.coords.iter().map(|c| c.eval_f(nf)).product()
    }
}

/// Finite index window `j_min ..= j_max` standing in for "infinitely many j".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub j_min: u64,
    pub j_max: u64,
}

impl Window {
    pub fn new(j_min: u64, j_max: u64) -> Result<Self> {
        if j_min < 1 || j_min > j_max {
            return Err(invalid(format!(
                "window [{j_min}, {j_max}] must satisfy 1 <= j_min <= j_max"
            )));
        }
        Ok(Self { j_min, j_max })
    }

    pub fn len(&self) -> u64 {
        self.j_max - self.j_min + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check(&self, seq: &PointList) -> Result<()> {
        Window::new(self.j_min, self.j_max)?;
        if self.j_max > seq.len() as u64 {
            return Err(Error::OutOfRange(format!(
                "window ends at {} but only {} points are available",
                self.j_max,
                seq.len()
            )));
        }
        Ok(())
    }
}

/// `|x_i − w_i| < ψ_i` in every coordinate, read as `w_i − ψ_i < x_i < w_i + ψ_i`.
pub fn is_hit(x: &[f64], w: &[f64], psi: &[f64]) -> Result<bool> {
    if x.len() != w.len() || x.len() != psi.len() {
        return Err(invalid(format!(
            "dimension mismatch: x {}, w {}, psi {}",
            x.len(),
            w.len(),
            psi.len()
        )));
    }
    Ok(hit(x, w, psi))
}

/// Membership in the open interval `(w − ψ, w + ψ)`, the same rounding as
/// the rectangles of the coverage estimators.
#[inline]
fn hit(x: &[f64], w: &[f64], psi: &[f64]) -> bool {
    x.iter()
        .zip(w)
        .zip(psi)
        .all(|((x, w), p)| w - p < *x && *x < w + p)
}

fn check_profile(seq: &PointList, psi: &ApproxProfile, win: &Window) -> Result<()> {
    let errs = psi.validate();
    if !errs.is_empty() {
        return Err(invalid(errs.join("; ")));
    }
    if psi.dim() != seq.dim() {
        return Err(invalid(format!(
            "profile has {} coordinates but the sequence has dimension {}",
            psi.dim(),
            seq.dim()
        )));
    }
    win.check(seq)
}

/// Every `j` in the window whose rectangle contains `x`, ascending.
pub fn hit_indices(x: &[f64], seq: &PointList, win: &Window, psi: &ApproxProfile) -> Result<Vec<u64>> {
    check_profile(seq, psi, win)?;
    if x.len() != seq.dim() {
        return Err(invalid("point and sequence dimensions differ"));
    }
    Ok((win.j_min..=win.j_max)
        .filter(|&j| hit(x, seq.point(j as usize), &psi.eval(j)))
        .collect())
}

/// One dyadic band of indices bucketed along the first axis.
struct Band {
    /// bucket width, at least the largest `ψ_1` in the band
    width: f64,
    starts: Vec<u32>,
    /// offsets into the window, grouped by bucket
    members: Vec<u32>,
}

/// Spatial index answering "is `x` hit by some `j` in the window?".
pub struct HitIndex<'a> {
    seq: &'a PointList,
    win: Window,
    /// `ψ_i(j)` for every `j` in the window, row-major
    radii: Vec<f64>,
    bands: Vec<Band>,
}

impl<'a> HitIndex<'a> {
    pub fn new(seq: &'a PointList, win: Window, psi: &ApproxProfile) -> Result<Self> {
        check_profile(seq, psi, &win)?;
        let n = seq.dim();
        let radii: Vec<f64> = (win.j_min..=win.j_max).flat_map(|j| psi.eval(j)).collect();
        let mut bands = Vec::new();
        let mut lo = win.j_min;
        while lo <= win.j_max {
            let hi = (lo.saturating_mul(2) - 1).min(win.j_max);
            let (a, b) = ((lo - win.j_min) as usize, (hi - win.j_min) as usize);
            let len = b - a + 1;
            let widest = (a..=b).map(|o| radii[o * n]).fold(0.0, f64::max);
            // a little slack so rounding never pushes a hit two buckets away
            let width = (widest * (1.0 + 1e-9)).max(1.0 / len as f64);
            let buckets = (1.0 / width).ceil().max(1.0) as usize;
            let bucket = |o: usize| {
                let x = seq.point(win.j_min as usize + o)[0];
                ((x / width) as usize).min(buckets - 1)
            };
            let mut starts = vec![0u32; buckets + 1];
            for o in a..=b {
                starts[bucket(o) + 1] += 1;
            }
            for i in 0..buckets {
                starts[i + 1] += starts[i];
            }
            let mut fill = starts.clone();
            let mut members = vec![0u32; len];
            for o in a..=b {
                let k = bucket(o);
                members[fill[k] as usize] = o as u32;
                fill[k] += 1;
            }
            bands.push(Band {
                width,
                starts,
                members,
            });
            lo = hi + 1;
        }
        Ok(Self {
            seq,
            win,
            radii,
            bands,
        })
    }

    fn hits_offset(&self, x: &[f64], o: usize) -> bool {
        let n = self.seq.dim();
        let j = self.win.j_min as usize + o;
        hit(x, self.seq.point(j), &self.radii[o * n..(o + 1) * n])
    }

    fn candidates<'s>(&'s self, band: &'s Band, x0: f64) -> impl Iterator<Item = usize> + 's {
        let buckets = band.starts.len() - 1;
        let k = ((x0 / band.width) as usize).min(buckets - 1);
        (k.saturating_sub(1)..=(k + 1).min(buckets - 1)).flat_map(move |b| {
            band.members[band.starts[b] as usize..band.starts[b + 1] as usize]
                .iter()
                .map(|&o| o as usize)
        })
    }

    pub fn any_hit(&self, x: &[f64]) -> bool {
        self.bands
            .iter()
            .any(|band| self.candidates(band, x[0]).any(|o| self.hits_offset(x, o)))
    }

    /// Same as [`hit_indices`], through the index.
    pub fn hits(&self, x: &[f64]) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .bands
            .iter()
            .flat_map(|band| self.candidates(band, x[0]).filter(|&o| self.hits_offset(x, o)))
            .map(|o| self.win.j_min + o as u64)
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub fraction: f64,
    pub samples: u64,
    pub seed: u64,
    /// `1.96·sqrt(p(1−p)/samples)`
    pub ci95: f64,
    pub window: Window,
}

pub const MIN_SAMPLES: u64 = 100;

/// Fraction of seeded uniform points of `[0,1]^n` hit by some `j` in the window.
///
/// Sample `s` uses draws `s·n .. (s+1)·n` of the seed's stream, so the
/// estimate does not depend on how the work is split across threads.
pub fn measure_estimate(
    seq: &PointList,
    psi: &ApproxProfile,
    win: &Window,
    samples: u64,
    seed: u64,
) -> Result<MeasureEstimate> {
    if samples < MIN_SAMPLES {
        return Err(invalid(format!(
            "samples = {samples} must be at least {MIN_SAMPLES}"
        )));
    }
    let index = HitIndex::new(seq, *win, psi)?;
    let n = seq.dim();
    const CHUNK: u64 = 1024;
    let hits: u64 = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut s = UniformStream::new(seed);
            s.seek(c * CHUNK * n as u64);
            let mut x = vec![0.0; n];
            let mut h = 0;
            for _ in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                x.iter_mut().for_each(|v| *v = s.next_f64());
                h += index.any_hit(&x) as u64;
            }
            h
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(MeasureEstimate {
        fraction: p,
        samples,
        seed,
        ci95: 1.96 * (p * (1.0 - p) / samples as f64).sqrt(),
        window: *win,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub window_max: u64,
    pub fraction: f64,
    pub ci95: f64,
}

/// Estimates over windows `[j_min, m]` for each `m` in `maxes`.
pub fn measure_sweep(
    seq: &PointList,
    psi: &ApproxProfile,
    j_min: u64,
    maxes: &[u64],
    samples: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    maxes
        .iter()
        .map(|&m| {
            let e = measure_estimate(seq, psi, &Window::new(j_min, m)?, samples, seed)?;
            Ok(SweepRow {
                window_max: m,
                fraction: e.fraction,
                ci95: e.ci95,
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Series whose divergence decides the measure of the limsup set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "snake_case")]
pub enum SeriesCriterion {
    /// `v(N_j)^{−1} ∏ ψ_i(N_j)` along a schedule
    Khintchine {
        psi: ApproxProfile,
        v: RateFunction,
        schedule: ScheduleKind,
    },
    /// `M^{3^j/2} j^{−1/2} ∏ ψ_i(M^{3^j})`
    TripleExp { psi: ApproxProfile, m: f64 },
    /// `M^{j²} j^{−2n} ∏ ψ_i(M^{j²})`
    SquareExp { psi: ApproxProfile, m: f64 },
    /// `∏ ψ_i(j)`
    Product { psi: ApproxProfile },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Direct evaluation, falling back to log space term by term.
    #[default]
    Auto,
    Direct,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Diverging,
    Converging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Indices (1-based) whose term was evaluated in log space.
    pub log_space: Vec<usize>,
    /// Heuristic label, not a proof.
    pub trend: Trend,
}

/// Terms ending a geometric run have successive ratios at most this.
pub const GEOMETRIC_RATIO: f64 = 0.9;
/// Terms sustained at or above this are read as bounded below.
pub const DIVERGENCE_FLOOR: f64 = 1e-6;
/// Number of trailing terms the heuristic looks at.
pub const TREND_WINDOW: usize = 10;

impl SeriesCriterion {
    fn psi(&self) -> &ApproxProfile {
        match self {
            SeriesCriterion::Khintchine { psi, .. }
            | SeriesCriterion::TripleExp { psi, .. }
            | SeriesCriterion::SquareExp { psi, .. }
            | SeriesCriterion::Product { psi } => psi,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut e = self.psi().validate();
        match self {
            SeriesCriterion::Khintchine { v, .. } => e.extend(v.validate()),
            SeriesCriterion::TripleExp { m, .. } | SeriesCriterion::SquareExp { m, .. } => {
                if !(m.is_finite() && *m > 1.0) {
                    e.push(format!("M = {m} must exceed 1"));
                }
            }
            SeriesCriterion::Product { .. } => {}
        }
        e
    }

    /// `ln` of term `j`.
    fn ln_term(&self, j: u32) -> Result<f64> {
        let jf = f64::from(j);
        let psi = self.psi();
        Ok(match self {
            SeriesCriterion::Khintchine { v, schedule, .. } => {
                let ln_n = schedule.ln_term(j).ok_or_else(|| Error::HorizonTooLarge {
                    reason: format!("the schedule has no index {j}"),
                    max_horizon: j as usize - 1,
                })?;
                psi.ln_product(ln_n) - v.ln_eval(ln_n)
            }
            SeriesCriterion::TripleExp { m, .. } => {
                let ln_n = 3f64.powf(jf) * m.ln();
                ln_n / 2.0 - 0.5 * jf.ln() + psi.ln_product(ln_n)
            }
            SeriesCriterion::SquareExp { m, .. } => {
                let ln_n = jf * jf * m.ln();
                ln_n - 2.0 * psi.dim() as f64 * jf.ln() + psi.ln_product(ln_n)
            }
            SeriesCriterion::Product { .. } => psi.ln_product(jf.ln()),
        })
    }

    /// Term `j` in direct arithmetic; may overflow or underflow.
    fn direct_term(&self, j: u32) -> Result<f64> {
        let jf = f64::from(j);
        let psi = self.psi();
        Ok(match self {
            SeriesCriterion::Khintchine { v, schedule, .. } => {
                let n = make_schedule(schedule, j as usize)?.last() as f64;
                psi.product_f(n) / v.eval_f(n)
            }
            SeriesCriterion::TripleExp { m, .. } => {
                let n = m.powf(3f64.powf(jf));
                n.sqrt() / jf.sqrt() * psi.product_f(n)
            }
            SeriesCriterion::SquareExp { m, .. } => {
                let n = m.powf(jf * jf);
                n / jf.powi(2 * psi.dim() as i32) * psi.product_f(n)
            }
            SeriesCriterion::Product { .. } => psi.product_f(jf),
        })
    }
}

/// First `horizon` terms and partial sums of `criterion`, with a trend label.
pub fn series_partial_sums(criterion: &SeriesCriterion, horizon: usize) -> Result<SeriesReport> {
    series_partial_sums_with(criterion, horizon, EvalMode::Auto)
}

pub fn series_partial_sums_with(
    criterion: &SeriesCriterion,
    horizon: usize,
    mode: EvalMode,
) -> Result<SeriesReport> {
    let errs = criterion.validate();
    if !errs.is_empty() {
        return Err(invalid(errs.join("; ")));
    }
    if horizon == 0 || horizon > u32::MAX as usize {
        return Err(invalid("series horizon must be at least 1"));
    }
    let mut terms = Vec::with_capacity(horizon);
    let mut log_space = Vec::new();
    for j in 1..=horizon as u32 {
        let overflow = |why: &str| Error::HorizonTooLarge {
            reason: format!("term {j} {why}"),
            max_horizon: j as usize - 1,
        };
        let direct = match mode {
            EvalMode::Log => None,
            // explicit or overflowing schedules fall back to log space
            _ => criterion.direct_term(j).ok(),
        };
        let usable = direct.filter(|t| t.is_finite() && *t > 0.0);
        let t = match (mode, usable) {
            (EvalMode::Direct, _) => {
                let t = direct.ok_or_else(|| overflow("cannot be formed directly"))?;
                if !t.is_finite() {
                    return Err(overflow("overflows in direct evaluation"));
                }
                t
            }
            (_, Some(t)) => t,
            _ => {
                let ln = criterion.ln_term(j)?;
                if ln.is_nan() || ln == f64::INFINITY || ln > f64::MAX.ln() {
                    return Err(overflow("overflows even in log space"));
                }
                log_space.push(j as usize);
                ln.exp()
            }
        };
        terms.push(t);
    }
    let mut partial_sums = Vec::with_capacity(horizon);
    let mut acc = 0.0;
    for t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    let trend = classify(&terms, &partial_sums);
    Ok(SeriesReport {
        terms,
        partial_sums,
        log_space,
        trend,
    })
}

/// Converging when the trailing terms shrink geometrically; diverging when
/// they stay above a floor or the sums keep a constant gain per doubling of
/// the horizon.
fn classify(terms: &[f64], sums: &[f64]) -> Trend {
    let len = terms.len();
    if len < 2 {
        return Trend::Inconclusive;
    }
    let tail = &terms[len.saturating_sub(TREND_WINDOW)..];
    let geometric = tail.windows(2).all(|w| {
        if w[0] == 0.0 {
            w[1] == 0.0
        } else {
            w[1] / w[0] <= GEOMETRIC_RATIO
        }
    });
    if geometric {
        return Trend::Converging;
    }
    if tail.iter().all(|t| *t >= DIVERGENCE_FLOOR) {
        return Trend::Diverging;
    }
    if len >= 4 * TREND_WINDOW {
        let (half, quarter) = (len / 2, len / 4);
        let last = sums[len - 1] - sums[half - 1];
        let prev = sums[half - 1] - sums[quarter - 1];
        if prev > 0.0 && last >= GEOMETRIC_RATIO * prev {
            return Trend::Diverging;
        }
    }
    Trend::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{gen_iid_uniform, gen_kronecker};
    use proptest::prelude::*;

    fn constant(c: f64) -> PsiFunction {
        PsiFunction::Power { c, tau: 0.0 }
    }

    fn golden(n: usize) -> PointList {
        gen_kronecker(&[(5f64.sqrt() - 1.0) / 2.0], n).unwrap()
    }

    #[test]
    fn hit_examples() {
        assert!(is_hit(&[0.5], &[0.5], &[0.01]).unwrap());
        assert!(!is_hit(&[0.5], &[0.6], &[0.1]).unwrap());
        assert!(!is_hit(&[0.5, 0.5], &[0.55, 0.9], &[0.1, 0.1]).unwrap());
        assert!(is_hit(&[0.5], &[0.5, 0.5], &[0.1]).is_err());
    }

    #[test]
    fn hit_index_examples() {
        let seq = gen_kronecker(&[0.5], 4).unwrap();
        let psi = ApproxProfile::repeated(constant(0.1), 1).unwrap();
        let win = Window::new(1, 4).unwrap();
        assert_eq!(hit_indices(&[0.0], &seq, &win, &psi).unwrap(), vec![2, 4]);
        let one = ApproxProfile::repeated(constant(1.0), 1).unwrap();
        assert_eq!(hit_indices(&[0.3], &seq, &win, &one).unwrap(), vec![1, 2, 3, 4]);
        let zero = ApproxProfile::repeated(constant(0.0), 1).unwrap();
        assert!(hit_indices(&[0.5], &seq, &win, &zero).unwrap().is_empty());
        assert!(matches!(
            hit_indices(&[0.5], &seq, &Window::new(1, 5).unwrap(), &psi),
            Err(Error::OutOfRange(_))
        ));
        assert!(Window::new(3, 2).is_err());
    }

    #[test]
    fn measure_examples() {
        let seq = gen_iid_uniform(1, 2, 50).unwrap();
        let win = Window::new(1, 50).unwrap();
        let one = ApproxProfile::repeated(constant(1.0), 2).unwrap();
        let zero = ApproxProfile::repeated(constant(0.0), 2).unwrap();
        assert_eq!(measure_estimate(&seq, &one, &win, 500, 3).unwrap().fraction, 1.0);
        assert_eq!(measure_estimate(&seq, &zero, &win, 500, 3).unwrap().fraction, 0.0);
        assert!(measure_estimate(&seq, &one, &win, 99, 3).is_err());
    }

    #[test]
    fn divergent_golden_profile_covers_almost_everything() {
        let seq = golden(100_000);
        let psi = ApproxProfile::repeated(PsiFunction::Power { c: 0.5, tau: 1.0 }, 1).unwrap();
        let e = measure_estimate(&seq, &psi, &Window::new(1, 100_000).unwrap(), 10_000, 1).unwrap();
        assert!(e.fraction >= 0.95, "{e:?}");
        let expect_ci = 1.96 * (e.fraction * (1.0 - e.fraction) / 1e4).sqrt();
        assert_eq!(e.ci95, expect_ci);
    }

    #[test]
    fn index_agrees_with_linear_scan() {
        let seq = gen_iid_uniform(8, 2, 3000).unwrap();
        let psi = ApproxProfile::new(vec![
            PsiFunction::Power { c: 0.3, tau: 0.6 },
            PsiFunction::Power { c: 0.2, tau: 0.4 },
        ])
        .unwrap();
        let win = Window::new(5, 3000).unwrap();
        let idx = HitIndex::new(&seq, win, &psi).unwrap();
        let mut s = UniformStream::new(2);
        for _ in 0..300 {
            let x = [s.next_f64(), s.next_f64()];
            let want = hit_indices(&x, &seq, &win, &psi).unwrap();
            assert_eq!(idx.hits(&x), want);
            assert_eq!(idx.any_hit(&x), !want.is_empty());
        }
    }

    #[test]
    fn sweep_csv() {
        let seq = golden(1000);
        let psi = ApproxProfile::repeated(PsiFunction::Power { c: 0.5, tau: 1.0 }, 1).unwrap();
        let rows = measure_sweep(&seq, &psi, 1, &[10, 100, 1000], 1000, 4).unwrap();
        assert!(rows.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        let csv = sweep_to_csv(&rows).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "window_max,fraction,ci95");
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn khintchine_series_examples() {
        let v = RateFunction::Power { c: 1.0, theta: 1.0 };
        let same = SeriesCriterion::Khintchine {
            psi: ApproxProfile::repeated(
                PsiFunction::RatePower {
                    v: v.clone(),
                    tau: 1.0,
                },
                1,
            )
            .unwrap(),
            v: v.clone(),
            schedule: ScheduleKind::Geometric { m: 2.0 },
        };
        let r = series_partial_sums(&same, 20).unwrap();
        assert!(r.terms.iter().all(|t| (t - 1.0).abs() < 1e-12));
        assert_eq!(r.trend, Trend::Diverging);
        let fast = SeriesCriterion::Khintchine {
            psi: ApproxProfile::repeated(PsiFunction::Power { c: 1.0, tau: 2.0 }, 1).unwrap(),
            v,
            schedule: ScheduleKind::Geometric { m: 2.0 },
        };
        let r = series_partial_sums(&fast, 20).unwrap();
        for (j, t) in r.terms.iter().enumerate() {
            assert!((t - 0.5f64.powi(j as i32 + 1)).abs() < 1e-15);
        }
        assert_eq!(r.trend, Trend::Converging);
    }

    fn square_exp_regime(tau: Vec<f64>, m: f64) -> SeriesCriterion {
        let n = tau.len() as f64;
        let v = RateFunction::Polylog { c: 1.0, n };
        let psi = ApproxProfile::new(
            tau.into_iter()
                .map(|tau| PsiFunction::RatePower { v: v.clone(), tau })
                .collect(),
        )
        .unwrap();
        SeriesCriterion::SquareExp { psi, m }
    }

    #[test]
    fn square_exp_regime_has_constant_terms() {
        for (tau, m) in [
            (vec![1.0], std::f64::consts::E),
            (vec![0.3, 0.7], 2.0),
            (vec![0.2, 0.5, 0.3], 3.0),
        ] {
            let n = tau.len() as i32;
            let r = series_partial_sums(&square_exp_regime(tau, m), 40).unwrap();
            let want = m.ln().powi(n);
            for t in &r.terms {
                assert!((t - want).abs() <= 1e-9 * want.max(1.0), "{t} vs {want}");
            }
            assert_eq!(r.trend, Trend::Diverging);
            assert!(!r.log_space.is_empty());
        }
    }

    #[test]
    fn triple_exp_terms_fall_back_to_log_space() {
        let psi = ApproxProfile::repeated(PsiFunction::Power { c: 1.0, tau: 0.5 }, 1).unwrap();
        let r = series_partial_sums(
            &SeriesCriterion::TripleExp {
                psi: psi.clone(),
                m: 2.0,
            },
            12,
        )
        .unwrap();
        // M^{3^j/2} j^{-1/2} M^{-3^j/2} = j^{-1/2}
        for (j, t) in r.terms.iter().enumerate() {
            assert!((t - 1.0 / ((j + 1) as f64).sqrt()).abs() < 1e-9);
        }
        assert!(r.log_space.contains(&12));
        assert!(matches!(
            series_partial_sums(&SeriesCriterion::TripleExp { psi, m: 2.0 }, 800),
            Err(Error::HorizonTooLarge { .. })
        ));
    }

    #[test]
    fn product_series_trends() {
        let harmonic = SeriesCriterion::Product {
            psi: ApproxProfile::repeated(PsiFunction::Power { c: 1.0, tau: 1.0 }, 1).unwrap(),
        };
        assert_eq!(
            series_partial_sums(&harmonic, 100).unwrap().trend,
            Trend::Diverging
        );
        let square = SeriesCriterion::Product {
            psi: ApproxProfile::repeated(PsiFunction::Power { c: 1e-4, tau: 2.0 }, 1).unwrap(),
        };
        assert_eq!(
            series_partial_sums(&square, 100).unwrap().trend,
            Trend::Inconclusive
        );
        assert_eq!(
            series_partial_sums(&square, 1).unwrap().trend,
            Trend::Inconclusive
        );
    }

    #[test]
    fn series_json() {
        let c = square_exp_regime(vec![0.5, 0.5], 2.0);
        let json = serde_json::to_string(&c).unwrap();
        let back: SeriesCriterion = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let r = series_partial_sums(&c, 3).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["trend"], "diverging");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn larger_window_or_psi_never_lowers_fraction(seed in any::<u64>(), c in 0.001f64..0.05, extra in 0u64..300) {
            let seq = gen_iid_uniform(seed, 1, 600).unwrap();
            let psi = ApproxProfile::repeated(PsiFunction::Power { c, tau: 0.5 }, 1).unwrap();
            let big = ApproxProfile::repeated(PsiFunction::Power { c: 2.0 * c, tau: 0.5 }, 1).unwrap();
            let w1 = Window::new(10, 300).unwrap();
            let w2 = Window::new(10, 300 + extra).unwrap();
            let a = measure_estimate(&seq, &psi, &w1, 400, seed).unwrap().fraction;
            let b = measure_estimate(&seq, &psi, &w2, 400, seed).unwrap().fraction;
            let d = measure_estimate(&seq, &big, &w1, 400, seed).unwrap().fraction;
            prop_assert!(b >= a);
            prop_assert!(d >= a);
        }

        #[test]
        fn boundary_perturbation_removes_hit(seed in any::<u64>(), j in 1u64..200, axis in 0usize..2, up in any::<bool>()) {
            let seq = gen_iid_uniform(seed, 2, 200).unwrap();
            let psi = ApproxProfile::new(vec![
                PsiFunction::Power { c: 0.25, tau: 0.5 },
                PsiFunction::Power { c: 0.5, tau: 0.25 },
            ]).unwrap();
            let win = Window::new(1, 200).unwrap();
            let w = seq.point(j as usize).to_vec();
            let r = psi.eval(j);
            let mut x = w.clone();
            x[axis] = if up { w[axis] + r[axis] } else { w[axis] - r[axis] };
            prop_assert!(hit_indices(&w, &seq, &win, &psi).unwrap().contains(&j));
            prop_assert!(!hit_indices(&x, &seq, &win, &psi).unwrap().contains(&j));
        }

        #[test]
        fn log_and_direct_evaluation_agree(c in 0.1f64..2.0, tau in 0.5f64..3.0, m in 1.5f64..4.0, horizon in 1usize..6) {
            let psi = ApproxProfile::repeated(PsiFunction::Power { c, tau }, 1).unwrap();
            for crit in [
                SeriesCriterion::SquareExp { psi: psi.clone(), m },
                SeriesCriterion::Product { psi: psi.clone() },
                SeriesCriterion::Khintchine { psi: psi.clone(), v: RateFunction::Polylog { c: 2.0, n: 1.0 }, schedule: ScheduleKind::Geometric { m } },
            ] {
                let d = series_partial_sums_with(&crit, horizon, EvalMode::Direct);
                let l = series_partial_sums_with(&crit, horizon, EvalMode::Log).unwrap();
                if let Ok(d) = d {
                    for (a, b) in d.terms.iter().zip(&l.terms) {
                        if a.is_normal() && b.is_normal() {
                            prop_assert!(((a - b) / a).abs() <= 1e-9, "{} vs {}", a, b);
                        }
                    }
                }
            }
        }
    }
}
