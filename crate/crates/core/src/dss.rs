//! Index schedules `N_1 < N_2 < …`, rate functions `v`, and finite-horizon
//! checks of the discrepancy-satisfying condition
//! `D_{N_i} < v(N_i)` together with `N_{i−1}·v(N_i) < 1` in the tail.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{extreme_discrepancy_exact_with, SearchGuard};
use crate::error::{invalid, Error, Result};
use crate::sequences::PointList;

/// Decay rate `v : ℕ → ℝ₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RateFunction {
    /// `c · N^{−theta}`
    Power { c: f64, theta: f64 },
    /// `(1 + eps) · sqrt(log log N / (2N))`, with `log log N` floored at 0.
    Kiefer { eps: f64 },
    /// `c · (log N)^n / N`
    Polylog { c: f64, n: f64 },
    /// Step function through `(N, value)` pairs: the value of the last pair
    /// at or below `N` (the first pair's value below the table).
    Table { pairs: Vec<(u64, f64)> },
}

impl RateFunction {
    pub fn eval(&self, n: u64) -> f64 {
        self.eval_f(n as f64)
    }

    /// `v` at a real argument, for indices beyond the integer range.
    pub fn eval_f(&self, nf: f64) -> f64 {
        match self {
            RateFunction::Power { c, theta } => c * nf.powf(-theta),
            RateFunction::Kiefer { eps } => {
                let ll = nf.ln().ln().max(0.0);
                (1.0 + eps) * (ll / (2.0 * nf)).sqrt()
            }
            RateFunction::Polylog { c, n: p } => c * nf.ln().powf(*p) / nf,
            RateFunction::Table { pairs } => {
                let at = pairs.partition_point(|(k, _)| *k as f64 <= nf);
                pairs[at.saturating_sub(1)].1
            }
        }
    }

    /// `ln v(N)` from `ln N`; stays finite where `N` itself overflows.
    pub fn ln_eval(&self, ln_n: f64) -> f64 {
        match self {
            RateFunction::Power { c, theta } => c.ln() - theta * ln_n,
            RateFunction::Kiefer { eps } => {
                let ll = ln_n.ln().max(0.0);
                (1.0 + eps).ln() + 0.5 * (ll.ln() - std::f64::consts::LN_2 - ln_n)
            }
            RateFunction::Polylog { c, n: p } => c.ln() + p * ln_n.ln() - ln_n,
            RateFunction::Table { .. } => self.eval_f(ln_n.exp()).ln(),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let finite = |x: f64| x.is_finite();
        match self {
            RateFunction::Power { c, theta } => {
                if !(finite(*c) && *c >= 0.0) {
                    errs.push(format!("power rate: c = {c} must be finite and >= 0"));
                }
                if !(finite(*theta) && *theta >= 0.0) {
                    errs.push(format!("power rate: theta = {theta} must be finite and >= 0"));
                }
            }
            RateFunction::Kiefer { eps } => {
                if !(finite(*eps) && *eps > -1.0) {
                    errs.push(format!("kiefer rate: eps = {eps} must exceed -1"));
                }
            }
            RateFunction::Polylog { c, n } => {
                if !(finite(*c) && *c >= 0.0) {
                    errs.push(format!("polylog rate: c = {c} must be finite and >= 0"));
                }
                if !(finite(*n) && *n >= 0.0) {
                    errs.push(format!("polylog rate: n = {n} must be finite and >= 0"));
                }
            }
            RateFunction::Table { pairs } => {
                if pairs.is_empty() {
                    errs.push("table rate: needs at least one pair".to_string());
                }
                if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
                    errs.push("table rate: N values must be strictly increasing".to_string());
                }
                if pairs.iter().any(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
                    errs.push("table rate: values must be finite and >= 0".to_string());
                }
            }
        }
        errs
    }
}

/// Strictly increasing schedule `N_1 < … < N_J`, with `N_0 = 0` implied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Schedule {
    indices: Vec<u64>,
}

impl TryFrom<Vec<u64>> for Schedule {
    type Error = Error;

    fn try_from(indices: Vec<u64>) -> Result<Self> {
        Schedule::new(indices)
    }
}

impl From<Schedule> for Vec<u64> {
    fn from(s: Schedule) -> Self {
        s.indices
    }
}

impl Schedule {
    pub fn new(indices: Vec<u64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("a schedule needs at least one index"));
        }
        if indices[0] < 1 {
            return Err(invalid("schedule indices must be positive"));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "schedule is not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        if indices.last().copied().unwrap_or(0) > i64::MAX as u64 {
            return Err(invalid("schedule indices must stay below 2^63"));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `N_k` for `k >= 0`, with `N_0 = 0`.
    pub fn at(&self, k: usize) -> Result<u64> {
        match k {
            0 => Ok(0),
            _ => self.indices.get(k - 1).copied().ok_or_else(|| {
                Error::OutOfRange(format!(
                    "block {k} is beyond the schedule horizon {}",
                    self.indices.len()
                ))
            }),
        }
    }

    /// Block `J_k = (N_{k−1}, N_k]` as `(N_{k−1}, N_k)`, `k >= 1`.
    pub fn block(&self, k: usize) -> Result<(u64, u64)> {
        if k == 0 {
            return Err(Error::OutOfRange("blocks are numbered from 1".to_string()));
        }
        Ok((self.at(k - 1)?, self.at(k)?))
    }

    pub fn last(&self) -> u64 {
        self.indices[self.indices.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `round(M^j)`
    Geometric {
        m: f64,
    },
    /// `round(M^{3^j})`
    TripleExp {
        m: f64,
    },
    /// `round(M^{j²})`
    SquareExp {
        m: f64,
    },
    Explicit {
        indices: Vec<u64>,
    },
}

impl ScheduleKind {
    /// `ln N_j` without forming `N_j`; `None` for explicit schedules past their end.
    pub fn ln_term(&self, j: u32) -> Option<f64> {
        match self {
            ScheduleKind::Explicit { indices } => indices
                .get((j as usize).checked_sub(1)?)
                .map(|&n| (n as f64).ln()),
            // the rounded index while it fits, the real power beyond
            _ => match self.term(j) {
                Some(n) => Some((n as f64).ln()),
                None => Some(self.exponent(j)? * self.base().ln()),
            },
        }
    }

    fn exponent(&self, j: u32) -> Option<f64> {
        let j = f64::from(j);
        match self {
            ScheduleKind::Geometric { .. } => Some(j),
            ScheduleKind::TripleExp { .. } => Some(3f64.powf(j)),
            ScheduleKind::SquareExp { .. } => Some(j * j),
            ScheduleKind::Explicit { .. } => None,
        }
    }

    fn base(&self) -> f64 {
        match self {
            ScheduleKind::Geometric { m } | ScheduleKind::TripleExp { m } | ScheduleKind::SquareExp { m } => {
                *m
            }
            ScheduleKind::Explicit { .. } => f64::NAN,
        }
    }

    /// `round(M^e)`, or `None` past `2^63 − 1`.
    fn term(&self, j: u32) -> Option<u64> {
        let m = self.base();
        let e = self.exponent(j)?;
        if m.fract() == 0.0 && e <= f64::from(u32::MAX) {
            return (m as u64).checked_pow(e as u32).filter(|v| *v <= i64::MAX as u64);
        }
        let log = e * m.ln();
        if log >= 63.0 * std::f64::consts::LN_2 {
            return None;
        }
        let v = log.exp().round();
        (v <= i64::MAX as f64).then_some(v as u64)
    }
}

/// First `horizon` indices of a schedule family.
pub fn make_schedule(kind: &ScheduleKind, horizon: usize) -> Result<Schedule> {
    if horizon == 0 {
        return Err(invalid("schedule horizon must be at least 1"));
    }
    if let ScheduleKind::Explicit { indices } = kind {
        let s = Schedule::new(indices.clone())?;
        if horizon > s.len() {
            return Err(Error::HorizonTooLarge {
                reason: format!("the explicit schedule has only {} indices", s.len()),
                max_horizon: s.len(),
            });
        }
        return Schedule::new(s.indices[..horizon].to_vec());
    }
    let m = kind.base();
    if !(m.is_finite() && m > 1.0) {
        return Err(invalid(format!("schedule base M = {m} must exceed 1")));
    }
    let mut out = Vec::with_capacity(horizon);
    for j in 1..=horizon {
        match kind.term(j as u32) {
            Some(v) => out.push(v),
            None => {
                return Err(Error::HorizonTooLarge {
                    reason: format!("index {j} of the schedule overflows 2^63"),
                    max_horizon: j - 1,
                })
            }
        }
    }
    Schedule::new(out)
}

/// Which indices stand in for the `limsup` in the lacunarity condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// Indices `i > ⌊J/2⌋`.
    #[default]
    TrailingHalf,
    /// Every checked index.
    All,
}

impl TailRule {
    fn first(self, horizon: usize) -> usize {
        match self {
            TailRule::TrailingHalf => horizon / 2 + 1,
            TailRule::All => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DssRecord {
    pub i: usize,
    #[serde(rename = "N_i")]
    pub n_i: u64,
    /// `D_{N_i}`, absent when the exact search was skipped.
    #[serde(rename = "D")]
    pub discrepancy: Option<f64>,
    #[serde(rename = "v")]
    pub rate: f64,
    /// `N_{i−1}·v(N_i)`
    pub lacunarity: f64,
    pub pass: Option<bool>,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DssReport {
    pub records: Vec<DssRecord>,
    pub tail_rule: TailRule,
    /// Max of `N_{i−1}·v(N_i)` over the tail indices.
    pub tail_sup: f64,
    /// Max of `N_{i−1}·v(N_i)` over every index.
    pub max_all: f64,
    pub verdict: Verdict,
    /// The verdict only covers the checked prefix of the schedule.
    pub finite_horizon: bool,
}

impl DssReport {
    /// Assembles a report from its records; the verdict depends on nothing else.
    pub fn from_records(records: Vec<DssRecord>, tail_rule: TailRule) -> Self {
        let first = tail_rule.first(records.len());
        let tail_sup = records
            .iter()
            .filter(|r| r.i >= first)
            .map(|r| r.lacunarity)
            .fold(0.0, f64::max);
        let max_all = records.iter().map(|r| r.lacunarity).fold(0.0, f64::max);
        let any_fail = records.iter().any(|r| r.pass == Some(false));
        let any_skip = records.iter().any(|r| r.skipped);
        let verdict = if any_fail || tail_sup >= 1.0 || tail_sup.is_nan() {
            Verdict::Fail
        } else if any_skip {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        Self {
            records,
            tail_rule,
            tail_sup,
            max_all,
            verdict,
            finite_horizon: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DssOptions {
    pub tail_rule: TailRule,
    pub guard: Option<SearchGuard>,
}

/// Checks `D_{N_i} < v(N_i)` at every schedule index and the tail condition.
pub fn check_dss(seq: &PointList, sched: &Schedule, v: &RateFunction) -> Result<DssReport> {
    check_dss_with(seq, sched, v, &DssOptions::default())
}

pub fn check_dss_with(
    seq: &PointList,
    sched: &Schedule,
    v: &RateFunction,
    opts: &DssOptions,
) -> Result<DssReport> {
    if sched.last() > seq.len() as u64 {
        return Err(Error::OutOfRange(format!(
            "schedule reaches N = {} but only {} points are available",
            sched.last(),
            seq.len()
        )));
    }
    let guard = opts.guard.unwrap_or(SearchGuard::EXTREME);
    let records = (1..=sched.len())
        .into_par_iter()
        .map(|i| {
            let n_i = sched.indices[i - 1];
            let rate = v.eval(n_i);
            let lacunarity = sched
                .indices
                .get(i.wrapping_sub(2))
                .map_or(0.0, |&p| p as f64 * rate);
            match extreme_discrepancy_exact_with(seq, n_i as usize, &guard) {
                Ok(rep) => {
                    let d = rep.extreme.unwrap_or(f64::NAN);
                    Ok(DssRecord {
                        i,
                        n_i,
                        discrepancy: Some(d),
                        rate,
                        lacunarity,
                        pass: Some(d < rate),
                        skipped: false,
                    })
                }
                Err(Error::Guard(_)) => Ok(DssRecord {
                    i,
                    n_i,
                    discrepancy: None,
                    rate,
                    lacunarity,
                    pass: None,
                    skipped: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DssReport::from_records(records, opts.tail_rule))
}

/// Smallest `i₀` with `f(N_{i+1}) <= c·f(N_i)` for every checked `i >= i₀`.
///
/// `None` when the inequality fails at the last checked pair, or when the
/// schedule has fewer than two indices.
pub fn check_c_regular(f: impl Fn(u64) -> f64, sched: &Schedule, c: f64) -> Result<Option<usize>> {
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid(format!("regularity constant c = {c} must lie in (0,1)")));
    }
    let values: Vec<f64> = sched.indices().iter().map(|&n| f(n)).collect();
    if values.len() < 2 {
        return Ok(None);
    }
    let last_fail = (1..values.len())
        .rev()
        .find(|&i| !(values[i] <= c * values[i - 1]));
    Ok(match last_fail {
        None => Some(1),
        Some(i) if i + 1 == values.len() => None,
        Some(i) => Some(i + 1),
    })
}

/// Candidate mesh `⌈1.25^k⌉`, deduplicated, up to `limit`.
pub fn candidate_mesh(limit: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for k in 0u32.. {
        let v = if k <= 54 {
            let num = 5u128.pow(k);
            let den = 4u128.pow(k);
            num.div_ceil(den) as u64
        } else {
            1.25f64.powi(k as i32).ceil() as u64
        };
        if v > limit {
            break;
        }
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// Greedy schedule: accept each mesh point `N` with `D_N < v(N)` and
/// `N_prev·v(N) <= 1 − slack`.
pub fn propose_schedule(seq: &PointList, v: &RateFunction, slack: f64) -> Result<Schedule> {
    if !(slack > 0.0 && slack < 1.0) {
        return Err(invalid(format!("slack = {slack} must lie in (0,1)")));
    }
    let mut accepted: Vec<u64> = Vec::new();
    let mut tested = 0usize;
    let mut best_ratio = f64::INFINITY;
    for n in candidate_mesh(seq.len() as u64) {
        let prev = accepted.last().copied().unwrap_or(0);
        let rate = v.eval(n);
        if prev as f64 * rate > 1.0 - slack {
            continue;
        }
        let d = match extreme_discrepancy_exact_with(seq, n as usize, &SearchGuard::EXTREME) {
            Ok(r) => r.extreme.unwrap_or(f64::NAN),
            Err(Error::Guard(_)) => break,
            Err(e) => return Err(e),
        };
        tested += 1;
        best_ratio = best_ratio.min(d / rate);
        if d < rate {
            accepted.push(n);
        }
    }
    if accepted.is_empty() {
        return Err(Error::EmptySchedule(format!(
            "tested {tested} mesh points up to N = {}; smallest D_N / v(N) was {best_ratio}",
            seq.len()
        )));
    }
    Schedule::new(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{gen_iid_uniform, gen_radical_inverse};
    use proptest::prelude::*;

    #[test]
    fn schedule_examples() {
        let s = make_schedule(&ScheduleKind::SquareExp { m: 2.0 }, 3).unwrap();
        assert_eq!(s.indices(), &[2, 16, 512]);
        let s = make_schedule(&ScheduleKind::TripleExp { m: 2.0 }, 3).unwrap();
        assert_eq!(s.indices(), &[8, 512, 134_217_728]);
        let bad = make_schedule(
            &ScheduleKind::Explicit {
                indices: vec![5, 3, 9],
            },
            3,
        );
        assert!(matches!(bad, Err(Error::InvalidParameter(_))));
        let s = make_schedule(&ScheduleKind::Geometric { m: 2.0 }, 4).unwrap();
        assert_eq!(s.indices(), &[2, 4, 8, 16]);
    }

    #[test]
    fn schedule_overflow_reports_max_horizon() {
        match make_schedule(&ScheduleKind::SquareExp { m: 2.0 }, 8) {
            Err(Error::HorizonTooLarge { max_horizon: 7, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match make_schedule(&ScheduleKind::TripleExp { m: 1.5 }, 10) {
            Err(Error::HorizonTooLarge { max_horizon, .. }) => assert!(max_horizon >= 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(make_schedule(&ScheduleKind::Geometric { m: 1.0 }, 3).is_err());
    }

    #[test]
    fn blocks_partition_the_prefix() {
        let s = Schedule::new(vec![2, 16, 512]).unwrap();
        assert_eq!(s.block(1).unwrap(), (0, 2));
        assert_eq!(s.block(3).unwrap(), (16, 512));
        assert!(matches!(s.block(4), Err(Error::OutOfRange(_))));
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[2,16,512]");
        assert!(serde_json::from_str::<Schedule>("[3,2]").is_err());
    }

    #[test]
    fn rate_families() {
        let k = RateFunction::Kiefer { eps: 0.5 };
        let n = 1000f64;
        assert!((k.eval(1000) - 1.5 * (n.ln().ln() / (2.0 * n)).sqrt()).abs() < 1e-15);
        let p = RateFunction::Polylog { c: 4.0, n: 1.0 };
        assert!((p.eval(16) - 4.0 * 16f64.ln() / 16.0).abs() < 1e-15);
        let t = RateFunction::Table {
            pairs: vec![(10, 0.5), (100, 0.1)],
        };
        assert_eq!(t.eval(5), 0.5);
        assert_eq!(t.eval(10), 0.5);
        assert_eq!(t.eval(99), 0.5);
        assert_eq!(t.eval(1000), 0.1);
        assert_eq!(RateFunction::Power { c: 2.0, theta: 1.0 }.eval(4), 0.5);
        for v in [k, p, t, RateFunction::Power { c: 3.0, theta: 0.7 }] {
            for n in [20u64, 1000, 123_456] {
                let direct = v.eval(n).ln();
                assert!((v.ln_eval((n as f64).ln()) - direct).abs() < 1e-12, "{v:?} {n}");
            }
        }
    }

    #[test]
    fn constant_rate_fails_lacunarity() {
        let seq = gen_iid_uniform(1, 1, 8).unwrap();
        let sched = Schedule::new(vec![2, 4, 8]).unwrap();
        let one = RateFunction::Power { c: 1.0, theta: 0.0 };
        let r = check_dss(&seq, &sched, &one).unwrap();
        assert!(r.records.iter().all(|r| r.pass == Some(true)));
        assert_eq!(r.tail_sup, 4.0);
        assert_eq!(r.max_all, 4.0);
        assert_eq!(r.verdict, Verdict::Fail);
        let all = check_dss_with(
            &seq,
            &sched,
            &one,
            &DssOptions {
                tail_rule: TailRule::All,
                guard: None,
            },
        )
        .unwrap();
        assert_eq!(all.tail_sup, 4.0);
    }

    #[test]
    fn singleton_schedule_has_zero_tail() {
        let seq = gen_radical_inverse(&[2], 4).unwrap();
        let r = check_dss(
            &seq,
            &Schedule::new(vec![4]).unwrap(),
            &RateFunction::Power { c: 1.0, theta: 0.0 },
        )
        .unwrap();
        assert_eq!(r.tail_sup, 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn van_der_corput_square_exp_passes() {
        let seq = gen_radical_inverse(&[2], 65_536).unwrap();
        let sched = make_schedule(&ScheduleKind::SquareExp { m: 2.0 }, 4).unwrap();
        let v = RateFunction::Polylog { c: 4.0, n: 1.0 };
        let r = check_dss(&seq, &sched, &v).unwrap();
        assert!(r.records.iter().all(|r| r.pass == Some(true)), "{r:?}");
        assert!(r.tail_sup < 1.0);
        assert_eq!(r.verdict, Verdict::Pass);
        // the early term N_1·v(N_2) = ln 16 / 2 exceeds 1
        assert!((r.max_all - 16f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn iid_kiefer_rate_on_triple_exp_schedule() {
        // J = 2 keeps the prefix small; the third index is 2^27
        let seq = gen_iid_uniform(5, 1, 512).unwrap();
        let sched = make_schedule(&ScheduleKind::TripleExp { m: 2.0 }, 2).unwrap();
        let r = check_dss(&seq, &sched, &RateFunction::Kiefer { eps: 0.5 }).unwrap();
        assert_eq!(r.records.len(), 2);
        assert!(r.records.iter().all(|r| r.pass.is_some()));
    }

    #[test]
    fn guard_marks_records_skipped() {
        let seq = gen_radical_inverse(&[2, 3], 300).unwrap();
        let sched = Schedule::new(vec![10, 300]).unwrap();
        let r = check_dss(&seq, &sched, &RateFunction::Power { c: 10.0, theta: 0.0 }).unwrap();
        assert!(r.records[1].skipped);
        assert_eq!(r.records[1].pass, None);
        // 10 * 10 >= 1 already fails the tail
        assert_eq!(r.verdict, Verdict::Fail);
        let r = check_dss(&seq, &sched, &RateFunction::Power { c: 300.0, theta: 2.0 }).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn check_dss_rejects_short_prefix() {
        let seq = gen_radical_inverse(&[2], 10).unwrap();
        let sched = Schedule::new(vec![4, 16]).unwrap();
        assert!(matches!(
            check_dss(&seq, &sched, &RateFunction::Power { c: 1.0, theta: 0.0 }),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn c_regularity_examples() {
        let geo = make_schedule(&ScheduleKind::Geometric { m: 2.0 }, 10).unwrap();
        assert_eq!(check_c_regular(|n| 1.0 / n as f64, &geo, 0.5).unwrap(), Some(1));
        for horizon in 3..=12 {
            let g = make_schedule(&ScheduleKind::Geometric { m: 2.0 }, horizon).unwrap();
            assert_eq!(check_c_regular(|n| 1.0 / (n as f64).ln(), &g, 0.5).unwrap(), None);
        }
        let sq = make_schedule(&ScheduleKind::SquareExp { m: 2.0 }, 5).unwrap();
        assert_eq!(
            check_c_regular(|n| (n as f64).powi(-2), &sq, 0.9).unwrap(),
            Some(1)
        );
        assert!(check_c_regular(|n| n as f64, &sq, 1.0).is_err());
    }

    #[test]
    fn c_regularity_reports_late_onset() {
        // ratios 1, 1, 0.5, 0.5: holds from the third pair on
        let s = Schedule::new(vec![1, 2, 3, 4, 5]).unwrap();
        let vals = [8.0, 8.0, 8.0, 4.0, 2.0];
        assert_eq!(
            check_c_regular(|n| vals[n as usize - 1], &s, 0.5).unwrap(),
            Some(3)
        );
    }

    #[test]
    fn propose_schedule_reverifies() {
        let seq = gen_radical_inverse(&[2], 50_000).unwrap();
        let v = RateFunction::Polylog { c: 4.0, n: 1.0 };
        let dense = propose_schedule(&seq, &v, 0.1).unwrap();
        assert_eq!(check_dss(&seq, &dense, &v).unwrap().verdict, Verdict::Pass);
        let all = DssOptions {
            tail_rule: TailRule::All,
            guard: None,
        };
        assert_eq!(
            check_dss_with(&seq, &dense, &v, &all).unwrap().verdict,
            Verdict::Pass
        );
        let sparse = propose_schedule(&seq, &v, 0.99).unwrap();
        assert_eq!(check_dss(&seq, &sparse, &v).unwrap().verdict, Verdict::Pass);
        assert!(sparse.len() < dense.len(), "{sparse:?} vs {dense:?}");
    }

    #[test]
    fn propose_schedule_with_zero_rate_is_empty() {
        let seq = gen_radical_inverse(&[2], 1000).unwrap();
        let zero = RateFunction::Power { c: 0.0, theta: 1.0 };
        assert!(matches!(
            propose_schedule(&seq, &zero, 0.1),
            Err(Error::EmptySchedule(_))
        ));
    }

    #[test]
    fn mesh_is_ceil_of_powers() {
        let m = candidate_mesh(20);
        assert_eq!(m, vec![1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 19]);
    }

    proptest! {
        #[test]
        fn larger_rate_only_turns_checks_on(seed in any::<u64>(), scale in 1.0f64..10.0) {
            let seq = gen_iid_uniform(seed, 1, 256).unwrap();
            let sched = Schedule::new(vec![4, 16, 64, 256]).unwrap();
            let small = RateFunction::Power { c: 0.5, theta: 0.5 };
            let big = RateFunction::Power { c: 0.5 * scale, theta: 0.5 };
            let a = check_dss(&seq, &sched, &small).unwrap();
            let b = check_dss(&seq, &sched, &big).unwrap();
            for (x, y) in a.records.iter().zip(&b.records) {
                prop_assert!(!(x.pass == Some(true) && y.pass == Some(false)));
            }
        }

        #[test]
        fn c_regularity_is_scale_invariant(theta in 0.1f64..3.0, k in -20i32..20, horizon in 2usize..10) {
            let s = make_schedule(&ScheduleKind::Geometric { m: 3.0 }, horizon).unwrap();
            let scale = 2f64.powi(k);
            let base = check_c_regular(|n| (n as f64).powf(-theta), &s, 0.3).unwrap();
            let scaled = check_c_regular(|n| scale * (n as f64).powf(-theta), &s, 0.3).unwrap();
            prop_assert_eq!(base, scaled);
        }
    }
}
