//! Test sequences in the half-open unit cube `[0,1)^n`.
//!
//! Points are indexed from 1, so `ω_1` is the first point of a list. All
//! generators are pure functions of their parameters.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::UniformStream;

/// Largest `f64` strictly below 1.
pub const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// A point of `[0,1)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("a point needs at least one coordinate"));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(invalid(format!("coordinate {c} outside [0,1)")));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Finite prefix `ω_1, …, ω_N` of a sequence, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointList {
    dim: usize,
    coords: Vec<f64>,
}

impl PointList {
    /// Builds a list from row-major coordinates, validating range and shape.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(invalid(format!("coordinate {c} outside [0,1)")));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let dim = points
            .first()
            .map(Point::dim)
            .ok_or_else(|| invalid("empty point list"))?;
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.dim() != dim {
                return Err(invalid(format!("mixed dimensions {dim} and {}", p.dim())));
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(Self { dim, coords })
    }

    /// Convenience for one-dimensional lists.
    pub fn from_1d(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Point `ω_j`, 1-based. Panics when `j` is 0 or past the end.
    #[inline]
    pub fn point(&self, j: usize) -> &[f64] {
        assert!(j >= 1, "points are indexed from 1");
        &self.coords[(j - 1) * self.dim..j * self.dim]
    }

    /// Points `ω_1..ω_n` as slices.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Row-major coordinates of `ω_1..ω_n`.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate `axis` of the first `n` points.
    pub fn axis(&self, axis: usize, n: usize) -> Vec<f64> {
        self.iter().take(n).map(|p| p[axis]).collect()
    }

    /// Fails unless at least `n` points are available.
    pub fn require(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(invalid("prefix length N must be at least 1"));
        }
        if n > self.len() {
            return Err(Error::OutOfRange(format!(
                "prefix length {n} exceeds the {} available points",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.coords.len() * 20);
        for p in self.iter() {
            for (i, c) in p.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// How a sequence is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Kronecker { alpha: Vec<f64> },
    RadicalInverse { bases: Vec<u64> },
    IidUniform { seed: u64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    /// Ambient dimension; inferred from `alpha`/`bases` when omitted.
    #[serde(default)]
    pub dim: Option<usize>,
    pub count: usize,
}

impl GeneratorSpec {
    /// Collects every problem with the generator settings instead of stopping at the first.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.count == 0 {
            errs.push("generator.count must be at least 1".to_string());
        }
        let inferred = match &self.kind {
            GeneratorKind::Kronecker { alpha } => {
                if let Err(e) = check_alpha(alpha) {
                    errs.push(format!("generator.alpha: {e}"));
                }
                Some(alpha.len())
            }
            GeneratorKind::RadicalInverse { bases } => {
                if let Err(e) = check_bases(bases) {
                    errs.push(format!("generator.bases: {e}"));
                }
                Some(bases.len())
            }
            GeneratorKind::IidUniform { .. } => {
                if self.dim.is_none() {
                    errs.push("generator.dim is required for iid_uniform".to_string());
                }
                None
            }
            GeneratorKind::File { .. } => None,
        };
        match (inferred, self.dim) {
            (Some(a), Some(b)) if a != b => errs.push(format!(
                "generator.dim = {b} disagrees with the {a} generator parameters"
            )),
            (_, Some(0)) => errs.push("generator.dim must be at least 1".to_string()),
            _ => {}
        }
        errs
    }

    pub fn generate(&self) -> Result<PointList> {
        let list = match &self.kind {
            GeneratorKind::Kronecker { alpha } => gen_kronecker(alpha, self.count)?,
            GeneratorKind::RadicalInverse { bases } => gen_radical_inverse(bases, self.count)?,
            GeneratorKind::IidUniform { seed } => {
                let dim = self
                    .dim
                    .ok_or_else(|| invalid("iid_uniform needs an explicit dim"))?;
                gen_iid_uniform(*seed, dim, self.count)?
            }
            GeneratorKind::File { path } => {
                let list = load_sequence(path)?;
                if list.len() < self.count {
                    return Err(Error::OutOfRange(format!(
                        "{} holds {} points, {} requested",
                        path.display(),
                        list.len(),
                        self.count
                    )));
                }
                PointList::new(list.dim, list.coords[..self.count * list.dim].to_vec())?
            }
        };
        if let Some(d) = self.dim {
            if d != list.dim() {
                return Err(invalid(format!(
                    "generator produced dimension {}, spec says {d}",
                    list.dim()
                )));
            }
        }
        Ok(list)
    }
}

fn check_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(invalid("alpha must have at least one component"));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(invalid(format!("alpha component {a} outside (0,1)")));
    }
    Ok(())
}

fn check_bases(bases: &[u64]) -> Result<()> {
    if bases.is_empty() {
        return Err(invalid("bases must have at least one entry"));
    }
    if let Some(b) = bases.iter().find(|b| **b < 2) {
        return Err(invalid(format!("base {b} is smaller than 2")));
    }
    for (i, &a) in bases.iter().enumerate() {
        for &b in &bases[i + 1..] {
            if gcd(a, b) != 1 {
                return Err(invalid(format!("bases {a} and {b} are not coprime")));
            }
        }
    }
    Ok(())
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `{j·alpha}` for the double `alpha`, correct to one rounding.
///
/// `j·alpha` is split into its rounded product and the exact residual from a
/// fused multiply-add, so the fractional part does not inherit the absolute
/// error of a product of size `j`.
#[inline]
pub fn kronecker_coord(j: u64, alpha: f64) -> f64 {
    let jf = j as f64;
    let p = jf * alpha;
    let err = jf.mul_add(alpha, -p);
    let mut x = (p - p.floor()) + err;
    if x < 0.0 {
        x += 1.0;
    } else if x >= 1.0 {
        x -= 1.0;
    }
    x.clamp(0.0, BELOW_ONE)
}

/// Points `j = 1..=count` with coordinates `{j·alpha_i}`.
pub fn gen_kronecker(alpha: &[f64], count: usize) -> Result<PointList> {
    check_alpha(alpha)?;
    if count == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let mut coords = Vec::with_capacity(alpha.len() * count);
    for j in 1..=count as u64 {
        coords.extend(alpha.iter().map(|&a| kronecker_coord(j, a)));
    }
    Ok(PointList {
        dim: alpha.len(),
        coords,
    })
}

/// Base-`base` radical inverse of `j`: the digits of `j` mirrored about the
/// radix point.
pub fn radical_inverse(mut j: u64, base: u64) -> f64 {
    let b = u128::from(base);
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    while j > 0 {
        num = num * b + u128::from(j % base);
        den *= b;
        j /= base;
    }
    (num as f64 / den as f64).min(BELOW_ONE)
}

/// Halton points (van der Corput when one base is given) for `j = 1..=count`.
pub fn gen_radical_inverse(bases: &[u64], count: usize) -> Result<PointList> {
    check_bases(bases)?;
    if count == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let mut coords = Vec::with_capacity(bases.len() * count);
    for j in 1..=count as u64 {
        coords.extend(bases.iter().map(|&b| radical_inverse(j, b)));
    }
    Ok(PointList {
        dim: bases.len(),
        coords,
    })
}

/// i.i.d. uniform points; coordinate `i` of point `j` is draw `(j-1)·n + i`
/// of the seeded stream (see [`crate::rng`]).
pub fn gen_iid_uniform(seed: u64, dim: usize, count: usize) -> Result<PointList> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if count == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let mut stream = UniformStream::new(seed);
    let coords = (0..dim * count).map(|_| stream.next_f64()).collect();
    Ok(PointList { dim, coords })
}

/// Parses the sequence text format: one point per line, coordinates separated
/// by single spaces, blank lines and `#` comments skipped.
pub fn parse_sequence(text: &str) -> Result<PointList> {
    let mut dim = 0usize;
    let mut coords = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut count = 0usize;
        for tok in line.split(' ') {
            let value: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("cannot read {tok:?} as a decimal coordinate"),
            })?;
            if !(0.0..1.0).contains(&value) {
                return Err(Error::Range { line: line_no, value });
            }
            coords.push(value);
            count += 1;
        }
        if dim == 0 {
            dim = count;
        } else if count != dim {
            return Err(Error::DimensionMismatch {
                line: line_no,
                expected: dim,
                found: count,
            });
        }
    }
    if dim == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "no data lines".to_string(),
        });
    }
    Ok(PointList { dim, coords })
}

pub fn load_sequence(path: impl AsRef<Path>) -> Result<PointList> {
    let text = std::fs::read_to_string(path)?;
    parse_sequence(&text)
}

pub fn save_sequence(list: &PointList, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, list.to_text())?;
    Ok(())
}

/// One-dimensional radical-inverse sequence that is never materialized.
///
/// Used where a schedule block is far too long to store, e.g. `2^{36}`
/// points; see [`crate::ubiquity::CoverSource`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LazyVanDerCorput {
    base: u64,
}

impl LazyVanDerCorput {
    pub fn new(base: u64) -> Result<Self> {
        if base < 2 {
            return Err(invalid(format!("base {base} is smaller than 2")));
        }
        Ok(Self { base })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    #[inline]
    pub fn point(&self, j: u64) -> f64 {
        radical_inverse(j, self.base)
    }
}
