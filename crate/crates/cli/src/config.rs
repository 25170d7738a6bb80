//! Experiment configs: JSON, one experiment per file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use udmetric::dimension::Occupancy;
use udmetric::dss::{make_schedule, RateFunction, ScheduleKind, TailRule};
use udmetric::limsup::{ApproxProfile, EvalMode, SeriesCriterion, Window};
use udmetric::sequences::{GeneratorKind, GeneratorSpec};
use udmetric::ubiquity::{Ball, CoverMethod, RhoProfile};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Gen,
    Disc,
    DssCheck,
    Ubiquity,
    Measure,
    Series,
    Dimension,
    BoxDim,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Gen => "gen",
            ExperimentKind::Disc => "disc",
            ExperimentKind::DssCheck => "dss-check",
            ExperimentKind::Ubiquity => "ubiquity",
            ExperimentKind::Measure => "measure",
            ExperimentKind::Series => "series",
            ExperimentKind::Dimension => "dimension",
            ExperimentKind::BoxDim => "box-dim",
        }
    }

    /// Every file a run of this kind may write, besides the manifest.
    pub fn output_names(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Gen => &["sequence.txt"],
            ExperimentKind::Disc => &["disc.json", "disc.csv"],
            ExperimentKind::DssCheck => &["dss.json", "dss.csv"],
            ExperimentKind::Ubiquity => &["ubiquity.json", "ubiquity.csv"],
            ExperimentKind::Measure => &["measure.json", "measure_sweep.csv"],
            ExperimentKind::Series => &["series.json", "series.csv"],
            ExperimentKind::Dimension => &["dimension.json"],
            ExperimentKind::BoxDim => &["box_dim.json", "box_counts.csv"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    /// Output directory; `--out` wins over this.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    Gen(GenConfig),
    Disc(DiscConfig),
    DssCheck(DssConfig),
    Ubiquity(UbiquityConfig),
    Measure(MeasureConfig),
    Series(SeriesConfig),
    Dimension(DimensionConfig),
    BoxDim(BoxDimConfig),
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::Gen(_) => ExperimentKind::Gen,
            Experiment::Disc(_) => ExperimentKind::Disc,
            Experiment::DssCheck(_) => ExperimentKind::DssCheck,
            Experiment::Ubiquity(_) => ExperimentKind::Ubiquity,
            Experiment::Measure(_) => ExperimentKind::Measure,
            Experiment::Series(_) => ExperimentKind::Series,
            Experiment::Dimension(_) => ExperimentKind::Dimension,
            Experiment::BoxDim(_) => ExperimentKind::BoxDim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub generator: GeneratorSpec,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscConfig {
    pub generator: GeneratorSpec,
    /// Prefix lengths to evaluate; the whole generated prefix when empty.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    /// Also compute the extreme discrepancy `D_N`.
    #[serde(default = "yes")]
    pub extreme: bool,
    /// Normalized ratios (Kiefer, low-discrepancy, Roth) for checkpoints N >= 16.
    #[serde(default)]
    pub ratios: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DssConfig {
    pub generator: GeneratorSpec,
    /// Fixed schedule; mutually exclusive with `propose_slack`.
    #[serde(default)]
    pub schedule: Option<ScheduleKind>,
    #[serde(default)]
    pub horizon: Option<usize>,
    pub rate: RateFunction,
    #[serde(default)]
    pub tail_rule: TailRule,
    /// Search a schedule over the mesh instead of checking a given one.
    #[serde(default)]
    pub propose_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSpec {
    Generator(GeneratorSpec),
    /// Radical-inverse sequence queried without storing it.
    LazyVanDerCorput {
        base: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallSpec {
    Random { seed: u64, count: usize, radius: f64 },
    Explicit(Vec<Ball>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorCheck {
    pub delta: f64,
    pub eta: f64,
    /// Defaults to `exact` in one dimension, the default grid otherwise.
    #[serde(default)]
    pub method: Option<CoverMethod>,
    /// Block indices to check; the coverage `ks` when absent.
    #[serde(default)]
    pub ks: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UbiquityConfig {
    pub source: SourceSpec,
    pub schedule: ScheduleKind,
    pub horizon: usize,
    pub rho: RhoProfile,
    pub balls: BallSpec,
    pub ks: Vec<usize>,
    #[serde(default)]
    pub method: Option<CoverMethod>,
    #[serde(default)]
    pub prior_check: Option<PriorCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub generator: GeneratorSpec,
    pub psi: ApproxProfile,
    pub window: Window,
    pub samples: u64,
    pub seed: u64,
    /// Window ends for a sweep over `[window.j_min, m]`.
    #[serde(default)]
    pub sweep: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub criterion: SeriesCriterion,
    pub horizon: usize,
    #[serde(default)]
    pub mode: EvalMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionConfig {
    pub tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalesSpec {
    /// `2^{−from}, …, 2^{−to}`
    Dyadic {
        from: u32,
        to: u32,
    },
    Explicit(Vec<f64>),
}

impl ScalesSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ScalesSpec::Dyadic { from, to } => (*from..=*to).map(|k| 2f64.powi(-(k as i32))).collect(),
            ScalesSpec::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDimConfig {
    pub generator: GeneratorSpec,
    pub psi: ApproxProfile,
    pub window: Window,
    pub scales: ScalesSpec,
    #[serde(default)]
    pub occupancy: Occupancy,
}

/// Command-line values that replace fields of the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Replaces every `seed` key in the config.
    pub seed: Option<u64>,
    /// Replaces every `samples` key in the config.
    pub samples: Option<u64>,
    /// `generator.count`
    pub count: Option<usize>,
    pub horizon: Option<usize>,
    pub tau: Option<Vec<f64>>,
}

/// Reads, merges and validates a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
    parse_value(value, None, &Overrides::default())
}

/// Config from a JSON value: sets the kind, applies overrides, then checks
/// for unknown keys and every validation problem before anything runs.
pub fn parse_value(
    mut value: Value,
    kind: Option<ExperimentKind>,
    overrides: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let Value::Object(obj) = &mut value else {
        return Err(CliError::Validation(vec!["config must be a JSON object".into()]));
    };
    if let Some(kind) = kind {
        match obj.get("experiment") {
            None => {
                obj.insert("experiment".into(), Value::String(kind.name().into()));
            }
            Some(Value::String(s)) if s == kind.name() => {}
            Some(other) => {
                return Err(CliError::Validation(vec![format!(
                    "config is for experiment {other}, but the `{}` subcommand was used",
                    kind.name()
                )]))
            }
        }
    }
    apply_overrides(obj, overrides)?;

    let config: ExperimentConfig = serde_json::from_value(value.clone())
        .map_err(|e| CliError::Validation(vec![format!("config: {e}")]))?;

    // Anything the typed config did not keep was not understood.
    let kept = serde_json::to_value(&config).expect("config serializes");
    let mut errs = Vec::new();
    unknown_keys(&value, &kept, "", &mut errs);
    errs.extend(validate(&config));
    if errs.is_empty() {
        Ok(config)
    } else {
        Err(CliError::Validation(errs))
    }
}

fn apply_overrides(obj: &mut Map<String, Value>, o: &Overrides) -> Result<(), CliError> {
    let mut errs = Vec::new();
    if let Some(seed) = o.seed {
        if set_all(obj, "seed", &Value::from(seed)) == 0 {
            errs.push("--seed: this config has no seed to override".to_string());
        }
    }
    if let Some(samples) = o.samples {
        if set_all(obj, "samples", &Value::from(samples)) == 0 {
            errs.push("--samples: this config has no sample count to override".to_string());
        }
    }
    if let Some(count) = o.count {
        let gen = match obj.get_mut("generator") {
            Some(g) => Some(g),
            None => obj.get_mut("source").and_then(|s| s.get_mut("generator")),
        };
        match gen.and_then(Value::as_object_mut) {
            Some(g) => {
                g.insert("count".into(), Value::from(count));
            }
            None => errs.push("--count: this config has no generator".to_string()),
        }
    }
    if let Some(h) = o.horizon {
        obj.insert("horizon".into(), Value::from(h));
    }
    if let Some(tau) = &o.tau {
        obj.insert("tau".into(), Value::from(tau.clone()));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(errs))
    }
}

fn set_all(obj: &mut Map<String, Value>, key: &str, v: &Value) -> usize {
    let mut n = 0;
    for (k, child) in obj.iter_mut() {
        if k == key && !child.is_object() && !child.is_array() {
            *child = v.clone();
            n += 1;
        } else if let Value::Object(m) = child {
            n += set_all(m, key, v);
        }
    }
    n
}

fn unknown_keys(input: &Value, kept: &Value, path: &str, errs: &mut Vec<String>) {
    match (input, kept) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match b.get(k) {
                    Some(w) => unknown_keys(v, w, &p, errs),
                    None => errs.push(format!("unknown key `{p}`")),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            for (i, (v, w)) in a.iter().zip(b).enumerate() {
                unknown_keys(v, w, &format!("{path}[{i}]"), errs);
            }
        }
        _ => {}
    }
}

fn prefixed(prefix: &str, errs: Vec<String>) -> impl Iterator<Item = String> + '_ {
    errs.into_iter().map(move |e| format!("{prefix}: {e}"))
}

fn check_generator(g: &GeneratorSpec, errs: &mut Vec<String>) {
    errs.extend(g.validate());
    if let GeneratorKind::File { path } = &g.kind {
        if !path.exists() {
            errs.push(format!("generator.path: {} does not exist", path.display()));
        }
    }
}

fn check_window(w: &Window, g: &GeneratorSpec, errs: &mut Vec<String>) {
    if let Err(e) = Window::new(w.j_min, w.j_max) {
        errs.push(format!("window: {e}"));
    } else if w.j_max > g.count as u64 {
        errs.push(format!(
            "window: ends at {} but generator.count is {}",
            w.j_max, g.count
        ));
    }
}

fn check_profile_dim(psi: &ApproxProfile, g: &GeneratorSpec, errs: &mut Vec<String>) {
    errs.extend(prefixed("psi", psi.validate()));
    if let Some(d) = generator_dim(g) {
        if d != psi.dim() {
            errs.push(format!(
                "psi has {} coordinates but the sequence has dimension {d}",
                psi.dim()
            ));
        }
    }
}

fn generator_dim(g: &GeneratorSpec) -> Option<usize> {
    g.dim.or(match &g.kind {
        GeneratorKind::Kronecker { alpha } => Some(alpha.len()),
        GeneratorKind::RadicalInverse { bases } => Some(bases.len()),
        _ => None,
    })
}

/// Every problem with the config, each naming the field it concerns.
pub fn validate(config: &ExperimentConfig) -> Vec<String> {
    let mut errs = Vec::new();
    match &config.experiment {
        Experiment::Gen(c) => check_generator(&c.generator, &mut errs),
        Experiment::Disc(c) => {
            check_generator(&c.generator, &mut errs);
            for &n in &c.checkpoints {
                if n == 0 || n > c.generator.count {
                    errs.push(format!("checkpoints: {n} is outside 1..={}", c.generator.count));
                }
            }
        }
        Experiment::DssCheck(c) => {
            check_generator(&c.generator, &mut errs);
            errs.extend(prefixed("rate", c.rate.validate()));
            match (&c.schedule, c.propose_slack) {
                (Some(kind), None) => match c.horizon {
                    None => errs.push("horizon is required with a schedule".to_string()),
                    Some(0) => errs.push("horizon must be at least 1".to_string()),
                    Some(h) => match make_schedule(kind, h) {
                        Ok(s) if s.last() > c.generator.count as u64 => errs.push(format!(
                            "generator.count = {} is below the last schedule index N_{h} = {}",
                            c.generator.count,
                            s.last()
                        )),
                        Ok(_) => {}
                        Err(e) => errs.push(format!("schedule: {e}")),
                    },
                },
                (None, Some(slack)) => {
                    if !(slack.is_finite() && slack > 0.0) {
                        errs.push(format!("propose_slack = {slack} must be positive"));
                    }
                    if c.horizon.is_some() {
                        errs.push("horizon only applies to a fixed schedule".to_string());
                    }
                }
                _ => errs.push("give exactly one of `schedule` or `propose_slack`".to_string()),
            }
        }
        Experiment::Ubiquity(c) => validate_ubiquity(c, &mut errs),
        Experiment::Measure(c) => {
            check_generator(&c.generator, &mut errs);
            check_profile_dim(&c.psi, &c.generator, &mut errs);
            check_window(&c.window, &c.generator, &mut errs);
            if c.samples < udmetric::limsup::MIN_SAMPLES {
                errs.push(format!(
                    "samples = {} must be at least {}",
                    c.samples,
                    udmetric::limsup::MIN_SAMPLES
                ));
            }
            for &m in &c.sweep {
                if m < c.window.j_min || m > c.generator.count as u64 {
                    errs.push(format!(
                        "sweep: {m} is outside {}..={}",
                        c.window.j_min, c.generator.count
                    ));
                }
            }
        }
        Experiment::Series(c) => {
            errs.extend(prefixed("criterion", c.criterion.validate()));
            if c.horizon == 0 {
                errs.push("horizon must be at least 1".to_string());
            }
        }
        Experiment::Dimension(c) => validate_tau(&c.tau, &mut errs),
        Experiment::BoxDim(c) => {
            check_generator(&c.generator, &mut errs);
            check_profile_dim(&c.psi, &c.generator, &mut errs);
            check_window(&c.window, &c.generator, &mut errs);
            let s = c.scales.values();
            if s.len() < 3 {
                errs.push("scales: at least 3 are needed".to_string());
            }
            if s.iter().any(|d| !(d.is_finite() && *d > 0.0 && *d < 1.0)) {
                errs.push("scales: every scale must lie in (0, 1)".to_string());
            }
            if s.windows(2).any(|w| w[0] <= w[1]) {
                errs.push("scales: must be strictly decreasing".to_string());
            }
            if let Occupancy::Sampled { per_box: 0, .. } = c.occupancy {
                errs.push("occupancy: per_box must be at least 1".to_string());
            }
        }
    }
    errs
}

fn validate_tau(tau: &[f64], errs: &mut Vec<String>) {
    if tau.is_empty() {
        errs.push("tau: needs at least one coordinate".to_string());
        return;
    }
    for (i, t) in tau.iter().enumerate() {
        if !(t.is_finite() && *t > 0.0) {
            errs.push(format!("tau[{i}] = {t} must be positive and finite"));
        }
    }
    let sum: f64 = tau.iter().sum();
    if sum.is_nan() || sum <= 1.0 {
        errs.push(format!(
            "tau sums to {sum}; the dimension formula requires the hypothesis sum tau > 1"
        ));
    }
}

fn validate_ubiquity(c: &UbiquityConfig, errs: &mut Vec<String>) {
    let dim = match &c.source {
        SourceSpec::Generator(g) => {
            check_generator(g, errs);
            generator_dim(g)
        }
        SourceSpec::LazyVanDerCorput { base } => {
            if *base < 2 {
                errs.push(format!("source.base = {base} must be at least 2"));
            }
            Some(1)
        }
    };
    errs.extend(prefixed("rho", c.rho.validate()));
    if let Some(d) = dim {
        if c.rho.dim() != d {
            errs.push(format!(
                "rho has {} exponents but the sequence has dimension {d}",
                c.rho.dim()
            ));
        }
    }
    if c.horizon == 0 {
        errs.push("horizon must be at least 1".to_string());
    } else {
        match make_schedule(&c.schedule, c.horizon) {
            Ok(s) => {
                if let SourceSpec::Generator(g) = &c.source {
                    if s.last() > g.count as u64 {
                        errs.push(format!(
                            "generator.count = {} is below the last schedule index {}",
                            g.count,
                            s.last()
                        ));
                    }
                }
            }
            Err(e) => errs.push(format!("schedule: {e}")),
        }
    }
    let mut ks: Vec<usize> = c.ks.clone();
    if let Some(p) = &c.prior_check {
        ks.extend(p.ks.iter().flatten());
        if !(p.delta > 0.0 && p.eta > 0.0) {
            errs.push(format!(
                "prior_check: delta = {} and eta = {} must be positive",
                p.delta, p.eta
            ));
        }
        if let Some(m) = &p.method {
            errs.extend(prefixed("prior_check.method", m.validate()));
        }
    }
    if c.ks.is_empty() {
        errs.push("ks: at least one block index is required".to_string());
    }
    for k in ks {
        if k == 0 || k > c.horizon {
            errs.push(format!("ks: block {k} is outside 1..={}", c.horizon));
        }
    }
    if let Some(m) = &c.method {
        errs.extend(prefixed("method", m.validate()));
    }
    match &c.balls {
        BallSpec::Random { count, radius, .. } => {
            if *count == 0 {
                errs.push("balls.random.count must be at least 1".to_string());
            }
            if !(radius.is_finite() && *radius > 0.0) {
                errs.push(format!("balls.random.radius = {radius} must be positive"));
            }
        }
        BallSpec::Explicit(balls) => {
            if balls.is_empty() {
                errs.push("balls.explicit: at least one ball is required".to_string());
            }
            for (i, b) in balls.iter().enumerate() {
                if let Err(e) = udmetric::sequences::Point::new(b.center.coords().to_vec()) {
                    errs.push(format!("balls.explicit[{i}].center: {e}"));
                } else if let Err(e) = b.check() {
                    errs.push(format!("balls.explicit[{i}]: {e}"));
                }
                if dim.is_some_and(|d| d != b.dim()) {
                    errs.push(format!(
                        "balls.explicit[{i}]: dimension {} does not match the sequence",
                        b.dim()
                    ));
                }
            }
        }
    }
}

/// SHA-256 of the canonical (key-sorted, compact) config, output directory excluded.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Value::Object(m) = &mut v {
        m.remove("out");
    }
    let bytes = serde_json::to_vec(&v).expect("value serializes");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
