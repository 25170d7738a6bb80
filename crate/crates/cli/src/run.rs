//! Executes a parsed config and persists its outputs and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use udmetric::dimension::{
    box_counts_csv, box_dimension_estimate, choose_weights, dimension_formula, upper_bound_exponent,
    ww_lower_bound, DimensionReport, UbiquityExponents, WeightVector,
};
use udmetric::discrepancy::{
    discrepancy_ratios, extreme_discrepancy_exact, star_discrepancy_exact, DiscrepancyRatios,
    DiscrepancyReport,
};
use udmetric::dss::{check_dss_with, make_schedule, propose_schedule, DssOptions, DssReport};
use udmetric::limsup::{
    measure_estimate, measure_sweep, series_partial_sums_with, sweep_to_csv, MeasureEstimate, SeriesReport,
    SweepRow,
};
use udmetric::rng::PRNG_ID;
use udmetric::sequences::{LazyVanDerCorput, PointList};
use udmetric::ubiquity::{
    prior_block_excess, random_balls, verify_local_ubiquity, CoverMethod, CoverSource, PriorBlockRecord,
    UbiquityReport,
};

use crate::config::{
    BallSpec, BoxDimConfig, DiscConfig, DssConfig, Experiment, ExperimentConfig, MeasureConfig, SeriesConfig,
    SourceSpec, UbiquityConfig,
};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub op: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Written before any output and rewritten once the run ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub experiment: String,
    pub config_hash: String,
    pub version: String,
    pub prng: String,
    pub threads: usize,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub timings: Vec<Timing>,
    /// Complete outputs only; empty unless `status` is `complete`.
    pub outputs: Vec<OutputFile>,
    pub error: Option<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; rayon's default when `None`.
    pub threads: Option<usize>,
}

struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

fn json<T: Serialize>(name: &'static str, value: &T) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    Artifact { name, bytes }
}

fn text(name: &'static str, s: String) -> Artifact {
    Artifact {
        name,
        bytes: s.into_bytes(),
    }
}

fn csv_rows<T: Serialize>(name: &'static str, rows: &[T]) -> Result<Artifact, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
    Ok(Artifact { name, bytes })
}

struct Clock {
    timings: Vec<Timing>,
}

impl Clock {
    fn time<T>(&mut self, op: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
        let t = Instant::now();
        let r = f();
        self.timings.push(Timing {
            op: op.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        r
    }
}

fn module<T>(name: &'static str, r: udmetric::Result<T>) -> Result<T, CliError> {
    r.map_err(|err| CliError::Module { module: name, err })
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = dir.join(format!(".{name}.partial"));
    let dst = dir.join(name);
    fs::write(&tmp, bytes)
        .and_then(|_| fs::rename(&tmp, &dst))
        .map_err(|e| CliError::Io(format!("writing {}: {e}", dst.display())))
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(m).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(dir, MANIFEST_NAME, &bytes)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the experiment and writes its outputs under `opts.out`.
///
/// Outputs are computed in memory first; stale outputs of the same kind are
/// removed up front, so a failed run leaves none behind.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let kind = config.experiment.kind();
    let dir = &opts.out;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    for name in kind.output_names() {
        let p = dir.join(name);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| CliError::Io(format!("removing {}: {e}", p.display())))?;
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Validation(vec![format!("--threads: {e}")]))?;
    let mut manifest = RunManifest {
        status: RunStatus::Running,
        experiment: kind.name().to_string(),
        config_hash: crate::config::config_hash(config),
        version: env!("CARGO_PKG_VERSION").to_string(),
        prng: PRNG_ID.to_string(),
        threads: pool.current_num_threads(),
        started_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0),
        wall_clock_seconds: 0.0,
        timings: Vec::new(),
        outputs: Vec::new(),
        error: None,
    };
    write_manifest(dir, &manifest)?;

    let mut clock = Clock { timings: Vec::new() };
    let result = pool
        .install(|| compute(&config.experiment, &mut clock))
        .and_then(|artifacts| {
            let mut files = Vec::new();
            for a in &artifacts {
                if let Err(e) = write_atomic(dir, a.name, &a.bytes) {
                    for f in &files {
                        let _ = fs::remove_file(dir.join(f));
                    }
                    return Err(e);
                }
                files.push(a.name);
            }
            Ok(artifacts)
        });

    manifest.timings = clock.timings;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(artifacts) => {
            manifest.status = RunStatus::Complete;
            manifest.outputs = artifacts
                .iter()
                .map(|a| OutputFile {
                    file: a.name.to_string(),
                    sha256: sha256_hex(&a.bytes),
                    bytes: a.bytes.len(),
                })
                .collect();
            write_manifest(dir, &manifest)?;
            Ok(manifest)
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            write_manifest(dir, &manifest)?;
            Err(e)
        }
    }
}

fn compute(exp: &Experiment, clock: &mut Clock) -> Result<Vec<Artifact>, CliError> {
    match exp {
        Experiment::Gen(c) => {
            let seq = clock.time("generate", || module("sequences", c.generator.generate()))?;
            Ok(vec![text("sequence.txt", seq.to_text())])
        }
        Experiment::Disc(c) => disc(c, clock),
        Experiment::DssCheck(c) => dss(c, clock),
        Experiment::Ubiquity(c) => ubiquity(c, clock),
        Experiment::Measure(c) => measure(c, clock),
        Experiment::Series(c) => series(c, clock),
        Experiment::Dimension(c) => {
            let out = clock.time("dimension", || dimension(&c.tau))?;
            Ok(vec![json("dimension.json", &out)])
        }
        Experiment::BoxDim(c) => box_dim(c, clock),
    }
}

#[derive(Serialize)]
struct DiscOutput {
    reports: Vec<DiscrepancyReport>,
    ratios: Vec<DiscrepancyRatios>,
}

#[derive(Serialize)]
struct DiscRow {
    #[serde(rename = "N")]
    count: usize,
    star: Option<f64>,
    extreme: Option<f64>,
}

fn disc(c: &DiscConfig, clock: &mut Clock) -> Result<Vec<Artifact>, CliError> {
    let seq = clock.time("generate", || module("sequences", c.generator.generate()))?;
    let checkpoints = if c.checkpoints.is_empty() {
        vec![seq.len()]
    } else {
        c.checkpoints.clone()
    };
    let reports = clock.time("discrepancy", || {
        checkpoints
            .iter()
            .map(|&n| {
                module(
                    "discrepancy",
                    if c.extreme {
                        extreme_discrepancy_exact(&seq, n)
                    } else {
                        star_discrepancy_exact(&seq, n)
                    },
                )
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let ratios = if c.ratios {
        clock.time("ratios", || {
            checkpoints
                .iter()
                .filter(|&&n| n >= 16)
                .map(|&n| module("discrepancy", discrepancy_ratios(&seq, n)))
                .collect::<Result<Vec<_>, _>>()
        })?
    } else {
        Vec::new()
    };
    let rows: Vec<DiscRow> = reports
        .iter()
        .map(|r| DiscRow {
            count: r.count,
            star: r.star,
            extreme: r.extreme,
        })
        .collect();
    Ok(vec![
        json("disc.json", &DiscOutput { reports, ratios }),
        csv_rows("disc.csv", &rows)?,
    ])
}

fn dss(c: &DssConfig, clock: &mut Clock) -> Result<Vec<Artifact>, CliError> {
    let seq = clock.time("generate", || module("sequences", c.generator.generate()))?;
    let sched = clock.time("schedule", || match (&c.schedule, c.propose_slack) {
        (Some(kind), _) => module("dss", make_schedule(kind, c.horizon.unwrap_or(0))),
        (None, Some(slack)) => module("dss", propose_schedule(&seq, &c.rate, slack)),
        (None, None) => Err(CliError::Validation(vec!["no schedule given".into()])),
    })?;
    let opts = DssOptions {
        tail_rule: c.tail_rule,
        guard: None,
    };
    let report: DssReport = clock.time("check_dss", || {
        module("dss", check_dss_with(&seq, &sched, &c.rate, &opts))
    })?;
    Ok(vec![
        json("dss.json", &report),
        csv_rows("dss.csv", &report.records)?,
    ])
}

#[derive(Serialize)]
struct UbiquityOutput {
    schedule: Vec<u64>,
    #[serde(flatten)]
    report: UbiquityReport,
    prior_block: Vec<PriorBlockRecord>,
}

fn ubiquity(c: &UbiquityConfig, clock: &mut Clock) -> Result<Vec<Artifact>, CliError> {
    let sched = module("dss", make_schedule(&c.schedule, c.horizon))?;
    let (points, lazy): (Option<PointList>, Option<LazyVanDerCorput>) = match &c.source {
        SourceSpec::Generator(g) => (
            Some(clock.time("generate", || module("sequences", g.generate()))?),
            None,
        ),
        SourceSpec::LazyVanDerCorput { base } => {
            (None, Some(module("sequences", LazyVanDerCorput::new(*base))?))
        }
    };
    let src: &dyn CoverSource = match (&points, &lazy) {
        (Some(p), _) => p,
        (_, Some(l)) => l,
        _ => unreachable!("one source is always set"),
    };
    let dim = src.dim();
    let balls = match &c.balls {
        BallSpec::Random { seed, count, radius } => {
            module("ubiquity", random_balls(*seed, dim, *count, *radius))?
        }
        BallSpec::Explicit(b) => b.clone(),
    };
    let method = c.method.unwrap_or_else(|| CoverMethod::default_grid(dim));
    let report = clock.time("coverage", || {
        module(
            "ubiquity",
            verify_local_ubiquity(src, &sched, &c.rho, &balls, &c.ks, &method),
        )
    })?;
    let prior_block = match &c.prior_check {
        None => Vec::new(),
        Some(p) => clock.time("prior_block", || {
            let m = p.method.unwrap_or(if dim == 1 {
                CoverMethod::Exact
            } else {
                CoverMethod::default_grid(dim)
            });
            let ks = p.ks.as_ref().unwrap_or(&c.ks);
            let mut out = Vec::new();
            for &k in ks {
                for b in &balls {
                    out.push(module(
                        "ubiquity",
                        prior_block_excess(src, &sched, k, &c.rho, b, p.delta, p.eta, &m),
                    )?);
                }
            }
            Ok(out)
        })?,
    };
    let csv = module("ubiquity", report.to_csv())?;
    let out = UbiquityOutput {
        schedule: sched.indices().to_vec(),
        report,
        prior_block,
    };
    Ok(vec![json("ubiquity.json", &out), text("ubiquity.csv", csv)])
}

#[derive(Serialize)]
struct MeasureOutput {
    estimate: MeasureEstimate,
    sweep: Vec<SweepRow>,
}

fn measure(c: &MeasureConfig, clock: &mut Clock) -> Result<Vec<Artifact>, CliError> {
    let seq = clock.time("generate", || module("sequences", c.generator.generate()))?;
    let estimate = clock.time("measure", || {
        module(
            "limsup",
            measure_estimate(&seq, &c.psi, &c.window, c.samples, c.seed),
        )
    })?;
    let mut out = Vec::new();
    let sweep = if c.sweep.is_empty() {
        Vec::new()
    } else {
        let rows = clock.time("sweep", || {
            module(
                "limsup",
                measure_sweep(&seq, &c.psi, c.window.j_min, &c.sweep, c.samples, c.seed),
            )
        })?;
        out.push(text("measure_sweep.csv", module("limsup", sweep_to_csv(&rows))?));
        rows
    };
    out.insert(0, json("measure.json", &MeasureOutput { estimate, sweep }));
    Ok(out)
}

#[derive(Serialize)]
struct SeriesRow {
    j: usize,
    term: f64,
    partial_sum: f64,
}

fn series(c: &SeriesConfig, clock: &mut Clock) -> Result<Vec<Artifact>, CliError> {
    let report: SeriesReport = clock.time("series", || {
        module(
            "limsup",
            series_partial_sums_with(&c.criterion, c.horizon, c.mode),
        )
    })?;
    let rows: Vec<SeriesRow> = report
        .terms
        .iter()
        .zip(&report.partial_sums)
        .enumerate()
        .map(|(i, (&term, &partial_sum))| SeriesRow {
            j: i + 1,
            term,
            partial_sum,
        })
        .collect();
    Ok(vec![json("series.json", &report), csv_rows("series.csv", &rows)?])
}

#[derive(Serialize)]
pub struct DimensionOutput {
    pub value: f64,
    pub closed_form: DimensionReport,
    pub weights: UbiquityExponents,
    pub ww_lower: DimensionReport,
    /// `s_k(τ)` for `k = 1..=n`.
    pub upper_bound_exponents: Vec<f64>,
}

fn dimension(tau: &[f64]) -> Result<DimensionOutput, CliError> {
    let w = module("dimension", WeightVector::new(tau.to_vec()))?;
    let closed_form = dimension_formula(&w);
    let weights = choose_weights(&w);
    let ww_lower = module("dimension", ww_lower_bound(&weights))?;
    let upper_bound_exponents = (1..=w.dim())
        .map(|k| module("dimension", upper_bound_exponent(&w, k)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DimensionOutput {
        value: closed_form.value,
        closed_form,
        weights,
        ww_lower,
        upper_bound_exponents,
    })
}

fn box_dim(c: &BoxDimConfig, clock: &mut Clock) -> Result<Vec<Artifact>, CliError> {
    let seq = clock.time("generate", || module("sequences", c.generator.generate()))?;
    let scales = c.scales.values();
    let report = clock.time("box_count", || {
        module(
            "dimension",
            box_dimension_estimate(&seq, &c.psi, &c.window, &scales, &c.occupancy),
        )
    })?;
    let csv = module("dimension", box_counts_csv(&report))?;
    Ok(vec![json("box_dim.json", &report), text("box_counts.csv", csv)])
}
