//! Runs every member of a scenario, writes per-member outputs, the
//! aggregate and the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{
    create_dir, fmt_f64, sha256_file, write_json, write_records, write_table, write_text, Manifest,
    CSV_SCHEMA_VERSION,
};
use crate::scenario::{run_member, MemberOutcome};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FAILED_FILE: &str = "FAILED";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const MEMBERS_FILE: &str = "members.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub output: PathBuf,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct MemberRecord {
    pub index: usize,
    pub seed: Option<u64>,
    pub dir: PathBuf,
    pub outcome: MemberOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub observable: String,
    pub n_members: usize,
    pub n_failed: usize,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub output: PathBuf,
    pub members: Vec<MemberRecord>,
    pub aggregate: Vec<AggregateRow>,
}

impl RunReport {
    pub fn failed(&self) -> usize {
        self.members.iter().filter(|m| m.outcome.failure.is_some()).count()
    }

    pub fn aggregate_of(&self, observable: &str) -> Option<&AggregateRow> {
        self.aggregate.iter().find(|r| r.observable == observable)
    }
}

/// Member seeds drawn from one ChaCha stream keyed by the master seed, so
/// they do not depend on scheduling.
pub fn member_seeds(master: Option<u64>, n: usize) -> Vec<Option<u64>> {
    match master {
        None => vec![None; n],
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..n).map(|_| Some(rng.next_u64())).collect()
        }
    }
}

pub fn member_dir(output: &Path, index: usize) -> PathBuf {
    output.join(format!("member_{index:03}"))
}

/// Mean and standard error of the metric over the members that finished.
pub fn aggregate(members: &[MemberRecord]) -> Vec<AggregateRow> {
    let ok: Vec<&MemberOutcome> =
        members.iter().map(|m| &m.outcome).filter(|o| o.failure.is_none()).collect();
    let n_failed = members.len() - ok.len();
    let Some(first) = ok.first() else { return Vec::new() };
    first
        .metrics
        .iter()
        .map(|(name, _)| {
            let values: Vec<f64> = ok
                .iter()
                .filter_map(|o| o.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v))
                .collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std_error = if values.len() > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            AggregateRow { observable: (*name).into(), n_members: values.len(), n_failed, mean, std_error }
        })
        .collect()
}

fn write_member(record: &MemberRecord) -> Result<(), CliError> {
    let dir = &record.dir;
    create_dir(dir)?;
    let o = &record.outcome;
    write_table(&dir.join(TRAJECTORY_FILE), o.columns, &o.rows)?;
    let mut summary = o.summary.clone();
    summary.insert("member".into(), json!(record.index));
    summary.insert("status".into(), json!(if o.failure.is_some() { "failed" } else { "ok" }));
    summary.insert("samples".into(), json!(o.rows.len()));
    summary.insert("metrics".into(), json!(o.metrics.iter().map(|(n, v)| (n.to_string(), *v)).collect::<BTreeMap<_, _>>()));
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    let marker = dir.join(FAILED_FILE);
    match &o.failure {
        Some(msg) => write_text(&marker, &format!("{msg}\n"))?,
        None if marker.exists() => std::fs::remove_file(&marker).map_err(|e| CliError::io(&marker, e))?,
        None => {}
    }
    Ok(())
}

fn write_aggregate(output: &Path, members: &[MemberRecord], rows: &[AggregateRow]) -> Result<(), CliError> {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.observable.clone(),
                r.n_members.to_string(),
                r.n_failed.to_string(),
                fmt_f64(r.mean),
                fmt_f64(r.std_error),
            ]
        })
        .collect();
    write_records(
        &output.join(AGGREGATE_FILE),
        &["observable", "n_members", "n_failed", "mean", "std_error"],
        &records,
    )?;
    let names: Vec<&str> = rows.iter().map(|r| r.observable.as_str()).collect();
    let mut columns = vec!["member", "seed", "status"];
    columns.extend(&names);
    let records: Vec<Vec<String>> = members
        .iter()
        .map(|m| {
            let mut rec = vec![
                m.index.to_string(),
                m.seed.map(|s| s.to_string()).unwrap_or_default(),
                if m.outcome.failure.is_some() { "failed" } else { "ok" }.to_string(),
            ];
            rec.extend(names.iter().map(|n| {
                m.outcome.metrics.iter().find(|(k, _)| k == n).map(|(_, v)| fmt_f64(*v)).unwrap_or_default()
            }));
            rec
        })
        .collect();
    write_records(&output.join(MEMBERS_FILE), &columns, &records)
}

fn relative(output: &Path, path: &Path) -> String {
    path.strip_prefix(output).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

/// Runs the scenario and writes all outputs. Members that diverge are
/// recorded and excluded from the aggregate; the run itself still succeeds.
pub fn run_config(cfg: &ScenarioConfig, source: &str, opts: &RunOptions) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let started = Instant::now();
    let output = opts.output.clone();
    create_dir(&output)?;
    let seeds = member_seeds(cfg.seed, cfg.ensemble_size);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::config(format!("cannot start workers: {e}")))?;
    let jobs = pool.current_num_threads();
    let members: Vec<MemberRecord> = pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(index, seed)| {
                let outcome = run_member(cfg, *seed)?;
                let record = MemberRecord { index, seed: *seed, dir: member_dir(&output, index), outcome };
                write_member(&record)?;
                Ok(record)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let rows = aggregate(&members);
    write_aggregate(&output, &members, &rows)?;

    let mut files = BTreeMap::new();
    let mut paths = vec![output.join(AGGREGATE_FILE), output.join(MEMBERS_FILE)];
    for m in &members {
        paths.push(m.dir.join(TRAJECTORY_FILE));
        paths.push(m.dir.join(SUMMARY_FILE));
        if m.outcome.failure.is_some() {
            paths.push(m.dir.join(FAILED_FILE));
        }
    }
    for p in &paths {
        files.insert(relative(&output, p), sha256_file(p)?);
    }
    let report = RunReport { output: output.clone(), members, aggregate: rows };
    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION"),
        csv_schema_version: CSV_SCHEMA_VERSION,
        config: cfg,
        config_source: source,
        master_seed: cfg.seed,
        jobs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        members: report.members.len(),
        failed_members: report.failed(),
        files,
    };
    write_json(&output.join(MANIFEST_FILE), &manifest)?;
    Ok(report)
}
