//! Scenario runner: sweeps a bulkedge model over a parameter grid, checks
//! the identities and bounds of the scenario at every point, and writes a
//! JSON report, a sweep CSV and plot-data CSVs.
//!
//! Outputs of `run` are byte-identical for identical configs and seeds,
//! whatever the number of workers.

pub mod baseline;
pub mod config;
pub mod error;
pub mod report;
pub mod scenarios;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bulkedge::engine::EngineKind;
use bulkedge::report::{fmt_f64, to_json, SCHEMA_VERSION};
use rayon::prelude::*;

pub use baseline::{compare_baseline, Comparison, RegressionBaseline};
pub use config::{GridPoint, Scenario, ScenarioConfig};
pub use error::{LabError, Result};
pub use report::Report;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub engine: Option<EngineKind>,
    pub out: Option<PathBuf>,
    pub update_baselines: bool,
    /// Worker threads; 0 lets rayon choose.
    pub jobs: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub out: PathBuf,
    pub files: Vec<PathBuf>,
    /// None when no baseline file exists and none was written.
    pub baseline: Option<Comparison>,
}

impl RunOutcome {
    /// Nonzero exit iff a contract check or the baseline comparison failed.
    pub fn passed(&self) -> bool {
        self.report.passed && self.baseline.as_ref().map_or(true, Comparison::passed)
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

fn point_columns(p: GridPoint) -> Vec<String> {
    vec![p.l.to_string(), fmt_f64(p.b), fmt_f64(p.beta), fmt_f64(p.mu)]
}

pub fn run(mut config: ScenarioConfig, opts: &RunOptions) -> Result<RunOutcome> {
    if let Some(e) = opts.engine {
        config.engine = e;
    }
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    let out = opts.out.clone().unwrap_or_else(|| config.out.clone());
    let points = config.points();

    // The engine is resolved on the first point; every point shares the
    // model terms, so the choice is the same throughout.
    let engine = config.engine.resolve(&config.spec(points[0])?)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| LabError::Config {
            field: "--jobs".into(),
            line: None,
            message: e.to_string(),
        })?;
    let outputs = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &p)| scenarios::run_point(&config, engine, i, p))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut checks: Vec<report::CheckRecord> = Vec::new();
    let mut series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for o in &outputs {
        checks.extend(o.checks.iter().map(Into::into));
        for (name, v) in &o.series {
            series.entry(name.clone()).or_default().push(*v);
        }
    }
    checks.extend(scenarios::across_points(&config, &points, &outputs).iter().map(Into::into));
    let report = Report {
        schema_version: SCHEMA_VERSION,
        scenario: config.scenario.to_string(),
        identity: scenarios::identity(config.scenario).into(),
        config_hash: config.hash(),
        engine: engine.to_string(),
        seed: config.seed,
        points: points.iter().map(|&p| p.into()).collect(),
        passed: checks.iter().all(|c| !c.contract || c.pass),
        checks,
        series,
    };

    std::fs::create_dir_all(&out)?;
    let mut files = Vec::new();
    let report_path = out.join("report.json");
    std::fs::write(&report_path, to_json(&report)?)?;
    files.push(report_path);

    let table_path = out.join(format!("{}.csv", config.scenario));
    let mut w = csv_writer(&table_path)?;
    let mut header = vec!["L", "b", "beta", "mu"];
    header.extend_from_slice(scenarios::columns(config.scenario));
    w.write_record(&header)?;
    for (&p, o) in points.iter().zip(&outputs) {
        for row in &o.rows {
            w.write_record(point_columns(p).iter().chain(row))?;
        }
    }
    w.flush()?;
    files.push(table_path);

    let mut plots: BTreeMap<&str, Vec<(GridPoint, f64, f64)>> = BTreeMap::new();
    for (&p, o) in points.iter().zip(&outputs) {
        for r in &o.plots {
            plots.entry(r.plot).or_default().push((p, r.x, r.y));
        }
    }
    for (name, rows) in plots {
        let path = out.join(format!("plot_{name}.csv"));
        let mut w = csv_writer(&path)?;
        w.write_record(["L", "b", "beta", "mu", "x", "y"])?;
        for (p, x, y) in rows {
            let mut rec = point_columns(p);
            rec.push(fmt_f64(x));
            rec.push(fmt_f64(y));
            w.write_record(&rec)?;
        }
        w.flush()?;
        files.push(path);
    }

    let baseline_path = config.baseline.clone().unwrap_or_else(|| out.join("baseline.json"));
    let baseline = if opts.update_baselines {
        let b = RegressionBaseline::from_report(&report, config.baseline_rtol);
        if let Some(dir) = baseline_path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&baseline_path, to_json(&b)?)?;
        files.push(baseline_path);
        Some(Comparison::Pass { series: b.series.len() })
    } else if baseline_path.exists() {
        let b: RegressionBaseline = serde_json::from_str(&std::fs::read_to_string(&baseline_path)?)?;
        Some(compare_baseline(&report, &b))
    } else {
        None
    };

    Ok(RunOutcome {
        report,
        out,
        files,
        baseline,
    })
}

/// `lab compare`: load both files and compare.
pub fn compare_files(report: &Path, baseline: &Path) -> Result<Comparison> {
    let r = Report::load(report)?;
    let b: RegressionBaseline = serde_json::from_str(&std::fs::read_to_string(baseline)?)
        .map_err(|e| LabError::Baseline(format!("{}: {e}", baseline.display())))?;
    Ok(compare_baseline(&r, &b))
}
