use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::ecdf::{EmpiricalCdf, Quantiles};
use crate::analytics::{half_normal_cdf, scaling_cdf, spectral_cdf, vertex_component_cdf};
use crate::flow::Trajectory;
use crate::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub trials: u64,
    pub accepted: u64,
    /// Includes `excluded`.
    pub rejected: u64,
    pub failed: u64,
    /// Rejected by the experiment's own filter after a successful solve.
    pub excluded: u64,
}

impl Counts {
    pub fn add(&mut self, other: &Counts) {
        self.trials += other.trials;
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.failed += other.failed;
        self.excluded += other.excluded;
    }

    pub fn balanced(&self) -> bool {
        self.accepted + self.rejected + self.failed == self.trials
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<"`, `"<="` or `">"`: the relation `value op threshold` that passes.
    pub op: &'static str,
    pub passed: bool,
}

impl Gate {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate { name: name.into(), value, threshold, op: "<", passed: value < threshold }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate { name: name.into(), value, threshold, op: "<=", passed: value <= threshold }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate { name: name.into(), value, threshold, op: ">", passed: value > threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial: u64,
    pub error: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub trial: u64,
    pub raw: f64,
    pub scaled: f64,
}

/// Reference CDF of a series, in the scaled variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Analytic {
    None,
    Scaling,
    HalfNormal { m: usize },
    Spectral,
    Cauchy { lambda: f64 },
}

impl Analytic {
    pub fn eval(&self, x: f64) -> Option<f64> {
        match *self {
            Analytic::None => None,
            Analytic::Scaling => Some(scaling_cdf(x)),
            Analytic::HalfNormal { m } => Some(half_normal_cdf(x, m)),
            Analytic::Spectral => Some(spectral_cdf(x)),
            Analytic::Cauchy { lambda } => Some(vertex_component_cdf(x, lambda)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub samples: Vec<Sample>,
    pub analytic: Analytic,
}

impl Series {
    pub fn scaled(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.scaled).collect()
    }

    pub fn raw(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.raw).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub counts: Counts,
    pub sub_counts: BTreeMap<String, Counts>,
    pub ks: BTreeMap<String, f64>,
    pub quantiles: BTreeMap<String, Quantiles>,
    pub metrics: BTreeMap<String, f64>,
    pub gates: Vec<Gate>,
    pub passed: bool,
    pub failures: Vec<TrialFailure>,
    pub files: Vec<String>,
    #[serde(skip)]
    pub series: Vec<Series>,
    #[serde(skip)]
    pub trajectories: Vec<(u64, Trajectory)>,
}

const MAX_LISTED_FAILURES: usize = 100;
const MAX_CDF_ROWS: usize = 4000;

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        ExperimentReport {
            experiment: config.experiment,
            config: config.clone(),
            counts: Counts::default(),
            sub_counts: BTreeMap::new(),
            ks: BTreeMap::new(),
            quantiles: BTreeMap::new(),
            metrics: BTreeMap::new(),
            gates: Vec::new(),
            passed: true,
            failures: Vec::new(),
            files: Vec::new(),
            series: Vec::new(),
            trajectories: Vec::new(),
        }
    }

    pub fn gate(&mut self, gate: Gate) {
        self.passed &= gate.passed;
        self.gates.push(gate);
    }

    pub fn gate_named(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn failed_gates(&self) -> Vec<&Gate> {
        self.gates.iter().filter(|g| !g.passed).collect()
    }

    pub fn record_failures(&mut self, failures: impl IntoIterator<Item = TrialFailure>) {
        for f in failures {
            if self.failures.len() >= MAX_LISTED_FAILURES {
                break;
            }
            self.failures.push(f);
        }
    }

    /// Adds a sub-count and folds it into the total.
    pub fn add_counts(&mut self, label: &str, counts: Counts) {
        self.counts.add(&counts);
        self.sub_counts.insert(label.to_string(), counts);
    }

    pub fn add_series(&mut self, series: Series) -> Result<EmpiricalCdf> {
        let ecdf = EmpiricalCdf::new(series.scaled())?;
        self.quantiles.insert(series.label.clone(), Quantiles::from(&ecdf));
        self.series.push(series);
        Ok(ecdf)
    }

    /// Writes `config.json`, `report.json` and per-series `samples.csv` /
    /// `cdf.csv`. A single series goes at the top level, several go into one
    /// subdirectory each.
    pub fn write_to(&mut self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        write_json(&dir.join("config.json"), &self.config)?;
        files.push("config.json".to_string());
        let nested = self.series.len() > 1;
        for s in &self.series {
            let (sub, prefix) =
                if nested { (dir.join(&s.label), format!("{}/", s.label)) } else { (dir.to_path_buf(), String::new()) };
            fs::create_dir_all(&sub)?;
            write_samples(&sub.join("samples.csv"), &s.samples)?;
            write_cdf(&sub.join("cdf.csv"), s)?;
            files.push(format!("{prefix}samples.csv"));
            files.push(format!("{prefix}cdf.csv"));
        }
        if !self.trajectories.is_empty() {
            let tdir = dir.join("trajectories");
            fs::create_dir_all(&tdir)?;
            for (trial, traj) in &self.trajectories {
                let name = format!("trial_{trial}.csv");
                traj.write_csv(BufWriter::new(fs::File::create(tdir.join(&name))?))?;
                files.push(format!("trajectories/{name}"));
            }
        }
        files.push("report.json".to_string());
        self.files = files;
        write_json(&dir.join("report.json"), &*self)?;
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_samples(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "trial,raw,scaled")?;
    for s in samples {
        writeln!(w, "{},{},{}", s.trial, s.raw, s.scaled)?;
    }
    w.flush()?;
    Ok(())
}

/// ECDF at the sample points, thinned to at most `MAX_CDF_ROWS` rows that
/// always include the largest sample.
fn write_cdf(path: &Path, series: &Series) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x,ecdf,analytic")?;
    let Ok(ecdf) = EmpiricalCdf::new(series.scaled()) else {
        return Ok(w.flush()?);
    };
    let xs = ecdf.samples();
    let stride = xs.len().div_ceil(MAX_CDF_ROWS).max(1);
    let mut idx: Vec<usize> = (stride - 1..xs.len()).step_by(stride).collect();
    if idx.last() != Some(&(xs.len() - 1)) {
        idx.push(xs.len() - 1);
    }
    for i in idx {
        let x = xs[i];
        let analytic = series.analytic.eval(x).map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{x},{},{analytic}", ecdf.eval(x))?;
    }
    w.flush()?;
    Ok(())
}
