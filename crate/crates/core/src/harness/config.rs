use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::runner::default_workers;
use crate::analytics::ScalingKind;
use crate::ensemble::EnsembleConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DeltaCdf,
    FixedVsOpt,
    BarrierCdf,
    TimeCdf,
    PuCheck,
    SpectrumCheck,
    IstarCheck,
    MomentsCheck,
    VertexNorm,
    FlowValidate,
    Collapse,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::DeltaCdf,
        ExperimentKind::FixedVsOpt,
        ExperimentKind::BarrierCdf,
        ExperimentKind::TimeCdf,
        ExperimentKind::PuCheck,
        ExperimentKind::SpectrumCheck,
        ExperimentKind::IstarCheck,
        ExperimentKind::MomentsCheck,
        ExperimentKind::VertexNorm,
        ExperimentKind::FlowValidate,
        ExperimentKind::Collapse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DeltaCdf => "delta-cdf",
            ExperimentKind::FixedVsOpt => "fixed-vs-opt",
            ExperimentKind::BarrierCdf => "barrier-cdf",
            ExperimentKind::TimeCdf => "time-cdf",
            ExperimentKind::PuCheck => "pu-check",
            ExperimentKind::SpectrumCheck => "spectrum-check",
            ExperimentKind::IstarCheck => "istar-check",
            ExperimentKind::MomentsCheck => "moments-check",
            ExperimentKind::VertexNorm => "vertex-norm",
            ExperimentKind::FlowValidate => "flow-validate",
            ExperimentKind::Collapse => "collapse",
        }
    }

    /// Experiments whose gates include a KS distance.
    pub fn ks_bearing(self) -> bool {
        !matches!(self, ExperimentKind::FlowValidate | ExperimentKind::IstarCheck | ExperimentKind::MomentsCheck)
    }

    /// Experiments that draw full LP instances.
    pub fn uses_lp(self) -> bool {
        matches!(
            self,
            ExperimentKind::DeltaCdf
                | ExperimentKind::FixedVsOpt
                | ExperimentKind::BarrierCdf
                | ExperimentKind::TimeCdf
                | ExperimentKind::FlowValidate
                | ExperimentKind::Collapse
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Gate thresholds. Every field can be overridden by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Asymptotic-law KS comparisons (m >= 20).
    pub ks_asymptotic: f64,
    /// Cross-size collapse of conjectured scaling variables.
    pub ks_conjecture: f64,
    /// Two laws that are equal exactly (fixed partition vs optimal partition).
    pub ks_exact: f64,
    pub ks_half_normal: f64,
    pub ks_cauchy: f64,
    pub ks_spectrum: f64,
    pub fraction_tol: f64,
    pub moment_rel: f64,
    pub mean_eigenvalue_tol: f64,
    pub istar_rel: f64,
    pub median_rel: f64,
    pub tail_tol: f64,
    pub outside_prob_tol: f64,
    pub flow_residual: f64,
    pub flow_slope_rel: f64,
    pub flow_constraint: f64,
    /// Terminal distance bound in units of epsilon.
    pub flow_terminal_factor: f64,
    pub flow_objective: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks_asymptotic: 0.05,
            ks_conjecture: 0.1,
            ks_exact: 0.03,
            ks_half_normal: 0.02,
            ks_cauchy: 0.02,
            ks_spectrum: 0.05,
            fraction_tol: 0.005,
            moment_rel: 0.05,
            mean_eigenvalue_tol: 0.02,
            istar_rel: 0.02,
            median_rel: 0.15,
            tail_tol: 0.02,
            outside_prob_tol: 0.015,
            flow_residual: 1e-5,
            flow_slope_rel: 1e-4,
            flow_constraint: 1e-8,
            flow_terminal_factor: 10.0,
            flow_objective: 1e-10,
        }
    }
}

impl Thresholds {
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let mut map = match serde_json::to_value(&*self)? {
            serde_json::Value::Object(map) => map,
            _ => unreachable!("struct serializes to an object"),
        };
        if !map.contains_key(name) {
            let known: Vec<&String> = map.keys().collect();
            return Err(Error::Config(format!("unknown threshold `{name}`; known: {known:?}")));
        }
        if !value.is_finite() {
            return Err(Error::Config(format!("threshold `{name}` must be finite")));
        }
        map.insert(name.to_string(), serde_json::json!(value));
        *self = serde_json::from_value(serde_json::Value::Object(map))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// For LP experiments `trials` is the most trials drawn when `accepted` is set.
    pub ensemble: EnsembleConfig,
    pub epsilon: f64,
    /// `(n, m)` pairs, all with the same `n / m`.
    pub sizes: Option<Vec<(usize, usize)>>,
    /// Stop once this many trials were accepted; the sample is cut at that
    /// trial index so it does not depend on batching.
    pub accepted: Option<u64>,
    /// Observable compared across sizes by `collapse`.
    pub quantity: ScalingKind,
    /// Arguments of the `istar-check` comparison.
    pub ys: Vec<f64>,
    /// Highest moment order reported by `moments-check`.
    pub max_order: u32,
    pub out_dir: Option<PathBuf>,
    pub assert_mode: bool,
    pub workers: usize,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        use ExperimentKind::*;
        let (n, m, trials, accepted) = match kind {
            DeltaCdf | BarrierCdf | TimeCdf => (40, 20, 2_000_000, Some(10_000)),
            FixedVsOpt => (4, 2, 100_000, Some(10_000)),
            PuCheck | MomentsCheck => (200, 100, 100_000, None),
            SpectrumCheck => (400, 200, 50, None),
            IstarCheck => (400, 200, 200, None),
            VertexNorm => (40, 20, 10_000, None),
            FlowValidate => (6, 3, 100_000, Some(20)),
            Collapse => (80, 40, 2_000_000, Some(2_000)),
        };
        let sizes = (kind == Collapse).then(|| vec![(20, 10), (40, 20), (80, 40)]);
        ExperimentConfig {
            experiment: kind,
            ensemble: EnsembleConfig { n, m, sigma: 1.0, master_seed: 1, trials },
            epsilon: if kind == FlowValidate { 1e-6 } else { 1.0 },
            sizes,
            accepted,
            quantity: ScalingKind::DeltaRate,
            ys: vec![0.1, 1.0, 10.0],
            max_order: 4,
            out_dir: None,
            assert_mode: false,
            workers: default_workers(),
            thresholds: Thresholds::default(),
        }
    }

    /// Sizes `(ratio * m, m)` for each `m`.
    pub fn set_sizes(&mut self, ms: &[usize], ratio: usize) {
        self.sizes = Some(ms.iter().map(|&m| (ratio * m, m)).collect());
    }

    /// The ensemble for one size, keeping seed, sigma and trial budget.
    pub fn ensemble_for(&self, n: usize, m: usize) -> EnsembleConfig {
        EnsembleConfig { n, m, ..self.ensemble.clone() }
    }

    /// The configured sizes, or the single ensemble size.
    pub fn size_list(&self) -> Vec<(usize, usize)> {
        match &self.sizes {
            Some(s) => s.clone(),
            None => vec![(self.ensemble.n, self.ensemble.m)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.experiment.ks_bearing()
            && self.ensemble.trials < 100
            && self.experiment != ExperimentKind::SpectrumCheck
        {
            return Err(Error::Config(format!(
                "{} needs at least 100 trials, got {}",
                self.experiment, self.ensemble.trials
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let Some(k) = self.accepted {
            if k == 0 || k > self.ensemble.trials {
                return Err(Error::Config(format!("accepted = {k} must lie in 1..={}", self.ensemble.trials)));
            }
            if self.experiment.ks_bearing() && k < 100 {
                return Err(Error::Config(format!("{} needs at least 100 accepted trials", self.experiment)));
            }
        }
        if let Some(sizes) = &self.sizes {
            let &(n0, m0) = sizes.first().ok_or_else(|| Error::Config("empty size list".into()))?;
            for &(n, m) in sizes {
                EnsembleConfig { n, m, ..self.ensemble.clone() }.validate()?;
                if n * m0 != n0 * m {
                    return Err(Error::Config(format!("sizes must share one ratio n/m: ({n0}, {m0}) vs ({n}, {m})")));
                }
            }
        }
        if self.experiment == ExperimentKind::Collapse && self.size_list().len() < 2 {
            return Err(Error::Config("collapse needs at least two sizes".into()));
        }
        if self.experiment == ExperimentKind::IstarCheck && self.ys.iter().any(|&y| !(y > 0.0)) {
            return Err(Error::Config("istar-check arguments must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("delta".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn defaults_validate() {
        for k in ExperimentKind::ALL {
            ExperimentConfig::new(k).validate().unwrap();
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = ExperimentConfig::new(ExperimentKind::DeltaCdf);
        c.ensemble.trials = 50;
        c.accepted = None;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::Collapse);
        c.sizes = Some(vec![(20, 10), (60, 20)]);
        assert!(c.validate().is_err());
        c.sizes = Some(vec![(20, 10)]);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::TimeCdf);
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn threshold_overrides() {
        let mut t = Thresholds::default();
        t.set("ks_exact", 0.05).unwrap();
        assert_eq!(t.ks_exact, 0.05);
        assert!(t.set("ks_bogus", 0.1).is_err());
    }
}
