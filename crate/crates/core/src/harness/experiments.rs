//! The Monte Carlo experiments.

use std::collections::HashMap;

use super::config::{ExperimentConfig, ExperimentKind};
use super::ecdf::EmpiricalCdf;
use super::report::{Analytic, Counts, ExperimentReport, Gate, Sample, Series, TrialFailure};
use super::runner::map_trials;
use crate::analytics::{
    ccdf_finite_size, half_normal_cdf, i_sample, i_star, moment_kn, positive_fraction, scaling_cdf, scaling_median,
    spectral_cdf, u_statistic, vertex_component_cdf, vertex_norm_tail, wishart_eigenvalues, ScalingKind, ScalingLaw,
};
use crate::ensemble::{sample_fixed_partition, sample_instance, EnsembleConfig};
use crate::flow::{self, FlowOptions};
use crate::linalg::{norm_inf, Lu, Matrix};
use crate::observables::{computation_time, convergence_report, delta_min1};
use crate::rng::{mix64, NormalStream};
use crate::simplex::{self, LpStatus};
use crate::{Error, Result};

/// Seed salt separating the optimal-partition path of `fixed-vs-opt` from the
/// fixed-partition path, which would otherwise reuse the same `(A, c)` draws.
const PATH_B_SALT: u64 = 0x6f70_745f_7061_7468;
const SINGULAR_PIVOT_TOL: f64 = 1e-13;

/// Observables of one bounded, optimal instance at `epsilon = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpRecord {
    pub trial: u64,
    pub delta_min: f64,
    pub deltas: Vec<f64>,
    pub betas: Vec<f64>,
    pub beta_max_pos: f64,
    pub beta_max_signed: f64,
}

impl LpRecord {
    pub fn time(&self, epsilon: f64) -> Option<f64> {
        computation_time(&self.deltas, &self.betas, epsilon).ok()
    }
}

#[derive(Clone, Debug)]
enum LpOutcome {
    Accepted(LpRecord),
    Rejected,
    Failed(String),
}

fn lp_outcome(ens: &EnsembleConfig, trial: u64) -> LpOutcome {
    let inst = match sample_instance(ens, trial) {
        Ok(inst) => inst,
        Err(e) => return LpOutcome::Failed(e.to_string()),
    };
    let sol = match simplex::solve(&inst) {
        Ok(sol) => sol,
        Err(e) => return LpOutcome::Failed(e.to_string()),
    };
    if sol.status != LpStatus::Optimal {
        return LpOutcome::Rejected;
    }
    match convergence_report(&inst, &sol, 1.0) {
        Ok(r) => LpOutcome::Accepted(LpRecord {
            trial,
            delta_min: r.delta_min,
            beta_max_pos: r.beta_max_pos,
            beta_max_signed: r.beta_max_signed,
            deltas: r.deltas,
            betas: r.betas,
        }),
        Err(e) => LpOutcome::Failed(e.to_string()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct SweepKey {
    n: usize,
    m: usize,
    sigma_bits: u64,
    seed: u64,
}

impl SweepKey {
    fn of(ens: &EnsembleConfig) -> Self {
        SweepKey { n: ens.n, m: ens.m, sigma_bits: ens.sigma.to_bits(), seed: ens.master_seed }
    }
}

struct Collected<'a> {
    records: Vec<&'a LpRecord>,
    counts: Counts,
    failures: Vec<TrialFailure>,
}

/// Runs experiments, caching solved LP trials so that experiments sharing an
/// ensemble (same `n`, `m`, `sigma`, seed) solve each trial once.
#[derive(Default)]
pub struct Runner {
    sweeps: HashMap<SweepKey, Vec<LpOutcome>>,
}

impl Runner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scans trials `0, 1, ...` up to `ens.trials`, stopping at the trial that
    /// yields the `target`-th accepted record passing `keep`. Accepted records
    /// failing `keep` count as excluded (and rejected).
    fn collect<P: Fn(&LpRecord) -> bool>(
        &mut self,
        ens: &EnsembleConfig,
        target: Option<u64>,
        workers: usize,
        keep: P,
    ) -> Result<Collected<'_>> {
        ens.validate()?;
        let key = SweepKey::of(ens);
        let cap = ens.trials;
        let unbounded = EnsembleConfig { trials: u64::MAX, ..ens.clone() };
        let (mut scanned, mut got) = (0u64, 0u64);
        loop {
            let sweep = self.sweeps.entry(key).or_default();
            let have = sweep.len() as u64;
            while scanned < have.min(cap) && target.is_none_or(|k| got < k) {
                if let LpOutcome::Accepted(r) = &sweep[scanned as usize] {
                    if keep(r) {
                        got += 1;
                    }
                }
                scanned += 1;
            }
            if target.is_some_and(|k| got >= k) || scanned >= cap {
                break;
            }
            let batch = match target {
                None => cap - scanned,
                Some(k) if scanned == 0 => (4 * k).max(64),
                Some(_) if got == 0 => scanned,
                Some(k) => ((k - got) as f64 * scanned as f64 / got as f64 * 1.15) as u64 + 32,
            };
            let hi = (have + batch).min(cap);
            let fresh = map_trials(have..hi, workers, |t| lp_outcome(&unbounded, t));
            sweep.extend(fresh);
        }

        let sweep = &self.sweeps[&key];
        let mut out = Collected { records: Vec::new(), counts: Counts::default(), failures: Vec::new() };
        for (t, outcome) in sweep[..scanned as usize].iter().enumerate() {
            match outcome {
                LpOutcome::Accepted(r) if keep(r) => {
                    out.counts.accepted += 1;
                    out.records.push(r);
                }
                LpOutcome::Accepted(_) => {
                    out.counts.rejected += 1;
                    out.counts.excluded += 1;
                }
                LpOutcome::Rejected => out.counts.rejected += 1,
                LpOutcome::Failed(e) => {
                    out.counts.failed += 1;
                    out.failures.push(TrialFailure { trial: t as u64, error: e.clone() });
                }
            }
        }
        out.counts.trials = scanned;
        Ok(out)
    }

    pub fn run(&mut self, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
        cfg.validate()?;
        let mut report = ExperimentReport::new(cfg);
        match cfg.experiment {
            ExperimentKind::DeltaCdf => self.delta_sizes(cfg, &mut report)?,
            ExperimentKind::FixedVsOpt => self.fixed_vs_opt(cfg, &mut report)?,
            ExperimentKind::BarrierCdf => self.conjecture_sizes(cfg, ScalingKind::Barrier, &mut report)?,
            ExperimentKind::TimeCdf => self.conjecture_sizes(cfg, ScalingKind::Time, &mut report)?,
            ExperimentKind::PuCheck => pu_check(cfg, &mut report)?,
            ExperimentKind::MomentsCheck => moments_check(cfg, &mut report)?,
            ExperimentKind::SpectrumCheck => spectrum_check(cfg, &mut report)?,
            ExperimentKind::IstarCheck => istar_check(cfg, &mut report)?,
            ExperimentKind::VertexNorm => vertex_norm(cfg, &mut report)?,
            ExperimentKind::FlowValidate => self.flow_validate(cfg, &mut report)?,
            ExperimentKind::Collapse => match cfg.quantity {
                ScalingKind::DeltaRate => self.delta_sizes(cfg, &mut report)?,
                kind => self.conjecture_sizes(cfg, kind, &mut report)?,
            },
        }
        Ok(report)
    }

    fn delta_sizes(&mut self, cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
        let th = &cfg.thresholds;
        let sigma = cfg.ensemble.sigma;
        let mut ks_by_size = Vec::new();
        let mut medians = Vec::new();
        let mut cdfs = Vec::new();
        for (n, m) in sorted_sizes(cfg) {
            let label = size_label(n, m);
            let law = ScalingLaw::new(ScalingKind::DeltaRate, n, m, sigma)?;
            let coll = self.collect(&cfg.ensemble_for(n, m), cfg.accepted, cfg.workers, |_| true)?;
            let samples: Vec<Sample> = coll
                .records
                .iter()
                .map(|r| Sample { trial: r.trial, raw: r.delta_min, scaled: law.scale(r.delta_min) })
                .collect();
            let (counts, failures) = (coll.counts, coll.failures);
            report.add_counts(&label, counts);
            report.record_failures(failures);
            let series = Series { label: label.clone(), samples, analytic: Analytic::Scaling };
            let raw = EmpiricalCdf::new(series.raw())?;
            let ecdf = report.add_series(series)?;

            let ks = ecdf.ks_against(scaling_cdf);
            let ks_finite =
                raw.try_ks_against(|d| if d <= 0.0 { Ok(0.0) } else { Ok(1.0 - ccdf_finite_size(d, n, m, sigma)?) })?;
            report.ks.insert(format!("{label}/asymptotic"), ks);
            report.ks.insert(format!("{label}/finite_size"), ks_finite);
            let median_sqrt_m = raw.median() * (m as f64).sqrt();
            report.metrics.insert(format!("{label}/median_sqrt_m"), median_sqrt_m);
            report
                .metrics
                .insert(format!("{label}/median_sqrt_m_limit"), scaling_median() * law.eta.recip() * (m as f64).sqrt());
            report.gate(Gate::above(format!("{label}/delta_min_positive"), raw.samples()[0], 0.0));
            if m >= 20 {
                report.gate(Gate::below(format!("{label}/ks_asymptotic"), ks, th.ks_asymptotic));
            }
            ks_by_size.push(ks);
            medians.push((label, median_sqrt_m));
            cdfs.push(ecdf);
        }
        pairwise_ks(report, &cdfs, None);
        if ks_by_size.len() >= 2 {
            let (first, last) = (ks_by_size[0], ks_by_size[ks_by_size.len() - 1]);
            report.gate(Gate::below("ks_improves_with_m", last, first));
        }
        if cfg.experiment == ExperimentKind::Collapse {
            let mut worst: f64 = 0.0;
            for (i, (la, a)) in medians.iter().enumerate() {
                for (lb, b) in &medians[i + 1..] {
                    let dev = (a / b - 1.0).abs();
                    report.metrics.insert(format!("{la}~{lb}/median_ratio"), a / b);
                    worst = worst.max(dev);
                }
            }
            report.gate(Gate::at_most("median_sqrt_m_ratio_deviation", worst, th.median_rel));
        }
        Ok(())
    }

    fn conjecture_sizes(
        &mut self,
        cfg: &ExperimentConfig,
        kind: ScalingKind,
        report: &mut ExperimentReport,
    ) -> Result<()> {
        let eps = cfg.epsilon;
        let raw_of = |r: &LpRecord| match kind {
            ScalingKind::Barrier => Some(r.beta_max_pos),
            _ => r.time(eps),
        };
        let keep = |r: &LpRecord| r.beta_max_pos > 0.0 && raw_of(r).is_some_and(|v| v > 0.0 && v.is_finite());
        let mut cdfs = Vec::new();
        for (n, m) in sorted_sizes(cfg) {
            let label = size_label(n, m);
            let law = ScalingLaw::new(kind, n, m, cfg.ensemble.sigma)?;
            let coll = self.collect(&cfg.ensemble_for(n, m), cfg.accepted, cfg.workers, keep)?;
            let samples: Vec<Sample> = coll
                .records
                .iter()
                .map(|r| {
                    let raw = raw_of(r).expect("kept records have a value");
                    Sample { trial: r.trial, raw, scaled: law.scale(raw) }
                })
                .collect();
            let (counts, failures) = (coll.counts, coll.failures);
            let solved = counts.accepted + counts.excluded;
            if solved > 0 {
                report.metrics.insert(format!("{label}/excluded_fraction"), counts.excluded as f64 / solved as f64);
            }
            report.add_counts(&label, counts);
            report.record_failures(failures);
            let series = Series { label: label.clone(), samples, analytic: Analytic::None };
            let raw = EmpiricalCdf::new(series.raw())?;
            cdfs.push(report.add_series(series)?);
            report.gate(Gate::above(format!("{label}/raw_positive"), raw.samples()[0], 0.0));
        }
        pairwise_ks(report, &cdfs, Some(cfg.thresholds.ks_conjecture));
        Ok(())
    }

    fn fixed_vs_opt(&mut self, cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
        let ens = &cfg.ensemble;
        let (n, m, sigma) = (ens.n, ens.m, ens.sigma);
        let law = ScalingLaw::new(ScalingKind::DeltaRate, n, m, sigma)?;
        let target = cfg.accepted.unwrap_or(ens.trials);

        let draws =
            map_trials(0..ens.trials, cfg.workers, |t| sample_fixed_partition(ens, t).and_then(|d| delta_min1(&d)));
        let mut a_counts = Counts { trials: ens.trials, ..Counts::default() };
        let mut a_samples = Vec::new();
        let mut a_failures = Vec::new();
        for (t, d) in draws.into_iter().enumerate() {
            match d {
                Ok(d) if d > 0.0 => {
                    a_counts.accepted += 1;
                    if (a_samples.len() as u64) < target {
                        a_samples.push(Sample { trial: t as u64, raw: d, scaled: law.scale(d) });
                    }
                }
                Ok(_) => a_counts.rejected += 1,
                Err(e) => {
                    a_counts.failed += 1;
                    a_failures.push(TrialFailure { trial: t as u64, error: e.to_string() });
                }
            }
        }
        let fraction = a_counts.accepted as f64 / a_counts.trials as f64;
        let q0 = positive_fraction(n, m);
        report.metrics.insert("positive_fraction".into(), fraction);
        report.metrics.insert("positive_fraction_expected".into(), q0);
        report.gate(Gate::at_most("positive_fraction_error", (fraction - q0).abs(), cfg.thresholds.fraction_tol));
        report.add_counts("fixed", a_counts);
        report.record_failures(a_failures);

        let ens_b = EnsembleConfig { master_seed: mix64(ens.master_seed ^ PATH_B_SALT), ..ens.clone() };
        let coll = self.collect(&ens_b, Some(target), cfg.workers, |_| true)?;
        let b_samples: Vec<Sample> = coll
            .records
            .iter()
            .map(|r| Sample { trial: r.trial, raw: r.delta_min, scaled: law.scale(r.delta_min) })
            .collect();
        let (counts, failures) = (coll.counts, coll.failures);
        report.add_counts("optimal", counts);
        report.record_failures(failures);

        let mut cdfs = Vec::new();
        for (label, samples) in [("fixed", a_samples), ("optimal", b_samples)] {
            let series = Series { label: label.into(), samples, analytic: Analytic::Scaling };
            let raw = EmpiricalCdf::new(series.raw())?;
            let ks_finite =
                raw.try_ks_against(|d| if d <= 0.0 { Ok(0.0) } else { Ok(1.0 - ccdf_finite_size(d, n, m, sigma)?) })?;
            report.ks.insert(format!("{label}/finite_size"), ks_finite);
            cdfs.push(report.add_series(series)?);
        }
        let ks = cdfs[0].ks_two_sample(&cdfs[1]);
        report.ks.insert("fixed~optimal".into(), ks);
        report.gate(Gate::below("fixed~optimal/ks", ks, cfg.thresholds.ks_exact));
        Ok(())
    }

    fn flow_validate(&mut self, cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
        let th = &cfg.thresholds;
        let ens = &cfg.ensemble;
        let eps = cfg.epsilon;
        let coll = self.collect(ens, cfg.accepted, cfg.workers, |_| true)?;
        let trials: Vec<u64> = coll.records.iter().map(|r| r.trial).collect();
        let mut counts = coll.counts;
        let failures = coll.failures;
        report.record_failures(failures);

        let checks = map_trials(0..trials.len() as u64, cfg.workers, |k| flow_check(ens, trials[k as usize], eps));
        let mut worst = FlowMetrics::default();
        let mut samples = Vec::new();
        let mut flow_failures = Vec::new();
        for (&trial, check) in trials.iter().zip(checks) {
            match check {
                Ok((metrics, traj)) => {
                    worst.merge(&metrics);
                    samples.push(Sample { trial, raw: metrics.residual, scaled: metrics.slope_rel });
                    report.trajectories.push((trial, traj));
                }
                Err(e) => {
                    counts.accepted -= 1;
                    counts.failed += 1;
                    flow_failures.push(TrialFailure { trial, error: e.to_string() });
                }
            }
        }
        report.add_counts("flow", counts);
        report.gate(Gate::at_most("flow_failures", flow_failures.len() as f64, 0.0));
        report.record_failures(flow_failures);
        report.metrics.insert("instances".into(), samples.len() as f64);
        report.metrics.insert("max_accepted_steps".into(), worst.steps);
        report.metrics.insert("max_converged_at".into(), worst.converged_at);
        report.gate(Gate::below("formal_solution_residual", worst.residual, th.flow_residual));
        report.gate(Gate::below("psi_slope_rel_error", worst.slope_rel, th.flow_slope_rel));
        report.gate(Gate::at_most("constraint_residual_rel", worst.constraint, th.flow_constraint));
        report.gate(Gate::below("terminal_distance", worst.terminal, th.flow_terminal_factor * eps));
        report.gate(Gate::above("min_objective_increment", worst.objective, -th.flow_objective));
        if !samples.is_empty() {
            report.add_series(Series { label: "flow".into(), samples, analytic: Analytic::None })?;
        }
        Ok(())
    }
}

/// Runs one experiment with a fresh LP cache.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    Runner::new().run(cfg)
}

/// Runs `cfg` and writes its files when `out_dir` is set.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = run(cfg)?;
    if let Some(dir) = &cfg.out_dir {
        report.write_to(dir)?;
    }
    Ok(report)
}

fn size_label(n: usize, m: usize) -> String {
    format!("m{m}_n{n}")
}

fn sorted_sizes(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    let mut sizes = cfg.size_list();
    sizes.sort_by_key(|&(n, m)| (m, n));
    sizes.dedup();
    sizes
}

/// Records every pairwise two-sample KS distance, gating each when `threshold` is set.
fn pairwise_ks(report: &mut ExperimentReport, cdfs: &[EmpiricalCdf], threshold: Option<f64>) {
    let labels: Vec<String> = report.series.iter().map(|s| s.label.clone()).collect();
    for i in 0..cdfs.len() {
        for j in i + 1..cdfs.len() {
            let name = format!("{}~{}", labels[i], labels[j]);
            let ks = cdfs[i].ks_two_sample(&cdfs[j]);
            report.ks.insert(name.clone(), ks);
            if let Some(th) = threshold {
                report.gate(Gate::below(name, ks, th));
            }
        }
    }
}

fn gaussian_matrix(m: usize, sigma: f64, stream: &mut NormalStream) -> Matrix {
    let mut data = vec![0.0; m * m];
    stream.fill_gaussian(&mut data, sigma);
    Matrix::from_row_major(m, m, data).expect("square by construction")
}

/// One `u` per trial from fresh `N(0, sigma^2)` draws of `B` (row-major) then `z`.
fn sample_u(cfg: &ExperimentConfig) -> (Vec<Sample>, Counts, Vec<TrialFailure>) {
    let ens = &cfg.ensemble;
    let m = ens.m;
    let draws = map_trials(0..ens.trials, cfg.workers, |t| {
        let mut stream = NormalStream::for_trial(ens.master_seed, t);
        let b = gaussian_matrix(m, ens.sigma, &mut stream);
        let mut z = vec![0.0; m];
        stream.fill_gaussian(&mut z, ens.sigma);
        u_statistic(&b, &z)
    });
    let mut counts = Counts { trials: ens.trials, ..Counts::default() };
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (t, u) in draws.into_iter().enumerate() {
        match u {
            Ok(u) => {
                counts.accepted += 1;
                samples.push(Sample { trial: t as u64, raw: u, scaled: u.sqrt() });
            }
            Err(e) => {
                counts.failed += 1;
                failures.push(TrialFailure { trial: t as u64, error: e.to_string() });
            }
        }
    }
    (samples, counts, failures)
}

/// Sample means of `u^N` against `k_N`, gating orders up to `gated`.
fn moment_gates(report: &mut ExperimentReport, us: &[f64], m: usize, max_order: u32, gated: u32, tol: f64) {
    for order in 1..=max_order {
        let mean = us.iter().map(|u| u.powi(order as i32)).sum::<f64>() / us.len() as f64;
        let expected = moment_kn(order, m);
        let rel = (mean / expected - 1.0).abs();
        report.metrics.insert(format!("k{order}/sample"), mean);
        report.metrics.insert(format!("k{order}/expected"), expected);
        if order <= gated {
            report.gate(Gate::below(format!("k{order}/rel_error"), rel, tol));
        } else {
            report.metrics.insert(format!("k{order}/rel_error"), rel);
        }
    }
}

fn pu_check(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let m = cfg.ensemble.m;
    let (samples, counts, failures) = sample_u(cfg);
    report.add_counts("u", counts);
    report.record_failures(failures);
    let us: Vec<f64> = samples.iter().map(|s| s.raw).collect();
    let ecdf = report.add_series(Series { label: "u".into(), samples, analytic: Analytic::HalfNormal { m } })?;
    let ks = ecdf.ks_against(|x| half_normal_cdf(x, m));
    report.ks.insert("sqrt_u/half_normal".into(), ks);
    report.gate(Gate::below("sqrt_u/ks", ks, cfg.thresholds.ks_half_normal));
    moment_gates(report, &us, m, 2, 2, cfg.thresholds.moment_rel);
    Ok(())
}

fn moments_check(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let m = cfg.ensemble.m;
    let (samples, counts, failures) = sample_u(cfg);
    report.add_counts("u", counts);
    report.record_failures(failures);
    let us: Vec<f64> = samples.iter().map(|s| s.raw).collect();
    if us.is_empty() {
        return Err(Error::EmptySample);
    }
    moment_gates(report, &us, m, cfg.max_order, 2, cfg.thresholds.moment_rel);
    report.add_series(Series { label: "u".into(), samples, analytic: Analytic::HalfNormal { m } })?;
    Ok(())
}

/// Eigenvalues of `B^T B` per trial, `B` with entry variance `1/(2m)`.
fn sample_spectra(cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    let ens = &cfg.ensemble;
    map_trials(0..ens.trials, cfg.workers, |t| {
        let mut stream = NormalStream::for_trial(ens.master_seed, t);
        wishart_eigenvalues(ens.m, &mut stream).map_err(|e| e.in_trial(t))
    })
    .into_iter()
    .collect()
}

fn spectrum_check(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let spectra = sample_spectra(cfg)?;
    report.add_counts(
        "matrices",
        Counts { trials: cfg.ensemble.trials, accepted: cfg.ensemble.trials, ..Counts::default() },
    );
    let samples: Vec<Sample> = spectra
        .iter()
        .enumerate()
        .flat_map(|(t, ev)| ev.iter().map(move |&s| Sample { trial: t as u64, raw: s, scaled: s }))
        .collect();
    let ecdf = report.add_series(Series { label: "eigenvalues".into(), samples, analytic: Analytic::Spectral })?;
    let ks = ecdf.ks_against(spectral_cdf);
    report.ks.insert("eigenvalues/spectral".into(), ks);
    report.gate(Gate::below("eigenvalues/ks", ks, cfg.thresholds.ks_spectrum));
    let mean = ecdf.mean();
    report.metrics.insert("mean_eigenvalue".into(), mean);
    report.gate(Gate::at_most("mean_eigenvalue_error", (mean - 0.5).abs(), cfg.thresholds.mean_eigenvalue_tol));
    Ok(())
}

fn istar_check(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let m = cfg.ensemble.m as f64;
    let spectra = sample_spectra(cfg)?;
    report.add_counts(
        "matrices",
        Counts { trials: cfg.ensemble.trials, accepted: cfg.ensemble.trials, ..Counts::default() },
    );
    for &y in &cfg.ys {
        let label = format!("y{y}");
        let values: Vec<f64> = spectra.iter().map(|ev| i_sample(ev, y)).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let exact = i_star(y)?;
        // -(2/m) ln E[exp(-(m/2) I)], evaluated around the smallest I.
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let s = values.iter().map(|v| (-0.5 * m * (v - lo)).exp()).sum::<f64>() / values.len() as f64;
        let psi = lo - 2.0 / m * s.ln();
        report.metrics.insert(format!("{label}/mean"), mean);
        report.metrics.insert(format!("{label}/closed_form"), exact);
        report.metrics.insert(format!("{label}/psi_estimate"), psi);
        report.gate(Gate::below(format!("{label}/rel_error"), (mean / exact - 1.0).abs(), cfg.thresholds.istar_rel));
        let samples = values.iter().enumerate().map(|(t, &v)| Sample { trial: t as u64, raw: v, scaled: v }).collect();
        report.add_series(Series { label, samples, analytic: Analytic::None })?;
    }
    for gate in istar_limit_gates()? {
        report.gate(gate);
    }
    Ok(())
}

fn log_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(move |i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
}

/// Small- and large-`y` limits of the closed form, as worst ratios of the
/// error to its stated bound (pass at `<= 1`).
pub fn istar_limit_gates() -> Result<Vec<Gate>> {
    let mut small: f64 = 0.0;
    for y in log_grid(1e-6, 1e-2, 81) {
        let approx = 2.0 * (2.0 * y).sqrt() - y;
        small = small.max((i_star(y)? - approx).abs() / y.powf(1.5));
    }
    let (mut large, mut large_corrected): (f64, f64) = (0.0, 0.0);
    for y in log_grid(1e2, 1e6, 81) {
        let v = i_star(y)?;
        large = large.max((v - (2.0 * y).ln() + 1.0).abs() * y / 2.0);
        large_corrected = large_corrected.max((v - (2.0 * y).ln() - 1.0).abs() * y / 2.0);
    }
    Ok(vec![
        Gate::at_most("small_y_limit", small, 1.0),
        Gate::at_most("large_y_limit", large, 1.0),
        Gate::at_most("large_y_limit_corrected", large_corrected, 1.0),
    ])
}

struct VertexDraw {
    component: f64,
    norm: f64,
    resamples: u64,
}

/// `x_B = A_B^-1 b` with `A_B` then `b` drawn from one stream; singular
/// draws are redrawn from the same stream.
fn vertex_draw(ens: &EnsembleConfig, trial: u64) -> VertexDraw {
    let m = ens.m;
    let mut stream = NormalStream::for_trial(ens.master_seed, trial);
    let mut resamples = 0;
    loop {
        let a = gaussian_matrix(m, ens.sigma, &mut stream);
        let mut b = vec![0.0; m];
        stream.fill_gaussian(&mut b, ens.sigma);
        match Lu::factor(&a, SINGULAR_PIVOT_TOL) {
            Ok(lu) => {
                let x = lu.solve(&b);
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                return VertexDraw { component: x[0], norm, resamples };
            }
            Err(_) => resamples += 1,
        }
    }
}

fn vertex_norm(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let ens = &cfg.ensemble;
    let th = &cfg.thresholds;
    let m = ens.m;
    let draws = map_trials(0..ens.trials, cfg.workers, |t| vertex_draw(ens, t));
    report.add_counts("vertex", Counts { trials: ens.trials, accepted: ens.trials, ..Counts::default() });
    let resamples: u64 = draws.iter().map(|d| d.resamples).sum();
    report.metrics.insert("singular_resamples".into(), resamples as f64);

    let outside = draws.iter().filter(|d| d.component.abs() > 1.0).count() as f64 / draws.len() as f64;
    report.metrics.insert("outside_fraction".into(), outside);
    report.gate(Gate::at_most("outside_fraction_error", (outside - 0.5).abs(), th.outside_prob_tol));

    let r0_gate = (m as f64 / 2.0).sqrt();
    let tail_at = |r0: f64| draws.iter().filter(|d| d.norm > r0).count() as f64 / draws.len() as f64;
    for f in [0.5, 0.75, 1.0, 1.5, 2.0] {
        let r0 = f * r0_gate;
        report.metrics.insert(format!("tail/{r0}/empirical"), tail_at(r0));
        report.metrics.insert(format!("tail/{r0}/law"), vertex_norm_tail(r0, 1.0, m));
    }
    let tail_err = (tail_at(r0_gate) - vertex_norm_tail(r0_gate, 1.0, m)).abs();
    report.gate(Gate::at_most("tail_error", tail_err, th.tail_tol));

    let component = draws
        .iter()
        .enumerate()
        .map(|(t, d)| Sample { trial: t as u64, raw: d.component, scaled: d.component })
        .collect();
    let norm = draws.iter().enumerate().map(|(t, d)| Sample { trial: t as u64, raw: d.norm, scaled: d.norm }).collect();
    let ecdf = report.add_series(Series {
        label: "component".into(),
        samples: component,
        analytic: Analytic::Cauchy { lambda: 1.0 },
    })?;
    let ks = ecdf.ks_against(|z| vertex_component_cdf(z, 1.0));
    report.ks.insert("component/cauchy".into(), ks);
    report.gate(Gate::below("component/ks", ks, th.ks_cauchy));
    report.add_series(Series { label: "norm".into(), samples: norm, analytic: Analytic::None })?;
    Ok(())
}

#[derive(Clone, Copy, Debug)]
struct FlowMetrics {
    residual: f64,
    slope_rel: f64,
    constraint: f64,
    terminal: f64,
    objective: f64,
    steps: f64,
    converged_at: f64,
}

impl Default for FlowMetrics {
    fn default() -> Self {
        FlowMetrics {
            residual: 0.0,
            slope_rel: 0.0,
            constraint: 0.0,
            terminal: 0.0,
            objective: f64::INFINITY,
            steps: 0.0,
            converged_at: 0.0,
        }
    }
}

impl FlowMetrics {
    fn merge(&mut self, o: &FlowMetrics) {
        self.residual = self.residual.max(o.residual);
        self.slope_rel = self.slope_rel.max(o.slope_rel);
        self.constraint = self.constraint.max(o.constraint);
        self.terminal = self.terminal.max(o.terminal);
        self.objective = self.objective.min(o.objective);
        self.steps = self.steps.max(o.steps);
        self.converged_at = self.converged_at.max(o.converged_at);
    }
}

fn flow_check(ens: &EnsembleConfig, trial: u64, eps: f64) -> Result<(FlowMetrics, flow::Trajectory)> {
    let inner = || -> Result<(FlowMetrics, flow::Trajectory)> {
        let inst = sample_instance(ens, trial)?;
        let sol = simplex::solve(&inst)?;
        let report = convergence_report(&inst, &sol, eps)?;
        let x0 = simplex::interior_point(&inst)?;
        let traj = flow::integrate_to(&inst, &x0, &sol, eps, &FlowOptions::default())?;
        let residual = flow::formal_solution_residual(&traj, &report, &x0).into_iter().fold(0.0, f64::max);
        let slopes = flow::psi_slopes(&traj, &report)?;
        let slope_rel = slopes.iter().zip(&report.deltas).map(|(s, d)| ((s + d) / d).abs()).fold(0.0, f64::max);
        let metrics = FlowMetrics {
            residual,
            slope_rel,
            constraint: traj.max_constraint_residual / (1.0 + norm_inf(&inst.b)),
            terminal: traj.terminal_distance(&sol.full_vertex(inst.n())),
            objective: traj.min_objective_increment,
            steps: traj.accepted_steps as f64,
            converged_at: traj.converged_at.unwrap_or(f64::NAN),
        };
        Ok((metrics, traj))
    };
    inner().map_err(|e| e.in_trial(trial))
}
