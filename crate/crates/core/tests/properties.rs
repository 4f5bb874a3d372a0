//! Symmetries of the observables and of the flow.

use faylab::ensemble::{sample_instance, EnsembleConfig, LpInstance};
use faylab::flow::{self, FlowOptions};
use faylab::harness::{run, ExperimentConfig, ExperimentKind};
use faylab::linalg::Matrix;
use faylab::observables::{convergence_report, ConvergenceReport};
use faylab::simplex::{self, LpStatus, VertexSolution};
use proptest::prelude::*;

fn optimal(cfg: &EnsembleConfig, trial: u64) -> Option<(LpInstance, VertexSolution, ConvergenceReport)> {
    let inst = sample_instance(cfg, trial).unwrap();
    let sol = simplex::solve(&inst).unwrap();
    if sol.status != LpStatus::Optimal {
        return None;
    }
    let report = convergence_report(&inst, &sol, 1.0).ok()?;
    Some((inst, sol, report))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sigma_scales_rates_and_leaves_barriers(seed in 0u64..1000, trial in 0u64..50, s in 0.1f64..10.0) {
        let base = EnsembleConfig::new(8, 4, 1.0, seed, 50).unwrap();
        let scaled = EnsembleConfig { sigma: s, ..base.clone() };
        let Some((_, sol, r1)) = optimal(&base, trial) else { return Ok(()) };
        let (_, sol_s, rs) = optimal(&scaled, trial).expect("scaling keeps optimality");
        prop_assert_eq!(&sol.basic_set, &sol_s.basic_set);
        prop_assert!(close(rs.delta_min, s * r1.delta_min, 1e-10));
        for (a, b) in r1.betas.iter().zip(&rs.betas) {
            prop_assert!(close(*a, *b, 1e-9));
        }
        if let (Some(t1), Some(ts)) = (r1.time, rs.time) {
            prop_assert!(close(ts, t1 / s, 1e-9));
        }
    }

    #[test]
    fn column_exchange_permutes_the_vertex(seed in 0u64..1000, trial in 0u64..50, rot in 1usize..8) {
        let cfg = EnsembleConfig::new(8, 4, 1.0, seed, 50).unwrap();
        let Some((inst, sol, report)) = optimal(&cfg, trial) else { return Ok(()) };
        let n = inst.n();
        let perm: Vec<usize> = (0..n).map(|j| (j + rot) % n).collect();
        let a = inst.a.select_columns(&perm);
        let c: Vec<f64> = perm.iter().map(|&j| inst.c[j]).collect();
        let permuted = LpInstance::new(a, inst.b.clone(), c).unwrap();
        let psol = simplex::solve(&permuted).unwrap();
        prop_assert_eq!(psol.status, LpStatus::Optimal);
        let mut mapped: Vec<usize> = psol.basic_set.iter().map(|&k| perm[k]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(&mapped, &sol.basic_set);
        let prep = convergence_report(&permuted, &psol, 1.0).unwrap();
        prop_assert!(close(prep.delta_min, report.delta_min, 1e-9));
        prop_assert!(close(prep.beta_max_signed, report.beta_max_signed, 1e-8));
    }

    #[test]
    fn row_mixing_leaves_observables(seed in 0u64..1000, trial in 0u64..50, k in 0.1f64..3.0) {
        let cfg = EnsembleConfig::new(6, 3, 1.0, seed, 50).unwrap();
        let Some((inst, sol, report)) = optimal(&cfg, trial) else { return Ok(()) };
        // M = I + k e_0 e_1^T keeps {x : Ax = b} fixed.
        let mut mrows = Matrix::identity(3).to_rows();
        mrows[0][1] = k;
        let m = Matrix::from_rows(&mrows).unwrap();
        let mixed = LpInstance::new(m.mul(&inst.a), m.mul_vec(&inst.b), inst.c.clone()).unwrap();
        let msol = simplex::solve(&mixed).unwrap();
        prop_assert_eq!(&msol.basic_set, &sol.basic_set);
        let mrep = convergence_report(&mixed, &msol, 1.0).unwrap();
        for (a, b) in report.deltas.iter().zip(&mrep.deltas) {
            prop_assert!(close(*a, *b, 1e-9));
        }
        for (a, b) in report.betas.iter().zip(&mrep.betas) {
            prop_assert!(close(*a, *b, 1e-8));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn doubling_the_cost_doubles_psi_slopes(seed in 0u64..500) {
        let cfg = EnsembleConfig::new(6, 3, 1.0, seed, 40).unwrap();
        let Some((inst, sol, report)) = (0..40).find_map(|t| optimal(&cfg, t)) else { return Ok(()) };
        let x0 = simplex::interior_point(&inst).unwrap();
        let opts = FlowOptions::default();
        let doubled = LpInstance::new(inst.a.clone(), inst.b.clone(), inst.c.iter().map(|v| 2.0 * v).collect()).unwrap();
        let sol2 = simplex::solve(&doubled).unwrap();
        prop_assert_eq!(&sol2.basic_set, &sol.basic_set);
        let report2 = convergence_report(&doubled, &sol2, 1.0).unwrap();
        let t1 = flow::integrate_to(&inst, &x0, &sol, 1e-4, &opts).unwrap();
        let t2 = flow::integrate_to(&doubled, &x0, &sol2, 1e-4, &opts).unwrap();
        let s1 = flow::psi_slopes(&t1, &report).unwrap();
        let s2 = flow::psi_slopes(&t2, &report2).unwrap();
        for ((a, b), d) in s1.iter().zip(&s2).zip(&report.deltas) {
            prop_assert!(((b - 2.0 * a) / d).abs() < 1e-6, "{} vs {}", b, 2.0 * a);
        }
        let (c1, c2) = (t1.converged_at.unwrap(), t2.converged_at.unwrap());
        prop_assert!((c2 / c1 - 0.5).abs() < 0.02, "{} vs {}", c2, c1);
    }
}

#[test]
fn reports_are_reproducible_across_workers() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::TimeCdf);
    cfg.ensemble = EnsembleConfig { n: 10, m: 5, ..cfg.ensemble };
    cfg.accepted = Some(400);
    cfg.workers = 1;
    let a = run(&cfg).unwrap();
    cfg.workers = 4;
    let b = run(&cfg).unwrap();
    assert_eq!(a.series[0].samples, b.series[0].samples);
    assert_eq!(a.counts, b.counts);
    assert_eq!(a.ks, b.ks);
    let ja = serde_json::to_value(&a).unwrap();
    let mut jb = serde_json::to_value(&b).unwrap();
    jb["config"]["workers"] = ja["config"]["workers"].clone();
    assert_eq!(ja, jb);
}

#[test]
fn every_default_experiment_validates_and_rejects_small_ks_samples() {
    for k in ExperimentKind::ALL {
        let mut cfg = ExperimentConfig::new(k);
        cfg.validate().unwrap();
        if k.ks_bearing() && cfg.accepted.is_some() {
            cfg.accepted = Some(99);
            assert!(cfg.validate().is_err(), "{k}");
        }
    }
}
