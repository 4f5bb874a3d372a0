//! The simplex against brute-force enumeration of every basis.

use faylab::ensemble::{sample_instance, EnsembleConfig, LpInstance};
use faylab::linalg::Lu;
use faylab::observables::{convergence_report, OPTIMALITY_GUARD};
use faylab::simplex::{self, LpStatus};

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best objective over all feasible basic solutions, with its basis.
fn enumerate(inst: &LpInstance) -> Option<(f64, Vec<usize>)> {
    let (m, n) = (inst.m(), inst.n());
    let mut best: Option<(f64, Vec<usize>)> = None;
    for basis in subsets(n, m) {
        let Ok(lu) = Lu::factor(&inst.a.select_columns(&basis), 1e-12) else { continue };
        let x = lu.solve(&inst.b);
        if x.iter().any(|&v| v < -1e-9) {
            continue;
        }
        let obj: f64 = basis.iter().zip(&x).map(|(&j, v)| inst.c[j] * v).sum();
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, basis));
        }
    }
    best
}

#[test]
fn simplex_matches_enumeration() {
    let mut tally = [0usize; 3];
    for (n, m, seed) in [(3, 1, 11), (4, 2, 12), (5, 2, 13), (5, 3, 14), (6, 3, 15), (6, 2, 16), (6, 4, 17)] {
        let cfg = EnsembleConfig::new(n, m, 1.0, seed, 150).unwrap();
        for t in 0..cfg.trials {
            let inst = sample_instance(&cfg, t).unwrap();
            let sol = simplex::solve(&inst).unwrap();
            let brute = enumerate(&inst);
            match sol.status {
                LpStatus::Optimal => {
                    tally[0] += 1;
                    let (obj, basis) = brute.expect("an optimal LP has a feasible vertex");
                    assert!(
                        (sol.objective - obj).abs() <= 1e-8 * (1.0 + obj.abs()),
                        "trial {t}: {} vs {obj}",
                        sol.objective
                    );
                    assert_eq!(sol.basic_set, basis, "n={n} m={m} trial {t}");
                    let report = convergence_report(&inst, &sol, 1.0).unwrap();
                    assert!(report.deltas.iter().all(|&d| d >= -OPTIMALITY_GUARD));
                    let x = sol.full_vertex(n);
                    let r = inst.a.mul_vec(&x);
                    for (ri, bi) in r.iter().zip(&inst.b) {
                        assert!((ri - bi).abs() < 1e-9 * (1.0 + bi.abs()));
                    }
                }
                LpStatus::Infeasible => {
                    tally[1] += 1;
                    assert!(brute.is_none(), "n={n} m={m} trial {t}: enumeration found a feasible vertex");
                }
                LpStatus::Unbounded => {
                    tally[2] += 1;
                    assert!(brute.is_some(), "an unbounded LP is feasible");
                }
            }
        }
    }
    assert!(tally.iter().all(|&k| k > 50), "{tally:?}");
}

#[test]
fn bounded_optimal_fraction_is_stable() {
    // Each of the three classes must be reached on Gaussian draws at n = 2m.
    let cfg = EnsembleConfig::new(8, 4, 1.0, 5, 4000).unwrap();
    let optimal = (0..cfg.trials)
        .filter(|&t| simplex::solve(&sample_instance(&cfg, t).unwrap()).unwrap().status == LpStatus::Optimal)
        .count() as f64
        / cfg.trials as f64;
    assert!((0.2..0.4).contains(&optimal), "{optimal}");
}
