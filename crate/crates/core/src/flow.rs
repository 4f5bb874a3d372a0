//! The gradient flow `dx/dt = grad h(x)` on the positive orthant.
//!
//! `grad h(x) = X c - X A^T w` with `(A X A^T) w = A X c` and `X = diag(x)`.
//! Integration uses the Dormand-Prince 5(4) pair with adaptive steps. A step
//! that would leave the open orthant is rejected and the step halved.
//!
//! Alongside `x` the integrator carries `l = ln x` through the same stages
//! (`dl/dt = g` where `dx/dt = X g`). The field is always evaluated at `x`;
//! `l` only keeps the logarithms exact once a coordinate drops far below any
//! tolerance, and takes over when `x` would underflow.

use serde::Serialize;

use crate::ensemble::LpInstance;
use crate::linalg::{dot, norm_inf, Lu, Matrix};
use crate::observables::ConvergenceReport;
use crate::simplex::{self, LpStatus, VertexSolution};
use crate::{Error, Result};

const GRAD_PIVOT_TOL: f64 = 1e-13;

pub fn grad_h(x: &[f64], a: &Matrix, c: &[f64]) -> Result<Vec<f64>> {
    let n = a.cols();
    if x.len() != n || c.len() != n {
        return Err(Error::Shape(format!("x has {}, c has {}, A has {n} columns", x.len(), c.len())));
    }
    let xc: Vec<f64> = x.iter().zip(c).map(|(a, b)| a * b).collect();
    let w = Lu::factor(&weighted_gram(x, a), GRAD_PIVOT_TOL)?.solve(&a.mul_vec(&xc));
    let atw = a.tr_mul_vec(&w);
    Ok((0..n).map(|j| x[j] * (c[j] - atw[j])).collect())
}

/// `A X A^T`.
fn weighted_gram(x: &[f64], a: &Matrix) -> Matrix {
    let (m, n) = (a.rows(), a.cols());
    let mut gram = Matrix::zeros(m, m);
    for i in 0..m {
        let ri = a.row(i);
        for k in i..m {
            let rk = a.row(k);
            let s: f64 = (0..n).map(|j| ri[j] * x[j] * rk[j]).sum();
            gram[(i, k)] = s;
            gram[(k, i)] = s;
        }
    }
    gram
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub min_step: f64,
    pub t_max: f64,
    pub max_steps: usize,
    /// Saved states are thinned (every other one dropped) to stay at or below this.
    pub max_saved: usize,
    /// Also require `|x_B - x_B*| < eps` before stopping.
    pub require_basic_close: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-8,
            atol: 1e-10,
            min_step: 1e-12,
            t_max: 1e7,
            max_steps: 20_000_000,
            max_saved: 1000,
            require_basic_close: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `ln x` for each saved state, integrated alongside `x`.
    pub log_states: Vec<Vec<f64>>,
    pub constraint_residuals: Vec<f64>,
    pub converged_at: Option<f64>,
    pub epsilon_target: f64,
    /// Largest `|Ax - b|_inf` over every accepted step, saved or not.
    pub max_constraint_residual: f64,
    /// Smallest change of `c^T x` over accepted steps.
    pub min_objective_increment: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub positivity_rejections: usize,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory always holds x0")
    }

    /// `|x(end) - vertex|_inf`.
    pub fn terminal_distance(&self, vertex: &[f64]) -> f64 {
        self.last_state().iter().zip(vertex).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let mut header = String::from("t");
        for j in 1..=n {
            header.push_str(&format!(",x_{j}"));
        }
        header.push_str(",residual");
        writeln!(w, "{header}")?;
        for ((t, x), r) in self.times.iter().zip(&self.states).zip(&self.constraint_residuals) {
            let mut line = t.to_string();
            for v in x {
                line.push(',');
                line.push_str(&v.to_string());
            }
            line.push(',');
            line.push_str(&r.to_string());
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    fn push(&mut self, t: f64, x: &[f64], l: &[f64], residual: f64) {
        self.times.push(t);
        self.states.push(x.to_vec());
        self.log_states.push(l.to_vec());
        self.constraint_residuals.push(residual);
    }

    /// Drops every other saved state after the first.
    fn thin(&mut self) {
        fn keep_even<T>(v: &mut Vec<T>) {
            let mut i = 0;
            v.retain(|_| {
                let keep = i % 2 == 0;
                i += 1;
                keep
            });
        }
        keep_even(&mut self.times);
        keep_even(&mut self.states);
        keep_even(&mut self.log_states);
        keep_even(&mut self.constraint_residuals);
    }
}

// Dormand-Prince 5(4) tableau; nodes 0, 1/5, 3/10, 4/5, 8/9, 1, 1.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Below this log-value `x` is taken from `exp(l)`.
const LOG_FLOOR: f64 = -600.0;

struct Step {
    x_new: Vec<f64>,
    l_new: Vec<f64>,
    k_last: Vec<f64>,
    err: f64,
}

fn resync(x: &mut [f64], l: &[f64]) {
    for (xi, &li) in x.iter_mut().zip(l) {
        if li < LOG_FLOOR {
            *xi = li.exp().max(f64::MIN_POSITIVE);
        }
    }
}

/// One trial step. `k1` is `g(x)`, the relative rate, so `dx/dt = x * g`.
fn dopri_step(x: &[f64], l: &[f64], k1: &[f64], h: f64, inst: &LpInstance, opts: &FlowOptions) -> Result<Option<Step>> {
    let n = x.len();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
    let mut fx: Vec<Vec<f64>> = Vec::with_capacity(7);
    ks.push(k1.to_vec());
    fx.push(x.iter().zip(k1).map(|(a, b)| a * b).collect());
    let mut stage = vec![0.0; n];
    let mut lstage = vec![0.0; n];
    for (s, coeffs) in A.iter().enumerate().skip(1) {
        for j in 0..n {
            let (mut acc, mut lacc) = (0.0, 0.0);
            for r in 0..s {
                acc += coeffs[r] * fx[r][j];
                lacc += coeffs[r] * ks[r][j];
            }
            stage[j] = x[j] + h * acc;
            lstage[j] = l[j] + h * lacc;
        }
        resync(&mut stage, &lstage);
        if stage.iter().any(|&v| !(v > 0.0)) {
            return Ok(None);
        }
        let g = relative_rate(&stage, inst)?;
        fx.push(stage.iter().zip(&g).map(|(a, b)| a * b).collect());
        ks.push(g);
    }
    // Stage 7 sits at the fifth-order solution (FSAL).
    let x_new = stage;
    let l_new = lstage;
    let mut err: f64 = 0.0;
    for j in 0..n {
        let ex: f64 = h * (0..7).map(|s| E[s] * fx[s][j]).sum::<f64>();
        let el: f64 = h * (0..7).map(|s| E[s] * ks[s][j]).sum::<f64>();
        let size = x[j].abs().max(x_new[j].abs());
        err = err.max(ex.abs() / (opts.atol + opts.rtol * size)).max(el.abs() / opts.rtol);
    }
    let k_last = ks.pop().expect("seven stages");
    Ok(Some(Step { x_new, l_new, k_last, err }))
}

/// `g = c - A^T w`, so that `grad_h(x) = X g`.
fn relative_rate(x: &[f64], inst: &LpInstance) -> Result<Vec<f64>> {
    let gram = weighted_gram(x, &inst.a);
    let xc: Vec<f64> = x.iter().zip(&inst.c).map(|(a, b)| a * b).collect();
    let w = Lu::factor(&gram, GRAD_PIVOT_TOL)?.solve(&inst.a.mul_vec(&xc));
    let atw = inst.a.tr_mul_vec(&w);
    Ok(inst.c.iter().zip(atw).map(|(c, v)| c - v).collect())
}

/// Integrates from `x0` until every non-basic coordinate of `target` is below
/// `eps` (and, with `require_basic_close`, the basic ones are within `eps` of
/// the vertex).
pub fn integrate_to(
    inst: &LpInstance,
    x0: &[f64],
    target: &VertexSolution,
    eps: f64,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    let n = inst.n();
    if x0.len() != n {
        return Err(Error::Shape(format!("x0 has {} entries, n = {n}", x0.len())));
    }
    if let Some(j) = x0.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("x0[{j}] = {} is not positive", x0[j])));
    }
    if target.status != LpStatus::Optimal {
        return Err(Error::Domain("target vertex must come from an optimal solve".into()));
    }
    let nonbasic = target.nonbasic_set(n);
    let vertex = target.full_vertex(n);
    let residual =
        |x: &[f64]| -> f64 { norm_inf(&inst.a.mul_vec(x).iter().zip(&inst.b).map(|(p, q)| p - q).collect::<Vec<_>>()) };
    let converged = |x: &[f64]| -> bool {
        nonbasic.iter().all(|&i| x[i] < eps)
            && (!opts.require_basic_close || target.basic_set.iter().all(|&j| (x[j] - vertex[j]).abs() < eps))
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        log_states: Vec::new(),
        constraint_residuals: Vec::new(),
        converged_at: None,
        epsilon_target: eps,
        max_constraint_residual: 0.0,
        min_objective_increment: f64::INFINITY,
        accepted_steps: 0,
        rejected_steps: 0,
        positivity_rejections: 0,
    };
    let r0 = residual(x0);
    traj.max_constraint_residual = r0;
    let mut x = x0.to_vec();
    let mut l: Vec<f64> = x0.iter().map(|v| v.ln()).collect();
    traj.push(0.0, x0, &l, r0);
    let mut t = 0.0;
    let mut k1 = relative_rate(&x, inst)?;
    if converged(&x) {
        traj.converged_at = Some(0.0);
        return Ok(traj);
    }
    // Initial step from the field's relative speed.
    let speed = k1.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let mut h = if speed > 0.0 { 0.01 / speed } else { 1.0 };
    let mut stride = 1usize;
    let mut saved_since = 0usize;
    let mut obj = dot(&inst.c, &x);

    while traj.accepted_steps < opts.max_steps {
        if t >= opts.t_max {
            break;
        }
        h = h.min(opts.t_max - t);
        if h < opts.min_step {
            return Err(Error::StiffnessFailure { t, min_step: opts.min_step });
        }
        let step = dopri_step(&x, &l, &k1, h, inst, opts)?;
        let Some(step) = step else {
            traj.rejected_steps += 1;
            traj.positivity_rejections += 1;
            h *= 0.5;
            continue;
        };
        if !(step.err <= 1.0) {
            traj.rejected_steps += 1;
            let fac = if step.err.is_finite() { (0.9 * step.err.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= fac;
            continue;
        }
        t += h;
        x = step.x_new;
        l = step.l_new;
        k1 = step.k_last;
        traj.accepted_steps += 1;
        let r = residual(&x);
        traj.max_constraint_residual = traj.max_constraint_residual.max(r);
        let new_obj = dot(&inst.c, &x);
        traj.min_objective_increment = traj.min_objective_increment.min(new_obj - obj);
        obj = new_obj;

        let done = converged(&x);
        saved_since += 1;
        if done || saved_since >= stride {
            saved_since = 0;
            traj.push(t, &x, &l, r);
            if traj.times.len() >= opts.max_saved && !done {
                traj.thin();
                stride *= 2;
            }
        }
        if done {
            traj.converged_at = Some(t);
            return Ok(traj);
        }
        let fac = if step.err > 0.0 { 0.9 * step.err.powf(-0.2) } else { 5.0 };
        h *= fac.clamp(0.2, 5.0);
    }
    if traj.times.last() != Some(&t) {
        let r = residual(&x);
        traj.push(t, &x, &l, r);
    }
    Err(Error::Timeout { t_max: opts.t_max, partial: Box::new(traj) })
}

/// Solves the LP for the target vertex, then integrates with default options.
pub fn integrate(inst: &LpInstance, x0: &[f64], eps: f64, t_max: f64) -> Result<Trajectory> {
    let target = simplex::solve(inst)?;
    let opts = FlowOptions { t_max, ..FlowOptions::default() };
    integrate_to(inst, x0, &target, eps, &opts)
}

/// Per non-basic coordinate, the largest deviation over stored states from
/// `ln x_i(t) = ln x_i(0) - Delta_i t - sum_j alpha_ji ln(x_Bj(t) / x_Bj(0))`.
pub fn formal_solution_residual(traj: &Trajectory, report: &ConvergenceReport, x0: &[f64]) -> Vec<f64> {
    let part = &report.partition;
    let l0: Vec<f64> = x0.iter().map(|v| v.ln()).collect();
    part.nonbasic
        .iter()
        .enumerate()
        .map(|(p, &i)| {
            traj.times
                .iter()
                .zip(&traj.log_states)
                .map(|(&t, l)| {
                    let coupling: f64 =
                        part.basic.iter().enumerate().map(|(q, &j)| report.alpha[(q, p)] * (l[j] - l0[j])).sum();
                    (l[i] - l0[i] + report.deltas[p] * t + coupling).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Least-squares slope of `Psi_i(t) = ln x_i + sum_j alpha_ji ln x_Bj` in `t`.
pub fn psi_slopes(traj: &Trajectory, report: &ConvergenceReport) -> Result<Vec<f64>> {
    let npts = traj.times.len();
    if npts < 3 {
        return Err(Error::InsufficientData { needed: 3, got: npts });
    }
    let part = &report.partition;
    let tmean = traj.times.iter().sum::<f64>() / npts as f64;
    let stt: f64 = traj.times.iter().map(|t| (t - tmean).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::InsufficientData { needed: 3, got: 1 });
    }
    Ok(part
        .nonbasic
        .iter()
        .enumerate()
        .map(|(p, &i)| {
            let psi: Vec<f64> = traj
                .log_states
                .iter()
                .map(|l| l[i] + part.basic.iter().enumerate().map(|(q, &j)| report.alpha[(q, p)] * l[j]).sum::<f64>())
                .collect();
            let pmean = psi.iter().sum::<f64>() / npts as f64;
            traj.times.iter().zip(&psi).map(|(t, v)| (t - tmean) * (v - pmean)).sum::<f64>() / stt
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{convergence_report, report_for_partition, Partition};

    fn one_row() -> LpInstance {
        LpInstance::new(Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap(), vec![4.0], vec![1.0, 3.0]).unwrap()
    }

    #[test]
    fn gradient_example() {
        let inst = one_row();
        let g = grad_h(&[2.0, 1.0], &inst.a, &inst.c).unwrap();
        assert!((g[0] + 2.0 / 3.0).abs() < 1e-14);
        assert!((g[1] - 1.0 / 3.0).abs() < 1e-14);
        assert!(dot(inst.a.row(0), &g).abs() < 1e-14);
    }

    #[test]
    fn vertex_is_fixed_point() {
        let inst = one_row();
        let g = grad_h(&[0.0, 2.0], &inst.a, &inst.c).unwrap();
        assert!(norm_inf(&g) <= 1e-10 * 3.0);
        let g = grad_h(&[4.0, 0.0], &inst.a, &inst.c).unwrap();
        assert!(norm_inf(&g) <= 1e-10 * 3.0);
    }

    #[test]
    fn integrates_to_vertex() {
        let inst = one_row();
        let x0 = [4.0 / 3.0, 4.0 / 3.0];
        let traj = integrate(&inst, &x0, 1e-6, 1e4).unwrap();
        assert!(traj.converged_at.is_some());
        assert!(traj.terminal_distance(&[0.0, 2.0]) < 1e-5);
        assert!(traj.max_constraint_residual <= 1e-8 * 5.0);
        assert!(traj.min_objective_increment >= -1e-10);
        assert!(traj.states.iter().flatten().all(|&v| v > 0.0));
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));

        let sol = simplex::solve(&inst).unwrap();
        let rep = convergence_report(&inst, &sol, 1e-6).unwrap();
        let res = formal_solution_residual(&traj, &rep, &x0);
        assert!(res[0] < 1e-6, "{res:?}");
        let slopes = psi_slopes(&traj, &rep).unwrap();
        assert!((slopes[0] + 0.5).abs() < 0.5e-4, "{slopes:?}");
    }

    #[test]
    fn zero_cost_is_stationary() {
        let mut inst = one_row();
        inst.c = vec![0.0, 0.0];
        let g = grad_h(&[1.0, 1.5], &inst.a, &inst.c).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let part = Partition::from_basic(2, &[1]).unwrap();
        let rep = report_for_partition(&inst, &part, &[2.0], 1.0).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![vec![1.0, 1.5]; 3],
            log_states: vec![vec![0.0, 1.5f64.ln()]; 3],
            constraint_residuals: vec![0.0; 3],
            converged_at: None,
            epsilon_target: 1e-6,
            max_constraint_residual: 0.0,
            min_objective_increment: 0.0,
            accepted_steps: 2,
            rejected_steps: 0,
            positivity_rejections: 0,
        };
        assert_eq!(psi_slopes(&traj, &rep).unwrap(), vec![0.0]);
        assert_eq!(formal_solution_residual(&traj, &rep, &[1.0, 1.5]), vec![0.0]);
    }

    #[test]
    fn too_few_points() {
        let inst = one_row();
        let part = Partition::from_basic(2, &[1]).unwrap();
        let rep = report_for_partition(&inst, &part, &[2.0], 1.0).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![vec![1.0, 1.5]; 2],
            log_states: vec![vec![0.0, 1.5f64.ln()]; 2],
            constraint_residuals: vec![0.0; 2],
            converged_at: None,
            epsilon_target: 1e-6,
            max_constraint_residual: 0.0,
            min_objective_increment: 0.0,
            accepted_steps: 1,
            rejected_steps: 0,
            positivity_rejections: 0,
        };
        assert!(matches!(psi_slopes(&traj, &rep), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn timeout_keeps_partial_trajectory() {
        let inst = one_row();
        let sol = simplex::solve(&inst).unwrap();
        let opts = FlowOptions { t_max: 0.5, ..FlowOptions::default() };
        match integrate_to(&inst, &[4.0 / 3.0, 4.0 / 3.0], &sol, 1e-6, &opts) {
            Err(Error::Timeout { partial, .. }) => assert!(partial.states.len() >= 2),
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn csv_export() {
        let inst = one_row();
        let traj = integrate(&inst, &[2.0, 1.0], 1e-3, 1e4).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x_1,x_2,residual\n"));
        assert_eq!(text.lines().count(), traj.times.len() + 1);
    }
}
