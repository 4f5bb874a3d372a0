//! Per-instance observables relative to a basic / non-basic partition.
//!
//! With `B = A_basic` and `N = A_nonbasic`, the coupling matrix is
//! `alpha = -B^{-1} N` (m x (n-m)). Non-basic coordinate `i` decays at rate
//! `Delta_i = -c_N[i] - sum_j c_B[j] alpha[j][i]`, the barrier in front of it
//! is `beta_i = -sum_j alpha[j][i] ln x_B*[j]`, and the time to push every
//! non-basic coordinate below `eps` is `T = max_i (beta_i + |ln eps|) / Delta_i`.

use serde::Serialize;

use crate::ensemble::{FixedPartitionDraw, LpInstance};
use crate::linalg::{Lu, Matrix};
use crate::simplex::{LpStatus, VertexSolution};
use crate::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-9;

/// Largest negative rate tolerated at a solver-reported optimum.
pub const OPTIMALITY_GUARD: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub basic: Vec<usize>,
    pub nonbasic: Vec<usize>,
}

impl Partition {
    pub fn from_basic(n: usize, basic: &[usize]) -> Result<Self> {
        let mut is_basic = vec![false; n];
        for &j in basic {
            if j >= n || is_basic[j] {
                return Err(Error::Shape(format!("bad basic index {j} for n={n}")));
            }
            is_basic[j] = true;
        }
        let nonbasic = (0..n).filter(|&j| !is_basic[j]).collect();
        Ok(Partition { basic: basic.to_vec(), nonbasic })
    }

    /// Basic set = last `m` columns.
    pub fn last_columns(n: usize, m: usize) -> Self {
        Partition { basic: (n - m..n).collect(), nonbasic: (0..n - m).collect() }
    }

    pub fn n(&self) -> usize {
        self.basic.len() + self.nonbasic.len()
    }
}

/// `-B^{-1} N`, by LU solves.
pub fn alpha_matrix(basis: &Matrix, nonbasis: &Matrix) -> Result<Matrix> {
    if basis.rows() != basis.cols() || nonbasis.rows() != basis.rows() {
        return Err(Error::Shape(format!(
            "B is {}x{}, N is {}x{}",
            basis.rows(),
            basis.cols(),
            nonbasis.rows(),
            nonbasis.cols()
        )));
    }
    let lu = Lu::factor(basis, PIVOT_TOL)?;
    let mut alpha = lu.solve_matrix(nonbasis);
    alpha.scale(-1.0);
    Ok(alpha)
}

pub fn deltas(alpha: &Matrix, c: &[f64], partition: &Partition) -> Result<Vec<f64>> {
    let (m, k) = (alpha.rows(), alpha.cols());
    if partition.basic.len() != m || partition.nonbasic.len() != k || c.len() != m + k {
        return Err(Error::Shape(format!(
            "alpha is {m}x{k}, partition {}+{}, c has {}",
            partition.basic.len(),
            partition.nonbasic.len(),
            c.len()
        )));
    }
    let cb: Vec<f64> = partition.basic.iter().map(|&j| c[j]).collect();
    let coupled = alpha.tr_mul_vec(&cb);
    Ok(partition.nonbasic.iter().zip(coupled).map(|(&i, s)| -c[i] - s).collect())
}

pub fn delta_min(deltas: &[f64]) -> f64 {
    deltas.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `Delta_min` relative to the fixed partition (basis = last `m` columns).
pub fn delta_min1(draw: &FixedPartitionDraw) -> Result<f64> {
    let alpha = alpha_matrix(&draw.basis, &draw.nonbasis)?;
    let n = draw.c.len();
    let part = Partition::last_columns(n, draw.basis.rows());
    Ok(delta_min(&deltas(&alpha, &draw.c, &part)?))
}

pub fn barriers(alpha: &Matrix, x_basic: &[f64]) -> Result<Vec<f64>> {
    if x_basic.len() != alpha.rows() {
        return Err(Error::Shape(format!("alpha has {} rows, x_B has {}", alpha.rows(), x_basic.len())));
    }
    let mut logs = Vec::with_capacity(x_basic.len());
    for (j, &x) in x_basic.iter().enumerate() {
        if !(x > 0.0) {
            return Err(Error::DegenerateVertex { index: j, value: x });
        }
        logs.push(x.ln());
    }
    let mut out = alpha.tr_mul_vec(&logs);
    out.iter_mut().for_each(|v| *v = -*v);
    Ok(out)
}

pub fn computation_time(deltas: &[f64], betas: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if deltas.len() != betas.len() {
        return Err(Error::Shape("deltas and betas differ in length".into()));
    }
    let log_eps = epsilon.ln().abs();
    let mut t = f64::NEG_INFINITY;
    for (i, (&d, &b)) in deltas.iter().zip(betas).enumerate() {
        if !(d > 0.0) {
            return Err(Error::NotOptimalPartition { index: i, value: d });
        }
        t = t.max((b + log_eps) / d);
    }
    Ok(t)
}

/// Largest strictly positive barrier, 0 when none is positive.
pub fn beta_max_positive(betas: &[f64]) -> f64 {
    betas.iter().copied().filter(|&b| b > 0.0).fold(0.0, f64::max)
}

pub fn beta_max_signed(betas: &[f64]) -> f64 {
    betas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub partition: Partition,
    #[serde(skip)]
    pub alpha: Matrix,
    pub deltas: Vec<f64>,
    pub delta_min: f64,
    pub betas: Vec<f64>,
    pub beta_max_pos: f64,
    pub beta_max_signed: f64,
    /// `None` when some rate is not strictly positive.
    pub time: Option<f64>,
    pub epsilon: f64,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "trial,delta_min,beta_max_pos,beta_max_signed,T,n,m,sigma,epsilon";

    pub fn csv_row(&self, trial: u64, sigma: f64) -> String {
        let t = self.time.map(|t| t.to_string()).unwrap_or_default();
        format!(
            "{trial},{},{},{},{t},{},{},{sigma},{}",
            self.delta_min,
            self.beta_max_pos,
            self.beta_max_signed,
            self.partition.n(),
            self.partition.basic.len(),
            self.epsilon
        )
    }
}

/// All observables of `inst` at the vertex `sol`.
///
/// Rejects solver optima whose smallest rate is below `-OPTIMALITY_GUARD`.
pub fn convergence_report(inst: &LpInstance, sol: &VertexSolution, epsilon: f64) -> Result<ConvergenceReport> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!("no vertex for status {:?}", sol.status)));
    }
    let part = Partition::from_basic(inst.n(), &sol.basic_set)?;
    let report = report_for_partition(inst, &part, &sol.x_basic, epsilon)?;
    if report.delta_min < -OPTIMALITY_GUARD {
        return Err(Error::NotOptimalPartition {
            index: report.deltas.iter().position(|&d| d == report.delta_min).unwrap_or(0),
            value: report.delta_min,
        });
    }
    Ok(report)
}

/// Observables relative to an arbitrary partition with basic values `x_basic`.
pub fn report_for_partition(
    inst: &LpInstance,
    part: &Partition,
    x_basic: &[f64],
    epsilon: f64,
) -> Result<ConvergenceReport> {
    let alpha = alpha_matrix(&inst.a.select_columns(&part.basic), &inst.a.select_columns(&part.nonbasic))?;
    let deltas = deltas(&alpha, &inst.c, part)?;
    let betas = barriers(&alpha, x_basic)?;
    let time = computation_time(&deltas, &betas, epsilon).ok();
    Ok(ConvergenceReport {
        partition: part.clone(),
        delta_min: delta_min(&deltas),
        beta_max_pos: beta_max_positive(&betas),
        beta_max_signed: beta_max_signed(&betas),
        alpha,
        deltas,
        betas,
        time,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let a = alpha_matrix(&m(&[vec![2.0]]), &m(&[vec![1.0]])).unwrap();
        assert_eq!(a.to_rows(), vec![vec![-0.5]]);
        let a = alpha_matrix(&Matrix::identity(3), &Matrix::zeros(3, 2)).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert!(alpha_matrix(&m(&[vec![1.0, 1.0], vec![1.0, 1.0]]), &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn deltas_for_both_partitions() {
        let c = [1.0, 3.0];
        // N = {0}, B = {1}
        let alpha = alpha_matrix(&m(&[vec![2.0]]), &m(&[vec![1.0]])).unwrap();
        let p = Partition::from_basic(2, &[1]).unwrap();
        assert_eq!(deltas(&alpha, &c, &p).unwrap(), vec![0.5]);
        // swapped: N = {1}, B = {0}
        let alpha = alpha_matrix(&m(&[vec![1.0]]), &m(&[vec![2.0]])).unwrap();
        let p = Partition::from_basic(2, &[0]).unwrap();
        assert_eq!(deltas(&alpha, &c, &p).unwrap(), vec![-1.0]);
        assert_eq!(deltas(&alpha, &[0.0, 0.0], &p).unwrap(), vec![0.0]);
    }

    #[test]
    fn minimum() {
        assert_eq!(delta_min(&[0.5]), 0.5);
        assert_eq!(delta_min(&[3.0, -1.0, 2.0]), -1.0);
    }

    #[test]
    fn barrier_examples() {
        let alpha = m(&[vec![-0.5]]);
        let b = barriers(&alpha, &[2.0]).unwrap();
        assert!((b[0] - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((b[0] - 0.346574).abs() < 1e-6);
        let alpha = m(&[vec![1.0, -2.0], vec![0.3, 4.0]]);
        assert_eq!(barriers(&alpha, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(barriers(&Matrix::zeros(2, 2), &[3.0, 0.1]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(barriers(&alpha, &[1.0, 0.0]), Err(Error::DegenerateVertex { index: 1, .. })));
    }

    #[test]
    fn time_examples() {
        let t = computation_time(&[0.5], &[0.346574], (-1f64).exp()).unwrap();
        assert!((t - 2.693148).abs() < 1e-6);
        assert_eq!(computation_time(&[0.7], &[0.0], 1.0).unwrap(), 0.0);
        assert_eq!(computation_time(&[1.0, 2.0], &[3.0, 8.0], 1.0).unwrap(), 4.0);
        assert!(matches!(
            computation_time(&[1.0, 0.0], &[0.0, 0.0], 1.0),
            Err(Error::NotOptimalPartition { index: 1, .. })
        ));
        assert!(computation_time(&[1.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn beta_conventions() {
        assert_eq!(beta_max_positive(&[-1.0, -2.0]), 0.0);
        assert_eq!(beta_max_signed(&[-1.0, -2.0]), -1.0);
        assert_eq!(beta_max_positive(&[-1.0, 2.5, 0.5]), 2.5);
    }

    #[test]
    fn csv_row_layout() {
        let inst = LpInstance::new(m(&[vec![1.0, 2.0]]), vec![4.0], vec![1.0, 3.0]).unwrap();
        let part = Partition::from_basic(2, &[1]).unwrap();
        let r = report_for_partition(&inst, &part, &[2.0], 1.0).unwrap();
        assert_eq!(r.deltas, vec![0.5]);
        let row = r.csv_row(5, 1.0);
        assert_eq!(row.split(',').count(), ConvergenceReport::CSV_HEADER.split(',').count());
        assert!(row.starts_with("5,0.5,"));
    }
}
