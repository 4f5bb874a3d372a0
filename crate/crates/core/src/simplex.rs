//! Dense two-phase simplex for `max c^T x` subject to `A x = b, x >= 0`.
//!
//! Bland's rule throughout: the entering column is the lowest-index column
//! with a positive reduced cost, and ratio-test ties go to the lowest basic
//! variable index. The basis matrix is refactorised from scratch at every
//! pivot.

use serde::{Deserialize, Serialize};

use crate::ensemble::LpInstance;
use crate::linalg::{norm_inf, Lu, Matrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Smallest admissible pivot, relative to the basis entries.
    pub pivot_tol: f64,
    /// Feasibility and optimality tolerance.
    pub tol: f64,
    /// Smallest accepted `delta` of the auxiliary interior-point problem.
    pub interior_tol: f64,
    /// Pivot limit per phase; 0 picks `50 (n + m) + 1000`.
    pub max_iter: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { pivot_tol: 1e-9, tol: 1e-9, interior_tol: 1e-9, max_iter: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexSolution {
    /// Basic column indices, ascending. Empty unless `Optimal`.
    pub basic_set: Vec<usize>,
    /// Values of the basic variables, aligned with `basic_set`.
    pub x_basic: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
}

impl VertexSolution {
    fn without_vertex(status: LpStatus) -> Self {
        VertexSolution { basic_set: Vec::new(), x_basic: Vec::new(), objective: f64::NAN, status }
    }

    /// The vertex as a full length-`n` vector.
    pub fn full_vertex(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (&j, &v) in self.basic_set.iter().zip(&self.x_basic) {
            x[j] = v;
        }
        x
    }

    /// Complement of the basic set, ascending.
    pub fn nonbasic_set(&self, n: usize) -> Vec<usize> {
        let mut is_basic = vec![false; n];
        for &j in &self.basic_set {
            is_basic[j] = true;
        }
        (0..n).filter(|&j| !is_basic[j]).collect()
    }
}

pub fn solve(inst: &LpInstance) -> Result<VertexSolution> {
    solve_standard(&inst.a, &inst.b, &inst.c, &SimplexOptions::default())
}

/// Columns of `[A | I]` with the rows of `A` sign-flipped where `b < 0`.
struct Tableau<'a> {
    a: &'a Matrix,
    flip: Vec<bool>,
    b: Vec<f64>,
    m: usize,
    n: usize,
}

impl Tableau<'_> {
    fn column(&self, j: usize) -> Vec<f64> {
        if j < self.n {
            (0..self.m).map(|i| if self.flip[i] { -self.a[(i, j)] } else { self.a[(i, j)] }).collect()
        } else {
            let mut e = vec![0.0; self.m];
            e[j - self.n] = 1.0;
            e
        }
    }

    /// `y^T a_j` without materialising the column.
    fn price(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            (0..self.m)
                .map(|i| {
                    let v = self.a[(i, j)];
                    y[i] * if self.flip[i] { -v } else { v }
                })
                .sum()
        } else {
            y[j - self.n]
        }
    }

    fn factor(&self, basis: &[usize], opts: &SimplexOptions) -> Result<Lu> {
        let mut bm = Matrix::zeros(self.m, self.m);
        for (k, &j) in basis.iter().enumerate() {
            if j < self.n {
                for i in 0..self.m {
                    let v = self.a[(i, j)];
                    bm[(i, k)] = if self.flip[i] { -v } else { v };
                }
            } else {
                bm[(j - self.n, k)] = 1.0;
            }
        }
        Lu::factor(&bm, opts.pivot_tol)
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

/// Runs Bland-rule pivots until optimal or unbounded. Only columns below
/// `enter_limit` may enter the basis.
fn pivot_loop(
    t: &Tableau,
    basis: &mut [usize],
    cost: &[f64],
    enter_limit: usize,
    opts: &SimplexOptions,
) -> Result<Phase> {
    let max_iter = if opts.max_iter == 0 { 50 * (t.n + t.m) + 1000 } else { opts.max_iter };
    let total = t.n + t.m;
    let mut in_basis = vec![false; total];
    for _ in 0..max_iter {
        let lu = t.factor(basis, opts)?;
        in_basis.iter_mut().for_each(|v| *v = false);
        for &j in basis.iter() {
            in_basis[j] = true;
        }
        let cb: Vec<f64> = basis.iter().map(|&j| cost[j]).collect();
        let y = lu.solve_transpose(&cb);
        let entering = (0..enter_limit).find(|&j| !in_basis[j] && cost[j] - t.price(&y, j) > opts.tol);
        let Some(j) = entering else {
            return Ok(Phase::Optimal);
        };
        let xb = lu.solve(&t.b);
        let d = lu.solve(&t.column(j));
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..t.m {
            if d[r] <= opts.pivot_tol {
                continue;
            }
            let theta = xb[r].max(0.0) / d[r];
            leave = match leave {
                None => Some((r, theta)),
                Some((br, bt)) => {
                    let tie = (theta - bt).abs() <= 1e-12 * bt.max(1.0);
                    if (tie && basis[r] < basis[br]) || (!tie && theta < bt) {
                        Some((r, theta))
                    } else {
                        Some((br, bt))
                    }
                }
            };
        }
        match leave {
            None => return Ok(Phase::Unbounded),
            Some((r, _)) => basis[r] = j,
        }
    }
    Err(Error::Numerical(format!("simplex exceeded {max_iter} pivots")))
}

pub fn solve_standard(a: &Matrix, b: &[f64], c: &[f64], opts: &SimplexOptions) -> Result<VertexSolution> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m || c.len() != n {
        return Err(Error::Shape(format!("A is {m}x{n}, b has {}, c has {}", b.len(), c.len())));
    }
    let flip: Vec<bool> = b.iter().map(|&v| v < 0.0).collect();
    let bp: Vec<f64> = b.iter().map(|v| v.abs()).collect();
    let t = Tableau { a, flip, b: bp, m, n };
    let bscale = 1.0 + norm_inf(b);

    // Phase 1: maximise minus the sum of artificials.
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut cost1 = vec![0.0; n + m];
    cost1[n..].iter_mut().for_each(|v| *v = -1.0);
    pivot_loop(&t, &mut basis, &cost1, n + m, opts)?;
    let lu = t.factor(&basis, opts)?;
    let xb = lu.solve(&t.b);
    let infeasibility: f64 = basis.iter().zip(&xb).filter(|(&j, _)| j >= n).map(|(_, &v)| v).sum();
    if infeasibility > opts.tol * bscale {
        return Ok(VertexSolution::without_vertex(LpStatus::Infeasible));
    }

    // Pivot degenerate artificials out of the basis.
    for r in 0..m {
        if basis[r] < n {
            continue;
        }
        let lu = t.factor(&basis, opts)?;
        let mut e = vec![0.0; m];
        e[r] = 1.0;
        let row = lu.solve_transpose(&e);
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|j| !basis.contains(j)) {
            let v = t.price(&row, j).abs();
            if v > opts.pivot_tol && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((j, v));
            }
        }
        match best {
            Some((j, _)) => basis[r] = j,
            None => {
                return Err(Error::Numerical("constraint matrix is rank deficient".into()));
            }
        }
    }

    // Phase 2.
    let mut cost2 = c.to_vec();
    cost2.extend(std::iter::repeat_n(0.0, m));
    if let Phase::Unbounded = pivot_loop(&t, &mut basis, &cost2, n, opts)? {
        return Ok(VertexSolution::without_vertex(LpStatus::Unbounded));
    }
    let lu = t.factor(&basis, opts)?;
    let xb = lu.solve(&t.b);
    let mut pairs: Vec<(usize, f64)> = basis.iter().copied().zip(xb).collect();
    pairs.sort_by_key(|p| p.0);
    let basic_set: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let x_basic: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let objective = basic_set.iter().zip(&x_basic).map(|(&j, &v)| c[j] * v).sum();
    Ok(VertexSolution { basic_set, x_basic, objective, status: LpStatus::Optimal })
}

/// A strictly positive `x0` with `A x0 = b`.
///
/// Solves `max delta` subject to `A y + (A 1) delta = b`, `y >= 0`,
/// `0 <= delta <= 1` and returns `y* + delta* 1`.
pub fn interior_point(inst: &LpInstance) -> Result<Vec<f64>> {
    interior_point_with(&inst.a, &inst.b, &SimplexOptions::default())
}

pub fn interior_point_with(a: &Matrix, b: &[f64], opts: &SimplexOptions) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    let mut aux = Matrix::zeros(m + 1, n + 2);
    for i in 0..m {
        let row = a.row(i);
        for j in 0..n {
            aux[(i, j)] = row[j];
        }
        aux[(i, n)] = row.iter().sum();
    }
    aux[(m, n)] = 1.0;
    aux[(m, n + 1)] = 1.0;
    let mut baux = b.to_vec();
    baux.push(1.0);
    let mut caux = vec![0.0; n + 2];
    caux[n] = 1.0;
    let sol = solve_standard(&aux, &baux, &caux, opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::EmptyInterior { delta: 0.0 });
    }
    let full = sol.full_vertex(n + 2);
    let delta = full[n];
    if !(delta > opts.interior_tol) {
        return Err(Error::EmptyInterior { delta });
    }
    let x0: Vec<f64> = full[..n].iter().map(|y| y.max(0.0) + delta).collect();
    Ok(x0)
}
