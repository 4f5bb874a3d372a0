//! Random-matrix laws: the `u` statistic, its moments, the Cauchy joint
//! density of the rates, and the spectrum of `B^T B`.

use std::f64::consts::PI;

use super::special::{erf, ln_gamma};
use crate::linalg::{Lu, Matrix};
use crate::rng::NormalStream;
use crate::{Error, Result};

const U_PIVOT_TOL: f64 = 1e-13;

/// Leading large-`m` density of `u`: `sqrt(m / (2 pi u)) exp(-m u / 2)` on `(0, 1]`.
pub fn p_u_density(u: f64, m: usize) -> f64 {
    if !(u > 0.0 && u <= 1.0) {
        return 0.0;
    }
    let mf = m as f64;
    (mf / (2.0 * PI * u)).sqrt() * (-0.5 * mf * u).exp()
}

/// `u(B, z) = 1 / (z^T (B^T B)^-1 z + 1)`. With `B^T v = z` the quadratic
/// form is `|v|^2`, so one LU of `B` suffices.
pub fn u_statistic(b: &Matrix, z: &[f64]) -> Result<f64> {
    let m = b.rows();
    if b.cols() != m || z.len() != m {
        return Err(Error::Shape(format!("B is {}x{}, z has {}", m, b.cols(), z.len())));
    }
    let v = Lu::factor(b, U_PIVOT_TOL)?.solve_transpose(z);
    let q: f64 = v.iter().map(|x| x * x).sum();
    Ok(1.0 / (q + 1.0))
}

/// CDF of a half-normal variable with `2 mu^2 = m`: `erf(sqrt(m/2) x)`.
pub fn half_normal_cdf(x: f64, m: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    erf((m as f64 / 2.0).sqrt() * x)
}

/// `k_N = (2N - 1)!! / m^N`.
pub fn moment_kn(order: u32, m: usize) -> f64 {
    let mf = m as f64;
    (1..=order).map(|k| (2 * k - 1) as f64 / mf).product()
}

/// Joint density of the `n - m` rates under the multivariate Cauchy law.
pub fn cauchy_jpd(deltas: &[f64], n: usize, m: usize, sigma: f64) -> Result<f64> {
    if !(0 < m && m < n) || deltas.len() != n - m {
        return Err(Error::Shape(format!("need {} rates for n={n}, m={m}, got {}", n.saturating_sub(m), deltas.len())));
    }
    let half = (deltas.len() + 1) as f64 / 2.0;
    let mf = m as f64;
    let q = mf * sigma * sigma + deltas.iter().map(|d| d * d).sum::<f64>();
    let ln = (mf.sqrt() * sigma).ln() + ln_gamma(half) - half * PI.ln() - half * q.ln();
    Ok(ln.exp())
}

/// `Delta_p = sqrt(m) sigma g_p / |g_0|`, drawing `g_0` first.
pub fn sample_cauchy_deltas(n: usize, m: usize, sigma: f64, stream: &mut NormalStream) -> Vec<f64> {
    let g0 = stream.next_normal().abs();
    let s = (m as f64).sqrt() * sigma / g0;
    (0..n - m).map(|_| s * stream.next_normal()).collect()
}

/// `rho(s) = (1/pi) sqrt((2 - s) / s)` on `(0, 2)`, zero elsewhere.
pub fn spectral_density(s: f64) -> f64 {
    if s > 0.0 && s < 2.0 {
        ((2.0 - s) / s).sqrt() / PI
    } else {
        0.0
    }
}

/// `int_0^s rho = (2/pi)(phi + sin phi cos phi)` with `phi = asin(sqrt(s/2))`.
pub fn spectral_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 2.0 {
        return 1.0;
    }
    let phi = (s / 2.0).sqrt().asin();
    2.0 / PI * (phi + phi.sin() * phi.cos())
}

pub fn i_star(y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("I* takes y >= 0, got {y}")));
    }
    let r = (y * y + 2.0 * y).sqrt();
    Ok(-y + r + (y + r).ln_1p())
}

/// `(1/m) sum_i ln(1 + y / s_i)` over the eigenvalues `s_i` of one matrix.
pub fn i_sample(eigenvalues: &[f64], y: f64) -> f64 {
    eigenvalues.iter().map(|s| (y / s).ln_1p()).sum::<f64>() / eigenvalues.len() as f64
}

/// Eigenvalues of `B^T B` for `B` with i.i.d. `N(0, 1/(2m))` entries.
pub fn wishart_eigenvalues(m: usize, stream: &mut NormalStream) -> Result<Vec<f64>> {
    let sigma = (0.5 / m as f64).sqrt();
    let b = nalgebra::DMatrix::from_fn(m, m, |_, _| stream.gaussian(sigma));
    let btb = b.transpose() * &b;
    let eig = nalgebra::SymmetricEigen::try_new(btb, 1e-14, 10_000)
        .ok_or_else(|| Error::Numerical(format!("eigen-decomposition of a {m}x{m} matrix failed")))?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::quad::integrate;

    #[test]
    fn u_examples() {
        let b = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.5, -1.0]]).unwrap();
        assert_eq!(u_statistic(&b, &[0.0, 0.0]).unwrap(), 1.0);
        // Direct oracle with the explicit inverse of B^T B.
        let z = [0.3, -1.2];
        let btb = b.transpose().mul(&b);
        let det = btb[(0, 0)] * btb[(1, 1)] - btb[(0, 1)] * btb[(1, 0)];
        let inv = [[btb[(1, 1)] / det, -btb[(0, 1)] / det], [-btb[(1, 0)] / det, btb[(0, 0)] / det]];
        let q = z[0] * (inv[0][0] * z[0] + inv[0][1] * z[1]) + z[1] * (inv[1][0] * z[0] + inv[1][1] * z[1]);
        assert!((u_statistic(&b, &z).unwrap() - 1.0 / (q + 1.0)).abs() < 1e-14);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(u_statistic(&sing, &z), Err(Error::NumericallySingular { .. })));
    }

    #[test]
    fn u_scale_invariant_and_bounded() {
        let mut s = NormalStream::from_seed(11);
        for _ in 0..50 {
            let b = Matrix::from_row_major(4, 4, (0..16).map(|_| s.next_normal()).collect()).unwrap();
            let z: Vec<f64> = (0..4).map(|_| s.next_normal()).collect();
            let u = u_statistic(&b, &z).unwrap();
            assert!((0.0..=1.0).contains(&u));
            let mut b3 = b.clone();
            b3.scale(3.0);
            let u3 = u_statistic(&b3, &z.iter().map(|v| 3.0 * v).collect::<Vec<_>>()).unwrap();
            assert!((u - u3).abs() < 1e-12 * u.max(1e-3));
        }
    }

    #[test]
    fn density_and_moments() {
        let m = 50;
        let total = integrate(|t: f64| p_u_density(t * t, m) * 2.0 * t, 0.0, 1.0, 1e-12).unwrap();
        assert!((total - erf((m as f64 / 2.0).sqrt())).abs() < 1e-10);
        assert_eq!(moment_kn(1, 100), 0.01);
        assert!((moment_kn(2, 100) - 3e-4).abs() < 1e-18);
        // Half-normal moments with 2 mu^2 = m: E[X^2N] = Gamma(N + 1/2) / (sqrt(pi) mu^2N).
        for order in 1..6u32 {
            let mu2 = m as f64 / 2.0;
            let want = (ln_gamma(order as f64 + 0.5) - 0.5 * PI.ln()).exp() / mu2.powi(order as i32);
            assert!(((moment_kn(order, m) - want) / want).abs() < 1e-12);
        }
    }

    #[test]
    fn half_normal() {
        assert_eq!(half_normal_cdf(-1.0, 10), 0.0);
        let median = 0.674_489_750_196_081_7 / 10.0;
        assert!((half_normal_cdf(median, 100) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cauchy_density() {
        let (n, m, sigma) = (5, 4, 1.5);
        let d = 0.8;
        let s = (m as f64).sqrt() * sigma;
        let want = s / (PI * (s * s + d * d));
        assert!((cauchy_jpd(&[d], n, m, sigma).unwrap() - want).abs() < 1e-15);
        let a = cauchy_jpd(&[0.1, -2.0, 3.0], 7, 4, 1.0).unwrap();
        let b = cauchy_jpd(&[3.0, 0.1, -2.0], 7, 4, 1.0).unwrap();
        assert!((a - b).abs() < 1e-16);
        assert!(cauchy_jpd(&[1.0], 7, 4, 1.0).is_err());
        // Two-dimensional marginal normalization by polar quadrature.
        let total =
            integrate(|r: f64| 2.0 * PI * r * cauchy_jpd(&[r, 0.0], 6, 4, 1.0).unwrap(), 0.0, 1e6, 1e-9).unwrap();
        assert!((total - 1.0).abs() < 1e-5, "{total}");
    }

    #[test]
    fn cauchy_sampler_scale() {
        let mut s = NormalStream::from_seed(3);
        let mut draws: Vec<f64> = (0..20_000).map(|_| sample_cauchy_deltas(5, 4, 1.0, &mut s)[0].abs()).collect();
        draws.sort_by(f64::total_cmp);
        // |Cauchy(0, 2)| has median 2.
        let med = draws[draws.len() / 2];
        assert!((med - 2.0).abs() < 0.1, "{med}");
    }

    #[test]
    fn spectrum_laws() {
        assert!((spectral_density(1.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(spectral_density(0.0), 0.0);
        assert_eq!(spectral_density(2.5), 0.0);
        let total = integrate(spectral_density, 0.0, 2.0, 1e-10).unwrap();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        for s in [0.1, 0.5, 1.0, 1.7] {
            let q = integrate(spectral_density, 0.0, s, 1e-11).unwrap();
            assert!((q - spectral_cdf(s)).abs() < 1e-9);
        }
        let mean = integrate(|s| s * spectral_density(s), 0.0, 2.0, 1e-11).unwrap();
        assert!((mean - 0.5).abs() < 1e-9);
    }

    #[test]
    fn i_star_values() {
        assert_eq!(i_star(0.0).unwrap(), 0.0);
        assert!((i_star(1.0).unwrap() - (-1.0 + 3f64.sqrt() + (2.0 + 3f64.sqrt()).ln())).abs() < 1e-15);
        assert!((i_star(1.0).unwrap() - 2.049_009).abs() < 1e-6);
        assert!(i_star(-0.5).is_err());
        for y in [1e-6, 1e-4, 1e-2] {
            assert!((i_star(y).unwrap() - (2.0 * (2.0 * y).sqrt() - y)).abs() <= y.powf(1.5));
        }
        // Large y: -y + sqrt(y^2 + 2y) -> 1 and the log term -> ln(2y), so I* -> ln(2 e y).
        for y in [100.0, 1e3, 1e5] {
            assert!((i_star(y).unwrap() - (2.0 * y * std::f64::consts::E).ln()).abs() <= 2.0 / y);
        }
        // Continuum representation of I* over the spectral density.
        for y in [0.1, 1.0, 10.0] {
            let q = integrate(|s| spectral_density(s) * (y / s).ln_1p(), 0.0, 2.0, 1e-10).unwrap();
            assert!((q - i_star(y).unwrap()).abs() < 1e-8, "{y}");
        }
    }

    #[test]
    fn eigenvalues_sorted_positive() {
        let mut s = NormalStream::from_seed(5);
        let ev = wishart_eigenvalues(30, &mut s).unwrap();
        assert_eq!(ev.len(), 30);
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        assert!(ev[0] > 0.0);
    }
}
