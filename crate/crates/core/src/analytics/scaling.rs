//! Scaling laws for the convergence rate, barrier and computation time.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quad;
use super::special::{erfc, erfcx};
use crate::{Error, Result};

/// `F(x) = 1 - erfcx(x)`, the limiting CDF of `x_Delta`. Zero for `x <= 0`.
pub fn scaling_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    1.0 - erfcx(x).expect("x > 0")
}

/// Median of `F`, found by bisection.
pub fn scaling_median() -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if scaling_cdf(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingKind {
    DeltaRate,
    Barrier,
    Time,
}

/// Raw formula: `(1/sqrt(pi)) (n/m - 1) sqrt(m) / sigma`, `m`, or `m ln m`.
pub fn eta(kind: ScalingKind, n: usize, m: usize, sigma: f64) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    match kind {
        ScalingKind::DeltaRate => (nf / mf - 1.0) * mf.sqrt() / (PI.sqrt() * sigma),
        ScalingKind::Barrier => mf,
        ScalingKind::Time => mf * mf.ln(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub kind: ScalingKind,
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    pub eta: f64,
}

impl ScalingLaw {
    pub fn new(kind: ScalingKind, n: usize, m: usize, sigma: f64) -> Result<Self> {
        if !(0 < m && m < n) {
            return Err(Error::Config(format!("need 0 < m < n, got n={n}, m={m}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        let eta = eta(kind, n, m, sigma);
        if !(eta > 0.0) {
            return Err(Error::Config(format!("scale factor for {kind:?} at m={m} is {eta}, not positive")));
        }
        Ok(ScalingLaw { kind, n, m, sigma, eta })
    }

    /// `x_Delta = eta Delta`; `x_beta = eta / beta`; `x_T = eta / T`.
    pub fn scale(&self, raw: f64) -> f64 {
        match self.kind {
            ScalingKind::DeltaRate => self.eta * raw,
            ScalingKind::Barrier | ScalingKind::Time => self.eta / raw,
        }
    }
}

const CCDF_UPPER: f64 = 8.0;
const CCDF_TOL: f64 = 1e-10;

/// `Q(Delta)/Q(0) = (2/sqrt(pi)) int_0^inf exp(-y^2) erfc(Delta y / (sqrt(m) sigma))^(n-m) dy`,
/// truncated at `y = 8`.
pub fn ccdf_finite_size(delta: f64, n: usize, m: usize, sigma: f64) -> Result<f64> {
    ScalingLaw::new(ScalingKind::DeltaRate, n, m, sigma)?;
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("delta must be >= 0, got {delta}")));
    }
    let k = (n - m) as i32;
    let scale = delta / ((m as f64).sqrt() * sigma);
    let f = |y: f64| (-y * y).exp() * erfc(scale * y).powi(k);
    let v = quad::integrate(f, 0.0, CCDF_UPPER, CCDF_TOL)?;
    Ok((std::f64::consts::FRAC_2_SQRT_PI * v).min(1.0))
}

/// `P(Delta_min1 > 0) = 2^-(n-m)`.
pub fn positive_fraction(n: usize, m: usize) -> f64 {
    0.5f64.powi((n - m) as i32)
}

/// Density of `Delta_min1` at zero, conditional on the partition being optimal.
pub fn f_min1_zero_density(n: usize, m: usize, sigma: f64) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    2.0 * mf.sqrt() / (PI * sigma) * (nf / mf - 1.0)
}
