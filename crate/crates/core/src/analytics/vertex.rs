//! Laws for the coordinates of a random vertex `x_B = A_B^-1 b`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::special::{erf, ln_gamma};
use crate::{Error, Result};

/// Cauchy density of a single component, `(1/pi) lambda/(lambda^2 + zeta^2)`.
pub fn vertex_component_density(zeta: f64, lambda: f64) -> f64 {
    lambda / (PI * (lambda * lambda + zeta * zeta))
}

pub fn vertex_component_cdf(zeta: f64, lambda: f64) -> f64 {
    0.5 + (zeta / lambda).atan() / PI
}

/// Density of `R = |x_B|`.
pub fn vertex_norm_density(r: f64, lambda: f64, m: usize) -> f64 {
    if r < 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    let t = r / lambda;
    let ln_c = ln_gamma((mf + 1.0) / 2.0) - ln_gamma(mf / 2.0) + (2.0 / PI.sqrt()).ln();
    let ln_body = (mf - 1.0) * t.ln() - 0.5 * (mf + 1.0) * t.mul_add(t, 1.0).ln();
    if m == 1 {
        return (ln_c - 0.5 * (mf + 1.0) * t.mul_add(t, 1.0).ln()).exp() / lambda;
    }
    (ln_c + ln_body).exp() / lambda
}

/// `Prob(R > R0) = erf(sqrt(m/2) atan(lambda / R0))`.
pub fn vertex_norm_tail(r0: f64, lambda: f64, m: usize) -> f64 {
    let angle = if r0 > 0.0 { (lambda / r0).atan() } else { PI / 2.0 };
    erf((m as f64 / 2.0).sqrt() * angle)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexNormLaw {
    pub m: usize,
    pub lambda: f64,
}

impl VertexNormLaw {
    pub fn new(m: usize, lambda: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("vertex dimension must be >= 1".into()));
        }
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 1, got {lambda}")));
        }
        Ok(VertexNormLaw { m, lambda })
    }

    /// `lambda = sqrt(1 + |x_N|^2)`.
    pub fn from_nonbasic(m: usize, x_nonbasic: &[f64]) -> Result<Self> {
        Self::new(m, (1.0 + x_nonbasic.iter().map(|v| v * v).sum::<f64>()).sqrt())
    }

    pub fn vertex(m: usize) -> Result<Self> {
        Self::new(m, 1.0)
    }

    pub fn density(&self, r: f64) -> f64 {
        vertex_norm_density(r, self.lambda, self.m)
    }

    pub fn tail(&self, r0: f64) -> f64 {
        vertex_norm_tail(r0, self.lambda, self.m)
    }

    /// Location of the density maximum, `R = lambda sqrt((m - 1)/2)`.
    pub fn mode(&self) -> f64 {
        self.lambda * ((self.m as f64 - 1.0) / 2.0).sqrt()
    }
}
