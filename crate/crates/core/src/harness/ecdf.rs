//! Empirical CDFs and Kolmogorov-Smirnov distances.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    sorted_samples: Vec<f64>,
    count: usize,
}

pub fn empirical_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(samples.to_vec())
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample {bad}")));
        }
        samples.sort_by(f64::total_cmp);
        let count = samples.len();
        Ok(EmpiricalCdf { sorted_samples: samples, count })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `#{samples <= x} / count`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted_samples.partition_point(|&s| s <= x) as f64 / self.count as f64
    }

    /// Linearly interpolated sample quantile (`p` in `[0, 1]`).
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let h = p * (self.count - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(self.count - 1);
        let w = h - lo as f64;
        self.sorted_samples[lo] * (1.0 - w) + self.sorted_samples[hi] * w
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn mean(&self) -> f64 {
        self.sorted_samples.iter().sum::<f64>() / self.count as f64
    }

    /// Sup distance to a continuous CDF, checking both corners of every step.
    pub fn ks_against<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.count as f64;
        self.sorted_samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                ((i + 1) as f64 / n - f).max(f - i as f64 / n)
            })
            .fold(0.0, f64::max)
    }

    /// As [`EmpiricalCdf::ks_against`] for a reference that can fail.
    pub fn try_ks_against<F: Fn(f64) -> Result<f64>>(&self, cdf: F) -> Result<f64> {
        let n = self.count as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.sorted_samples.iter().enumerate() {
            let f = cdf(x)?;
            d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
        }
        Ok(d)
    }

    /// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`.
    pub fn ks_two_sample(&self, other: &EmpiricalCdf) -> f64 {
        let (a, b) = (&self.sorted_samples, &other.sorted_samples);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0, 0);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl From<&EmpiricalCdf> for Quantiles {
    fn from(e: &EmpiricalCdf) -> Self {
        Quantiles {
            q05: e.quantile(0.05),
            q25: e.quantile(0.25),
            median: e.median(),
            q75: e.quantile(0.75),
            q95: e.quantile(0.95),
            min: e.sorted_samples[0],
            max: e.sorted_samples[e.count - 1],
            mean: e.mean(),
        }
    }
}
