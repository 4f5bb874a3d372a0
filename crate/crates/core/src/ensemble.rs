//! Gaussian LP instances.
//!
//! All entries of `(A, b, c)` are i.i.d. `N(0, sigma^2)`. A trial consumes its
//! own [`NormalStream`] in the fixed order: `A` row-major, then `c`, then `b`.
//! A [`FixedPartitionDraw`] reads the same stream but stops after `c`, so the
//! draw for trial `t` shares `A` and `c` with [`sample_instance`] for trial `t`.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::rng::NormalStream;
use crate::simplex::{self, LpStatus};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    pub master_seed: u64,
    pub trials: u64,
}

impl EnsembleConfig {
    pub fn new(n: usize, m: usize, sigma: f64, master_seed: u64, trials: u64) -> Result<Self> {
        let cfg = EnsembleConfig { n, m, sigma, master_seed, trials };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.m >= self.n {
            return Err(Error::Config(format!("need m < n, got m={} n={}", self.m, self.n)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// `r = m / n`.
    pub fn ratio(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    fn check_trial(&self, trial: u64) -> Result<()> {
        self.validate()?;
        if trial >= self.trials {
            return Err(Error::Config(format!("trial {trial} outside 0..{}", self.trials)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpInstance {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub trial: u64,
}

impl LpInstance {
    pub fn new(a: Matrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() || c.len() != a.cols() {
            return Err(Error::Shape(format!("A is {}x{}, b has {}, c has {}", a.rows(), a.cols(), b.len(), c.len())));
        }
        if a.rows() == 0 || a.rows() >= a.cols() {
            return Err(Error::Shape(format!("need 0 < m < n, A is {}x{}", a.rows(), a.cols())));
        }
        Ok(LpInstance { a, b, c, trial: 0 })
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// One JSON-lines record: `n, m, sigma, trial, A` (row-major), `b`, `c`.
    pub fn to_json_line(&self, sigma: f64) -> Result<String> {
        let rec = InstanceRecord {
            n: self.n(),
            m: self.m(),
            sigma,
            trial: self.trial,
            a: self.a.as_slice().to_vec(),
            b: self.b.clone(),
            c: self.c.clone(),
        };
        Ok(serde_json::to_string(&rec)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: InstanceRecord = serde_json::from_str(line)?;
        let a = Matrix::from_row_major(rec.m, rec.n, rec.a)?;
        let mut inst = LpInstance::new(a, rec.b, rec.c)?;
        inst.trial = rec.trial;
        Ok(inst)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    n: usize,
    m: usize,
    sigma: f64,
    trial: u64,
    #[serde(rename = "A")]
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

/// Partition-1 data: `B` is the last `m` columns of `A`, `N` the first `n - m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPartitionDraw {
    pub basis: Matrix,
    pub nonbasis: Matrix,
    pub c: Vec<f64>,
}

fn draw_a_and_c(cfg: &EnsembleConfig, stream: &mut NormalStream) -> (Matrix, Vec<f64>) {
    let mut a = vec![0.0; cfg.m * cfg.n];
    stream.fill_gaussian(&mut a, cfg.sigma);
    let mut c = vec![0.0; cfg.n];
    stream.fill_gaussian(&mut c, cfg.sigma);
    (Matrix::from_row_major(cfg.m, cfg.n, a).expect("sized above"), c)
}

pub fn sample_instance(cfg: &EnsembleConfig, trial: u64) -> Result<LpInstance> {
    cfg.check_trial(trial)?;
    let mut stream = NormalStream::for_trial(cfg.master_seed, trial);
    let (a, c) = draw_a_and_c(cfg, &mut stream);
    let mut b = vec![0.0; cfg.m];
    stream.fill_gaussian(&mut b, cfg.sigma);
    Ok(LpInstance { a, b, c, trial })
}

pub fn sample_fixed_partition(cfg: &EnsembleConfig, trial: u64) -> Result<FixedPartitionDraw> {
    cfg.check_trial(trial)?;
    let mut stream = NormalStream::for_trial(cfg.master_seed, trial);
    let (a, c) = draw_a_and_c(cfg, &mut stream);
    let k = cfg.n - cfg.m;
    let nonbasic: Vec<usize> = (0..k).collect();
    let basic: Vec<usize> = (k..cfg.n).collect();
    Ok(FixedPartitionDraw { basis: a.select_columns(&basic), nonbasis: a.select_columns(&nonbasic), c })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceClass {
    BoundedOptimal,
    Infeasible,
    Unbounded,
}

pub fn classify_instance(inst: &LpInstance) -> Result<InstanceClass> {
    let sol = simplex::solve(inst).map_err(|e| e.in_trial(inst.trial))?;
    Ok(match sol.status {
        LpStatus::Optimal => InstanceClass::BoundedOptimal,
        LpStatus::Infeasible => InstanceClass::Infeasible,
        LpStatus::Unbounded => InstanceClass::Unbounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, m: usize) -> EnsembleConfig {
        EnsembleConfig::new(n, m, 1.0, 99, 1_000_000).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig::new(4, 4, 1.0, 0, 1).is_err());
        assert!(EnsembleConfig::new(4, 0, 1.0, 0, 1).is_err());
        assert!(EnsembleConfig::new(4, 2, 0.0, 0, 1).is_err());
        assert!(EnsembleConfig::new(4, 2, -1.0, 0, 1).is_err());
        assert!(EnsembleConfig::new(4, 2, 1.0, 0, 0).is_err());
        let c = EnsembleConfig::new(4, 2, 1.0, 0, 3).unwrap();
        assert!(sample_instance(&c, 3).is_err());
        assert!(sample_instance(&c, 2).is_ok());
    }

    #[test]
    fn shapes_and_determinism() {
        let c = cfg(4, 2);
        let i1 = sample_instance(&c, 17).unwrap();
        let i2 = sample_instance(&c, 17).unwrap();
        assert_eq!(i1, i2);
        assert_eq!((i1.a.rows(), i1.a.cols(), i1.b.len(), i1.c.len()), (2, 4, 2, 4));
        assert_ne!(i1, sample_instance(&c, 18).unwrap());

        let d = sample_fixed_partition(&c, 17).unwrap();
        assert_eq!(d, sample_fixed_partition(&c, 17).unwrap());
        assert_eq!((d.basis.rows(), d.basis.cols()), (2, 2));
        assert_eq!((d.nonbasis.rows(), d.nonbasis.cols()), (2, 2));
        // shared layout with the full instance
        assert_eq!(d.c, i1.c);
        assert_eq!(d.basis, i1.a.select_columns(&[2, 3]));
        assert_eq!(d.nonbasis, i1.a.select_columns(&[0, 1]));
    }

    #[test]
    fn sigma_scales_entries_exactly() {
        let c1 = EnsembleConfig::new(5, 2, 1.0, 3, 10).unwrap();
        let c2 = EnsembleConfig::new(5, 2, 2.0, 3, 10).unwrap();
        let a = sample_instance(&c1, 4).unwrap();
        let b = sample_instance(&c2, 4).unwrap();
        for (x, y) in a.a.as_slice().iter().zip(b.a.as_slice()) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn pooled_moments_of_a() {
        // 10^5 instances of a 2x4 matrix; mean within 3 standard errors of 0,
        // variance within 3 of sigma^2.
        let c = cfg(4, 2);
        let (mut s1, mut s2, mut count) = (0.0, 0.0, 0usize);
        for t in 0..100_000 {
            let inst = sample_instance(&c, t).unwrap();
            for &v in inst.a.as_slice() {
                s1 += v;
                s2 += v * v;
                count += 1;
            }
        }
        let nf = count as f64;
        let mean = s1 / nf;
        let var = s2 / nf - mean * mean;
        assert!(mean.abs() < 3.0 / nf.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 3.0 * 2f64.sqrt() / nf.sqrt(), "var {var}");
    }

    #[test]
    fn classify_small_cases() {
        let inf = LpInstance::new(Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap(), vec![-1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(classify_instance(&inf).unwrap(), InstanceClass::Infeasible);
        let unb = LpInstance::new(Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap(), vec![0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(classify_instance(&unb).unwrap(), InstanceClass::Unbounded);
        let ok = LpInstance::new(Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap(), vec![4.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(classify_instance(&ok).unwrap(), InstanceClass::BoundedOptimal);
    }

    #[test]
    fn json_line_round_trip() {
        let c = EnsembleConfig::new(5, 3, 0.7, 11, 4).unwrap();
        let inst = sample_instance(&c, 2).unwrap();
        let line = inst.to_json_line(c.sigma).unwrap();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        for key in ["n", "m", "sigma", "trial", "A", "b", "c"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(LpInstance::from_json_line(&line).unwrap(), inst);
    }
}
