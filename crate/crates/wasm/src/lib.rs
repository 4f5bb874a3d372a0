//! Browser bindings: closed-form curves and a small spectrum sampler, each
//! returned as a JSON string for `www/index.html` to plot.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use faylab::analytics::{
    ccdf_finite_size, scaling_cdf, spectral_cdf, spectral_density, vertex_norm_tail, wishart_eigenvalues, ScalingKind,
    ScalingLaw, VertexNormLaw,
};
use faylab::harness::EmpiricalCdf;
use faylab::rng::NormalStream;

#[derive(Serialize)]
struct ScalingCurve {
    x: Vec<f64>,
    asymptotic: Vec<f64>,
    finite_size: Vec<f64>,
}

#[derive(Serialize)]
struct VertexTail {
    r0: Vec<f64>,
    tail: Vec<f64>,
    density: Vec<f64>,
    mode: f64,
}

#[derive(Serialize)]
struct Spectrum {
    centers: Vec<f64>,
    histogram: Vec<f64>,
    density: Vec<f64>,
    ks: f64,
    mean: f64,
    count: usize,
}

fn js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

fn scaling_curve_json(n: usize, m: usize, sigma: f64, x_max: f64, points: usize) -> faylab::Result<String> {
    let law = ScalingLaw::new(ScalingKind::DeltaRate, n, m, sigma)?;
    let x = grid(0.0, x_max, points);
    let asymptotic = x.iter().map(|&v| scaling_cdf(v)).collect();
    let finite_size = x
        .iter()
        .map(|&v| ccdf_finite_size(v / law.eta, n, m, sigma).map(|q| 1.0 - q))
        .collect::<faylab::Result<_>>()?;
    Ok(serde_json::to_string(&ScalingCurve { x, asymptotic, finite_size })?)
}

fn vertex_tail_json(m: usize, lambda: f64, r_max: f64, points: usize) -> faylab::Result<String> {
    let law = VertexNormLaw::new(m, lambda)?;
    let r0 = grid(0.0, r_max, points);
    let tail = r0.iter().map(|&r| vertex_norm_tail(r, lambda, m)).collect();
    let density = r0.iter().map(|&r| law.density(r)).collect();
    Ok(serde_json::to_string(&VertexTail { r0, tail, density, mode: law.mode() })?)
}

fn spectrum_json(m: usize, matrices: usize, seed: u64, bins: usize) -> faylab::Result<String> {
    if m == 0 || matrices == 0 || bins == 0 {
        return Err(faylab::Error::Config("m, matrices and bins must be positive".into()));
    }
    let mut eigs = Vec::with_capacity(m * matrices);
    for t in 0..matrices as u64 {
        let mut stream = NormalStream::for_trial(seed, t);
        eigs.extend(wishart_eigenvalues(m, &mut stream)?);
    }
    let width = 2.5 / bins as f64;
    let mut histogram = vec![0.0; bins];
    for &s in &eigs {
        let k = ((s / width) as usize).min(bins - 1);
        histogram[k] += 1.0;
    }
    let scale = 1.0 / (eigs.len() as f64 * width);
    histogram.iter_mut().for_each(|h| *h *= scale);
    let centers: Vec<f64> = (0..bins).map(|k| (k as f64 + 0.5) * width).collect();
    let density = centers.iter().map(|&s| spectral_density(s)).collect();
    let count = eigs.len();
    let ecdf = EmpiricalCdf::new(eigs)?;
    let spectrum =
        Spectrum { centers, histogram, density, ks: ecdf.ks_against(spectral_cdf), mean: ecdf.mean(), count };
    Ok(serde_json::to_string(&spectrum)?)
}

/// `F(x)` and the finite-size CDF of `x_Delta` on `[0, x_max]`.
#[wasm_bindgen]
pub fn scaling_curve(n: usize, m: usize, sigma: f64, x_max: f64, points: usize) -> Result<String, JsError> {
    scaling_curve_json(n, m, sigma, x_max, points).map_err(js)
}

/// `Prob(R > R0)` and the density of `R` on `[0, r_max]`.
#[wasm_bindgen]
pub fn vertex_tail(m: usize, lambda: f64, r_max: f64, points: usize) -> Result<String, JsError> {
    vertex_tail_json(m, lambda, r_max, points).map_err(js)
}

/// Eigenvalue histogram of `matrices` draws of `B^T B` against the limiting density.
#[wasm_bindgen]
pub fn spectrum(m: usize, matrices: usize, seed: u64, bins: usize) -> Result<String, JsError> {
    spectrum_json(m, matrices, seed, bins).map_err(js)
}
