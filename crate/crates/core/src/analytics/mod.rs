//! Closed-form laws and the numerical kernels they need.

pub mod quad;
mod rmt;
mod scaling;
mod special;
mod vertex;

pub use rmt::{
    cauchy_jpd, half_normal_cdf, i_sample, i_star, moment_kn, p_u_density, sample_cauchy_deltas, spectral_cdf,
    spectral_density, u_statistic, wishart_eigenvalues,
};
pub use scaling::{
    ccdf_finite_size, eta, f_min1_zero_density, positive_fraction, scaling_cdf, scaling_median, ScalingKind, ScalingLaw,
};
pub use special::{erf, erfc, erfcx, ln_gamma, ERFCX_SERIES_LIMIT};
pub use vertex::{
    vertex_component_cdf, vertex_component_density, vertex_norm_density, vertex_norm_tail, VertexNormLaw,
};
