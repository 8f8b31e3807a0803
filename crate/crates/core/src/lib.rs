//! Bayesian optimization with rectified max-value entropy search.
//!
//! The crate provides a zero-mean GP surrogate with a squared-exponential ARD
//! kernel, numerically careful Gaussian primitives, max-value sampling, the
//! RMES, MES, EI and UCB acquisition functions, and a gradient-based
//! acquisition optimizer with common random numbers.

pub mod acq_optimizer;
pub mod acquisition;
pub mod error;
pub mod gaussian_stats;
pub mod gp;
pub mod max_value_sampler;
pub mod rng;
pub mod verify;

pub use acq_optimizer::{
    argmax_posterior_mean, draw_nu_block, optimize_acquisition, AdamState, Maximizer, NuBlock, OptimConfig,
};
pub use acquisition::{
    ei_value, mes_value, rmes_value, ucb_value, AcqContext, Acquisition, AcquisitionKind, ModelAcquisition,
    RectifiedDensityParams,
};
pub use error::{Error, Result};
pub use gp::{
    log_marginal_likelihood, mle_fit, Dataset, Domain, KernelHyperparams, MleConfig, PosteriorModel,
    PredictiveStats,
};
pub use max_value_sampler::{
    draw_posterior_function, gumbel_sample_max_values, sample_max_values, MaxValueSet, PosteriorFunctionSample,
    SamplerConfig,
};
