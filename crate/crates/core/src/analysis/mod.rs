//! Statistics and the experiments that turn the model's limit theorems into
//! numerical checks.

mod dirichlet;
mod ks;
mod moments;
mod report;
mod experiments;

pub use dirichlet::{
    dirichlet_closed_form, dirichlet_integral_check, fit_bound, two_block_check, two_block_integral, BoundFit,
    DirichletCheck, IntegralMethod, TwoBlockCheck, BOUND_K_MAX, QMC_POINTS,
};
pub use ks::{
    kolmogorov_q, ks_2d_one_sample, ks_one_sample, ks_two_sample, ks_weighted_bootstrap, KsResult, Quadrants,
    WeightedGroups, WeightedKs, MIN_SAMPLE,
};
pub use moments::{correlation, fractional_moment, mean_se, median, paired_difference, variance_se, Estimate};
pub use report::{ExperimentReport, NamedEstimate, NamedTest, SeedScheme, Timing, Verdict};

pub use experiments::{
    experiment_averaged_abs_continuity, experiment_convergence, experiment_singularity, experiment_z_moments,
    experiment_z_properties, AbsContinuityConfig, ConvergenceConfig, SingularityConfig, ZMomentsConfig,
    ZPropertiesConfig, EXPERIMENTS,
};
