//! Discrete disordered pinning: environment, coupling scales, exact
//! partition functions, polynomial chaos and exact sampling.

mod chaos;
mod coupling;
mod disorder;
mod partition;
mod sampler;

pub use chaos::{chaos_expansion_exact, expected_visits, second_moment_exact, MAX_FULL_ORDER_R};
pub use coupling::{scale_couplings, scale_couplings_with, CouplingScale};
pub use disorder::{lambda_of, DisorderField, DisorderLaw};
pub use partition::{
    full_anchor_set, log_partition_dp, log_partition_row, partition_dp, partition_surface,
    DiscreteZSurface, LOG_DOMAIN_THRESHOLD,
};
pub use sampler::{sample_pinned, PinnedSampler};
