//! Continuum objects: Brownian environments, the partition-function field
//! `Z(s, t)` built from its Wiener chaos expansion, the α-stable regenerative
//! set and the continuum disordered pinning model.

mod brownian;
mod cdpm;
mod chaos;
mod grid;
mod regen;
mod surface;

pub use brownian::{sample_brownian, BrownianPath, PathOrigin};
pub use cdpm::{
    cdpm_fdd_density, martingale_fn, renewal_identity_residual, sample_cdpm_fdd, CdpmDraw, RenewalResidual,
    MAX_PROPOSALS,
};
pub use chaos::{
    chaos_kernel, girsanov_tilt, second_moment_term, z_second_moment, z_second_moment_series, ChaosSpec,
    ChaosVariant, GridRule, SecondMomentSeries,
};
pub use grid::{z_between, z_column, z_point, z_point_positive, z_row, ChaosRow, Direction, PositiveZ, MAX_DOUBLINGS};
pub use regen::{
    beta_split, conditioned_d_given_g, conditioned_pair_density, conditioned_g_cdf, conditioned_g_density, conditioned_pair_from_uniforms,
    fdd_density_reference, free_g_density, sample_conditioned_pair, sample_regen_conditioned, RegenSample,
    MAX_LEVEL,
};
pub use surface::{PartitionField, Profile, UnitField, ZSurface};
