//! Heavy-tailed renewal processes: kernels, renewal functions, regularity
//! checks and samplers.

mod bessel;
mod function;
mod kernel;
mod sample;

pub use bessel::{
    bessel_like_return_law, escape_probability, lamperti_p_up, BesselReturnLaw, ReturnLawSummary,
    ESCAPE_TOLERANCE,
};
pub use function::{
    asymptotic_ratio, check_asymptotics, check_coupling_bound, check_smoothness, renewal_function,
    renewal_function_direct, AsymptoticTrace, CouplingTrace, RenewalFunction, SmoothnessFit,
    SMOOTHNESS_EPSILON, SMOOTHNESS_MIN_DELTA, SMOOTHNESS_N0,
};
pub use kernel::{build_kernel, lattice_shift, KernelOrigin, KernelSpec, RenewalKernel, SlowlyVarying};
pub use sample::{sample_renewal, RenewalSampler};
