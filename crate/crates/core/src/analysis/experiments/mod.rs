//! The experiment suite. Each experiment takes a serializable config and a
//! master seed and returns an [`ExperimentReport`](super::ExperimentReport).
//! Replicas run in parallel on the current rayon pool; results are
//! collected in replica order, so reports do not depend on scheduling.

mod abs_continuity;
mod convergence;
mod singularity;
mod z_moments;
mod z_properties;

use rayon::prelude::*;

use crate::rng::{label, substream, StreamRng};
use crate::Result;

pub use abs_continuity::{experiment_averaged_abs_continuity, AbsContinuityConfig};
pub use convergence::{experiment_convergence, ConvergenceConfig};
pub use singularity::{experiment_singularity, SingularityConfig};
pub use z_moments::{experiment_z_moments, ZMomentsConfig};
pub use z_properties::{experiment_z_properties, ZPropertiesConfig};

/// Experiment names as used on the command line.
pub const EXPERIMENTS: [&str; 5] = ["convergence", "averaged-abs-continuity", "singularity", "z-properties", "z-moments"];

/// Generator of replica `i` of `component` in `experiment`.
fn replica_rng(seed: u64, experiment: &str, component: &str, i: usize) -> StreamRng {
    substream(seed, &[label(experiment), label(component), i as u64])
}

/// Stream id of replica `i`, for constructors that take `(seed, stream)`.
fn replica_stream(experiment: &str, component: &str, i: usize) -> u64 {
    crate::rng::stream_id(&[label(experiment), label(component), i as u64])
}

/// `f(0), …, f(n−1)` in parallel, in order.
fn replicas<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

fn stream_note(experiment: &str) -> String {
    format!("[label(\"{experiment}\"), label(component), replica]")
}
