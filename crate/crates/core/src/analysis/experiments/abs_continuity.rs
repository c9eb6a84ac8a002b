//! The CDPM averaged over the environment with weights `Z(0,T)` is the
//! reference law of the pinned regenerative set.

use serde::{Deserialize, Serialize};

use super::{replica_rng, replica_stream, replicas, stream_note};
use crate::analysis::ks::{ks_weighted_bootstrap, WeightedGroups};
use crate::analysis::moments::mean_se;
use crate::analysis::report::{ExperimentReport, SeedScheme};
use crate::continuum::{conditioned_g_cdf, sample_cdpm_fdd, BrownianPath, ChaosSpec, PartitionField, ZSurface};
use crate::{Error, Result};

const NAME: &str = "averaged-abs-continuity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbsContinuityConfig {
    pub alpha: f64,
    pub beta_hat: f64,
    pub h_hat: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub cells: usize,
    pub replicas: usize,
    pub draws: usize,
    pub bootstrap: usize,
    pub p_min: f64,
    pub min_effective_size: f64,
    pub se_multiple: f64,
}

impl Default for AbsContinuityConfig {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            beta_hat: 0.5,
            h_hat: 0.0,
            horizon: 1.0,
            times: vec![0.5],
            cells: 1024,
            replicas: 10_000,
            draws: 16,
            bootstrap: 200,
            p_min: 0.001,
            min_effective_size: 100.0,
            se_multiple: 3.0,
        }
    }
}

/// Reference CDF of `g_t` on `[0, T]`.
fn g_cdf(alpha: f64, horizon: f64, t: f64) -> impl Fn(f64) -> f64 {
    move |x| conditioned_g_cdf(alpha, horizon, t, x.clamp(0.0, t))
}

/// Reference CDF of `d_t`. Reversing time maps the pinned set on `[0, T]`
/// to itself and `d_t` to `T − g_{T−t}`.
fn d_cdf(alpha: f64, horizon: f64, t: f64) -> impl Fn(f64) -> f64 {
    let s = horizon - t;
    move |y| 1.0 - conditioned_g_cdf(alpha, horizon, s, (horizon - y).clamp(0.0, s))
}

pub fn experiment_averaged_abs_continuity(config: &AbsContinuityConfig, seed: u64) -> Result<ExperimentReport> {
    let c = config;
    if c.h_hat != 0.0 {
        return Err(Error::Unsupported("the averaged law is the reference law only at h_hat = 0".into()));
    }
    if c.times.is_empty() || c.times.len() > 3 {
        return Err(Error::InvalidParameter("between one and three times".into()));
    }
    let mut report = ExperimentReport::new(NAME, c, SeedScheme::new(seed, &stream_note(NAME)))?;
    let spec = ChaosSpec::conditioned(c.alpha, c.beta_hat, 0.0, c.horizon, c.cells)?;
    let rows = replicas(c.replicas, |i| {
        let p = BrownianPath::from_stream(c.horizon, c.cells, seed, replica_stream(NAME, "path", i))?;
        let surface = ZSurface::new(spec, p, 1)?;
        let weight = surface.z(0.0, c.horizon)?;
        let mut rng = replica_rng(seed, NAME, "cdpm", i);
        let draws = (0..c.draws)
            .map(|_| Ok(sample_cdpm_fdd(&surface, c.alpha, &c.times, &mut rng)?.pairs))
            .collect::<Result<Vec<_>>>()?;
        Ok((weight, draws))
    })?;
    let weights: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mean = mean_se(&weights)?;
    report.estimate("mean weight Z(0,T)", mean);
    report.verdict("mean weight is one", mean.within(1.0, c.se_multiple), format!("{:.4} ± {:.4}", mean.value, mean.se));
    for (j, &t) in c.times.iter().enumerate() {
        for side in ["g", "d"] {
            let draws: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.1.iter().map(|p| if side == "g" { p[j].0 } else { p[j].1 }).collect())
                .collect();
            let groups = WeightedGroups::new(weights.clone(), draws)?;
            let mut rng = replica_rng(seed, NAME, &format!("bootstrap-{side}"), j);
            let r = if side == "g" {
                ks_weighted_bootstrap(&groups, g_cdf(c.alpha, c.horizon, t), c.bootstrap, &mut rng)?
            } else {
                ks_weighted_bootstrap(&groups, d_cdf(c.alpha, c.horizon, t), c.bootstrap, &mut rng)?
            };
            let name = format!("weighted {side}_{t} vs reference");
            report.weighted_ks(&name, r);
            report.verdict(&name, r.p > c.p_min, format!("KS {:.4}, bootstrap p = {:.4}, ESS {:.0}", r.statistic, r.p, r.effective_size));
            if r.effective_size < c.min_effective_size {
                report.flag_unreliable(&name);
            }
        }
    }
    Ok(report)
}
