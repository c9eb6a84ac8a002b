//! Mean one, the variance against the second-moment series, and the
//! Girsanov cross-check for `ĥ ≠ 0`.

use serde::{Deserialize, Serialize};

use super::{replica_stream, replicas, stream_note};
use crate::analysis::moments::{mean_se, paired_difference, variance_se};
use crate::analysis::report::{ExperimentReport, SeedScheme};
use crate::continuum::{girsanov_tilt, z_point, z_second_moment, BrownianPath, ChaosSpec};
use crate::{Error, Result};

const NAME: &str = "z-moments";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZMomentsConfig {
    pub alpha: f64,
    pub horizon: f64,
    pub cells: usize,
    pub paths: usize,
    pub beta_hats: Vec<f64>,
    /// `(β̂, ĥ)` of the Girsanov cross-check.
    pub girsanov: (f64, f64),
    pub se_multiple: f64,
}

impl Default for ZMomentsConfig {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            horizon: 1.0,
            cells: 1 << 12,
            paths: 10_000,
            beta_hats: vec![0.25, 0.5],
            girsanov: (0.5, 0.5),
            se_multiple: 3.0,
        }
    }
}

pub fn experiment_z_moments(config: &ZMomentsConfig, seed: u64) -> Result<ExperimentReport> {
    let c = config;
    let mut report = ExperimentReport::new(NAME, c, SeedScheme::new(seed, &stream_note(NAME)))?;
    let (gb, gh) = c.girsanov;
    if !(gb > 0.0) {
        return Err(Error::InvalidParameter("Girsanov check needs beta_hat > 0".into()));
    }
    let base = ChaosSpec::conditioned(c.alpha, 0.0, 0.0, c.horizon, c.cells)?;
    // per path: Z at each β̂, then Z_{β̂,ĥ} and Z_{β̂,0}·tilt for the Girsanov pair
    let rows = replicas(c.paths, |i| {
        let path = BrownianPath::from_stream(c.horizon, c.cells, seed, replica_stream(NAME, "path", i))?;
        let mut v = Vec::with_capacity(c.beta_hats.len() + 2);
        for &b in &c.beta_hats {
            v.push(z_point(&base.with_beta_hat(b), &path, 0.0, c.horizon)?);
        }
        let tilted = z_point(&base.with_beta_hat(gb).with_h_hat(gh), &path, 0.0, c.horizon)?;
        let plain = z_point(&base.with_beta_hat(gb), &path, 0.0, c.horizon)?;
        v.push(tilted);
        v.push(plain * girsanov_tilt(&path, gb, gh, c.horizon)?);
        Ok(v)
    })?;
    let column = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let k = c.se_multiple;
    for (j, &b) in c.beta_hats.iter().enumerate() {
        let z = column(j);
        let mean = mean_se(&z)?;
        report.estimate(&format!("mean Z, beta_hat={b}"), mean);
        report.verdict(
            &format!("E[Z] = 1 at beta_hat={b}"),
            mean.within(1.0, k),
            format!("{:.5} ± {:.5}", mean.value, mean.se),
        );
        let var = variance_se(&z)?;
        let series = z_second_moment(c.alpha, b, c.horizon)? - 1.0;
        report.estimate(&format!("Var Z, beta_hat={b}"), var);
        report.value(&format!("series Var Z, beta_hat={b}"), series);
        report.verdict(
            &format!("Var Z matches series at beta_hat={b}"),
            var.within(series, k),
            format!("{:.5} ± {:.5} vs {series:.5}", var.value, var.se),
        );
    }
    let n = c.beta_hats.len();
    let (direct, tilted) = (column(n), column(n + 1));
    let diff = paired_difference(&direct, &tilted)?;
    report.estimate("mean Z(beta_hat, h_hat)", mean_se(&direct)?);
    report.estimate("mean Z(beta_hat, 0) x tilt", mean_se(&tilted)?);
    report.estimate("Girsanov difference", diff);
    report.verdict(
        "pathwise and Girsanov means agree",
        diff.within(0.0, k),
        format!("difference {:.5} ± {:.5}", diff.value, diff.se),
    );
    Ok(report)
}
