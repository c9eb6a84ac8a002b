//! Fractional moments of `Z`, decay of the martingale `f_n` along the
//! reference set, and covering sums of the reference set.

use serde::{Deserialize, Serialize};

use super::{replica_rng, replica_stream, replicas, stream_note};
use crate::analysis::moments::{fractional_moment, median};
use crate::analysis::report::{ExperimentReport, SeedScheme};
use crate::closed_sets::covering_sum;
use crate::continuum::{
    martingale_fn, sample_regen_conditioned, z_point_positive, BrownianPath, ChaosSpec, PartitionField, ZSurface,
};
use crate::{Error, Result};

const NAME: &str = "singularity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingularityConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub moment_beta_hats: Vec<f64>,
    pub moment_cells: usize,
    pub moment_paths: usize,
    pub se_multiple: f64,
    pub martingale_beta_hat: f64,
    pub martingale_levels: Vec<u32>,
    pub martingale_cells: usize,
    pub martingale_pairs: usize,
    pub martingale_regen_level: u32,
    /// Largest accepted median of `f_{last}/f_{first}`.
    pub martingale_max_ratio: f64,
    pub covering_levels: Vec<u32>,
    pub covering_samples: usize,
    pub covering_regen_level: u32,
}

impl Default for SingularityConfig {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            gamma: 0.4,
            moment_beta_hats: vec![0.1, 0.2, 0.4],
            moment_cells: 1 << 11,
            moment_paths: 10_000,
            se_multiple: 3.0,
            martingale_beta_hat: 1.0,
            martingale_levels: (2..=8).collect(),
            martingale_cells: 1 << 12,
            martingale_pairs: 400,
            martingale_regen_level: 16,
            martingale_max_ratio: 0.5,
            covering_levels: (6..=14).collect(),
            covering_samples: 400,
            covering_regen_level: 20,
        }
    }
}

pub fn experiment_singularity(config: &SingularityConfig, seed: u64) -> Result<ExperimentReport> {
    let c = config;
    if !(c.alpha > 0.5 && c.alpha < 1.0) || !(c.gamma > 0.0 && c.gamma < 0.5) {
        return Err(Error::InvalidParameter(format!("alpha {} in (1/2, 1) and gamma {} in (0, 1/2) required", c.alpha, c.gamma)));
    }
    let mut report = ExperimentReport::new(NAME, c, SeedScheme::new(seed, &stream_note(NAME)))?;
    fractional_moments(c, seed, &mut report)?;
    martingale(c, seed, &mut report)?;
    covering(c, seed, &mut report)?;
    Ok(report)
}

fn fractional_moments(c: &SingularityConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let base = ChaosSpec::conditioned(c.alpha, 0.0, 0.0, 1.0, c.moment_cells)?;
    let rows = replicas(c.moment_paths, |i| {
        let p = BrownianPath::from_stream(1.0, c.moment_cells, seed, replica_stream(NAME, "moment-path", i))?;
        c.moment_beta_hats
            .iter()
            .map(|&b| Ok(z_point_positive(&base.with_beta_hat(b), &p, 0.0, 1.0)?.value))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut values = Vec::new();
    for (j, &b) in c.moment_beta_hats.iter().enumerate() {
        let z: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let e = fractional_moment(&z, c.gamma)?;
        report.estimate(&format!("E[Z^gamma], beta_hat={b}"), e);
        if b > 0.0 {
            report.value(&format!("(1 - E[Z^gamma])/beta_hat^2, beta_hat={b}"), (1.0 - e.value) / (b * b));
        }
        report.verdict(
            &format!("E[Z^gamma] < 1 at beta_hat={b}"),
            1.0 - e.value > c.se_multiple * e.se,
            format!("{:.6} ± {:.6}", e.value, e.se),
        );
        values.push(e.value);
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    report.verdict("E[Z^gamma] decreasing in beta_hat", decreasing, format!("{values:?}"));
    Ok(())
}

fn martingale(c: &SingularityConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let levels = &c.martingale_levels;
    if levels.len() < 2 || levels.iter().any(|&n| n > c.martingale_regen_level) {
        return Err(Error::InvalidParameter("need two or more martingale levels, all within the regen level".into()));
    }
    let spec = ChaosSpec::conditioned(c.alpha, c.martingale_beta_hat, 0.0, 1.0, c.martingale_cells)?;
    let rows = replicas(c.martingale_pairs, |i| {
        let mut rng = replica_rng(seed, NAME, "martingale-regen", i);
        let regen = sample_regen_conditioned(c.alpha, 1.0, c.martingale_regen_level, &mut rng)?;
        let p = BrownianPath::from_stream(1.0, c.martingale_cells, seed, replica_stream(NAME, "martingale-path", i))?;
        let surface = ZSurface::new(spec, p, 1)?;
        let f = levels.iter().map(|&n| martingale_fn(&surface, &regen, n)).collect::<Result<Vec<f64>>>()?;
        // f_n Z(0,T) is the product of the block values, of mean one
        let z = surface.z(0.0, 1.0)?;
        Ok((f, z))
    })?;
    for (j, n) in levels.iter().enumerate() {
        let f: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
        report.value(&format!("median f_{n}"), median(&f)?);
    }
    let last = levels.len() - 1;
    let products: Vec<f64> = rows.iter().map(|r| r.0[last] * r.1).collect();
    let mean = crate::analysis::moments::mean_se(&products)?;
    report.estimate(&format!("mean f_{} Z(0,T)", levels[last]), mean);
    report.verdict(
        "block products have mean one",
        mean.within(1.0, c.se_multiple),
        format!("{:.4} ± {:.4}", mean.value, mean.se),
    );
    let ratios: Vec<f64> = rows.iter().map(|r| r.0[last] / r.0[0]).collect();
    let ratio = median(&ratios)?;
    report.value(&format!("median f_{}/f_{}", levels[last], levels[0]), ratio);
    report.verdict(
        "martingale ratio small",
        ratio < c.martingale_max_ratio,
        format!("median f_{}/f_{} = {ratio:.4}", levels[last], levels[0]),
    );
    Ok(())
}

fn covering(c: &SingularityConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let exponent = 2.0 * c.alpha - 1.0;
    if c.covering_levels.iter().any(|&n| n > c.covering_regen_level) {
        return Err(Error::InvalidParameter("covering levels exceed the regen level".into()));
    }
    let rows = replicas(c.covering_samples, |i| {
        let mut rng = replica_rng(seed, NAME, "covering-regen", i);
        let regen = sample_regen_conditioned(c.alpha, 1.0, c.covering_regen_level, &mut rng)?;
        c.covering_levels.iter().map(|&n| covering_sum(&regen.set, n, exponent, 1.0)).collect::<Result<Vec<f64>>>()
    })?;
    let mut medians = Vec::new();
    for (j, n) in c.covering_levels.iter().enumerate() {
        let m = median(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())?;
        report.value(&format!("median covering sum, n={n}"), m);
        medians.push(m);
    }
    report.verdict(
        "covering sums increasing in n",
        medians.windows(2).all(|w| w[1] > w[0]),
        format!("{medians:?}"),
    );
    Ok(())
}
