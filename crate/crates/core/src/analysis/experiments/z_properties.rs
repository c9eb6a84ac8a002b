//! Positivity, translation invariance, scaling and the renewal identity of
//! the continuum partition functions.

use serde::{Deserialize, Serialize};

use super::{replica_stream, replicas, stream_note};
use crate::analysis::ks::ks_two_sample;
use crate::analysis::moments::{correlation, mean_se};
use crate::analysis::report::{ExperimentReport, SeedScheme};
use crate::continuum::{
    renewal_identity_residual, z_point, z_point_positive, z_row, z_second_moment_series, BrownianPath, ChaosSpec,
    ZSurface,
};
use crate::{Error, Result};

const NAME: &str = "z-properties";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZPropertiesConfig {
    pub alpha: f64,
    /// Positivity: `β̂`, grid and number of paths.
    pub positivity_beta_hat: f64,
    pub positivity_cells: usize,
    pub positivity_paths: usize,
    pub positivity_max_rate: f64,
    /// Translation: law of `Z(shift, shift + span)` against `Z(0, span)` on `[0, 1]`.
    pub translation_beta_hat: f64,
    pub translation_shift: f64,
    pub translation_span: f64,
    pub translation_cells: usize,
    pub translation_paths: usize,
    pub translation_p_min: f64,
    pub decorrelation_se_multiple: f64,
    /// Scaling: `Z_β̂(0, A)` against `Z_{A^{α−1/2}β̂}(0, 1)`.
    pub scaling_beta_hat: f64,
    pub scaling_factor: f64,
    pub scaling_terms: usize,
    pub scaling_tolerance: f64,
    pub scaling_cells: usize,
    pub scaling_paths: usize,
    pub scaling_p_min: f64,
    /// Renewal identity split at `1/2` on `[0, 1]`, at grid `M` and `2M`
    /// with `M` quadrature nodes per direction at grid `M`.
    pub renewal_beta_hat: f64,
    pub renewal_cells: usize,
    pub renewal_paths: usize,
    pub renewal_min_shrink: f64,
}

impl Default for ZPropertiesConfig {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            positivity_beta_hat: 1.0,
            positivity_cells: 1 << 12,
            positivity_paths: 5000,
            positivity_max_rate: 1e-3,
            translation_beta_hat: 0.7,
            translation_shift: 0.25,
            translation_span: 0.5,
            translation_cells: 1 << 11,
            translation_paths: 2000,
            translation_p_min: 0.01,
            decorrelation_se_multiple: 4.0,
            scaling_beta_hat: 0.7,
            scaling_factor: 2.0,
            scaling_terms: 60,
            scaling_tolerance: 1e-12,
            scaling_cells: 1 << 11,
            scaling_paths: 2000,
            scaling_p_min: 0.01,
            renewal_beta_hat: 1.0,
            renewal_cells: 1 << 11,
            renewal_paths: 400,
            renewal_min_shrink: 0.3,
        }
    }
}

fn path(seed: u64, component: &str, i: usize, horizon: f64, cells: usize) -> Result<BrownianPath> {
    BrownianPath::from_stream(horizon, cells, seed, replica_stream(NAME, component, i))
}

pub fn experiment_z_properties(config: &ZPropertiesConfig, seed: u64) -> Result<ExperimentReport> {
    let c = config;
    let mut report = ExperimentReport::new(NAME, c, SeedScheme::new(seed, &stream_note(NAME)))?;
    positivity(c, seed, &mut report)?;
    translation(c, seed, &mut report)?;
    scaling(c, seed, &mut report)?;
    renewal(c, seed, &mut report)?;
    Ok(report)
}

fn positivity(c: &ZPropertiesConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let spec = ChaosSpec::conditioned(c.alpha, c.positivity_beta_hat, 0.0, 1.0, c.positivity_cells)?;
    let draws = replicas(c.positivity_paths, |i| {
        let p = path(seed, "positivity", i, 1.0, c.positivity_cells)?;
        z_point_positive(&spec, &p, 0.0, 1.0)
    })?;
    let bad = draws.iter().filter(|z| !(z.raw > 0.0)).count();
    let doublings: u32 = draws.iter().map(|z| z.doublings).sum();
    let rate = bad as f64 / c.positivity_paths as f64;
    report.value("non-positive Z(0,1) rate", rate);
    report.value("grid doublings used", doublings as f64);
    report.verdict(
        "positivity",
        rate < c.positivity_max_rate,
        format!("{bad} of {} raw values not positive", c.positivity_paths),
    );
    Ok(())
}

fn translation(c: &ZPropertiesConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let (t, u) = (c.translation_shift, c.translation_span);
    if !(t > 0.0 && u > 0.0 && t + u <= 1.0) {
        return Err(Error::InvalidParameter(format!("translation window ({t}, {t} + {u}) not inside [0, 1]")));
    }
    let spec = ChaosSpec::conditioned(c.alpha, c.translation_beta_hat, 0.0, 1.0, c.translation_cells)?;
    let m = c.translation_cells;
    // two independent path sets: one for Z(t, t+u), one for Z(0, u) and the
    // next block Z(u, u + min(u, 1−u))
    let shifted = replicas(c.translation_paths, |i| {
        z_point(&spec, &path(seed, "translation-shifted", i, 1.0, m)?, t, t + u)
    })?;
    let pairs = replicas(c.translation_paths, |i| {
        let p = path(seed, "translation-origin", i, 1.0, m)?;
        let q = (u * m as f64).round() as usize;
        let row0 = z_row(&spec, &p, 0, q)?;
        let row1 = z_row(&spec, &p, q, (m - q).min(q))?;
        Ok((row0[q], row1[row1.len() - 1]))
    })?;
    let origin: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let next: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let ks = ks_two_sample(&shifted, &origin)?;
    report.ks("Z(t,t+u) vs Z(0,u)", ks);
    report.verdict("translation invariance", ks.p > c.translation_p_min, format!("KS p = {:.4}", ks.p));
    let rho = correlation(&origin, &next)?;
    report.estimate("corr(Z(0,u), Z(u,2u))", rho);
    report.verdict(
        "disjoint blocks uncorrelated",
        rho.value.abs() < c.decorrelation_se_multiple * rho.se,
        format!("rho = {:.4}, se = {:.4}", rho.value, rho.se),
    );
    Ok(())
}

fn scaling(c: &ZPropertiesConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let a = c.scaling_factor;
    let b = c.scaling_beta_hat;
    let b1 = a.powf(c.alpha - 0.5) * b;
    let left = z_second_moment_series(c.alpha, b, a, c.scaling_terms)?;
    let right = z_second_moment_series(c.alpha, b1, 1.0, c.scaling_terms)?;
    let rel = (left.value / right.value - 1.0).abs();
    report.value("E[Z_b(0,A)^2]", left.value);
    report.value("E[Z_{A^(a-1/2) b}(0,1)^2]", right.value);
    report.verdict(
        "scaling identity of the second-moment series",
        rel <= c.scaling_tolerance && !left.underresolved && !right.underresolved,
        format!("relative difference {rel:.2e}"),
    );
    let m = c.scaling_cells;
    let wide = ChaosSpec::conditioned(c.alpha, b, 0.0, a, m)?;
    let unit = ChaosSpec::conditioned(c.alpha, b1, 0.0, 1.0, m)?;
    let za = replicas(c.scaling_paths, |i| z_point(&wide, &path(seed, "scaling-wide", i, a, m)?, 0.0, a))?;
    let z1 = replicas(c.scaling_paths, |i| z_point(&unit, &path(seed, "scaling-unit", i, 1.0, m)?, 0.0, 1.0))?;
    let ks = ks_two_sample(&za, &z1)?;
    report.ks("Z_b(0,A) vs Z_{A^(a-1/2) b}(0,1)", ks);
    report.verdict("scaling in distribution", ks.p > c.scaling_p_min, format!("KS p = {:.4}", ks.p));
    Ok(())
}

fn renewal(c: &ZPropertiesConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let m = c.renewal_cells;
    let spec = ChaosSpec::conditioned(c.alpha, c.renewal_beta_hat, 0.0, 1.0, m)?;
    let res = replicas(c.renewal_paths, |i| {
        let coarse = path(seed, "renewal", i, 1.0, m)?;
        let fine = coarse.refine();
        let mut out = [0.0; 2];
        for (k, p) in [coarse, fine].into_iter().enumerate() {
            let nodes = p.cells();
            let surface = ZSurface::new(spec.with_cells(nodes), p, 1)?;
            out[k] = renewal_identity_residual(&surface, c.alpha, 0.0, 0.5, 1.0, nodes)?.relative;
        }
        Ok(out)
    })?;
    let coarse = mean_se(&res.iter().map(|r| r[0]).collect::<Vec<_>>())?;
    let fine = mean_se(&res.iter().map(|r| r[1]).collect::<Vec<_>>())?;
    let shrink = 1.0 - fine.value / coarse.value;
    report.estimate(&format!("mean renewal residual, M={m}"), coarse);
    report.estimate(&format!("mean renewal residual, M={}", 2 * m), fine);
    report.value("renewal residual shrink", shrink);
    report.verdict(
        "renewal residual shrinks under refinement",
        shrink >= c.renewal_min_shrink,
        format!("{:.3e} -> {:.3e}, shrink {:.1}%", coarse.value, fine.value, 100.0 * shrink),
    );
    Ok(())
}
