//! Discrete pinning models against their continuum limit: partition
//! functions along an `N` ladder, the pinned set at `β = 0`, and the
//! averaged f.d.d. of the disordered pinned set against the CDPM.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{replica_rng, replica_stream, replicas, stream_note};
use crate::analysis::ks::{ks_one_sample, ks_two_sample, KsResult};
use crate::analysis::moments::{mean_se, variance_se};
use crate::analysis::report::{ExperimentReport, SeedScheme};
use crate::closed_sets::restricted_fdd_extract;
use crate::continuum::{
    conditioned_g_cdf, sample_cdpm_fdd, z_point, z_second_moment, BrownianPath, ChaosSpec, ZSurface,
};
use crate::discrete::{partition_dp, scale_couplings, DisorderField, DisorderLaw, PinnedSampler};
use crate::renewal::{build_kernel, renewal_function, KernelSpec, RenewalFunction, RenewalKernel};
use crate::{Error, Result};

const NAME: &str = "convergence";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub kernel: KernelSpec,
    pub disorder: DisorderLaw,
    pub beta_hat: f64,
    pub h_hat: f64,
    pub horizon: f64,
    pub n_ladder: Vec<usize>,
    pub z_replicas: usize,
    pub continuum_cells: usize,
    pub continuum_paths: usize,
    pub ks_bootstrap: usize,
    /// Slack, in combined bootstrap standard errors, for the KS ladder.
    pub ladder_se_multiple: f64,
    pub final_p_min: f64,
    pub var_se_multiple: f64,
    pub pinned_n: usize,
    pub pinned_replicas: usize,
    pub pinned_p_min: f64,
    /// Averaged f.d.d. at `beta_hat`: pinned sets of size `fdd_n` against
    /// CDPM draws on a grid of `fdd_cells`. Reported as KS tests only: at
    /// reachable `N` the lattice atoms near each time dominate.
    pub fdd_times: Vec<f64>,
    pub fdd_n: usize,
    pub fdd_cells: usize,
    pub fdd_replicas: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::PowerRenewal { alpha: 0.75, scale: 0.5, shift: None, n_max: 4096 },
            disorder: DisorderLaw::StandardNormal,
            beta_hat: 0.5,
            h_hat: 0.0,
            horizon: 1.0,
            n_ladder: vec![512, 1024, 2048],
            z_replicas: 2000,
            continuum_cells: 1 << 12,
            continuum_paths: 2000,
            ks_bootstrap: 200,
            ladder_se_multiple: 2.0,
            final_p_min: 0.001,
            var_se_multiple: 3.0,
            pinned_n: 2048,
            pinned_replicas: 10_000,
            pinned_p_min: 0.001,
            fdd_times: vec![0.5],
            fdd_n: 1024,
            fdd_cells: 1024,
            fdd_replicas: 1000,
        }
    }
}

struct Model {
    kernel: RenewalKernel,
    u: RenewalFunction,
}

pub fn experiment_convergence(config: &ConvergenceConfig, seed: u64) -> Result<ExperimentReport> {
    let c = config;
    let kernel = build_kernel(&c.kernel)?;
    let alpha = kernel.alpha();
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (1/2, 1)")));
    }
    let n_top = c.n_ladder.iter().chain([&c.pinned_n, &c.fdd_n]).copied().max().unwrap_or(0);
    let u = renewal_function(&kernel, n_top)?;
    let model = Model { kernel, u };
    let mut report = ExperimentReport::new(NAME, c, SeedScheme::new(seed, &stream_note(NAME)))?;
    partition_ladder(c, &model, seed, &mut report)?;
    pinned_free(c, &model, seed, &mut report)?;
    averaged_fdd(c, &model, seed, &mut report)?;
    Ok(report)
}

/// Standard error of a two-sample KS statistic by resampling both samples.
fn ks_se<R: Rng + ?Sized>(a: &[f64], b: &[f64], reps: usize, rng: &mut R) -> Result<f64> {
    let mut d = Vec::with_capacity(reps);
    for _ in 0..reps {
        let ra: Vec<f64> = (0..a.len()).map(|_| a[rng.random_range(0..a.len())]).collect();
        let rb: Vec<f64> = (0..b.len()).map(|_| b[rng.random_range(0..b.len())]).collect();
        d.push(ks_two_sample(&ra, &rb)?.statistic);
    }
    Ok(variance_se(&d)?.value.sqrt())
}

fn partition_ladder(c: &ConvergenceConfig, m: &Model, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let alpha = m.kernel.alpha();
    let spec = ChaosSpec::conditioned(alpha, c.beta_hat, c.h_hat, c.horizon, c.continuum_cells)?;
    let continuum = replicas(c.continuum_paths, |i| {
        let p = BrownianPath::from_stream(c.horizon, c.continuum_cells, seed, replica_stream(NAME, "continuum-path", i))?;
        z_point(&spec, &p, 0.0, c.horizon)
    })?;
    report.estimate("continuum mean Z", mean_se(&continuum)?);
    let series = z_second_moment(alpha, c.beta_hat, c.horizon)? - 1.0;
    report.value("series Var Z", series);
    let mut ladder: Vec<(usize, KsResult, f64)> = Vec::new();
    let mut last_var = None;
    for &n in &c.n_ladder {
        let span = (n as f64 * c.horizon).round() as usize;
        let cs = scale_couplings(c.beta_hat, c.h_hat, n, &m.kernel)?;
        let z = replicas(c.z_replicas, |i| {
            let mut rng = replica_rng(seed, NAME, &format!("disorder-{n}"), i);
            let field = DisorderField::generate(c.disorder, span + 1, &mut rng);
            partition_dp(&m.kernel, &m.u, &field, cs.beta_n, cs.h_n, 0, span)
        })?;
        let ks = ks_two_sample(&z, &continuum)?;
        let mut rng = replica_rng(seed, NAME, "ks-bootstrap", n);
        let se = ks_se(&z, &continuum, c.ks_bootstrap, &mut rng)?;
        report.ks(&format!("Z_N vs continuum Z, N={n}"), ks);
        report.value(&format!("KS bootstrap se, N={n}"), se);
        report.estimate(&format!("mean Z_N, N={n}"), mean_se(&z)?);
        let var = variance_se(&z)?;
        report.estimate(&format!("Var Z_N, N={n}"), var);
        last_var = Some(var);
        ladder.push((n, ks, se));
    }
    let monotone = ladder
        .windows(2)
        .all(|w| w[1].1.statistic <= w[0].1.statistic + c.ladder_se_multiple * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt());
    let stats: Vec<f64> = ladder.iter().map(|l| l.1.statistic).collect();
    report.verdict("KS ladder non-increasing", monotone, format!("KS statistics {stats:?}"));
    if let Some(&(n, ks, _)) = ladder.last() {
        report.verdict(
            "final Z_N law matches continuum",
            ks.p > c.final_p_min,
            format!("N = {n}: KS {:.4}, p = {:.4}", ks.statistic, ks.p),
        );
    }
    if let (Some(var), Some(n)) = (last_var, c.n_ladder.last()) {
        report.verdict(
            "Var Z_N matches series",
            var.within(series, c.var_se_multiple),
            format!("N = {n}: {:.5} ± {:.5} vs {series:.5}", var.value, var.se),
        );
    }
    Ok(())
}

fn pinned_free(c: &ConvergenceConfig, m: &Model, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let n = c.pinned_n;
    let alpha = m.kernel.alpha();
    let zero = DisorderField::from_values(c.disorder, vec![0.0; n + 1]);
    let sampler = PinnedSampler::new(&m.kernel, &zero, 0.0, 0.0, n)?;
    let half = n / 2;
    let g = replicas(c.pinned_replicas, |i| {
        let mut rng = replica_rng(seed, NAME, "pinned", i);
        let pts = sampler.sample_points(&mut rng);
        let k = pts.partition_point(|&p| p <= half);
        Ok(pts[k - 1] as f64 / n as f64)
    })?;
    let t = half as f64 / n as f64;
    let reference = |x: f64| conditioned_g_cdf(alpha, 1.0, t, x.clamp(0.0, t));
    let ks = ks_one_sample(&g, reference)?;
    report.ks(&format!("g_(T/2)/N at beta=0 vs reference, N={n}"), ks);
    report.value(&format!("exact lattice KS distance, N={n}"), lattice_distance(m, n, reference));
    report.verdict("pinned set converges at beta = 0", ks.p > c.pinned_p_min, format!("KS p = {:.4}", ks.p));
    Ok(())
}

/// Sup distance between the exact law of `g_{N/2}/N` under the pinned
/// renewal, `P(g = a) = u(a) Σ_{b > N/2} K(b−a) u(N−b) / u(N)`, and `reference`.
/// This is the KS statistic an infinite sample would see.
fn lattice_distance(m: &Model, n: usize, reference: impl Fn(f64) -> f64) -> f64 {
    let half = n / 2;
    let (mut below, mut worst) = (0.0, 0.0f64);
    for a in 0..=half {
        let tail: f64 = (half + 1..=n).map(|b| m.kernel.k(b - a) * m.u.get(n - b)).sum();
        let above = below + m.u.get(a) * tail / m.u.get(n);
        let f = reference(a as f64 / n as f64);
        worst = worst.max((f - below).abs()).max((f - above).abs());
        below = above;
    }
    worst
}

fn averaged_fdd(c: &ConvergenceConfig, m: &Model, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let alpha = m.kernel.alpha();
    let n = c.fdd_n;
    let times = &c.fdd_times;
    let cs = scale_couplings(c.beta_hat, c.h_hat, n, &m.kernel)?;
    let discrete = replicas(c.fdd_replicas, |i| {
        let mut rng = replica_rng(seed, NAME, "fdd-disorder", i);
        let field = DisorderField::generate(c.disorder, n + 1, &mut rng);
        let set = PinnedSampler::new(&m.kernel, &field, cs.beta_n, cs.h_n, n)?.sample(&mut rng);
        let scaled: Vec<f64> = times.iter().map(|t| t * n as f64).collect();
        let r = restricted_fdd_extract(&set, &scaled)?;
        Ok(r.pairs.iter().map(|p| (p.g / n as f64, p.d / n as f64)).collect::<Vec<_>>())
    })?;
    let spec = ChaosSpec::conditioned(alpha, c.beta_hat, c.h_hat, 1.0, c.fdd_cells)?;
    let continuum = replicas(c.fdd_replicas, |i| {
        let p = BrownianPath::from_stream(1.0, c.fdd_cells, seed, replica_stream(NAME, "fdd-path", i))?;
        let surface = ZSurface::new(spec, p, 1)?;
        let mut rng = replica_rng(seed, NAME, "fdd-cdpm", i);
        Ok(sample_cdpm_fdd(&surface, alpha, times, &mut rng)?.pairs)
    })?;
    for (j, t) in times.iter().enumerate() {
        for (side, pick) in [("g", 0), ("d", 1)] {
            let get = |v: &Vec<Vec<(f64, f64)>>| -> Vec<f64> {
                v.iter().map(|p| if pick == 0 { p[j].0 } else { p[j].1 }).collect()
            };
            let ks = ks_two_sample(&get(&discrete), &get(&continuum))?;
            let name = format!("averaged {side}_{t}: pinned N={n} vs CDPM");
            report.ks(&name, ks);
        }
    }
    Ok(())
}
