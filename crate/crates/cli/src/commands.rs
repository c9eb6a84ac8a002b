//! Subcommand configs and their runs.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use pinning_core::analysis::{
    dirichlet_integral_check, experiment_averaged_abs_continuity, experiment_convergence,
    experiment_singularity, experiment_z_moments, experiment_z_properties, ExperimentReport, SeedScheme,
};
use pinning_core::closed_sets::restricted_fdd_extract;
use pinning_core::continuum::{
    sample_cdpm_fdd, sample_regen_conditioned, z_point, BrownianPath, ChaosSpec, ZSurface,
};
use pinning_core::discrete::{partition_dp, scale_couplings, DisorderField, DisorderLaw, PinnedSampler};
use pinning_core::renewal::{
    asymptotic_ratio, build_kernel, check_coupling_bound, check_smoothness, renewal_function,
    sample_renewal as draw_renewal,
    KernelOrigin, KernelSpec, RenewalKernel,
};
use pinning_core::rng::{label, stream_id, substream};

use crate::Overrides;

pub struct Output {
    pub report: ExperimentReport,
    pub csv: Option<String>,
}

/// Config from the file (or defaults), as a typed value.
fn load<C: DeserializeOwned + Default>(config: Option<Value>) -> Result<C> {
    match config {
        Some(v) => serde_json::from_value(v).context("config"),
        None => Ok(C::default()),
    }
}

/// Flags not consumed by a subcommand are usage errors.
fn leftover(o: &Overrides, command: &str) -> Result<()> {
    let set: Vec<&str> = [
        ("--N", o.n.is_some()),
        ("--alpha", o.alpha.is_some()),
        ("--beta", o.beta.is_some()),
        ("--h", o.h.is_some()),
        ("--beta-hat", o.beta_hat.is_some()),
        ("--h-hat", o.h_hat.is_some()),
        ("--samples", o.samples.is_some()),
        ("--cells", o.cells.is_some()),
        ("--horizon", o.horizon.is_some()),
        ("--level", o.level.is_some()),
        ("--chi", o.chi.is_some()),
        ("--k", o.k.is_some()),
        ("--conditioned", o.conditioned.is_some()),
    ]
    .into_iter()
    .filter_map(|(name, on)| on.then_some(name))
    .collect();
    if !set.is_empty() {
        bail!("{command} does not take {}", set.join(", "));
    }
    Ok(())
}

fn report<C: Serialize>(command: &str, config: &C, seed: u64, streams: &str) -> Result<ExperimentReport> {
    Ok(ExperimentReport::new(command, config, SeedScheme::new(seed, streams))?)
}

fn default_kernel() -> KernelSpec {
    KernelSpec::PurePower { alpha: 0.75, n_max: 1000 }
}

/// Raw couplings `(β, h)` or scaled ones `(β̂, ĥ)` mapped to `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Couplings {
    Raw { beta: f64, h: f64 },
    Scaled { beta_hat: f64, h_hat: f64 },
}

impl Default for Couplings {
    fn default() -> Self {
        Couplings::Raw { beta: 0.0, h: 0.0 }
    }
}

impl Couplings {
    fn apply(&mut self, o: &mut Overrides) -> Result<()> {
        let raw = o.beta.is_some() || o.h.is_some();
        let scaled = o.beta_hat.is_some() || o.h_hat.is_some();
        if raw && scaled {
            bail!("give either --beta/--h or --beta-hat/--h-hat");
        }
        if raw {
            let (b0, h0) = match *self {
                Couplings::Raw { beta, h } => (beta, h),
                Couplings::Scaled { .. } => (0.0, 0.0),
            };
            *self = Couplings::Raw { beta: o.beta.take().unwrap_or(b0), h: o.h.take().unwrap_or(h0) };
        }
        if scaled {
            let (b0, h0) = match *self {
                Couplings::Scaled { beta_hat, h_hat } => (beta_hat, h_hat),
                Couplings::Raw { .. } => (0.0, 0.0),
            };
            *self = Couplings::Scaled {
                beta_hat: o.beta_hat.take().unwrap_or(b0),
                h_hat: o.h_hat.take().unwrap_or(h0),
            };
        }
        Ok(())
    }

    fn resolve(&self, n: usize, kernel: &RenewalKernel) -> Result<(f64, f64)> {
        Ok(match *self {
            Couplings::Raw { beta, h } => (beta, h),
            Couplings::Scaled { beta_hat, h_hat } => {
                let c = scale_couplings(beta_hat, h_hat, n, kernel)?;
                (c.beta_n, c.h_n)
            }
        })
    }
}

/// Kernel table long enough for `n`.
fn kernel_for(spec: &KernelSpec, n: usize) -> Result<RenewalKernel> {
    let k = build_kernel(spec)?;
    if n > k.n_max() {
        bail!("N = {n} exceeds the kernel's n_max = {}", k.n_max());
    }
    Ok(k)
}

fn points_csv(sets: &[Vec<f64>]) -> String {
    let mut s = String::from("sample,point\n");
    for (i, set) in sets.iter().enumerate() {
        for p in set {
            writeln!(s, "{i},{p}").expect("string write");
        }
    }
    s
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in v {
        sum += x;
        n += 1;
    }
    sum / n.max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleRenewalConfig {
    pub kernel: KernelSpec,
    #[serde(rename = "N")]
    pub n: usize,
    /// Condition on `N ∈ τ`.
    pub conditioned: bool,
    pub samples: usize,
}

impl Default for SampleRenewalConfig {
    fn default() -> Self {
        Self { kernel: default_kernel(), n: 1000, conditioned: false, samples: 100 }
    }
}

pub fn sample_renewal(config: Option<Value>, o: &Overrides, seed: u64) -> Result<Output> {
    let mut o = o.clone();
    let mut c: SampleRenewalConfig = load(config)?;
    c.n = o.n.take().unwrap_or(c.n);
    c.samples = o.samples.take().unwrap_or(c.samples);
    c.conditioned = o.conditioned.take().unwrap_or(c.conditioned);
    leftover(&o, "sample-renewal")?;
    let kernel = kernel_for(&c.kernel, c.n)?;
    let u = if c.conditioned { Some(renewal_function(&kernel, c.n)?) } else { None };
    let mut rng = substream(seed, &[label("sample-renewal")]);
    let sets: Vec<Vec<f64>> = (0..c.samples)
        .map(|_| Ok(draw_renewal(&kernel, u.as_ref(), c.n, c.conditioned, &mut rng)?.iter().map(|&p| p as f64).collect()))
        .collect::<Result<_>>()?;
    let mut r = report("sample-renewal", &c, seed, "[label(\"sample-renewal\")], one stream for all samples")?;
    r.value("mean points per sample", mean(sets.iter().map(|s| s.len() as f64)));
    r.value("mean last point", mean(sets.iter().map(|s| s.last().copied().unwrap_or(0.0))));
    if c.conditioned {
        let all = sets.iter().all(|s| s.last() == Some(&(c.n as f64)));
        r.verdict("conditioned samples end at N", all, format!("{} samples", sets.len()));
    }
    Ok(Output { report: r, csv: Some(points_csv(&sets)) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub kernel: KernelSpec,
    pub disorder: DisorderLaw,
    pub couplings: Couplings,
    #[serde(rename = "N")]
    pub n: usize,
    /// Left end `a`; the right end is `N`.
    pub start: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { kernel: default_kernel(), disorder: DisorderLaw::StandardNormal, couplings: Couplings::default(), n: 100, start: 0 }
    }
}

pub fn partition(config: Option<Value>, o: &Overrides, seed: u64) -> Result<Output> {
    let mut o = o.clone();
    let mut c: PartitionConfig = load(config)?;
    c.n = o.n.take().unwrap_or(c.n);
    c.couplings.apply(&mut o)?;
    leftover(&o, "partition")?;
    if c.start >= c.n {
        bail!("start {} must be below N = {}", c.start, c.n);
    }
    let kernel = kernel_for(&c.kernel, c.n)?;
    let u = renewal_function(&kernel, c.n)?;
    let (beta, h) = c.couplings.resolve(c.n, &kernel)?;
    let disorder = DisorderField::generate(c.disorder, c.n + 1, &mut substream(seed, &[label("partition"), label("disorder")]));
    let z = partition_dp(&kernel, &u, &disorder, beta, h, c.start, c.n)?;
    let mut r = report("partition", &c, seed, "[label(\"partition\"), label(\"disorder\")]")?;
    r.value("beta", beta);
    r.value("h", h);
    r.value("Z", z);
    Ok(Output { report: r, csv: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplePinningConfig {
    pub kernel: KernelSpec,
    pub disorder: DisorderLaw,
    pub couplings: Couplings,
    #[serde(rename = "N")]
    pub n: usize,
    /// Draws for the single disorder realization.
    pub samples: usize,
}

impl Default for SamplePinningConfig {
    fn default() -> Self {
        Self {
            kernel: default_kernel(),
            disorder: DisorderLaw::StandardNormal,
            couplings: Couplings::Scaled { beta_hat: 0.5, h_hat: 0.0 },
            n: 256,
            samples: 100,
        }
    }
}

pub fn sample_pinning(config: Option<Value>, o: &Overrides, seed: u64) -> Result<Output> {
    let mut o = o.clone();
    let mut c: SamplePinningConfig = load(config)?;
    c.n = o.n.take().unwrap_or(c.n);
    c.samples = o.samples.take().unwrap_or(c.samples);
    c.couplings.apply(&mut o)?;
    leftover(&o, "sample-pinning")?;
    let kernel = kernel_for(&c.kernel, c.n)?;
    let (beta, h) = c.couplings.resolve(c.n, &kernel)?;
    let disorder = DisorderField::generate(c.disorder, c.n + 1, &mut substream(seed, &[label("sample-pinning"), label("disorder")]));
    let sampler = PinnedSampler::new(&kernel, &disorder, beta, h, c.n)?;
    let mut rng = substream(seed, &[label("sample-pinning"), label("draws")]);
    let sets: Vec<Vec<f64>> =
        (0..c.samples).map(|_| sampler.sample_points(&mut rng).iter().map(|&p| p as f64).collect()).collect();
    let mut r = report("sample-pinning", &c, seed, "[label(\"sample-pinning\"), label(\"disorder\" | \"draws\")]")?;
    r.value("beta", beta);
    r.value("h", h);
    r.value("ln W(0, N)", sampler.ln_total_weight());
    r.value("mean contact fraction", mean(sets.iter().map(|s| (s.len() - 1) as f64 / c.n as f64)));
    Ok(Output { report: r, csv: Some(points_csv(&sets)) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleRegenConfig {
    pub alpha: f64,
    pub horizon: f64,
    /// Bisection depth.
    pub level: u32,
    pub samples: usize,
    /// Times at which `(g_t, d_t)` is summarized.
    pub times: Vec<f64>,
}

impl Default for SampleRegenConfig {
    fn default() -> Self {
        Self { alpha: 0.75, horizon: 1.0, level: 12, samples: 100, times: vec![0.5] }
    }
}

pub fn sample_regen(config: Option<Value>, o: &Overrides, seed: u64) -> Result<Output> {
    let mut o = o.clone();
    let mut c: SampleRegenConfig = load(config)?;
    c.alpha = o.alpha.take().unwrap_or(c.alpha);
    c.horizon = o.horizon.take().unwrap_or(c.horizon);
    c.level = o.level.take().unwrap_or(c.level);
    c.samples = o.samples.take().unwrap_or(c.samples);
    leftover(&o, "sample-regen")?;
    let mut rng = substream(seed, &[label("sample-regen")]);
    let mut sets = Vec::with_capacity(c.samples);
    let mut pairs = Vec::with_capacity(c.samples);
    for _ in 0..c.samples {
        let s = sample_regen_conditioned(c.alpha, c.horizon, c.level, &mut rng)?;
        pairs.push(restricted_fdd_extract(&s.set, &c.times)?.pairs);
        sets.push(s.set.points().to_vec());
    }
    let mut r = report("sample-regen", &c, seed, "[label(\"sample-regen\")], one stream for all samples")?;
    r.value("mean points per sample", mean(sets.iter().map(|s| s.len() as f64)));
    for (j, t) in c.times.iter().enumerate() {
        r.value(&format!("mean g_{t}"), mean(pairs.iter().map(|p| p[j].g)));
        r.value(&format!("mean d_{t}"), mean(pairs.iter().map(|p| p[j].d)));
    }
    Ok(Output { report: r, csv: Some(points_csv(&sets)) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuumZConfig {
    pub alpha: f64,
    pub beta_hat: f64,
    pub h_hat: f64,
    pub horizon: f64,
    /// Grid size `M`.
    pub cells: usize,
    /// Rows of the surface dump at dyadic anchors of this level.
    pub anchor_level: u32,
}

impl Default for ContinuumZConfig {
    fn default() -> Self {
        Self { alpha: 0.75, beta_hat: 0.5, h_hat: 0.0, horizon: 1.0, cells: 1024, anchor_level: 3 }
    }
}

fn continuum_spec(alpha: f64, beta_hat: f64, h_hat: f64, horizon: f64, cells: usize) -> Result<ChaosSpec> {
    Ok(ChaosSpec::conditioned(alpha, beta_hat, h_hat, horizon, cells)?)
}

pub fn continuum_z(config: Option<Value>, o: &Overrides, seed: u64, dump: bool) -> Result<Output> {
    let mut o = o.clone();
    let mut c: ContinuumZConfig = load(config)?;
    c.alpha = o.alpha.take().unwrap_or(c.alpha);
    c.beta_hat = o.beta_hat.take().unwrap_or(c.beta_hat);
    c.h_hat = o.h_hat.take().unwrap_or(c.h_hat);
    c.horizon = o.horizon.take().unwrap_or(c.horizon);
    c.cells = o.cells.take().unwrap_or(c.cells);
    leftover(&o, "continuum-z")?;
    let spec = continuum_spec(c.alpha, c.beta_hat, c.h_hat, c.horizon, c.cells)?;
    let path = BrownianPath::from_stream(c.horizon, c.cells, seed, stream_id(&[label("continuum-z"), label("path")]))?;
    let z = z_point(&spec, &path, 0.0, c.horizon)?;
    let mut r = report("continuum-z", &c, seed, "[label(\"continuum-z\"), label(\"path\")]")?;
    r.value("Z(0, T)", z);
    let csv = if dump {
        let mut buf = Vec::new();
        ZSurface::new(spec, path, c.anchor_level)?.write_csv(&mut buf)?;
        Some(String::from_utf8(buf).context("surface CSV")?)
    } else {
        None
    };
    Ok(Output { report: r, csv })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdpmFddConfig {
    pub alpha: f64,
    pub beta_hat: f64,
    pub h_hat: f64,
    pub horizon: f64,
    pub cells: usize,
    pub times: Vec<f64>,
    /// Draws for the single Brownian path.
    pub samples: usize,
}

impl Default for CdpmFddConfig {
    fn default() -> Self {
        Self { alpha: 0.75, beta_hat: 0.5, h_hat: 0.0, horizon: 1.0, cells: 1024, times: vec![0.5], samples: 1000 }
    }
}

pub fn cdpm_fdd(config: Option<Value>, o: &Overrides, seed: u64) -> Result<Output> {
    let mut o = o.clone();
    let mut c: CdpmFddConfig = load(config)?;
    c.alpha = o.alpha.take().unwrap_or(c.alpha);
    c.beta_hat = o.beta_hat.take().unwrap_or(c.beta_hat);
    c.h_hat = o.h_hat.take().unwrap_or(c.h_hat);
    c.horizon = o.horizon.take().unwrap_or(c.horizon);
    c.cells = o.cells.take().unwrap_or(c.cells);
    c.samples = o.samples.take().unwrap_or(c.samples);
    leftover(&o, "cdpm-fdd")?;
    let spec = continuum_spec(c.alpha, c.beta_hat, c.h_hat, c.horizon, c.cells)?;
    let path = BrownianPath::from_stream(c.horizon, c.cells, seed, stream_id(&[label("cdpm-fdd"), label("path")]))?;
    let surface = ZSurface::new(spec, path, 1)?;
    let mut rng = substream(seed, &[label("cdpm-fdd"), label("draws")]);
    let mut draws = Vec::with_capacity(c.samples);
    let mut proposals = 0;
    for _ in 0..c.samples {
        let d = sample_cdpm_fdd(&surface, c.alpha, &c.times, &mut rng)?;
        proposals += d.proposals;
        draws.push(d.pairs);
    }
    let mut r = report("cdpm-fdd", &c, seed, "[label(\"cdpm-fdd\"), label(\"path\" | \"draws\")]")?;
    r.value("acceptance rate", draws.len() as f64 * c.times.len() as f64 / proposals.max(1) as f64);
    let mut csv = String::from("sample,t,g,d\n");
    for (j, t) in c.times.iter().enumerate() {
        r.value(&format!("mean g_{t}"), mean(draws.iter().map(|p| p[j].0)));
        r.value(&format!("mean d_{t}"), mean(draws.iter().map(|p| p[j].1)));
    }
    for (i, pairs) in draws.iter().enumerate() {
        for (t, (g, d)) in c.times.iter().zip(pairs) {
            writeln!(csv, "{i},{t},{g},{d}").expect("string write");
        }
    }
    Ok(Output { report: r, csv: Some(csv) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckRenewalConfig {
    pub kernel: KernelSpec,
    /// Largest `n` of the renewal function; the asymptotic ratio is read here.
    #[serde(rename = "N")]
    pub n: usize,
    /// Allowed deviation of the asymptotic ratio from 1 at `N`.
    pub ratio_tolerance: f64,
    pub coupling_tolerance: f64,
}

impl Default for CheckRenewalConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::PurePower { alpha: 0.75, n_max: 100_000 },
            n: 100_000,
            ratio_tolerance: 0.1,
            coupling_tolerance: 1e-10,
        }
    }
}

pub fn check_renewal(config: Option<Value>, o: &Overrides, seed: u64) -> Result<Output> {
    let mut o = o.clone();
    let mut c: CheckRenewalConfig = load(config)?;
    c.n = o.n.take().unwrap_or(c.n);
    leftover(&o, "check-renewal")?;
    let kernel = kernel_for(&c.kernel, c.n)?;
    let u = renewal_function(&kernel, c.n)?;
    let mut r = report("check-renewal", &c, seed, "deterministic")?;
    r.value("convolution residual", u.convolution_residual(&kernel, c.n));
    let ratio = asymptotic_ratio(&u, c.n);
    r.value("asymptotic ratio at N", ratio);
    r.verdict(
        "u matches renewal asymptotics",
        (ratio - 1.0).abs() <= c.ratio_tolerance,
        format!("ratio {ratio:.4} at N = {}", c.n),
    );
    if c.n >= 1000 && kernel.alpha() < 1.0 {
        let fit = check_smoothness(&u)?;
        r.value("smoothness c", fit.c);
        r.value("smoothness delta", fit.delta);
        r.verdict("u is smooth", fit.pass, format!("delta {:.3}, c {:.3}", fit.delta, fit.c));
    }
    if kernel.origin() == KernelOrigin::BesselLike {
        let t = check_coupling_bound(&u, &kernel)?;
        r.value("coupling bound violation", t.max_violation);
        r.verdict(
            "coupling bound holds",
            t.max_violation <= c.coupling_tolerance,
            format!("max violation {:.3e} over {} points", t.max_violation, t.points),
        );
    }
    Ok(Output { report: r, csv: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirichletConfig {
    pub chi: f64,
    pub k: usize,
    /// Relative error allowed for quadrature (`k ≤ 2`) and quasi Monte Carlo.
    pub quadrature_tolerance: f64,
    pub qmc_tolerance: f64,
}

impl Default for DirichletConfig {
    fn default() -> Self {
        Self { chi: 0.5, k: 1, quadrature_tolerance: 1e-6, qmc_tolerance: 1e-3 }
    }
}

pub fn dirichlet_check(config: Option<Value>, o: &Overrides, seed: u64) -> Result<Output> {
    let mut o = o.clone();
    let mut c: DirichletConfig = load(config)?;
    c.chi = o.chi.take().unwrap_or(c.chi);
    c.k = o.k.take().unwrap_or(c.k);
    leftover(&o, "dirichlet-check")?;
    let check = dirichlet_integral_check(c.chi, c.k)?;
    let mut r = report("dirichlet-check", &c, seed, "deterministic")?;
    r.value("closed_form", check.closed_form);
    r.value("numeric", check.numeric);
    r.value("rel_err", check.rel_err);
    r.value("bound C1", check.bound.c1);
    r.value("bound C2", check.bound.c2);
    let tol = if c.k <= 2 { c.quadrature_tolerance } else { c.qmc_tolerance };
    r.verdict(
        "integral matches closed form",
        check.rel_err < tol,
        format!("{:?}: rel. error {:.2e} (tolerance {tol:e})", check.method, check.rel_err),
    );
    Ok(Output { report: r, csv: None })
}

pub fn experiment(name: &str, config: Option<Value>, seed: u64) -> Result<Output> {
    let report = match name {
        "convergence" => experiment_convergence(&load(config)?, seed)?,
        "averaged-abs-continuity" => experiment_averaged_abs_continuity(&load(config)?, seed)?,
        "singularity" => experiment_singularity(&load(config)?, seed)?,
        "z-properties" => experiment_z_properties(&load(config)?, seed)?,
        "z-moments" => experiment_z_moments(&load(config)?, seed)?,
        other => bail!("unknown experiment {other}"),
    };
    Ok(Output { report, csv: None })
}
