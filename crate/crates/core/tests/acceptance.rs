//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured quantities. Runs as part of `cargo test`; the process fails only
//! on errors, or on any `FAIL` when `ACCEPTANCE_STRICT=1`.

use std::time::Instant;

use rand::Rng;

use pinning_core::analysis::{
    dirichlet_closed_form, dirichlet_integral_check, experiment_averaged_abs_continuity, experiment_convergence,
    experiment_singularity, experiment_z_moments, experiment_z_properties, ks_2d_one_sample, AbsContinuityConfig,
    ConvergenceConfig, ExperimentReport, Quadrants, SingularityConfig, ZMomentsConfig, ZPropertiesConfig,
};
use pinning_core::closed_sets::{box_count, restricted_fdd_extract};
use pinning_core::continuum::{conditioned_g_cdf, conditioned_pair_density, fdd_density_reference, sample_regen_conditioned};
use pinning_core::discrete::{chaos_expansion_exact, partition_dp, DisorderField, DisorderLaw};
use pinning_core::quad::TanhSinh;
use pinning_core::renewal::{
    asymptotic_ratio, bessel_like_return_law, build_kernel, check_coupling_bound, check_smoothness, lamperti_p_up,
    renewal_function, KernelSpec, SMOOTHNESS_MIN_DELTA,
};
use pinning_core::rng::{label, substream};
use pinning_core::special::linear_fit;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const SEED: u64 = 20_240_601;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn exact_identities() -> Outcome {
    let kernel = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 1000 })?;
    let u = renewal_function(&kernel, 1000)?;
    let mut rng = substream(SEED, &[label("acceptance"), label("identities")]);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let r = rng.random_range(1..=20usize);
        let beta = rng.random_range(0.0..1.5);
        let h = rng.random_range(-1.0..1.0);
        let omega = DisorderField::generate(DisorderLaw::StandardNormal, r + 1, &mut rng);
        let chaos = chaos_expansion_exact(&u, &omega, beta, h, r, None)?;
        let dp = partition_dp(&kernel, &u, &omega, beta, h, 0, r)?;
        worst = worst.max(rel(chaos, dp));
    }
    let residual = u.convolution_residual(&kernel, 1000);
    let hand = build_kernel(&KernelSpec::Tabulated { alpha: 0.5, k: vec![0.5, 0.5, 0.0], hand_check: true })?;
    let hu = renewal_function(&hand, 3)?;
    let got = [hu.get(1), hu.get(2), hu.get(3)];
    let hand_ok = got.iter().zip([0.5, 0.75, 0.625]).all(|(a, b)| (a - b).abs() < 1e-15);
    Ok((
        worst < 1e-10 && residual < 1e-12 && hand_ok,
        format!("chaos vs DP max rel {worst:.1e}; convolution residual {residual:.1e}; u(1..3) = {got:?}"),
    ))
}

fn dirichlet() -> Outcome {
    let mut ok = true;
    let mut worst_quad: f64 = 0.0;
    let mut worst_qmc: f64 = 0.0;
    for chi in [0.0, 0.3, 0.5] {
        for k in 1..=4 {
            let c = dirichlet_integral_check(chi, k)?;
            if k <= 2 {
                worst_quad = worst_quad.max(c.rel_err);
                ok &= c.rel_err < 1e-6;
            } else {
                worst_qmc = worst_qmc.max(c.rel_err);
                ok &= c.rel_err < 1e-3;
            }
        }
    }
    let two_pi = dirichlet_closed_form(0.5, 2);
    let numeric = dirichlet_integral_check(0.5, 2)?.numeric;
    ok &= (two_pi - 2.0 * std::f64::consts::PI).abs() < 1e-12 && rel(numeric, two_pi) < 1e-6;
    Ok((ok, format!("k ≤ 2 max rel {worst_quad:.1e}; k = 3, 4 max rel {worst_qmc:.1e}; chi=0.5, k=2: {numeric:.10}")))
}

fn renewal_asymptotics() -> Outcome {
    let n = 100_000;
    let mut ok = true;
    let mut detail = Vec::new();
    for alpha in [0.75, 1.5] {
        let kernel = build_kernel(&KernelSpec::PurePower { alpha, n_max: n })?;
        let u = renewal_function(&kernel, n)?;
        let ratio = asymptotic_ratio(&u, n);
        let fit = check_smoothness(&u)?;
        ok &= (ratio - 1.0).abs() <= 0.1 && fit.pass && fit.delta >= SMOOTHNESS_MIN_DELTA;
        detail.push(format!("alpha {alpha}: ratio {ratio:.4}, delta {:.3}", fit.delta));
    }
    let bessel = bessel_like_return_law(|x| lamperti_p_up(0.5, x), 20_000)?;
    let ub = renewal_function(&bessel.kernel, 20_000)?;
    let trace = check_coupling_bound(&ub, &bessel.kernel)?;
    ok &= trace.max_violation <= 1e-10;
    detail.push(format!("coupling violation {:.1e}", trace.max_violation));
    let srw = bessel_like_return_law(|x| lamperti_p_up(1.0, x), 20_000)?;
    ok &= (srw.fitted_alpha - 0.5).abs() <= 0.05;
    detail.push(format!("SRW tail exponent {:.4}", srw.fitted_alpha));
    Ok((ok, detail.join("; ")))
}

/// `P(g ≤ x, d ≤ y)` for `x ≤ t ≤ y` by nested quadrature of the density.
fn joint_cdf(alpha: f64, horizon: f64, t: f64, x: f64, y: f64) -> f64 {
    let quad = TanhSinh::with_tol(1e-8);
    quad.integrate_gaps(0.0, x, |a, _, to_x| {
        let a_gap = (t - x) + to_x;
        quad.integrate_gaps(t, y, |_, from_t, to_y| {
            conditioned_pair_density(alpha, horizon, a, a_gap + from_t, (horizon - y) + to_y)
        })
        .value
    })
    .value
}

fn reference_law() -> Outcome {
    let (alpha, horizon, t) = (0.75, 1.0, 0.5);
    let total = joint_cdf(alpha, horizon, t, t, horizon);
    let spot = [(0.2, 0.7), (0.45, 0.52), (0.01, 0.99)];
    let consistent = spot.iter().all(|&(x, y)| {
        let a = fdd_density_reference(alpha, horizon, &[t], &[x], &[y], true).unwrap_or(f64::NAN);
        rel(a, conditioned_pair_density(alpha, horizon, x, y - x, horizon - y)) < 1e-12
    });
    let samples = 10_000;
    let mut rng = substream(SEED, &[label("acceptance"), label("regen")]);
    let mut gs = Vec::with_capacity(samples);
    let mut ds = Vec::with_capacity(samples);
    let mut log_counts = vec![0.0; 9];
    let levels: Vec<u32> = (4..=12).collect();
    for i in 0..samples {
        let s = sample_regen_conditioned(alpha, horizon, 14, &mut rng)?;
        let p = restricted_fdd_extract(&s.set, &[t])?.pairs[0];
        gs.push(p.g);
        ds.push(p.d);
        if i < 1000 {
            for (j, &n) in levels.iter().enumerate() {
                log_counts[j] += (box_count(&s.set, n, horizon)? as f64).log2() / 1000.0;
            }
        }
    }
    let g_marg = |x: f64| conditioned_g_cdf(alpha, horizon, t, x);
    let d_marg = |y: f64| joint_cdf(alpha, horizon, t, t, y);
    let quadrants = |x: f64, y: f64| -> Quadrants {
        let (f, fg, fd) = (joint_cdf(alpha, horizon, t, x, y), g_marg(x), d_marg(y));
        [1.0 - fg - fd + f, fg - f, f, fd - f]
    };
    let ks = ks_2d_one_sample(&gs, &ds, quadrants)?;
    let x: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let (slope, _) = linear_fit(&x, &log_counts);
    let ok = (total - 1.0).abs() <= 1e-4 && consistent && ks.p > 0.001 && (slope - 0.75).abs() <= 0.1;
    Ok((
        ok,
        format!(
            "density mass {total:.8}; 2-D KS D = {:.4}, p = {:.3}; box-count slope {slope:.3}",
            ks.statistic, ks.p
        ),
    ))
}

fn verdicts(reports: &[&ExperimentReport]) -> (bool, String) {
    let mut ok = true;
    let mut failed = Vec::new();
    let mut count = 0;
    for r in reports {
        for v in &r.verdicts {
            count += 1;
            if !v.passed {
                ok = false;
                failed.push(format!("{} ({})", v.criterion, v.detail));
            }
        }
    }
    if ok {
        (true, format!("{count} verdicts pass"))
    } else {
        (false, format!("{} of {count} verdicts fail: {}", failed.len(), failed.join("; ")))
    }
}

fn z_moments() -> Outcome {
    let r = experiment_z_moments(&ZMomentsConfig::default(), SEED)?;
    Ok(verdicts(&[&r]))
}

fn z_properties() -> Outcome {
    let r = experiment_z_properties(&ZPropertiesConfig::default(), SEED)?;
    Ok(verdicts(&[&r]))
}

fn convergence() -> Outcome {
    let r = experiment_convergence(&ConvergenceConfig::default(), SEED)?;
    Ok(verdicts(&[&r]))
}

fn singularity() -> Outcome {
    let s = experiment_singularity(&SingularityConfig::default(), SEED)?;
    let a = experiment_averaged_abs_continuity(&AbsContinuityConfig::default(), SEED)?;
    Ok(verdicts(&[&s, &a]))
}

/// Small versions of every suite, run twice: once on a single worker and
/// once on several, so schedule dependence would show up as a difference.
fn reproducibility() -> Outcome {
    type Run = Box<dyn Fn() -> pinning_core::Result<ExperimentReport> + Sync>;
    let runs: Vec<(&str, Run)> = vec![
        (
            "z-moments",
            Box::new(|| experiment_z_moments(&ZMomentsConfig { cells: 256, paths: 60, ..Default::default() }, SEED)),
        ),
        (
            "z-properties",
            Box::new(|| {
                let c = ZPropertiesConfig {
                    positivity_cells: 128,
                    positivity_paths: 20,
                    translation_cells: 128,
                    translation_paths: 40,
                    scaling_cells: 128,
                    scaling_paths: 40,
                    renewal_cells: 128,
                    renewal_paths: 2,
                    ..Default::default()
                };
                experiment_z_properties(&c, SEED)
            }),
        ),
        (
            "convergence",
            Box::new(|| {
                let c = ConvergenceConfig {
                    n_ladder: vec![64, 128],
                    z_replicas: 40,
                    continuum_cells: 128,
                    continuum_paths: 40,
                    ks_bootstrap: 10,
                    pinned_n: 128,
                    pinned_replicas: 40,
                    fdd_n: 64,
                    fdd_cells: 128,
                    fdd_replicas: 40,
                    ..Default::default()
                };
                experiment_convergence(&c, SEED)
            }),
        ),
        (
            "singularity",
            Box::new(|| {
                let c = SingularityConfig {
                    moment_cells: 128,
                    moment_paths: 40,
                    martingale_levels: vec![2, 3, 4],
                    martingale_cells: 256,
                    martingale_pairs: 40,
                    martingale_regen_level: 10,
                    covering_levels: vec![4, 5, 6],
                    covering_samples: 40,
                    covering_regen_level: 10,
                    ..Default::default()
                };
                experiment_singularity(&c, SEED)
            }),
        ),
        (
            "averaged-abs-continuity",
            Box::new(|| {
                let c = AbsContinuityConfig { cells: 128, replicas: 60, draws: 4, bootstrap: 10, ..Default::default() };
                experiment_averaged_abs_continuity(&c, SEED)
            }),
        ),
    ];
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    let several = rayon::ThreadPoolBuilder::new().num_threads(4).build()?;
    let mut same = Vec::new();
    let mut differ = Vec::new();
    for (name, run) in &runs {
        let a = single.install(|| run())?.to_json();
        let b = several.install(|| run())?.to_json();
        if a == b { same.push(*name) } else { differ.push(*name) }
    }
    // the non-experiment suites draw from the same stream scheme
    let draw = || -> pinning_core::Result<Vec<f64>> {
        let mut rng = substream(SEED, &[label("acceptance"), label("regen")]);
        Ok(sample_regen_conditioned(0.75, 1.0, 12, &mut rng)?.set.points().to_vec())
    };
    let regen_same = draw()? == draw()?;
    Ok((
        differ.is_empty() && regen_same,
        format!("identical: {}; differing: {:?}; regen draws identical: {regen_same}", same.join(", "), differ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 exact identities", exact_identities),
        ("2 Dirichlet closed form", dirichlet),
        ("3 renewal asymptotics and smoothness", renewal_asymptotics),
        ("4 reference law", reference_law),
        ("5 continuum Z moments", z_moments),
        ("6 Z properties", z_properties),
        ("7 convergence", convergence),
        ("8 singularity and absolute continuity", singularity),
        ("9 reproducibility", reproducibility),
    ];
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').map(str::to_owned).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut passed, mut failed, mut errors) = (0, 0, 0);
    for (name, run) in criteria {
        let number = name.split(' ').next().unwrap_or_default();
        if only.as_ref().is_some_and(|o| !o.iter().any(|n| n == number)) {
            continue;
        }
        let start = Instant::now();
        match run() {
            Ok((ok, detail)) => {
                let secs = start.elapsed().as_secs_f64();
                println!("{} {name} [{secs:.1} s]: {detail}", if ok { "PASS" } else { "FAIL" });
                if ok { passed += 1 } else { failed += 1 }
            }
            Err(e) => {
                println!("ERROR {name}: {e}");
                errors += 1;
            }
        }
    }
    println!("acceptance: {passed} pass, {failed} fail, {errors} errors");
    if errors > 0 || (strict && failed > 0) {
        std::process::exit(1);
    }
}
