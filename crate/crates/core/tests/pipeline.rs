//! Cross-module checks: samplers against reference laws, the surface against
//! point evaluations, and reports against reruns.

use pinning_core::analysis::{experiment_z_moments, ks_one_sample, ks_two_sample, ZMomentsConfig};
use pinning_core::closed_sets::restricted_fdd_extract;
use pinning_core::continuum::{
    conditioned_g_cdf, sample_regen_conditioned, z_point, BrownianPath, ChaosSpec, PartitionField, ZSurface,
};
use pinning_core::discrete::{partition_dp, DisorderField, DisorderLaw, PinnedSampler};
use pinning_core::renewal::{build_kernel, renewal_function, sample_renewal, KernelSpec};
use pinning_core::rng::{label, stream, substream};

#[test]
fn regen_g_follows_conditioned_marginal() {
    let mut rng = substream(3, &[label("pipeline"), label("regen")]);
    let g: Vec<f64> = (0..3000)
        .map(|_| {
            let s = sample_regen_conditioned(0.6, 2.0, 16, &mut rng).unwrap();
            restricted_fdd_extract(&s.set, &[0.7]).unwrap().pairs[0].g
        })
        .collect();
    let ks = ks_one_sample(&g, |x| conditioned_g_cdf(0.6, 2.0, 0.7, x)).unwrap();
    assert!(ks.p > 0.001, "{ks:?}");
}

#[test]
fn pinned_sampler_without_disorder_is_the_conditioned_renewal() {
    let kernel = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 300 }).unwrap();
    let u = renewal_function(&kernel, 200).unwrap();
    let zero = DisorderField::from_values(DisorderLaw::Rademacher, vec![0.0; 201]);
    let sampler = PinnedSampler::new(&kernel, &zero, 0.0, 0.0, 200).unwrap();
    let mut rng = stream(5, 1);
    let a: Vec<f64> = (0..3000).map(|_| sampler.sample_points(&mut rng).len() as f64).collect();
    let b: Vec<f64> =
        (0..3000).map(|_| sample_renewal(&kernel, Some(&u), 200, true, &mut rng).unwrap().len() as f64).collect();
    let ks = ks_two_sample(&a, &b).unwrap();
    assert!(ks.p > 0.001, "{ks:?}");
}

#[test]
fn free_partition_function_is_one_everywhere() {
    let kernel = build_kernel(&KernelSpec::LogPower { alpha: 0.6, power: 1.0, n_max: 400 }).unwrap();
    let u = renewal_function(&kernel, 400).unwrap();
    let omega = DisorderField::generate(DisorderLaw::StandardNormal, 401, &mut stream(6, 0));
    for (a, b) in [(0, 1), (0, 400), (17, 250), (399, 400)] {
        let z = partition_dp(&kernel, &u, &omega, 0.0, 0.0, a, b).unwrap();
        assert!((z - 1.0).abs() < 1e-12, "Z({a}, {b}) = {z}");
    }
}

#[test]
fn surface_agrees_with_point_evaluations() {
    let spec = ChaosSpec::conditioned(0.75, 0.8, 0.3, 1.0, 256).unwrap();
    let path = BrownianPath::from_stream(1.0, 256, 9, 4).unwrap();
    let surface = ZSurface::new(spec, path.clone(), 2).unwrap();
    for (s, t) in [(0.0, 1.0), (0.25, 0.75), (0.5, 1.0), (0.125, 0.5)] {
        let a = surface.z(s, t).unwrap();
        let b = z_point(&spec, &path, s, t).unwrap();
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "({s}, {t}): {a} vs {b}");
    }
}

#[test]
fn reports_are_deterministic() {
    let c = ZMomentsConfig { cells: 128, paths: 40, ..Default::default() };
    let a = experiment_z_moments(&c, 11).unwrap().to_json();
    let b = experiment_z_moments(&c, 11).unwrap().to_json();
    let other = experiment_z_moments(&c, 12).unwrap().to_json();
    assert_eq!(a, b);
    assert_ne!(a, other);
}
