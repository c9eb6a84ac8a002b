//! Kolmogorov–Smirnov tests: one and two samples, a weighted one-sample
//! version with a two-level bootstrap, and the Fasano–Franceschini test in
//! two dimensions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest sample accepted by the tests.
pub const MIN_SAMPLE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p: f64,
    /// Effective sample size entering the asymptotic law.
    pub n_eff: f64,
}

/// `P(sup |B| > λ)` for a Brownian bridge `B`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi form, fast for small λ
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=9).map(|j| (-((2 * j - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value with Stephens' small-sample correction.
fn p_value(d: f64, n_eff: f64) -> f64 {
    let r = n_eff.sqrt();
    kolmogorov_q((r + 0.12 + 0.11 / r) * d)
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_SAMPLE {
        return Err(Error::SampleTooSmall { got: n, need: MIN_SAMPLE });
    }
    Ok(())
}

fn sorted(a: &[f64]) -> Result<Vec<f64>> {
    if a.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("NaN in sample".into()));
    }
    let mut v = a.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Sample against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsResult> {
    check_size(sample.len())?;
    let v = sorted(sample)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult { statistic: d, p: p_value(d, n), n_eff: n })
}

/// Classical two-sample statistic; ties are stepped over together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    check_size(a.len())?;
    check_size(b.len())?;
    let (x, y) = (sorted(a)?, sorted(b)?);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let n_eff = n * m / (n + m);
    Ok(KsResult { statistic: d, p: p_value(d, n_eff), n_eff })
}

/// Draws grouped by replica, each replica carrying one weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGroups {
    pub weights: Vec<f64>,
    pub draws: Vec<Vec<f64>>,
}

impl WeightedGroups {
    pub fn new(weights: Vec<f64>, draws: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != draws.len() || draws.iter().any(|d| d.is_empty()) {
            return Err(Error::InvalidParameter("one non-empty draw list per weight".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || !(weights.iter().sum::<f64>() > 0.0) {
            return Err(Error::InvalidParameter("weights must be finite, non-negative and not all zero".into()));
        }
        Ok(Self { weights, draws })
    }

    /// Kish effective number of replicas, `(Σw)²/Σw²`.
    pub fn effective_size(&self) -> f64 {
        let s: f64 = self.weights.iter().sum();
        let s2: f64 = self.weights.iter().map(|w| w * w).sum();
        s * s / s2
    }

    /// Points and masses of the weighted empirical law, sorted by point.
    fn atoms(&self, pick: &[(usize, Vec<usize>)]) -> Vec<(f64, f64)> {
        let total: f64 = pick.iter().map(|(r, _)| self.weights[*r]).sum();
        let mut atoms = Vec::new();
        for (r, js) in pick {
            let m = self.weights[*r] / (total * js.len() as f64);
            atoms.extend(js.iter().map(|&j| (self.draws[*r][j], m)));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms
    }

    fn identity(&self) -> Vec<(usize, Vec<usize>)> {
        self.draws.iter().enumerate().map(|(r, d)| (r, (0..d.len()).collect())).collect()
    }
}

fn sup_distance<F: Fn(f64) -> f64>(atoms: &[(f64, f64)], cdf: F) -> f64 {
    let mut d: f64 = 0.0;
    let mut acc = 0.0;
    let mut i = 0;
    while i < atoms.len() {
        let x = atoms[i].0;
        let before = acc;
        while i < atoms.len() && atoms[i].0 == x {
            acc += atoms[i].1;
            i += 1;
        }
        let f = cdf(x);
        d = d.max((acc - f).abs()).max((f - before).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedKs {
    pub statistic: f64,
    /// Bootstrap p-value.
    pub p: f64,
    pub effective_size: f64,
    pub resamples: usize,
}

/// Weighted empirical law of grouped draws against a CDF.
///
/// The p-value comes from a bootstrap that resamples replicas with
/// replacement and then draws within each chosen replica, and measures the
/// resampled law against the observed weighted law.
pub fn ks_weighted_bootstrap<F, R>(groups: &WeightedGroups, cdf: F, resamples: usize, rng: &mut R) -> Result<WeightedKs>
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    let total: usize = groups.draws.iter().map(Vec::len).sum();
    check_size(total)?;
    if resamples == 0 {
        return Err(Error::InvalidParameter("need at least one resample".into()));
    }
    let base = groups.atoms(&groups.identity());
    let d = sup_distance(&base, &cdf);
    // observed law as a step function for the bootstrap reference
    let mut steps: Vec<(f64, f64)> = Vec::with_capacity(base.len());
    let mut acc = 0.0;
    for (x, m) in &base {
        acc += m;
        match steps.last_mut() {
            Some(s) if s.0 == *x => s.1 = acc,
            _ => steps.push((*x, acc)),
        }
    }
    let r = groups.weights.len();
    let mut exceed = 0;
    for _ in 0..resamples {
        let pick: Vec<(usize, Vec<usize>)> = (0..r)
            .map(|_| {
                let g = rng.random_range(0..r);
                let n = groups.draws[g].len();
                (g, (0..n).map(|_| rng.random_range(0..n)).collect())
            })
            .collect();
        if pick.iter().all(|(g, _)| groups.weights[*g] == 0.0) {
            exceed += 1;
            continue;
        }
        let atoms = groups.atoms(&pick);
        if sup_distance_step(&atoms, &steps) >= d {
            exceed += 1;
        }
    }
    Ok(WeightedKs {
        statistic: d,
        p: (exceed + 1) as f64 / (resamples + 1) as f64,
        effective_size: groups.effective_size(),
        resamples,
    })
}

/// Sup distance between the law of `atoms` and the step CDF `steps`
/// (`(point, value)` pairs). Both are right-continuous step functions, so the
/// sup is attained at one of their jump points.
fn sup_distance_step(atoms: &[(f64, f64)], steps: &[(f64, f64)]) -> f64 {
    let (mut i, mut k) = (0, 0);
    let (mut fa, mut fs) = (0.0, 0.0);
    let mut d: f64 = 0.0;
    while i < atoms.len() || k < steps.len() {
        let x = match (atoms.get(i), steps.get(k)) {
            (Some(a), Some(s)) => a.0.min(s.0),
            (Some(a), None) => a.0,
            (None, Some(s)) => s.0,
            (None, None) => unreachable!(),
        };
        while i < atoms.len() && atoms[i].0 <= x {
            fa += atoms[i].1;
            i += 1;
        }
        while k < steps.len() && steps[k].0 <= x {
            fs = steps[k].1;
            k += 1;
        }
        d = d.max((fa - fs).abs());
    }
    d
}

/// Quadrant masses of a planar law at `(x, y)`: `[x'>x & y'>y, x'≤x & y'>y,
/// x'≤x & y'≤y, x'>x & y'≤y]`.
pub type Quadrants = [f64; 4];

/// Fasano–Franceschini test of a planar sample against a law given by its
/// quadrant masses.
pub fn ks_2d_one_sample<F: Fn(f64, f64) -> Quadrants>(xs: &[f64], ys: &[f64], quadrants: F) -> Result<KsResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter("coordinate lists differ in length".into()));
    }
    check_size(xs.len())?;
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for j in 0..n {
        let (x, y) = (xs[j], ys[j]);
        let mut c = [0usize; 4];
        for k in 0..n {
            let (right, up) = (xs[k] > x, ys[k] > y);
            c[match (right, up) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            }] += 1;
        }
        let q = quadrants(x, y);
        for i in 0..4 {
            d = d.max((c[i] as f64 / nf - q[i]).abs());
        }
    }
    let r = pearson(xs, ys);
    let rr = (1.0 - r * r).max(0.0).sqrt();
    let sq = nf.sqrt();
    let p = kolmogorov_q(sq * d / (1.0 + rr * (0.25 - 0.75 / sq)));
    Ok(KsResult { statistic: d, p, n_eff: nf })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn uniform(n: usize, shift: f64, s: u64) -> Vec<f64> {
        let mut rng = stream(11, s);
        (0..n).map(|_| rng.random::<f64>() + shift).collect()
    }

    #[test]
    fn kolmogorov_tail_values() {
        // tabulated: Q(1.36) ≈ 0.0494, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 5e-4);
        // the two series agree where they meet
        let j = kolmogorov_q(0.999_999);
        let k = kolmogorov_q(1.000_001);
        assert!((j - k).abs() < 1e-5);
        assert!((kolmogorov_q(0.5) - 0.9639).abs() < 1e-3);
    }

    #[test]
    fn identical_samples() {
        let a = uniform(100, 0.0, 1);
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(matches!(ks_two_sample(&a[..10], &a), Err(Error::SampleTooSmall { .. })));
    }

    #[test]
    fn shifted_uniforms() {
        let r = ks_two_sample(&uniform(10_000, 0.0, 2), &uniform(10_000, 0.1, 3)).unwrap();
        assert!((r.statistic - 0.1).abs() < 0.02, "{}", r.statistic);
        assert!(r.p < 1e-10);
    }

    #[test]
    fn p_values_are_uniform_under_the_null() {
        let ps: Vec<f64> = (0..100)
            .map(|k| ks_two_sample(&uniform(10_000, 0.0, 100 + 2 * k), &uniform(10_000, 0.0, 101 + 2 * k)).unwrap().p)
            .collect();
        assert!(ks_one_sample(&ps, |p| p.clamp(0.0, 1.0)).unwrap().p > 0.01);
        let one: Vec<f64> = (0..100).map(|k| ks_one_sample(&uniform(500, 0.0, 400 + k), |x| x).unwrap().p).collect();
        assert!(ks_one_sample(&one, |p| p).unwrap().p > 0.01);
    }

    #[test]
    fn weighted_reduces_to_plain_with_equal_weights() {
        let draws: Vec<Vec<f64>> = (0..200).map(|r| uniform(4, 0.0, 700 + r)).collect();
        let flat: Vec<f64> = draws.concat();
        let g = WeightedGroups::new(vec![1.0; 200], draws).unwrap();
        let mut rng = stream(5, 5);
        let w = ks_weighted_bootstrap(&g, |x| x.clamp(0.0, 1.0), 200, &mut rng).unwrap();
        let plain = ks_one_sample(&flat, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((w.statistic - plain.statistic).abs() < 1e-12);
        assert!(w.p > 0.001);
        assert_eq!(w.effective_size, 200.0);
    }

    #[test]
    fn weighted_detects_tilted_law() {
        // weights x ↦ 2x applied to uniform draws make the law x², not uniform
        let draws: Vec<Vec<f64>> = (0..2000).map(|r| uniform(1, 0.0, 3000 + r)).collect();
        let weights: Vec<f64> = draws.iter().map(|d| 2.0 * d[0]).collect();
        let g = WeightedGroups::new(weights, draws).unwrap();
        let mut rng = stream(6, 6);
        let uniform_cdf = ks_weighted_bootstrap(&g, |x| x.clamp(0.0, 1.0), 200, &mut rng).unwrap();
        assert!(uniform_cdf.p < 0.01);
        let right = ks_weighted_bootstrap(&g, |x| x.clamp(0.0, 1.0).powi(2), 200, &mut rng).unwrap();
        assert!(right.p > 0.001, "{right:?}");
    }

    #[test]
    fn planar_test_accepts_independent_uniforms() {
        let (x, y) = (uniform(2000, 0.0, 20), uniform(2000, 0.0, 21));
        let quad = |a: f64, b: f64| {
            let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
            [(1.0 - a) * (1.0 - b), a * (1.0 - b), a * b, (1.0 - a) * b]
        };
        assert!(ks_2d_one_sample(&x, &y, quad).unwrap().p > 0.01);
        // y = x is far from independence
        assert!(ks_2d_one_sample(&x, &x, quad).unwrap().p < 1e-6);
    }
}
