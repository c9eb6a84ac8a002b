use rand::Rng;

use super::disorder::DisorderField;
use super::partition::{log_weighted_row, needs_log_domain};
use crate::closed_sets::ClosedSetR;
use crate::error::{Error, Result};
use crate::renewal::RenewalKernel;

/// Exact sampler of the conditioned pinning measure `P^{ω,c}_{N,β,h}` for one
/// disorder realization.
///
/// `R(j) = W(j, N)` is the weight of all continuations from `j`; from the
/// current point `i` the next point is `j` with probability
/// `K(j−i) e^{(βω_j − Λ(β) + h) 1_{j<N}} R(j) / R(i)`.
#[derive(Debug, Clone)]
pub struct PinnedSampler {
    n: usize,
    ln_k: Vec<f64>,
    ln_e: Vec<f64>,
    ln_r: Vec<f64>,
}

impl PinnedSampler {
    pub fn new(kernel: &RenewalKernel, disorder: &DisorderField, beta: f64, h: f64, n: usize) -> Result<Self> {
        if n > kernel.n_max() {
            return Err(Error::HorizonTooLarge { horizon: n, n_max: kernel.n_max() });
        }
        if n == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if disorder.len() < n {
            return Err(Error::InvalidParameter(format!("disorder has {} sites, need {n}", disorder.len())));
        }
        let ln_e: Vec<f64> = (0..=n)
            .map(|j| if j == 0 || j == n { 0.0 } else { disorder.log_weight(j, beta, h) })
            .collect();
        // the column W(·, N) is the row of the time-reversed environment
        let reversed: Vec<f64> = (0..=n).map(|m| ln_e[n - m]).collect();
        let log_mode = needs_log_domain(beta, disorder.max_abs(1, n), &reversed[1..n]);
        let row = log_weighted_row(kernel.table(), &reversed, n, log_mode);
        let ln_r: Vec<f64> = (0..=n).map(|j| row[n - j]).collect();
        if !ln_r[0].is_finite() {
            return Err(Error::Numerical("right weight at 0 is not finite".into()));
        }
        let ln_k = kernel.table()[..=n].iter().map(|k| k.ln()).collect();
        Ok(Self { n, ln_k, ln_e, ln_r })
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    /// `ln W(0, N)`, the unnormalized log partition function.
    pub fn ln_total_weight(&self) -> f64 {
        self.ln_r[0]
    }

    /// Exact probability of a configuration `0 = τ_0 < … < τ_m = N`.
    pub fn probability(&self, points: &[usize]) -> f64 {
        if points.first() != Some(&0) || points.last() != Some(&self.n) {
            return 0.0;
        }
        let mut ln_p = -self.ln_r[0];
        for w in points.windows(2) {
            if w[1] <= w[0] {
                return 0.0;
            }
            ln_p += self.ln_k[w[1] - w[0]] + self.ln_e[w[1]];
        }
        ln_p.exp()
    }

    pub fn sample_points<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut points = vec![0];
        let mut i = 0;
        while i < self.n {
            let target: f64 = rng.random();
            let base = self.ln_r[i];
            let mut acc = 0.0;
            let mut next = self.n;
            for j in i + 1..=self.n {
                acc += (self.ln_k[j - i] + self.ln_e[j] + self.ln_r[j] - base).exp();
                if acc > target {
                    next = j;
                    break;
                }
            }
            i = next;
            points.push(i);
        }
        points
    }

    /// The sample as a closed set with integer support.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ClosedSetR {
        ClosedSetR::from_lattice(&self.sample_points(rng), 1.0).expect("increasing lattice points")
    }
}

/// One draw from `P^{ω,c}_{N,β,h}`.
pub fn sample_pinned<R: Rng + ?Sized>(
    kernel: &RenewalKernel,
    disorder: &DisorderField,
    beta: f64,
    h: f64,
    n: usize,
    rng: &mut R,
) -> Result<ClosedSetR> {
    Ok(PinnedSampler::new(kernel, disorder, beta, h, n)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::DisorderLaw;
    use crate::renewal::{build_kernel, renewal_function, sample_renewal, KernelSpec};
    use crate::rng::stream;
    use std::collections::HashMap;

    fn configurations(n: usize) -> Vec<Vec<usize>> {
        (0u32..1 << (n - 1))
            .map(|mask| {
                let mut p = vec![0];
                p.extend((1..n).filter(|i| mask & (1 << (i - 1)) != 0));
                p.push(n);
                p
            })
            .collect()
    }

    #[test]
    fn probabilities_sum_to_one() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 64 }).unwrap();
        let d = DisorderField::generate(DisorderLaw::StandardNormal, 12, &mut stream(31, 0));
        let s = PinnedSampler::new(&k, &d, 0.9, -0.3, 11).unwrap();
        let total: f64 = configurations(11).iter().map(|c| s.probability(c)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frequencies_match_enumeration() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 64 }).unwrap();
        let d = DisorderField::generate(DisorderLaw::StandardNormal, 9, &mut stream(32, 0));
        let n = 8;
        let s = PinnedSampler::new(&k, &d, 1.2, 0.4, n).unwrap();
        let draws = 1_000_000;
        let mut rng = stream(32, 1);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(s.sample_points(&mut rng)).or_default() += 1;
        }
        for c in configurations(n) {
            let p = s.probability(&c);
            let f = *counts.get(&c).unwrap_or(&0) as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((f - p).abs() <= 4.0 * se + 1e-12, "{c:?}: {f} vs {p}");
        }
    }

    #[test]
    fn two_site_example() {
        let k = build_kernel(&KernelSpec::Tabulated { alpha: 0.5, k: vec![0.5, 0.5], hand_check: true }).unwrap();
        let d = DisorderField::from_values(DisorderLaw::StandardNormal, vec![0.0, 0.8, 0.0]);
        let (beta, h) = (0.5, 0.1);
        let e = d.log_weight(1, beta, h).exp();
        let want = 0.25 * e / (0.25 * e + 0.5);
        let s = PinnedSampler::new(&k, &d, beta, h, 2).unwrap();
        let mut rng = stream(33, 0);
        let reps = 100_000;
        let hits = (0..reps).filter(|_| s.sample_points(&mut rng).contains(&1)).count();
        let f = hits as f64 / reps as f64;
        assert!((f - want).abs() < 4.0 * (want * (1.0 - want) / reps as f64).sqrt());
    }

    #[test]
    fn huge_reward_fills_every_site() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 64 }).unwrap();
        let d = DisorderField::generate(DisorderLaw::Rademacher, 40, &mut stream(34, 0));
        let s = PinnedSampler::new(&k, &d, 0.1, 60.0, 40).unwrap();
        let mut rng = stream(34, 1);
        for _ in 0..100 {
            assert_eq!(s.sample_points(&mut rng), (0..=40).collect::<Vec<_>>());
        }
    }

    #[test]
    fn free_weights_reduce_to_renewal() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 64 }).unwrap();
        let u = renewal_function(&k, 64).unwrap();
        let d = DisorderField::generate(DisorderLaw::StandardNormal, 64, &mut stream(35, 0));
        let s = PinnedSampler::new(&k, &d, 0.0, 0.0, 64).unwrap();
        let mut rng = stream(35, 1);
        let reps = 20_000;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..reps {
            a.push(s.sample_points(&mut rng)[1] as f64);
            b.push(sample_renewal(&k, Some(&u), 64, true, &mut rng).unwrap()[1] as f64);
        }
        // first-gap law is P(τ₁ = j | 64 ∈ τ) = K(j)u(64−j)/u(64) for both
        for j in [1usize, 2, 5, 20, 64] {
            let p = k.k(j) * u.get(64 - j) / u.get(64);
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            let fa = a.iter().filter(|&&x| x as usize == j).count() as f64 / reps as f64;
            let fb = b.iter().filter(|&&x| x as usize == j).count() as f64 / reps as f64;
            assert!((fa - p).abs() < 4.0 * se && (fb - p).abs() < 4.0 * se);
        }
    }
}
