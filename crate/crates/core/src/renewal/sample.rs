use rand::Rng;

use super::function::RenewalFunction;
use super::kernel::RenewalKernel;
use crate::error::{Error, Result};

/// Sample `τ ∩ [0, N]`.
///
/// Unconditioned: i.i.d. gaps by inverse CDF until the horizon is passed.
/// Conditioned on `N ∈ τ`: from `i` the next point is `j` with probability
/// `K(j−i) u(N−j) / u(N−i)`, which always ends at `N`.
pub fn sample_renewal<R: Rng + ?Sized>(
    kernel: &RenewalKernel,
    u: Option<&RenewalFunction>,
    horizon: usize,
    conditioned: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if horizon > kernel.n_max() {
        return Err(Error::HorizonTooLarge { horizon, n_max: kernel.n_max() });
    }
    if conditioned {
        let u = u.ok_or_else(|| Error::InvalidParameter("conditioned sampling needs u".into()))?;
        sample_conditioned(kernel, u, horizon, rng)
    } else {
        Ok(sample_free(kernel, &kernel.cdf_table(), horizon, rng))
    }
}

/// Free sampler with a precomputed cumulative table (see [`RenewalSampler`]).
fn sample_free<R: Rng + ?Sized>(
    kernel: &RenewalKernel,
    cdf: &[f64],
    horizon: usize,
    rng: &mut R,
) -> Vec<usize> {
    let _ = kernel;
    let mut points = vec![0];
    let mut at = 0usize;
    loop {
        let x: f64 = rng.random();
        let room = horizon - at;
        if room == 0 || x > cdf[room] {
            break;
        }
        // smallest g with cdf[g] ≥ x
        let g = cdf[1..=room].partition_point(|&c| c < x) + 1;
        at += g;
        points.push(at);
    }
    points
}

fn sample_conditioned<R: Rng + ?Sized>(
    kernel: &RenewalKernel,
    u: &RenewalFunction,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if u.n_max() < horizon {
        return Err(Error::HorizonTooLarge { horizon, n_max: u.n_max() });
    }
    let uv = u.values();
    if !(uv[horizon] > 0.0) {
        return Err(Error::ZeroRenewalMass(horizon));
    }
    let k = kernel.table();
    let mut points = vec![0];
    let mut at = 0usize;
    while at < horizon {
        let target = rng.random::<f64>() * uv[horizon - at];
        let mut acc = 0.0;
        let mut chosen = horizon;
        for j in at + 1..=horizon {
            acc += k[j - at] * uv[horizon - j];
            if acc > target {
                chosen = j;
                break;
            }
        }
        at = chosen;
        points.push(at);
    }
    Ok(points)
}

/// Reusable sampler holding the cumulative gap table.
pub struct RenewalSampler<'a> {
    kernel: &'a RenewalKernel,
    cdf: Vec<f64>,
}

impl<'a> RenewalSampler<'a> {
    pub fn new(kernel: &'a RenewalKernel) -> Self {
        Self { kernel, cdf: kernel.cdf_table() }
    }

    pub fn sample_free<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> Result<Vec<usize>> {
        if horizon > self.kernel.n_max() {
            return Err(Error::HorizonTooLarge { horizon, n_max: self.kernel.n_max() });
        }
        Ok(sample_free(self.kernel, &self.cdf, horizon, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{build_kernel, renewal_function, KernelSpec};
    use crate::rng::stream;

    fn table(k: Vec<f64>) -> RenewalKernel {
        build_kernel(&KernelSpec::Tabulated { alpha: 0.5, k, hand_check: true }).unwrap()
    }

    #[test]
    fn degenerate_kernel_fills_everything() {
        let mut k = vec![0.0; 10];
        k[0] = 1.0;
        let kernel = table(k);
        let mut rng = stream(1, 0);
        let s = sample_renewal(&kernel, None, 10, false, &mut rng).unwrap();
        assert_eq!(s, (0..=10).collect::<Vec<_>>());
        let u = renewal_function(&kernel, 10).unwrap();
        let s = sample_renewal(&kernel, Some(&u), 10, true, &mut rng).unwrap();
        assert_eq!(s, (0..=10).collect::<Vec<_>>());
    }

    #[test]
    fn conditioned_always_hits_horizon() {
        let kernel = build_kernel(&KernelSpec::PurePower { alpha: 0.6, n_max: 300 }).unwrap();
        let u = renewal_function(&kernel, 300).unwrap();
        let mut rng = stream(2, 0);
        for _ in 0..200 {
            let s = sample_renewal(&kernel, Some(&u), 300, true, &mut rng).unwrap();
            assert_eq!(s[0], 0);
            assert_eq!(*s.last().unwrap(), 300);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn conditioned_two_point_frequency() {
        // P(1 ∈ τ | 2 ∈ τ) = K(1)² / u(2) = 0.25 / 0.75
        let kernel = table(vec![0.5, 0.5]);
        let u = renewal_function(&kernel, 2).unwrap();
        let mut rng = stream(3, 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_renewal(&kernel, Some(&u), 2, true, &mut rng).unwrap().contains(&1))
            .count();
        let p = hits as f64 / n as f64;
        assert!((p - 1.0 / 3.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn horizon_checked() {
        let kernel = table(vec![0.5, 0.5]);
        let mut rng = stream(4, 0);
        assert!(sample_renewal(&kernel, None, 3, false, &mut rng).is_err());
    }
}
