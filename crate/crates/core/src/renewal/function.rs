use std::io::Write;

use serde::Serialize;

use super::kernel::{KernelOrigin, RenewalKernel, SlowlyVarying};
use crate::convolution::{online_direct, online_fft};
use crate::error::{Error, Result};
use crate::special::{c_alpha, linear_fit, log_spaced_indices};

/// Above this length the renewal recursion switches to the FFT route.
const FFT_THRESHOLD: usize = 4096;

/// `u(n) = P(n ∈ τ)` for `n = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct RenewalFunction {
    u: Vec<f64>,
    alpha: f64,
    slowly_varying: SlowlyVarying,
    mean_gap: Option<f64>,
}

impl RenewalFunction {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn n_max(&self) -> usize {
        self.u.len() - 1
    }
    pub fn values(&self) -> &[f64] {
        &self.u
    }
    pub fn get(&self, n: usize) -> f64 {
        self.u[n]
    }
    pub fn l(&self, n: f64) -> f64 {
        self.slowly_varying.eval(n)
    }
    pub fn mean_gap(&self) -> Option<f64> {
        self.mean_gap
    }

    /// Largest `|u(n) − Σ_{m=1}^{n} K(m) u(n−m)|` over `n ≤ upto`, computed directly.
    pub fn convolution_residual(&self, kernel: &RenewalKernel, upto: usize) -> f64 {
        let k = kernel.table();
        let mut worst: f64 = (self.u[0] - 1.0).abs();
        for n in 1..=upto.min(self.n_max()) {
            let s: f64 = (1..=n).map(|m| k[m] * self.u[n - m]).sum();
            worst = worst.max((self.u[n] - s).abs());
        }
        worst
    }

    /// Write `n, K(n), u(n)` rows.
    pub fn write_csv<W: Write>(&self, kernel: &RenewalKernel, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
        w.write_record(["n", "K", "u"]).map_err(io)?;
        for (n, u) in self.u.iter().enumerate() {
            w.write_record(&[n.to_string(), format!("{:e}", kernel.k(n)), format!("{u:e}")])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        Ok(())
    }
}

fn recursion(kernel: &[f64], len: usize, fft: bool) -> Vec<f64> {
    let feed = |i: usize, acc: f64| if i == 0 { 1.0 } else { acc };
    if fft {
        online_fft(kernel, len, feed)
    } else {
        online_direct(kernel, len, feed)
    }
}

/// Renewal function by `u(0) = 1`, `u(n) = Σ_{m=1}^{n} K(m) u(n−m)`.
pub fn renewal_function(kernel: &RenewalKernel, n_max: usize) -> Result<RenewalFunction> {
    if n_max > kernel.n_max() {
        return Err(Error::HorizonTooLarge { horizon: n_max, n_max: kernel.n_max() });
    }
    let len = n_max + 1;
    let u = recursion(kernel.table(), len, len > FFT_THRESHOLD);
    Ok(RenewalFunction {
        u,
        alpha: kernel.alpha(),
        slowly_varying: kernel.slowly_varying().clone(),
        mean_gap: if kernel.alpha() > 1.0 { kernel.mean() } else { None },
    })
}

/// Direct O(n²) recursion, kept as the reference for the FFT route.
pub fn renewal_function_direct(kernel: &RenewalKernel, n_max: usize) -> Result<RenewalFunction> {
    if n_max > kernel.n_max() {
        return Err(Error::HorizonTooLarge { horizon: n_max, n_max: kernel.n_max() });
    }
    let u = recursion(kernel.table(), n_max + 1, false);
    Ok(RenewalFunction {
        u,
        alpha: kernel.alpha(),
        slowly_varying: kernel.slowly_varying().clone(),
        mean_gap: if kernel.alpha() > 1.0 { kernel.mean() } else { None },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticTrace {
    pub n: Vec<usize>,
    /// `u(n) L(n) n^{1-α} / C_α` for `α < 1`, `u(n) E[τ₁]` for `α > 1`.
    pub ratio: Vec<f64>,
}

impl AsymptoticTrace {
    pub fn at(&self, n: usize) -> Option<f64> {
        self.n.iter().position(|&m| m == n).map(|i| self.ratio[i])
    }
}

pub fn asymptotic_ratio(u: &RenewalFunction, n: usize) -> f64 {
    let a = u.alpha;
    if a < 1.0 {
        u.u[n] * u.l(n as f64) * (n as f64).powf(1.0 - a) / c_alpha(a)
    } else {
        u.u[n] * u.mean_gap.expect("finite mean for alpha > 1")
    }
}

/// Ratio of `u` to its renewal-theorem asymptotics at log-spaced `n`, plus
/// every decade point that falls inside the range.
pub fn check_asymptotics(u: &RenewalFunction) -> AsymptoticTrace {
    let n_max = u.n_max();
    let mut n = log_spaced_indices(10.min(n_max), n_max, 24);
    let mut decade = 10;
    while decade <= n_max {
        n.push(decade);
        decade *= 10;
    }
    n.sort_unstable();
    n.dedup();
    let ratio = n.iter().map(|&m| asymptotic_ratio(u, m)).collect();
    AsymptoticTrace { n, ratio }
}

/// Smoothness fit of `|u(n+ℓ)/u(n) − 1| ≤ C (ℓ/n)^δ` over `n ≥ n₀`, `0 ≤ ℓ ≤ εn`.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessFit {
    pub c: f64,
    pub delta: f64,
    pub pass: bool,
    pub n0: usize,
    pub epsilon: f64,
    /// Upper envelope `(r_lo, r_hi, max |u(n+ℓ)/u(n) − 1|)` per log bin of `r = ℓ/n`.
    pub envelope: Vec<(f64, f64, f64)>,
}

pub const SMOOTHNESS_N0: usize = 64;
pub const SMOOTHNESS_EPSILON: f64 = 0.25;
pub const SMOOTHNESS_MIN_DELTA: f64 = 0.05;
const SMOOTHNESS_BINS: usize = 160;

/// The window is exactly `n ≥ 64`, `0 ≤ ℓ ≤ n/4` (with `n + ℓ` inside the
/// table). `δ` is the log-log slope of the envelope (clamped to `(0, 1]`)
/// and `C` the smallest constant making the bound hold on every bin.
pub fn check_smoothness(u: &RenewalFunction) -> Result<SmoothnessFit> {
    let n_max = u.n_max();
    if n_max < 1000 {
        return Err(Error::InvalidParameter(format!(
            "smoothness fit needs u up to 1000, got {n_max}"
        )));
    }
    let n0 = SMOOTHNESS_N0;
    let r_min = 1.0 / n_max as f64;
    let r_max = SMOOTHNESS_EPSILON;
    let log_span = (r_max / r_min).ln();
    let bin_of = |r: f64| -> usize {
        let b = ((r / r_min).ln() / log_span * SMOOTHNESS_BINS as f64) as usize;
        b.min(SMOOTHNESS_BINS - 1)
    };
    let mut env = vec![0.0f64; SMOOTHNESS_BINS];
    let vals = &u.u;
    for n in n0..=n_max {
        let l_max = (n / 4).min(n_max - n);
        if l_max == 0 {
            continue;
        }
        let inv_un = 1.0 / vals[n];
        let nf = n as f64;
        // bin boundaries in ℓ for this n
        let mut l = 1;
        while l <= l_max {
            let b = bin_of(l as f64 / nf);
            // last ℓ in this bin
            let r_hi = r_min * ((b + 1) as f64 / SMOOTHNESS_BINS as f64 * log_span).exp();
            let l_end = ((r_hi * nf).floor() as usize).clamp(l, l_max);
            let mut m = env[b];
            for ll in l..=l_end {
                let g = (vals[n + ll] * inv_un - 1.0).abs();
                if g > m {
                    m = g;
                }
            }
            env[b] = m;
            l = l_end + 1;
        }
    }
    let edges: Vec<(f64, f64)> = (0..SMOOTHNESS_BINS)
        .map(|b| {
            let lo = r_min * (b as f64 / SMOOTHNESS_BINS as f64 * log_span).exp();
            let hi = r_min * ((b + 1) as f64 / SMOOTHNESS_BINS as f64 * log_span).exp();
            (lo, hi)
        })
        .collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (b, &(lo, hi)) in edges.iter().enumerate() {
        if env[b] > 0.0 {
            xs.push((lo * hi).sqrt().ln());
            ys.push(env[b].ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::Numerical("envelope has too few occupied bins".into()));
    }
    let (slope, _) = linear_fit(&xs, &ys);
    let delta = slope.clamp(f64::MIN_POSITIVE, 1.0);
    // envelope over a bin is attained somewhere in [lo, hi], so divide by lo^δ
    let c = edges
        .iter()
        .zip(&env)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&(lo, _), &e)| e / lo.powf(delta))
        .fold(0.0, f64::max);
    let envelope = edges.iter().zip(&env).map(|(&(lo, hi), &e)| (lo, hi, e)).collect();
    Ok(SmoothnessFit {
        c,
        delta,
        pass: delta >= SMOOTHNESS_MIN_DELTA && c.is_finite(),
        n0,
        epsilon: SMOOTHNESS_EPSILON,
        envelope,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingTrace {
    /// Largest amount by which `0 ≤ u(n) − u(n+ℓ) ≤ u(n) P(τ₁>n) Σ_{k<ℓ} u(k)` fails.
    pub max_violation: f64,
    /// Largest `u(n+1) − u(n)`; non-positive when `u` is non-increasing.
    pub max_increase: f64,
    pub points: usize,
}

/// Check the coalescing-coupling bound on a grid of `(n, ℓ)`.
pub fn check_coupling_bound(u: &RenewalFunction, kernel: &RenewalKernel) -> Result<CouplingTrace> {
    if kernel.origin() != KernelOrigin::BesselLike {
        return Err(Error::InvalidParameter(
            "coupling bound applies to Bessel-like return laws".into(),
        ));
    }
    let vals = &u.u;
    let n_max = u.n_max();
    let mut prefix = vec![0.0; n_max + 2];
    for k in 0..=n_max {
        prefix[k + 1] = prefix[k] + vals[k];
    }
    let ns = log_spaced_indices(1, n_max, 60);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for &n in &ns {
        let mut ls = log_spaced_indices(1, n_max - n, 40);
        ls.insert(0, 0);
        ls.dedup();
        for &l in ls.iter().filter(|&&l| n + l <= n_max) {
            let gap = vals[n] - vals[n + l];
            let bound = vals[n] * kernel.survival(n) * prefix[l];
            worst = worst.max(-gap).max(gap - bound);
            points += 1;
        }
    }
    let max_increase = vals.windows(2).skip(1).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(CouplingTrace { max_violation: worst, max_increase, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{build_kernel, KernelSpec};

    fn two_point() -> RenewalKernel {
        build_kernel(&KernelSpec::Tabulated { alpha: 0.5, k: vec![0.5, 0.5], hand_check: true })
            .unwrap()
    }

    #[test]
    fn hand_convolution() {
        assert!(matches!(renewal_function(&two_point(), 3), Err(Error::HorizonTooLarge { .. })));
        let k = build_kernel(&KernelSpec::Tabulated {
            alpha: 0.5,
            k: vec![0.5, 0.5, 0.0, 0.0],
            hand_check: true,
        })
        .unwrap();
        let u = renewal_function(&k, 3).unwrap();
        assert_eq!(u.values(), &[1.0, 0.5, 0.75, 0.625]);
    }

    #[test]
    fn u_zero_is_one_and_identity_holds() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 2000 }).unwrap();
        let u = renewal_function(&k, 2000).unwrap();
        assert_eq!(u.get(0), 1.0);
        assert!(u.convolution_residual(&k, 2000) < 1e-12);
        assert!(u.values().iter().all(|&x| x > 0.0 && x <= 1.0));
    }

    #[test]
    fn fft_route_matches_direct() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 20_000 }).unwrap();
        let fast = recursion(k.table(), 20_001, true);
        let slow = renewal_function_direct(&k, 20_000).unwrap();
        let worst = fast.iter().zip(slow.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "max deviation {worst}");
    }

    #[test]
    fn horizon_beyond_kernel() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 10 }).unwrap();
        assert!(matches!(renewal_function(&k, 11), Err(Error::HorizonTooLarge { .. })));
    }

    #[test]
    fn smoothness_zero_lag_and_small_table() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 500 }).unwrap();
        let u = renewal_function(&k, 500).unwrap();
        assert!(check_smoothness(&u).is_err());
        // ℓ = 0 contributes |u(n)/u(n) − 1| = 0
        assert!(u.values().iter().all(|&x| (x / x - 1.0).abs() == 0.0));
    }

    #[test]
    fn coupling_needs_bessel_kernel() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 100 }).unwrap();
        let u = renewal_function(&k, 100).unwrap();
        assert!(check_coupling_bound(&u, &k).is_err());
    }
}
