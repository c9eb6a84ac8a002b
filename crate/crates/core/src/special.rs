//! Special functions and small numeric helpers shared by the models.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// `C_α = α sin(πα) / π`, the constant in the renewal asymptotics and in the
/// regenerative-set densities.
pub fn c_alpha(alpha: f64) -> f64 {
    alpha * (PI * alpha).sin() / PI
}

// B_{2j} / (2j)! for j = 1..=10
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (a + k)^{-s}` for `a > 0`, by
/// Euler–Maclaurin summation after shifting `a` past 16. For `s < 1` this is
/// the analytic continuation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s != 1.0 && s > -1.0 && a > 0.0, "hurwitz_zeta needs s > -1, s != 1, a > 0");
    let mut head = 0.0;
    let mut x = a;
    while x < 16.0 {
        head += x.powf(-s);
        x += 1.0;
    }
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) times x^{-s-2j+1}
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    let x2 = x * x;
    for (j, b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = b * rising * xpow;
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        xpow /= x2;
    }
    head + tail
}

/// `Σ_{n ≥ m} n^{-s}` for integer `m ≥ 1`.
pub fn power_tail_sum(s: f64, m: usize) -> f64 {
    hurwitz_zeta(s, m as f64)
}

/// Neumaier-compensated sum, order dependent but reproducible.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Ordinary least squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `n` points log-spaced between `lo` and `hi` inclusive, rounded and deduplicated.
pub fn log_spaced_indices(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    let (l, h) = ((lo.max(1)) as f64, hi as f64);
    let mut out: Vec<usize> = (0..n)
        .map(|i| {
            let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            (l * (h / l).powf(f)).round() as usize
        })
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn c_alpha_three_quarters() {
        assert_relative_eq!(c_alpha(0.75), 0.168_809, epsilon = 1e-6);
    }

    #[test]
    fn hurwitz_matches_direct_sums() {
        // ζ(2) = π²/6
        assert_relative_eq!(hurwitz_zeta(2.0, 1.0), PI * PI / 6.0, max_relative = 1e-14);
        // ζ(4) = π⁴/90
        assert_relative_eq!(hurwitz_zeta(4.0, 1.0), PI.powi(4) / 90.0, max_relative = 1e-14);
        // brute force with integral remainder for s = 1.75, a = 3
        let s = 1.75;
        let direct: f64 = (3..2_000_000).map(|n| (n as f64).powf(-s)).sum::<f64>()
            + (2_000_000f64 - 0.5).powf(1.0 - s) / (s - 1.0);
        assert_relative_eq!(hurwitz_zeta(s, 3.0), direct, max_relative = 1e-12);
        // ζ(1/2) = −1.4603545088095868..., and ζ(s, a) − ζ(s, a + 1) = a^{−s}
        assert_relative_eq!(hurwitz_zeta(0.5, 1.0), -1.4603545088095868, max_relative = 1e-13);
        assert_relative_eq!(hurwitz_zeta(0.5, 0.3) - hurwitz_zeta(0.5, 1.3), 0.3f64.powf(-0.5), max_relative = 1e-13);
    }

    #[test]
    fn compensated_beats_naive() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let (b, a) = linear_fit(&x, &y);
        assert_relative_eq!(b, -0.5, epsilon = 1e-14);
        assert_relative_eq!(a, 3.0, epsilon = 1e-13);
    }
}
