use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::TanhSinh;
use crate::convolution::online;
use crate::special::{c_alpha, hurwitz_zeta, power_tail_sum};

/// Slowly varying modulation `L(n)` of the tail `K(n) = L(n) / n^{1+α}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowlyVarying {
    Constant { value: f64 },
    /// `scale · (1 + ln n)^power`
    LogPower { scale: f64, power: f64 },
    /// `values[n-1] = L(n)` for `n = 1..=len`, constant beyond.
    Tabulated { values: Vec<f64> },
}

impl SlowlyVarying {
    pub fn eval(&self, n: f64) -> f64 {
        match self {
            SlowlyVarying::Constant { value } => *value,
            SlowlyVarying::LogPower { scale, power } => scale * (1.0 + n.max(1.0).ln()).powf(*power),
            SlowlyVarying::Tabulated { values } => {
                let idx = (n.round().max(1.0) as usize).min(values.len());
                values[idx - 1]
            }
        }
    }
}

/// Configuration-level description of an inter-arrival law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `K(n) = c n^{-(1+α)}` for every `n ≥ 1`.
    PurePower { alpha: f64, n_max: usize },
    /// `K(n) = c (1 + ln n)^p n^{-(1+α)}` for every `n ≥ 1`.
    LogPower { alpha: f64, power: f64, n_max: usize },
    /// Explicit table `K(1..=len)`. Missing mass is carried by a power tail
    /// of exponent `alpha`. Tables that break positivity or the tail law
    /// need `hand_check = true`.
    Tabulated {
        alpha: f64,
        k: Vec<f64>,
        #[serde(default)]
        hand_check: bool,
    },
    /// Kernel whose renewal function is `u(n) = scale·(n + shift)^{α−1}` for
    /// `n ≥ 1`, `α ∈ (0, 1)`. Then `L ≡ C_α / scale`. The default shift solves
    /// `ζ(2−2α, 1+shift) = 0`, which removes the leading lattice correction
    /// of `Σ u(n)²` for `α > 1/2`.
    PowerRenewal {
        alpha: f64,
        scale: f64,
        #[serde(default)]
        shift: Option<f64>,
        n_max: usize,
    },
    /// Return law of the Bessel-like walk `p_up(x) = 1/2 + (dimension - 1)/(4x)`.
    BesselLike { dimension: f64, n_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelOrigin {
    Analytic,
    Tabulated,
    BesselLike,
}

/// Law of the gaps beyond the table.
#[derive(Debug, Clone, PartialEq)]
enum Tail {
    /// No mass beyond the table.
    Empty,
    /// Same closed form as inside: `K(n) = c L(n) n^{-(1+α)}` with `c` folded into `L`.
    Formula,
    /// `P(τ₁ > n) = mass (n_max / n)^α` for `n ≥ n_max`.
    Pareto { mass: f64 },
}

#[derive(Debug, Clone)]
pub struct RenewalKernel {
    alpha: f64,
    /// `k[n]` for `n = 0..=n_max`, `k[0] = 0`.
    k: Vec<f64>,
    /// `survival[n] = P(τ₁ > n)` for `n = 0..=n_max`.
    survival: Vec<f64>,
    slowly_varying: SlowlyVarying,
    tail: Tail,
    origin: KernelOrigin,
    hand_check: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if (alpha - 1.0).abs() < 1e-12 {
        return Err(Error::AlphaOne);
    }
    Ok(())
}

/// `Σ_{n ≥ m} f(n)` for a smooth, eventually monotone `f`, via the midpoint
/// Euler–Maclaurin form `∫_{m-1/2}^∞ f − f'(m-1/2)/24`.
fn smooth_tail_sum<F: Fn(f64) -> f64>(f: F, m: usize) -> f64 {
    let a = m as f64 - 0.5;
    // x = a / s maps (0, 1] onto [a, ∞)
    let integral = TanhSinh::with_tol(1e-14)
        .integrate(0.0, 1.0, |s| if s <= 0.0 { 0.0 } else { f(a / s) * a / (s * s) })
        .value;
    let h = 1e-3 * a;
    let deriv = (f(a + h) - f(a - h)) / (2.0 * h);
    integral - deriv / 24.0
}

impl RenewalKernel {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn n_max(&self) -> usize {
        self.k.len() - 1
    }
    pub fn origin(&self) -> KernelOrigin {
        self.origin
    }
    pub fn is_hand_check(&self) -> bool {
        self.hand_check
    }
    pub fn slowly_varying(&self) -> &SlowlyVarying {
        &self.slowly_varying
    }
    /// `L(n)`.
    pub fn l(&self, n: f64) -> f64 {
        self.slowly_varying.eval(n)
    }
    /// Table `K(0..=n_max)` with `K(0) = 0`.
    pub fn table(&self) -> &[f64] {
        &self.k
    }

    /// `K(n) = P(τ₁ = n)` for any `n`, using the tail law beyond the table.
    pub fn k(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if n <= self.n_max() {
            return self.k[n];
        }
        match self.tail {
            Tail::Empty => 0.0,
            Tail::Formula => self.l(n as f64) * (n as f64).powf(-1.0 - self.alpha),
            Tail::Pareto { .. } => self.survival(n - 1) - self.survival(n),
        }
    }

    /// `P(τ₁ > n)`.
    pub fn survival(&self, n: usize) -> f64 {
        if n <= self.n_max() {
            return self.survival[n];
        }
        match self.tail {
            Tail::Empty => 0.0,
            Tail::Formula => self.formula_tail(n + 1),
            Tail::Pareto { mass } => mass * (self.n_max() as f64 / n as f64).powf(self.alpha),
        }
    }

    /// Mass of the law beyond the table, `P(τ₁ > n_max)`.
    pub fn tail_mass(&self) -> f64 {
        self.survival[self.n_max()]
    }

    /// `Σ_{n ≥ m} K(n)` under the closed-form law.
    fn formula_tail(&self, m: usize) -> f64 {
        match &self.slowly_varying {
            SlowlyVarying::Constant { value } => value * power_tail_sum(1.0 + self.alpha, m),
            sv => {
                let a = self.alpha;
                smooth_tail_sum(|x| sv.eval(x) * x.powf(-1.0 - a), m)
            }
        }
    }

    /// `E[τ₁]`, finite only for `α > 1`.
    pub fn mean(&self) -> Option<f64> {
        if self.alpha < 1.0 && !matches!(self.tail, Tail::Empty) {
            return None;
        }
        let n_max = self.n_max();
        // E τ₁ = Σ_{n≥0} P(τ₁ > n)
        let head: f64 = crate::special::compensated_sum(self.survival.iter().copied());
        let a = self.alpha;
        let tail = match (&self.tail, &self.slowly_varying) {
            (Tail::Empty, _) => 0.0,
            (Tail::Formula, SlowlyVarying::Constant { value }) => {
                // Σ_{n>n_max} P(τ₁>n) = c Σ_{m ≥ n_max+2} (m - n_max - 1) m^{-1-α}
                let m = n_max + 2;
                value * (power_tail_sum(a, m) - (n_max + 1) as f64 * power_tail_sum(1.0 + a, m))
            }
            (Tail::Formula, _) => {
                let sv = self.slowly_varying.clone();
                smooth_tail_sum(
                    |x| {
                        // P(τ₁ > x) ≈ L(x) x^{-α}/α for the smooth tail
                        sv.eval(x) * x.powf(-a) / a
                    },
                    n_max + 1,
                )
            }
            (Tail::Pareto { mass }, _) => {
                mass * (n_max as f64).powf(a) * power_tail_sum(a, n_max + 1)
            }
        };
        Some(head + tail)
    }

    /// Assemble a kernel from a table that already carries its final values.
    fn from_parts(
        alpha: f64,
        k: Vec<f64>,
        slowly_varying: SlowlyVarying,
        tail: Tail,
        origin: KernelOrigin,
        hand_check: bool,
    ) -> Self {
        let n_max = k.len() - 1;
        let tail_mass = match &tail {
            Tail::Empty => 0.0,
            Tail::Pareto { mass } => *mass,
            Tail::Formula => f64::NAN,
        };
        let mut kernel = Self {
            alpha,
            k,
            survival: vec![0.0; n_max + 1],
            slowly_varying,
            tail,
            origin,
            hand_check,
        };
        let last = if tail_mass.is_nan() { kernel.formula_tail(n_max + 1) } else { tail_mass };
        let mut s = last;
        kernel.survival[n_max] = s;
        for n in (0..n_max).rev() {
            s += kernel.k[n + 1];
            kernel.survival[n] = s;
        }
        kernel
    }

    /// Check the invariants of a kernel meant to satisfy the power-law assumption.
    pub fn validate(&self) -> Result<()> {
        let n_max = self.n_max();
        let total = self.survival[0];
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalizable(format!("total mass {total}")));
        }
        if self.hand_check {
            return Ok(());
        }
        if let Some(n) = (1..=n_max).find(|&n| !(self.k[n] > 0.0)) {
            return Err(Error::InvalidParameter(format!("K({n}) is not positive")));
        }
        if n_max < MIN_CHECKED_TABLE && self.origin == KernelOrigin::Tabulated {
            return Err(Error::InvalidParameter(format!(
                "table of length {n_max} is too short to check its tail; set hand_check"
            )));
        }
        if n_max >= 4 {
            // a tabulated L is read off the table itself, so compare its two ends
            let tabulated = matches!(self.slowly_varying, SlowlyVarying::Tabulated { .. });
            let ratio = |n: usize| {
                let scaled = self.k[n] * (n as f64).powf(1.0 + self.alpha);
                if tabulated { scaled } else { scaled / self.l(n as f64) }
            };
            let (r_full, r_half) = (ratio(n_max), ratio(n_max / 2));
            if ((r_full / r_half) - 1.0).abs() > 0.05 {
                return Err(Error::InvalidParameter(format!(
                    "tail law not matched: ratio {r_full} at n_max vs {r_half} at n_max/2"
                )));
            }
        }
        Ok(())
    }

    /// Cumulative `Σ_{m ≤ n} K(m)` for inverse-CDF sampling, `n = 0..=n_max`.
    pub(crate) fn cdf_table(&self) -> Vec<f64> {
        self.survival.iter().map(|s| 1.0 - s).collect()
    }

    /// Kernel from an explicit table of a Bessel-like return law. The residual
    /// mass is the walk's survival at the horizon.
    pub(crate) fn from_return_law(alpha: f64, k: Vec<f64>, residual: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let n_max = k.len() - 1;
        let values: Vec<f64> = (1..=n_max)
            .map(|n| k[n] * (n as f64).powf(1.0 + alpha))
            .collect();
        let kernel = Self::from_parts(
            alpha,
            k,
            SlowlyVarying::Tabulated { values },
            Tail::Pareto { mass: residual.max(0.0) },
            KernelOrigin::BesselLike,
            false,
        );
        Ok(kernel)
    }
}

const MIN_CHECKED_TABLE: usize = 16;

/// Root of `θ ↦ ζ(2−2α, 1+θ)` on `(−1, 0)` for `α ∈ (1/2, 1)`; zero otherwise.
pub fn lattice_shift(alpha: f64) -> f64 {
    if !(alpha > 0.5 && alpha < 1.0) {
        return 0.0;
    }
    let s = 2.0 - 2.0 * alpha;
    // ζ(s, a) → +∞ as a → 0 and ζ(s, 1) < 0 for s ∈ (0, 1)
    let (mut lo, mut hi) = (-1.0 + 1e-12, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hurwitz_zeta(s, 1.0 + mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn power_renewal_kernel(alpha: f64, scale: f64, shift: Option<f64>, n_max: usize) -> Result<RenewalKernel> {
    check_alpha(alpha)?;
    if alpha > 1.0 {
        return Err(Error::Unsupported("power renewal kernels need alpha < 1".into()));
    }
    let shift = shift.unwrap_or_else(|| lattice_shift(alpha));
    if !(scale > 0.0) || !(shift > -1.0) || n_max < 2 {
        return Err(Error::InvalidParameter(format!("scale {scale}, shift {shift}, n_max {n_max}")));
    }
    let u: Vec<f64> = (0..=n_max)
        .map(|n| if n == 0 { 1.0 } else { scale * (n as f64 + shift).powf(alpha - 1.0) })
        .collect();
    if u[1] >= 1.0 {
        return Err(Error::NotNormalizable(format!("u(1) = {} is not below 1", u[1])));
    }
    // K(n) = u(n) − Σ_{0<m<n} K(m) u(n−m)
    let k = online(&u, n_max + 1, |n, acc| if n == 0 { 0.0 } else { u[n] - acc });
    if let Some(n) = (1..=n_max).find(|&n| !(k[n] > 0.0)) {
        return Err(Error::NotNormalizable(format!(
            "K({n}) = {} is not positive; u is not log-convex at this scale",
            k[n]
        )));
    }
    let total = crate::special::compensated_sum(k.iter().copied());
    if total > 1.0 + 1e-12 {
        return Err(Error::NotNormalizable(format!("table sums to {total} > 1")));
    }
    let kernel = RenewalKernel::from_parts(
        alpha,
        k,
        SlowlyVarying::Constant { value: c_alpha(alpha) / scale },
        Tail::Pareto { mass: (1.0 - total).max(0.0) },
        KernelOrigin::Analytic,
        false,
    );
    kernel.validate()?;
    Ok(kernel)
}

/// Build a normalized kernel from its specification.
pub fn build_kernel(spec: &KernelSpec) -> Result<RenewalKernel> {
    match spec {
        KernelSpec::PurePower { alpha, n_max } => {
            let (alpha, n_max) = (*alpha, *n_max);
            check_alpha(alpha)?;
            if n_max < 2 {
                return Err(Error::InvalidParameter("n_max must be at least 2".into()));
            }
            let c = 1.0 / power_tail_sum(1.0 + alpha, 1);
            let mut k = vec![0.0; n_max + 1];
            for (n, kn) in k.iter_mut().enumerate().skip(1) {
                *kn = c * (n as f64).powf(-1.0 - alpha);
            }
            let kernel = RenewalKernel::from_parts(
                alpha,
                k,
                SlowlyVarying::Constant { value: c },
                Tail::Formula,
                KernelOrigin::Analytic,
                false,
            );
            kernel.validate()?;
            Ok(kernel)
        }
        KernelSpec::LogPower { alpha, power, n_max } => {
            let (alpha, power, n_max) = (*alpha, *power, *n_max);
            check_alpha(alpha)?;
            if n_max < 2 {
                return Err(Error::InvalidParameter("n_max must be at least 2".into()));
            }
            let shape = |x: f64| (1.0 + x.max(1.0).ln()).powf(power) * x.powf(-1.0 - alpha);
            let head: f64 = (1..=n_max).map(|n| shape(n as f64)).sum();
            let tail = smooth_tail_sum(shape, n_max + 1);
            let total = head + tail;
            if !total.is_finite() || total <= 0.0 {
                return Err(Error::NotNormalizable(format!("log-power total {total}")));
            }
            let c = 1.0 / total;
            let mut k = vec![0.0; n_max + 1];
            for (n, kn) in k.iter_mut().enumerate().skip(1) {
                *kn = c * shape(n as f64);
            }
            let kernel = RenewalKernel::from_parts(
                alpha,
                k,
                SlowlyVarying::LogPower { scale: c, power },
                Tail::Formula,
                KernelOrigin::Analytic,
                false,
            );
            // the EM tail is accurate to ~1e-15 but renormalize the head exactly
            kernel.validate()?;
            Ok(kernel)
        }
        KernelSpec::Tabulated { alpha, k: table, hand_check } => {
            let alpha = *alpha;
            check_alpha(alpha)?;
            if table.is_empty() {
                return Err(Error::InvalidParameter("empty kernel table".into()));
            }
            if table.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::NotNormalizable("negative or non-finite entry".into()));
            }
            let total: f64 = table.iter().sum();
            if total > 1.0 + 1e-12 {
                return Err(Error::NotNormalizable(format!("table sums to {total} > 1")));
            }
            let residual = (1.0 - total).max(0.0);
            let mut k = vec![0.0];
            k.extend_from_slice(table);
            let n_max = table.len();
            let values: Vec<f64> = (1..=n_max)
                .map(|n| k[n] * (n as f64).powf(1.0 + alpha))
                .collect();
            let tail = if residual > 1e-15 { Tail::Pareto { mass: residual } } else { Tail::Empty };
            if matches!(tail, Tail::Pareto { .. }) && k[n_max] <= 0.0 {
                return Err(Error::NotNormalizable("residual mass after a zero entry".into()));
            }
            let kernel = RenewalKernel::from_parts(
                alpha,
                k,
                SlowlyVarying::Tabulated { values },
                tail,
                KernelOrigin::Tabulated,
                *hand_check,
            );
            if *hand_check {
                log::warn!("hand-check kernel accepted without the power-law tail assumption");
            }
            kernel.validate()?;
            Ok(kernel)
        }
        KernelSpec::PowerRenewal { alpha, scale, shift, n_max } => {
            power_renewal_kernel(*alpha, *scale, *shift, *n_max)
        }
        KernelSpec::BesselLike { dimension, n_max } => {
            let d = *dimension;
            let law = super::bessel::bessel_like_return_law(
                |x| super::bessel::lamperti_p_up(d, x),
                *n_max,
            )?;
            Ok(law.kernel)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pure_power_normalized_with_tail() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 100_000 }).unwrap();
        let head: f64 = crate::special::compensated_sum((1..=100_000).map(|n| k.k(n)));
        assert!((head + k.tail_mass() - 1.0).abs() < 1e-12);
        assert!((k.survival(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_power_ratio() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 10 }).unwrap();
        assert_relative_eq!(k.k(2) / k.k(1), 2f64.powf(-1.75), max_relative = 1e-14);
        assert_relative_eq!(k.k(2) / k.k(1), 0.29730, epsilon = 1e-5);
    }

    #[test]
    fn tail_beyond_table_is_consistent() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 50 }).unwrap();
        let direct: f64 = (51..200_000).map(|n| k.k(n)).sum::<f64>() + k.survival(199_999);
        assert_relative_eq!(direct, k.survival(50), max_relative = 1e-10);
    }

    #[test]
    fn mean_for_alpha_above_one() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 1.5, n_max: 1000 }).unwrap();
        // E τ₁ = ζ(1.5) / ζ(2.5)
        let expect = power_tail_sum(1.5, 1) / power_tail_sum(2.5, 1);
        assert_relative_eq!(k.mean().unwrap(), expect, max_relative = 1e-12);
        let small = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 100 }).unwrap();
        assert!(small.mean().is_none());
    }

    #[test]
    fn log_power_normalized() {
        let k = build_kernel(&KernelSpec::LogPower { alpha: 0.6, power: 1.5, n_max: 2000 }).unwrap();
        assert!((k.survival(0) - 1.0).abs() < 1e-12);
        assert!(k.validate().is_ok());
    }

    #[test]
    fn rejects_bad_alpha() {
        assert_eq!(
            build_kernel(&KernelSpec::PurePower { alpha: 1.0, n_max: 10 }).unwrap_err(),
            Error::AlphaOne
        );
        assert!(build_kernel(&KernelSpec::PurePower { alpha: 0.0, n_max: 10 }).is_err());
        assert!(build_kernel(&KernelSpec::PurePower { alpha: -0.5, n_max: 10 }).is_err());
    }

    #[test]
    fn two_point_needs_flag() {
        let spec = |hand_check| KernelSpec::Tabulated { alpha: 0.5, k: vec![0.5, 0.5], hand_check };
        assert!(build_kernel(&spec(false)).is_err());
        let k = build_kernel(&spec(true)).unwrap();
        assert!(k.is_hand_check());
        assert_eq!(k.tail_mass(), 0.0);
        assert_eq!(k.k(3), 0.0);
    }

    #[test]
    fn power_renewal_reproduces_its_u() {
        let spec = KernelSpec::PowerRenewal { alpha: 0.75, scale: 0.5, shift: None, n_max: 4000 };
        let k = build_kernel(&spec).unwrap();
        let theta = lattice_shift(0.75);
        assert!(hurwitz_zeta(0.5, 1.0 + theta).abs() < 1e-12);
        let u = crate::renewal::renewal_function(&k, 4000).unwrap();
        for n in [1usize, 2, 10, 999, 4000] {
            let want = 0.5 * (n as f64 + theta).powf(-0.25);
            assert_relative_eq!(u.get(n), want, max_relative = 1e-10);
        }
        assert_relative_eq!(k.l(1.0), c_alpha(0.75) / 0.5);
        let too_big = KernelSpec::PowerRenewal { alpha: 0.75, scale: 0.7, shift: None, n_max: 100 };
        assert!(matches!(build_kernel(&too_big), Err(Error::NotNormalizable(_))));
    }

    #[test]
    fn rejects_overfull_table() {
        let spec = KernelSpec::Tabulated { alpha: 0.5, k: vec![0.7, 0.7], hand_check: true };
        assert!(matches!(build_kernel(&spec), Err(Error::NotNormalizable(_))));
    }
}
