//! Chaos kernels of the continuum partition functions, their closed-form
//! second moments and the Girsanov tilt.

use serde::{Deserialize, Serialize};

use super::brownian::BrownianPath;
use crate::special::{c_alpha, ln_gamma};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChaosVariant {
    /// Pinned at both ends, `α ∈ (1/2, 1)`.
    Conditioned,
    /// Free right end, `α ∈ (1/2, 1)`.
    Free,
    /// `α > 1`: every gap factor is `1/E[τ₁]`.
    MeanCase { mean_tau1: f64 },
}

/// How the power factors of the kernel are discretized on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridRule {
    /// Exact averages of `x^{α−1}` over a cell, and of `|x−y|^{α−1}` over
    /// pairs of cells.
    #[default]
    CellAverage,
    /// Values at cell midpoints.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosSpec {
    pub alpha: f64,
    pub beta_hat: f64,
    pub h_hat: f64,
    pub horizon: f64,
    pub variant: ChaosVariant,
    /// Grid size `M` used when paths are generated for this spec.
    pub cells: usize,
    #[serde(default)]
    pub rule: GridRule,
}

impl ChaosSpec {
    pub fn conditioned(alpha: f64, beta_hat: f64, h_hat: f64, horizon: f64, cells: usize) -> Result<Self> {
        let s = Self {
            alpha,
            beta_hat,
            h_hat,
            horizon,
            variant: ChaosVariant::Conditioned,
            cells,
            rule: GridRule::CellAverage,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alpha;
        match self.variant {
            ChaosVariant::Conditioned | ChaosVariant::Free => {
                if !(a > 0.5 && a < 1.0) {
                    return Err(Error::InvalidParameter(format!("alpha {a} outside (1/2, 1)")));
                }
            }
            ChaosVariant::MeanCase { mean_tau1 } => {
                if !(a > 1.0) || !(mean_tau1 > 0.0 && mean_tau1.is_finite()) {
                    return Err(Error::InvalidParameter(format!("alpha {a}, E[tau_1] {mean_tau1}")));
                }
            }
        }
        if !(self.beta_hat >= 0.0 && self.beta_hat.is_finite()) || !self.h_hat.is_finite() {
            return Err(Error::InvalidParameter(format!("couplings ({}, {})", self.beta_hat, self.h_hat)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) || self.cells < 2 {
            return Err(Error::InvalidParameter(format!("T = {}, M = {}", self.horizon, self.cells)));
        }
        Ok(())
    }

    pub fn with_beta_hat(mut self, beta_hat: f64) -> Self {
        self.beta_hat = beta_hat;
        self
    }

    pub fn with_h_hat(mut self, h_hat: f64) -> Self {
        self.h_hat = h_hat;
        self
    }

    pub fn with_rule(mut self, rule: GridRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }

    /// Whether `Z ≡ 1` for every environment.
    pub fn is_trivial(&self) -> bool {
        self.beta_hat == 0.0 && self.h_hat == 0.0
    }
}

/// `ψ(s, t; t₁, …, t_k)`, the kernel of the `k`-th chaos.
pub fn chaos_kernel(spec: &ChaosSpec, s: f64, t: f64, times: &[f64]) -> Result<f64> {
    let mut prev = s;
    for &x in times {
        if !(x > prev) {
            return Err(Error::BadTimes);
        }
        prev = x;
    }
    if !(t > prev) {
        return Err(Error::BadTimes);
    }
    let k = times.len() as i32;
    let a = spec.alpha;
    Ok(match spec.variant {
        ChaosVariant::MeanCase { mean_tau1 } => mean_tau1.powi(-k),
        ChaosVariant::Conditioned | ChaosVariant::Free => {
            let ca = c_alpha(a);
            let mut v = 1.0;
            let mut prev = s;
            for &x in times {
                v *= ca * (x - prev).powf(a - 1.0);
                prev = x;
            }
            if spec.variant == ChaosVariant::Conditioned && k > 0 {
                v *= ((t - s) / (t - prev)).powf(1.0 - a);
            }
            v
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentSeries {
    /// `E[Z(0,T)²]`, the sum of `1` and all terms.
    pub value: f64,
    /// Terms `k = 1..=k_max`.
    pub terms: Vec<f64>,
    /// Set when the last term is not smaller than the one before it.
    pub underresolved: bool,
}

/// The `k`-th term `β̂^{2k} ∫ ψ_k²` of `E[Z(0,T)²]` at `ĥ = 0`.
pub fn second_moment_term(alpha: f64, beta_hat: f64, horizon: f64, k: usize) -> f64 {
    if beta_hat == 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let chi = 2.0 * alpha - 1.0;
    let ln = 2.0 * kf * (beta_hat.ln() + c_alpha(alpha).ln()) + chi * kf * horizon.ln()
        + (kf + 1.0) * ln_gamma(chi)
        - ln_gamma((kf + 1.0) * chi);
    ln.exp()
}

/// `E[Z(0,T)²] = 1 + Σ_{k ≤ k_max} β̂^{2k} C_α^{2k} T^{(2α−1)k} Γ(2α−1)^{k+1} / Γ((k+1)(2α−1))`.
pub fn z_second_moment_series(alpha: f64, beta_hat: f64, horizon: f64, k_max: usize) -> Result<SecondMomentSeries> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (1/2, 1)")));
    }
    if !(beta_hat >= 0.0) || !(horizon > 0.0) || k_max == 0 {
        return Err(Error::InvalidParameter(format!("beta_hat {beta_hat}, T {horizon}, k_max {k_max}")));
    }
    let terms: Vec<f64> = (1..=k_max).map(|k| second_moment_term(alpha, beta_hat, horizon, k)).collect();
    let underresolved = k_max >= 2 && terms[k_max - 1] > 0.0 && terms[k_max - 1] >= terms[k_max - 2];
    let value = 1.0 + crate::special::compensated_sum(terms.iter().copied());
    Ok(SecondMomentSeries { value, terms, underresolved })
}

/// Series to convergence: adds terms until they drop below `1e-17` of the sum.
pub fn z_second_moment(alpha: f64, beta_hat: f64, horizon: f64) -> Result<f64> {
    let mut k_max = 32;
    loop {
        let s = z_second_moment_series(alpha, beta_hat, horizon, k_max)?;
        let last = *s.terms.last().unwrap_or(&0.0);
        if !s.underresolved && last <= 1e-17 * s.value {
            return Ok(s.value);
        }
        if k_max > 1 << 14 {
            return Err(Error::Numerical(format!("second-moment series not converged at k = {k_max}")));
        }
        k_max *= 2;
    }
}

/// `exp((ĥ/β̂) W_T − ½ (ĥ/β̂)² T)`.
pub fn girsanov_tilt(path: &BrownianPath, beta_hat: f64, h_hat: f64, horizon: f64) -> Result<f64> {
    if !(beta_hat > 0.0) {
        return Err(Error::InvalidParameter(format!("beta_hat {beta_hat} must be positive")));
    }
    let theta = h_hat / beta_hat;
    let w = path.at(horizon);
    Ok((theta * w - 0.5 * theta * theta * horizon).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::TanhSinh;
    use approx::assert_relative_eq;

    fn spec() -> ChaosSpec {
        ChaosSpec::conditioned(0.75, 1.0, 0.0, 1.0, 64).unwrap()
    }

    #[test]
    fn kernel_hand_value() {
        let v = chaos_kernel(&spec(), 0.0, 1.0, &[0.5]).unwrap();
        assert_relative_eq!(v, 0.238_732, max_relative = 1e-5);
        assert!(chaos_kernel(&spec(), 0.0, 1.0, &[0.5, 0.5]).is_err());
        let mean = ChaosSpec { alpha: 1.5, variant: ChaosVariant::MeanCase { mean_tau1: 2.0 }, ..spec() };
        assert_eq!(chaos_kernel(&mean, 0.0, 1.0, &[0.1, 0.2, 0.3]).unwrap(), 0.125);
        let free = ChaosSpec { variant: ChaosVariant::Free, ..spec() };
        let near = 1.0 - 1e-9;
        let ratio = chaos_kernel(&spec(), 0.0, 1.0, &[near]).unwrap()
            / chaos_kernel(&free, 0.0, 1.0, &[near]).unwrap();
        assert!(ratio > 100.0);
    }

    #[test]
    fn first_term_matches_quadrature() {
        let s = spec();
        let q = TanhSinh::with_tol(1e-13).integrate_gaps(0.0, 1.0, |x, _, _| {
            chaos_kernel(&s, 0.0, 1.0, &[x]).map_or(0.0, |v| v * v)
        });
        let t1 = second_moment_term(0.75, 1.0, 1.0, 1);
        assert_relative_eq!(t1, q.value, max_relative = 1e-8);
        assert_relative_eq!(t1, c_alpha(0.75).powi(2) * std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn second_term_matches_quadrature() {
        // ∫∫_{0<a<b<T} ψ₂² in gap coordinates, T = 2
        let s = ChaosSpec { horizon: 2.0, ..spec() };
        let outer = TanhSinh::with_tol(1e-10).integrate_gaps(0.0, 2.0, |a, _, _| {
            TanhSinh::with_tol(1e-11)
                .integrate_gaps(a, 2.0, |b, _, _| chaos_kernel(&s, 0.0, 2.0, &[a, b]).map_or(0.0, |v| v * v))
                .value
        });
        assert_relative_eq!(second_moment_term(0.75, 1.0, 2.0, 2), outer.value, max_relative = 1e-6);
    }

    #[test]
    fn series_properties() {
        assert_eq!(z_second_moment_series(0.75, 0.0, 1.0, 5).unwrap().value, 1.0);
        let s = z_second_moment_series(0.75, 1.0, 1.0, 30).unwrap();
        assert!(!s.underresolved);
        for w in s.terms.windows(3) {
            // ratio of consecutive terms itself decreases
            assert!(w[2] / w[1] < w[1] / w[0]);
        }
        let big = z_second_moment_series(0.75, 40.0, 1.0, 3).unwrap();
        assert!(big.underresolved);
        // scaling: E[Z_β̂(0,A)²] = E[Z_{A^{α−1/2}β̂}(0,1)²]
        let a = 2.0f64;
        let lhs = z_second_moment(0.75, 0.7, a).unwrap();
        let rhs = z_second_moment(0.75, 0.7 * a.powf(0.25), 1.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn tilt_is_one_without_drift() {
        let p = BrownianPath::from_stream(1.0, 8, 1, 1).unwrap();
        assert_eq!(girsanov_tilt(&p, 0.5, 0.0, 1.0).unwrap(), 1.0);
        assert!(girsanov_tilt(&p, 0.0, 0.1, 1.0).is_err());
    }
}
