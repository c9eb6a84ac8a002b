//! The Dirichlet integral
//!
//! ```text
//! A_k(χ) = ∫_{0<t_1<…<t_k<1} dt / (t_1^χ (t_2−t_1)^χ ⋯ (1−t_k)^χ) = Γ(1−χ)^{k+1} / Γ((k+1)(1−χ))
//! ```
//!
//! checked numerically, and its super-exponential decay in `k`.

use serde::{Deserialize, Serialize};

use crate::quad::{halton, TanhSinh};
use crate::special::ln_gamma;
use crate::{Error, Result};

/// Halton points used for `k ∈ {3, 4}`.
pub const QMC_POINTS: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralMethod {
    TanhSinh,
    QuasiMonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletCheck {
    pub chi: f64,
    pub k: usize,
    pub numeric: f64,
    pub closed_form: f64,
    pub rel_err: f64,
    pub method: IntegralMethod,
    pub bound: BoundFit,
}

pub fn dirichlet_closed_form(chi: f64, k: usize) -> f64 {
    ln_dirichlet(chi, k).exp()
}

fn ln_dirichlet(chi: f64, k: usize) -> f64 {
    let a = 1.0 - chi;
    (k + 1) as f64 * ln_gamma(a) - ln_gamma((k + 1) as f64 * a)
}

fn check_chi(chi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&chi) {
        return Err(Error::InvalidParameter(format!("chi {chi} outside [0, 1)")));
    }
    Ok(())
}

/// Nested tanh-sinh for `k ≤ 2`.
fn quadrature(chi: f64, k: usize) -> Result<f64> {
    let ts = TanhSinh::with_tol(1e-12);
    let p = |v: f64| if chi == 0.0 { 1.0 } else { v.powf(-chi) };
    let r = match k {
        1 => ts.integrate_gaps(0.0, 1.0, |_, l, r| p(l) * p(r)),
        2 => ts.integrate_gaps(0.0, 1.0, |t2, _, r| {
            p(r) * ts.integrate_gaps(0.0, t2, |_, l, m| p(l) * p(m)).value
        }),
        _ => unreachable!(),
    };
    if !(r.error <= 1e-9 * r.value.abs().max(1.0)) {
        return Err(Error::Numerical(format!("quadrature error {:e} for k = {k}", r.error)));
    }
    Ok(r.value)
}

/// Smooth map of `[0,1]` onto itself with all derivatives of order `< p`
/// vanishing at both ends; returns the point and the Jacobian.
fn sidi(w: f64, p: i32) -> (f64, f64) {
    let (a, b) = (w.powi(p), (1.0 - w).powi(p));
    let s = a + b;
    (a / s, p as f64 * w.powi(p - 1) * (1.0 - w).powi(p - 1) / (s * s))
}

/// Quasi Monte Carlo over the simplex by stick breaking, with each stick
/// fraction passed through [`sidi`] to tame the endpoint singularities.
fn quasi_monte_carlo(chi: f64, k: usize, points: u64) -> f64 {
    let mut u = [0.0; 8];
    let mut sum = crate::special::CompensatedSum::new();
    for i in 1..=points {
        halton(i, k, &mut u);
        let mut rest = 1.0;
        let mut f = 1.0;
        for &w in &u[..k] {
            let (v, jac) = sidi(w, 4);
            let gap = rest * v;
            // the stick left after this break has length rest·(1−v)
            f *= jac * rest * gap.powf(-chi);
            rest *= 1.0 - v;
        }
        f *= rest.powf(-chi);
        if f.is_finite() {
            sum.add(f);
        }
    }
    sum.value() / points as f64
}

/// Numeric value of `A_k(χ)` against the closed form, for `k ≤ 4`.
pub fn dirichlet_integral_check(chi: f64, k: usize) -> Result<DirichletCheck> {
    check_chi(chi)?;
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidParameter(format!("k = {k}; direct integration covers 1..=4")));
    }
    let (numeric, method) = if k <= 2 {
        (quadrature(chi, k)?, IntegralMethod::TanhSinh)
    } else {
        (quasi_monte_carlo(chi, k, QMC_POINTS), IntegralMethod::QuasiMonteCarlo)
    };
    let closed_form = dirichlet_closed_form(chi, k);
    Ok(DirichletCheck {
        chi,
        k,
        numeric,
        closed_form,
        rel_err: (numeric / closed_form - 1.0).abs(),
        method,
        bound: fit_bound(chi, BOUND_K_MAX)?,
    })
}

/// Range of `k` used to fit the decay bound.
pub const BOUND_K_MAX: usize = 200;

/// Constants with `A_k ≤ C₁ exp(−C₂ k log k)` for `1 ≤ k ≤ k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub c1: f64,
    pub c2: f64,
    pub k_max: usize,
    /// `k` where `A_k exp(C₂ k log k)` is largest.
    pub k_star: usize,
    /// The maximum is reached well inside the range, so the bound does not
    /// just track the last term.
    pub holds: bool,
}

/// `C₂` is half the slope of `−log A_k` against `k log k` over the upper half
/// of the range; `C₁` is then the smallest constant that works. For `χ`
/// near 1 the terms keep growing far beyond any practical `k_max` before the
/// decay sets in, and the fit reports `holds = false`.
pub fn fit_bound(chi: f64, k_max: usize) -> Result<BoundFit> {
    check_chi(chi)?;
    if k_max < 8 {
        return Err(Error::InvalidParameter("fit needs k_max >= 8".into()));
    }
    let ln_a = |k: usize| ln_dirichlet(chi, k);
    let ks: Vec<usize> = (k_max / 2..=k_max).collect();
    let x: Vec<f64> = ks.iter().map(|&k| k as f64 * (k as f64).ln()).collect();
    let y: Vec<f64> = ks.iter().map(|&k| ln_a(k)).collect();
    let (slope, _) = crate::special::linear_fit(&x, &y);
    let c2 = -0.5 * slope;
    let (k_star, ln_c1) = (1..=k_max)
        .map(|k| (k, ln_a(k) + c2 * k as f64 * (k as f64).ln()))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(BoundFit { c1: ln_c1.exp(), c2, k_max, k_star, holds: c2 > 0.0 && k_star < k_max / 2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBlockCheck {
    pub v: f64,
    pub k1: usize,
    pub k2: usize,
    pub numeric: f64,
    /// `C₁ exp(−C₂ k log k) v^{(1−χ)k₁} (1−v)^{(1−χ)k₂}`.
    pub bound: f64,
    pub holds: bool,
}

/// The integral over `0<t_1<…<t_{k₁}<v<t_{k₁+1}<…<t_k<1`, reduced to one or
/// two dimensions by integrating each block in closed form.
pub fn two_block_integral(chi: f64, v: f64, k1: usize, k2: usize) -> Result<f64> {
    check_chi(chi)?;
    let k = k1 + k2;
    if !(v > 0.0 && v < 1.0) || k == 0 {
        return Err(Error::InvalidParameter(format!("v = {v}, k1 + k2 = {k}")));
    }
    let a = 1.0 - chi;
    let ts = TanhSinh::with_tol(1e-11);
    let pw = |x: f64, e: f64| if e == 0.0 { 1.0 } else { x.powf(e) };
    let r = if k1 == 0 {
        dirichlet_closed_form(chi, k - 1) * ts.integrate_gaps(v, 1.0, |t, _, r| pw(t, -chi) * pw(r, k as f64 * a - 1.0)).value
    } else if k2 == 0 {
        dirichlet_closed_form(chi, k - 1) * ts.integrate_gaps(0.0, v, |t, _, _| pw(t, k as f64 * a - 1.0) * pw(1.0 - t, -chi)).value
    } else {
        let e1 = k1 as f64 * a - 1.0;
        let e2 = k2 as f64 * a - 1.0;
        let inner = |s: f64, to_v: f64| {
            ts.integrate_gaps(v, 1.0, |_, l, r| pw(r, e2) * pw(to_v + l, -chi)).value * pw(s, e1)
        };
        dirichlet_closed_form(chi, k1 - 1)
            * dirichlet_closed_form(chi, k2 - 1)
            * ts.integrate_gaps(0.0, v, |s, _, r| inner(s, r)).value
    };
    Ok(r)
}

/// Checks the two-block integral against the bound with constants fitted
/// by [`fit_bound`]: `C₁` squared and `C₂` halved, as the reduction to the
/// one-block case costs.
pub fn two_block_check(chi: f64, v: f64, k1: usize, k2: usize, fit: &BoundFit) -> Result<TwoBlockCheck> {
    let numeric = two_block_integral(chi, v, k1, k2)?;
    let k = (k1 + k2) as f64;
    let a = 1.0 - chi;
    let bound = fit.c1 * fit.c1.max(1.0)
        * (-0.5 * fit.c2 * k * k.ln()).exp()
        * v.powf(a * k1 as f64)
        * (1.0 - v).powf(a * k2 as f64);
    Ok(TwoBlockCheck { v, k1, k2, numeric, bound, holds: numeric <= bound })
}
