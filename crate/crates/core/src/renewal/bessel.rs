//! Return-time laws of nearest-neighbour chains on ℕ₀ ("Bessel-like walks").

use serde::Serialize;

use super::kernel::RenewalKernel;
use crate::error::{Error, Result};
use crate::special::linear_fit;

/// Mass below this is dropped from the top of the active band.
const PRUNE: f64 = 1e-60;
/// Level used to measure the escape probability `P₁(hit level before 0)`.
const ESCAPE_LEVEL: usize = 10_000_000;
pub const ESCAPE_TOLERANCE: f64 = 1e-6;

/// Up-step probabilities `p_up(x) = 1/2 + (d − 1)/(4x)` whose diffusive limit
/// is a Bessel process of dimension `d`; the return law then has tail
/// exponent `α = 1 − d/2`.
pub fn lamperti_p_up(dimension: f64, x: usize) -> f64 {
    if x == 0 {
        return 1.0;
    }
    (0.5 + (dimension - 1.0) / (4.0 * x as f64)).clamp(0.05, 0.95)
}

#[derive(Debug, Clone)]
pub struct BesselReturnLaw {
    pub kernel: RenewalKernel,
    /// Tail exponent from the log-log regression of `K(n)`.
    pub fitted_alpha: f64,
    pub fit_window: (usize, usize),
    /// `P₁(reach ESCAPE_LEVEL before 0)`.
    pub escape_probability: f64,
    /// `P(T > 2 n_max)`, the mass still in the walk at the horizon.
    pub survival: f64,
    /// Mass discarded by band pruning (bounded by `PRUNE` per step).
    pub pruned: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnLawSummary {
    pub fitted_alpha: f64,
    pub escape_probability: f64,
    pub survival: f64,
    pub pruned: f64,
}

impl BesselReturnLaw {
    pub fn summary(&self) -> ReturnLawSummary {
        ReturnLawSummary {
            fitted_alpha: self.fitted_alpha,
            escape_probability: self.escape_probability,
            survival: self.survival,
            pruned: self.pruned,
        }
    }
}

/// `P₁(hit `level` before 0) = 1 / Σ_{x=0}^{level-1} Π_{y=1}^{x} q(y)/p(y)`.
pub fn escape_probability<P: Fn(usize) -> f64>(p_up: &P, level: usize) -> f64 {
    let mut rho = 1.0;
    let mut s = 1.0;
    for x in 1..level {
        let p = p_up(x);
        rho *= (1.0 - p) / p;
        s += rho;
        if s > 1e300 {
            return 0.0;
        }
    }
    1.0 / s
}

/// Exact law of half the first return time to 0, `K(n) = P(T = 2n)` for
/// `n ≤ n_max`, by forward dynamic programming over (time, position).
pub fn bessel_like_return_law<P: Fn(usize) -> f64>(p_up: P, n_max: usize) -> Result<BesselReturnLaw> {
    if n_max < 2 {
        return Err(Error::InvalidParameter("n_max must be at least 2".into()));
    }
    if (p_up(0) - 1.0).abs() > 0.0 {
        return Err(Error::InvalidParameter("p_up(0) must be 1".into()));
    }
    let top = n_max + 2;
    let mut up = vec![0.0; top + 1];
    for (x, slot) in up.iter_mut().enumerate().skip(1) {
        let p = p_up(x);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p_up({x}) = {p} outside (0,1)")));
        }
        *slot = p;
    }
    let escape = escape_probability(&p_up, ESCAPE_LEVEL.max(10 * n_max));
    if escape >= ESCAPE_TOLERANCE {
        return Err(Error::TerminatingChain(escape));
    }

    // mass[x] = P(X_t = x, T > t) for x ≥ 1
    let mut mass = vec![0.0; top + 2];
    let mut next = vec![0.0; top + 2];
    mass[1] = 1.0; // forced first step
    let mut hi = 1usize;
    let mut k = vec![0.0; n_max + 1];
    let mut pruned = 0.0;
    for t in 2..=2 * n_max {
        let new_hi = (hi + 1).min(top);
        // returns through 1 -> 0
        let ret = mass[1] * (1.0 - up[1]);
        for x in 1..=new_hi {
            let from_below = if x >= 2 { mass[x - 1] * up[x - 1] } else { 0.0 };
            let from_above = if x < top { mass[x + 1] * (1.0 - up[x + 1]) } else { 0.0 };
            next[x] = from_below + from_above;
        }
        next[new_hi + 1] = 0.0;
        std::mem::swap(&mut mass, &mut next);
        hi = new_hi;
        while hi > 2 && mass[hi] < PRUNE && mass[hi - 1] < PRUNE {
            pruned += mass[hi];
            mass[hi] = 0.0;
            hi -= 1;
        }
        if t % 2 == 0 {
            k[t / 2] = ret;
        }
    }
    let survival: f64 = mass[1..=hi].iter().sum();

    let lo = (n_max / 100).max(2);
    let (xs, ys): (Vec<f64>, Vec<f64>) = crate::special::log_spaced_indices(lo, n_max, 50)
        .into_iter()
        .filter(|&n| k[n] > 0.0)
        .map(|n| ((n as f64).ln(), k[n].ln()))
        .unzip();
    let (slope, _) = linear_fit(&xs, &ys);
    let fitted_alpha = -slope - 1.0;
    if (fitted_alpha - 1.0).abs() < 1e-3 {
        return Err(Error::AlphaOne);
    }
    let head: f64 = k.iter().sum();
    // close the table on the exact remaining mass
    let residual = 1.0 - head;
    let kernel = RenewalKernel::from_return_law(fitted_alpha, k, residual)?;
    Ok(BesselReturnLaw {
        kernel,
        fitted_alpha,
        fit_window: (lo, n_max),
        escape_probability: escape,
        survival,
        pruned,
    })
}
