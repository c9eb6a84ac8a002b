//! The α-stable regenerative set: restricted f.d.d. densities and exact
//! sampling of the set conditioned to contain `T`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::closed_sets::ClosedSetR;
use crate::special::c_alpha;
use crate::{Error, Result};

pub const MAX_LEVEL: u32 = 24;

/// Density of `(g_{t_1}, d_{t_1}, …, g_{t_k}, d_{t_k})` on the restriction set
/// (`x_i ∈ [t_{i−1}, t_i]`, `y_i ∈ [t_i, t_{i+1}]`, `y_i ≤ x_{i+1}`, `t_0 = 0`,
/// `t_{k+1} = T` if conditioned and `∞` otherwise); zero outside it.
pub fn fdd_density_reference(
    alpha: f64,
    horizon: f64,
    times: &[f64],
    xs: &[f64],
    ys: &[f64],
    conditioned: bool,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    let k = times.len();
    if xs.len() != k || ys.len() != k {
        return Err(Error::InvalidParameter("times, xs and ys differ in length".into()));
    }
    let upper = if conditioned { horizon } else { f64::INFINITY };
    if k == 0 || times[0] <= 0.0 || times.windows(2).any(|w| !(w[0] < w[1])) || times[k - 1] >= upper {
        return Err(Error::BadTimes);
    }
    let ca = c_alpha(alpha);
    let mut v = 1.0;
    let mut prev_y = 0.0;
    for i in 0..k {
        let lo_t = if i == 0 { 0.0 } else { times[i - 1] };
        let hi_t = if i + 1 < k { times[i + 1] } else { upper };
        let (x, y) = (xs[i], ys[i]);
        let inside = x >= lo_t && x <= times[i] && y >= times[i] && y <= hi_t;
        // x = y_{i−1} and y = x are the singular edges of the density
        if !inside || !(x > prev_y) || !(y > x) {
            return Ok(0.0);
        }
        v *= ca * (x - prev_y).powf(alpha - 1.0) * (y - x).powf(-1.0 - alpha);
        prev_y = y;
    }
    if conditioned {
        if !(prev_y < horizon) {
            return Ok(0.0);
        }
        v *= (horizon / (horizon - prev_y)).powf(1.0 - alpha);
    }
    Ok(v)
}

/// The `k = 1` conditioned density in gap coordinates: `x` itself, `y − x`
/// and `T − y`. Near the corner `x = t = y` the gaps cannot be recovered
/// from `x` and `y` in floating point, and that corner carries mass of order
/// `(y − x)^{1−α}`.
pub fn conditioned_pair_density(alpha: f64, horizon: f64, x: f64, y_minus_x: f64, horizon_minus_y: f64) -> f64 {
    if !(x > 0.0 && y_minus_x > 0.0 && horizon_minus_y > 0.0) {
        return 0.0;
    }
    c_alpha(alpha) * x.powf(alpha - 1.0) * y_minus_x.powf(-1.0 - alpha) * (horizon / horizon_minus_y).powf(1.0 - alpha)
}

/// Density of `g_t` for the set conditioned to contain `T`.
pub fn conditioned_g_density(alpha: f64, horizon: f64, t: f64, x: f64) -> f64 {
    if !(x > 0.0 && x < t) {
        return 0.0;
    }
    let s = (std::f64::consts::PI * alpha).sin() / std::f64::consts::PI;
    s * horizon.powf(1.0 - alpha) * x.powf(alpha - 1.0) * (t - x).powf(-alpha) * (horizon - t).powf(alpha)
        / (horizon - x)
}

/// Density of `g_t` for the unconditioned set, the generalized arcsine law.
pub fn free_g_density(alpha: f64, t: f64, x: f64) -> f64 {
    if !(x > 0.0 && x < t) {
        return 0.0;
    }
    let s = (std::f64::consts::PI * alpha).sin() / std::f64::consts::PI;
    s * x.powf(alpha - 1.0) * (t - x).powf(-alpha)
}

/// Distribution function of `g_t` for the conditioned set, by quadrature.
pub fn conditioned_g_cdf(alpha: f64, horizon: f64, t: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= t {
        return 1.0;
    }
    // in the Beta(α, 1−α) coordinate the weight (T−t)^α T^{1−α}/(T−x) is smooth
    let weight = |b: f64| {
        let xx = t * b;
        horizon.powf(1.0 - alpha) * (horizon - t).powf(alpha) / (horizon - xx)
    };
    let s = (std::f64::consts::PI * alpha).sin() / std::f64::consts::PI;
    let r = crate::quad::TanhSinh::with_tol(1e-13).integrate_gaps(0.0, x / t, |b, l, _| {
        s * l.powf(alpha - 1.0) * (1.0 - b).powf(-alpha) * weight(b)
    });
    r.value.min(1.0)
}

/// Map `(u₁, u₂) ∈ (0,1)²` and an acceptance draw to `(g_t, d_t)` of the set
/// on `[0, T]` conditioned to contain `T`: `x = t·Beta(α, 1−α)` accepted with
/// probability `(T−t)/(T−x)`, then `y` given `x` in closed form.
pub fn conditioned_pair_from_uniforms(alpha: f64, horizon: f64, t: f64, u_x: f64, u_y: f64) -> (f64, f64) {
    let (x, gap) = beta_split(alpha, t, u_x);
    (x, conditioned_d_given_g(alpha, horizon, t, x, gap, u_y))
}

/// `x = t·B` for the `u`-quantile `B` of Beta(α, 1−α), together with `t − x`
/// computed from the complementary quantile when `u > 1/2`.
pub fn beta_split(alpha: f64, t: f64, u: f64) -> (f64, f64) {
    if u <= 0.5 {
        let x = t * inv_beta_reg(alpha, 1.0 - alpha, u);
        (x, t - x)
    } else {
        let gap = t * inv_beta_reg(1.0 - alpha, alpha, 1.0 - u);
        (t - gap, gap)
    }
}

/// `d_t` given `g_t = x` (with `t − x = gap`): `v = (T−y)/(y−x)` has density
/// `∝ v^{α−1}` on `(0, (T−t)/(t−x))`.
pub fn conditioned_d_given_g(alpha: f64, horizon: f64, t: f64, x: f64, gap: f64, u: f64) -> f64 {
    let v = u.powf(1.0 / alpha) * (horizon - t) / gap;
    let y = x + (horizon - x) / (1.0 + v);
    y.clamp(t, horizon)
}

/// One exact draw of `(g_t, d_t)` on `[s, e]` for the set pinned at `s` and `e`.
pub fn sample_conditioned_pair<R: Rng + ?Sized>(alpha: f64, s: f64, e: f64, t: f64, rng: &mut R) -> (f64, f64) {
    let (len, tt) = (e - s, t - s);
    loop {
        let (x, gap) = beta_split(alpha, tt, open_unit(rng));
        if rng.random::<f64>() * (len - x) <= len - tt {
            let y = conditioned_d_given_g(alpha, len, tt, x, gap, open_unit(rng));
            return (s + x, s + y);
        }
    }
}

pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenSample {
    pub set: ClosedSetR,
    pub level: u32,
}

/// Conditioned regenerative set on `[0, T]` by recursive bisection: each
/// interval `[s, e]` with both ends in the set gets `(g_u, d_u)` at its
/// midpoint `u`, and the recursion continues on `[s, g_u]` and `[d_u, e]`
/// while they are at least `T·2^{−n_max}` long.
pub fn sample_regen_conditioned<R: Rng + ?Sized>(alpha: f64, horizon: f64, n_max: u32, rng: &mut R) -> Result<RegenSample> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    if n_max > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!("level {n_max} > {MAX_LEVEL}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon}")));
    }
    let resolution = horizon / (1u64 << n_max) as f64;
    let mut points = vec![0.0, horizon];
    let mut stack = vec![(0.0, horizon)];
    while let Some((s, e)) = stack.pop() {
        if e - s < resolution {
            continue;
        }
        let (x, y) = sample_conditioned_pair(alpha, s, e, 0.5 * (s + e), rng);
        if x > s {
            points.push(x);
        }
        if y < e {
            points.push(y);
        }
        // right first so the left half is processed first
        stack.push((y, e));
        stack.push((s, x));
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    Ok(RegenSample { set: ClosedSetR::new(points, resolution)?, level: n_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::TanhSinh;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn conditioned_density_integrates_to_one() {
        let (a, big_t, t) = (0.75, 1.0, 0.4);
        let q = TanhSinh::with_tol(1e-10).integrate_gaps(0.0, t, |x, _, r| {
            TanhSinh::with_tol(1e-11)
                .integrate_gaps(t, big_t, |_, l, b| conditioned_pair_density(a, big_t, x, r + l, b))
                .value
        });
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-8);
        let (x, y) = (0.25, 0.55);
        assert_relative_eq!(
            conditioned_pair_density(a, big_t, x, y - x, big_t - y),
            fdd_density_reference(a, big_t, &[t], &[x], &[y], true).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn free_marginal_is_generalized_arcsine() {
        let (a, t, x) = (0.6, 1.0, 0.3);
        // ∫_t^∞ (y−x)^{−1−α} dy = (t−x)^{−α}/α
        let q = TanhSinh::with_tol(1e-12).integrate(0.0, 1.0, |w| {
            // y = t + w/(1−w)
            let y = t + w / (1.0 - w);
            fdd_density_reference(a, 5.0, &[t], &[x], &[y], false).unwrap() / (1.0 - w).powi(2)
        });
        assert_relative_eq!(q.value, free_g_density(a, t, x), max_relative = 1e-8);
        let s = (std::f64::consts::PI * a).sin() / std::f64::consts::PI;
        assert_relative_eq!(free_g_density(a, t, 0.3), s * 0.3f64.powf(a - 1.0) * 0.7f64.powf(-a));
        let total = TanhSinh::with_tol(1e-12)
            .integrate_gaps(0.0, t, |_, l, r| s * l.powf(a - 1.0) * r.powf(-a));
        assert_relative_eq!(total.value, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn conditioned_marginal_matches_density() {
        let (a, big_t, t, x) = (0.75, 2.0, 0.7, 0.4);
        let q = TanhSinh::with_tol(1e-12)
            .integrate(t, big_t, |y| fdd_density_reference(a, big_t, &[t], &[x], &[y], true).unwrap());
        assert_relative_eq!(q.value, conditioned_g_density(a, big_t, t, x), max_relative = 1e-8);
        assert_relative_eq!(conditioned_g_cdf(a, big_t, t, t), 1.0);
        let half = TanhSinh::with_tol(1e-12).integrate(0.0, 0.35, |x| conditioned_g_density(a, big_t, t, x));
        assert_relative_eq!(conditioned_g_cdf(a, big_t, t, 0.35), half.value, max_relative = 1e-9);
    }

    #[test]
    fn density_vanishes_off_restriction_set() {
        let f = |xs: &[f64], ys: &[f64]| fdd_density_reference(0.75, 1.0, &[0.3, 0.6], xs, ys, true).unwrap();
        assert!(f(&[0.1, 0.5], &[0.4, 0.8]) > 0.0);
        assert_eq!(f(&[0.1, 0.5], &[0.7, 0.8]), 0.0);
        assert_eq!(f(&[0.1, 0.35], &[0.4, 0.8]), 0.0);
        assert_eq!(f(&[0.1, 0.5], &[0.4, 1.1]), 0.0);
    }

    #[test]
    fn regen_sample_contains_endpoints_and_respects_resolution() {
        let mut rng = stream(1, 1);
        let r = sample_regen_conditioned(0.75, 3.0, 12, &mut rng).unwrap();
        let p = r.set.points();
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 3.0);
        assert!(p.len() > 10);
        assert_eq!(r.set.resolution(), 3.0 / 4096.0);
        assert!(sample_regen_conditioned(0.75, 1.0, 25, &mut rng).is_err());
    }

    #[test]
    fn midpoint_pair_has_reference_marginal() {
        // mean of g_{T/2} against quadrature of the conditioned marginal
        let (a, big_t) = (0.75, 1.0);
        let mut rng = stream(2, 9);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_conditioned_pair(a, 0.0, big_t, 0.5, &mut rng).0).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let want = TanhSinh::with_tol(1e-12).integrate(0.0, 0.5, |x| x * conditioned_g_density(a, big_t, 0.5, x));
        assert!((mean - want.value).abs() < 4.0 * sd / (n as f64).sqrt());
    }
}
