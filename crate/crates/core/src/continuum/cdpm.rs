//! The continuum disordered pinning model: f.d.d. densities and sampling
//! given a partition-function field, the renewal identity of that field and
//! the singularity martingale.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::regen::{beta_split, conditioned_d_given_g, fdd_density_reference, open_unit, RegenSample};
use super::surface::{PartitionField, Profile};
use crate::closed_sets::dyadic_blocks;
use crate::{Error, Result};

/// Proposals allowed per pair before [`sample_cdpm_fdd`] gives up.
pub const MAX_PROPOSALS: usize = 1_000_000;

fn total_z(field: &dyn PartitionField) -> Result<f64> {
    let z = field.z(0.0, field.horizon())?;
    if !(z > 0.0) {
        return Err(Error::Numerical(format!("Z(0, T) = {z} is not positive")));
    }
    Ok(z)
}

/// `∏_{i=0}^{k} Z(y_i, x_{i+1}) / Z(0,T)` times the reference conditioned
/// density, with `y_0 = 0` and `x_{k+1} = T`.
pub fn cdpm_fdd_density(
    field: &dyn PartitionField,
    alpha: f64,
    times: &[f64],
    xs: &[f64],
    ys: &[f64],
) -> Result<f64> {
    let horizon = field.horizon();
    let z_total = total_z(field)?;
    let reference = fdd_density_reference(alpha, horizon, times, xs, ys, true)?;
    if reference == 0.0 {
        return Ok(0.0);
    }
    let mut v = reference / z_total;
    let mut left = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        v *= field.z(left, *x)?;
        left = *y;
    }
    Ok(v * field.z(left, horizon)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdpmDraw {
    /// `(g_{t_i}, d_{t_i})` for each time.
    pub pairs: Vec<(f64, f64)>,
    /// Proposals drawn from the reference law, over all pairs.
    pub proposals: usize,
}

/// Exact draw of `(g_{t_i}, d_{t_i})_{i ≤ k}` under the CDPM of `field`.
///
/// Pairs are drawn left to right. Given `d_{t_{i−1}} = y < t_i`, the law on
/// `[y, T]` is again a CDPM, whose pair at `t_i` has density proportional to
/// `Z(y, x) Z(y', T)` against the reference pinned law on `[y, T]`; reference
/// proposals are accepted with probability `Z(y,x)Z(y',T)` over its maximum.
/// When `d_{t_{i−1}} > t_i` the pair repeats.
pub fn sample_cdpm_fdd<R: Rng + ?Sized>(
    field: &dyn PartitionField,
    alpha: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<CdpmDraw> {
    let horizon = field.horizon();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| !(w[0] < w[1])) || times[times.len() - 1] >= horizon {
        return Err(Error::BadTimes);
    }
    total_z(field)?;
    let column = field.column(horizon)?;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(times.len());
    let mut proposals = 0;
    let mut left = 0.0;
    for &t in times {
        if let Some(&last) = pairs.last() {
            if last.1 > t {
                pairs.push(last);
                continue;
            }
        }
        let row = field.row(left)?;
        let bound = row.max_on(left, t) * column.max_on(t, horizon);
        if !(row.min_on(left, t) > 0.0 && column.min_on(t, horizon) > 0.0) {
            return Err(Error::Numerical("partition function not positive on the sampling range".into()));
        }
        let (len, tt) = (horizon - left, t - left);
        let mut tries = 0;
        let pair = loop {
            if tries == MAX_PROPOSALS {
                return Err(Error::Numerical(format!("no acceptance in {MAX_PROPOSALS} proposals")));
            }
            tries += 1;
            let (x, gap) = beta_split(alpha, tt, open_unit(rng));
            if rng.random::<f64>() * (len - x) > len - tt {
                continue;
            }
            let y = conditioned_d_given_g(alpha, len, tt, x, gap, open_unit(rng));
            let (x, y) = (left + x, left + y);
            let w = row.eval(x) * column.eval(y);
            if rng.random::<f64>() * bound <= w {
                break (x, y);
            }
        };
        proposals += tries;
        pairs.push(pair);
        left = pair.1;
    }
    Ok(CdpmDraw { pairs, proposals })
}

/// `f_n(τ) = ∏ Z(a_j, b_j) / Z(0, T)` over the occupied dyadic blocks of
/// level `n`, with `a_j, b_j` the extreme points of `τ` in block `j`.
pub fn martingale_fn(field: &dyn PartitionField, regen: &RegenSample, n: u32) -> Result<f64> {
    let horizon = field.horizon();
    let z_total = total_z(field)?;
    let mut ln = 0.0;
    for b in dyadic_blocks(&regen.set, n, horizon)? {
        let z = field.z(b.min, b.max)?;
        if !(z > 0.0) {
            return Err(Error::Numerical(format!("Z({}, {}) = {z} is not positive", b.min, b.max)));
        }
        ln += z.ln();
    }
    Ok((ln - z_total.ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalResidual {
    /// `∫∫ f(x,y) Z(s,x) Z(y,t)` with `f` the pinned reference density of
    /// `(g_u, d_u)` on `[s, t]`.
    pub lhs: f64,
    /// `Z(s, t)`.
    pub rhs: f64,
    pub relative: f64,
}

/// Both sides of the renewal identity split at `u`, with the double integral
/// done by a product midpoint rule of `nodes²` points in the coordinates
/// where the reference law is uniform.
///
/// Row and column are refined with exact values over the knot intervals
/// within [`REFINE_INTERVALS`] of `u`, where the integrand varies fastest.
pub fn renewal_identity_residual(
    field: &dyn PartitionField,
    alpha: f64,
    s: f64,
    u: f64,
    t: f64,
    nodes: usize,
) -> Result<RenewalResidual> {
    if !(s < u && u < t && t <= field.horizon() + 1e-12) || nodes == 0 {
        return Err(Error::BadTimes);
    }
    let near = |p: &Profile| {
        let k = p.knots();
        let spacing = (k[k.len() - 1] - k[0]) / (k.len().max(2) - 1) as f64;
        REFINE_INTERVALS as f64 * spacing
    };
    let row = field.row(s)?;
    let row = row.refined(u - near(&row), u, REFINE_PER);
    let column = field.column(t)?;
    let column = column.refined(u, u + near(&column), REFINE_PER);
    let (len, tau) = (t - s, u - s);
    let h = 1.0 / nodes as f64;
    // y decreases in the inner uniform, so walk it backwards with a cursor
    let powers: Vec<f64> = (0..nodes).rev().map(|j| ((j as f64 + 0.5) * h).powf(1.0 / alpha)).collect();
    let knots = column.knots();
    let values = column.values();
    let mut outer = crate::special::CompensatedSum::new();
    for i in 0..nodes {
        let (x, gap) = beta_split(alpha, tau, (i as f64 + 0.5) * h);
        // density of g_u over the Beta(α, 1−α) proposal
        let ratio = len.powf(1.0 - alpha) * (len - tau).powf(alpha) / (len - x);
        let top = (len - tau) / gap;
        let mut k = 0;
        let mut inner = 0.0;
        for &w in &powers {
            let v = top * w;
            let y = (s + x + (len - x) / (1.0 + v)).clamp(u, t);
            while k + 1 < knots.len() && knots[k + 1] <= y {
                k += 1;
            }
            inner += if k + 1 < knots.len() {
                let f = (y - knots[k]) / (knots[k + 1] - knots[k]);
                values[k] * (1.0 - f) + values[k + 1] * f
            } else {
                values[k]
            };
        }
        outer.add(ratio * row.eval(s + x) * inner * h);
    }
    let lhs = outer.value() * h;
    let rhs = field.z(s, t)?;
    Ok(RenewalResidual { lhs, rhs, relative: (lhs / rhs - 1.0).abs() })
}

/// Knot intervals on each side of `u` refined by [`renewal_identity_residual`].
pub const REFINE_INTERVALS: usize = 64;
const REFINE_PER: usize = 16;
