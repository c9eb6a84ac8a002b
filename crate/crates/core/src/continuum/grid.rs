//! All-order evaluation of the chaos series on a grid.
//!
//! The path is linear inside each cell, so a piece of a cell of width `w`
//! carries the coefficient `(w/Δ)·c_i` with `c_i = β̂ ΔW_i + ĥ Δ`. Power
//! factors of the kernel are averaged over cells or taken at cell midpoints
//! (see [`GridRule`]). Seen from a fixed end, with cells `0, 1, …` counted
//! outwards, the chaos sum obeys
//!
//! ```text
//! A(r) = c_r [start(r) + Σ_{r'<r} A(r') gap(r', r)]
//! Z(fixed end, b_k) = 1 + pre(b_k) Σ_{r<k} A(r) end(r, b_k)
//! ```
//!
//! with `b_k` the cell boundaries. Only the first cell may be partial, so the
//! gap and end factors of the other cells are Toeplitz and one pass yields
//! `Z` at every boundary. Values strictly inside a cell treat the last cell
//! as partial.


use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::brownian::BrownianPath;
use super::chaos::{ChaosSpec, ChaosVariant, GridRule};
use crate::convolution::online;
use crate::special::c_alpha;
use crate::{Error, Result};

/// Largest number of grid doublings [`z_point_positive`] will try.
pub const MAX_DOUBLINGS: u32 = 4;

/// Which end of the interval is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Fixed left end, cells run to the right.
    Forward,
    /// Fixed right end, cells run to the left.
    Backward,
}

#[derive(Debug, Clone, Copy)]
struct Factors {
    alpha: f64,
    ca: f64,
    rule: GridRule,
    variant: ChaosVariant,
    dir: Direction,
}

impl Factors {
    fn new(spec: &ChaosSpec, dir: Direction) -> Self {
        Self { alpha: spec.alpha, ca: c_alpha(spec.alpha), rule: spec.rule, variant: spec.variant, dir }
    }

    /// `z^{α−1}` over `z ∈ [a, b]`.
    fn side(&self, a: f64, b: f64) -> f64 {
        let p = self.alpha - 1.0;
        match self.rule {
            GridRule::Midpoint => (0.5 * (a + b)).powf(p),
            GridRule::CellAverage => {
                let h = b - a;
                let m = 0.5 * (a + b);
                if h < 1e-2 * m {
                    let r = (h / m).powi(2);
                    m.powf(p) * (1.0 + p * (p - 1.0) / 24.0 * r + p * (p - 1.0) * (p - 2.0) * (p - 3.0) / 1920.0 * r * r)
                } else {
                    (b.powf(self.alpha) - a.powf(self.alpha)) / (self.alpha * h)
                }
            }
        }
    }

    /// `(y − z)^{α−1}` over `z ∈ [a, b]`, `y ∈ [c, d]`, `b ≤ c`.
    fn pair(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        let p = self.alpha - 1.0;
        let dist = 0.5 * (c + d) - 0.5 * (a + b);
        match self.rule {
            GridRule::Midpoint => dist.powf(p),
            GridRule::CellAverage => {
                let (h1, h2) = (0.5 * (b - a), 0.5 * (d - c));
                if dist > 32.0 * (h1 + h2) {
                    // moments of the difference of two centred uniforms
                    let (s1, s2) = (h1 * h1, h2 * h2);
                    let m2 = (s1 + s2) / 3.0;
                    let m4 = s1 * s1 / 5.0 + 2.0 * s1 * s2 / 3.0 + s2 * s2 / 5.0;
                    let m6 = s1 * s1 * s1 / 7.0 + s1 * s1 * s2 + s1 * s2 * s2 + s2 * s2 * s2 / 7.0;
                    let inv = 1.0 / (dist * dist);
                    let c2 = p * (p - 1.0) / 2.0;
                    let c4 = c2 * (p - 2.0) * (p - 3.0) / 12.0;
                    let c6 = c4 * (p - 4.0) * (p - 5.0) / 30.0;
                    dist.powf(p) * (1.0 + c2 * m2 * inv + c4 * m4 * inv * inv + c6 * m6 * inv * inv * inv)
                } else {
                    let b1 = self.alpha + 1.0;
                    let f = |v: f64| if v > 0.0 { v.powf(b1) } else { 0.0 };
                    (f(d - a) - f(d - b) - f(c - a) + f(c - b)) / (self.alpha * b1 * (b - a) * (d - c))
                }
            }
        }
    }

    fn start(&self, a: f64, b: f64) -> f64 {
        match (self.variant, self.dir) {
            (ChaosVariant::MeanCase { mean_tau1 }, _) => 1.0 / mean_tau1,
            (ChaosVariant::Free, Direction::Backward) => 1.0,
            _ => self.ca * self.side(a, b),
        }
    }

    fn gap(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        match self.variant {
            ChaosVariant::MeanCase { mean_tau1 } => 1.0 / mean_tau1,
            _ => self.ca * self.pair(a, b, c, d),
        }
    }

    fn end(&self, a: f64, b: f64) -> f64 {
        match (self.variant, self.dir) {
            (ChaosVariant::Conditioned, _) => self.side(a, b),
            (ChaosVariant::Free, Direction::Backward) => self.ca * self.side(a, b),
            _ => 1.0,
        }
    }

    fn pre(&self, x: f64) -> f64 {
        match self.variant {
            ChaosVariant::Conditioned => x.powf(1.0 - self.alpha),
            _ => 1.0,
        }
    }
}

/// `Z` between a fixed end and every point at distance up to `b_n` from it,
/// in one environment.
#[derive(Debug, Clone)]
pub struct ChaosRow {
    factors: Factors,
    delta: f64,
    /// Full-cell coefficients `c_i` in outward order.
    raw: Vec<f64>,
    /// Cell boundaries as distances from the fixed end: `0, first, first+Δ, …`.
    bounds: Vec<f64>,
    a: Vec<f64>,
    z: Vec<f64>,
}

impl ChaosRow {
    fn build(factors: Factors, delta: f64, first: f64, raw: Vec<f64>) -> Self {
        let n = raw.len();
        let mut bounds = Vec::with_capacity(n + 1);
        bounds.push(0.0);
        for k in 1..=n {
            bounds.push(first + (k - 1) as f64 * delta);
        }
        if n == 0 {
            return Self { factors, delta, raw, bounds, a: Vec::new(), z: vec![1.0] };
        }
        let f = &factors;
        let a0 = raw[0] * (first / delta) * f.start(0.0, first);
        let full = n - 1;
        let gap_table: Vec<f64> = (0..full.max(1))
            .map(|g| if g == 0 { 0.0 } else { f.gap(0.0, delta, g as f64 * delta, (g + 1) as f64 * delta) })
            .collect();
        let tail = online(&gap_table, full, |j, acc| {
            let r = j + 1;
            let (lo, hi) = (bounds[r], bounds[r + 1]);
            raw[r] * (f.start(lo, hi) + a0 * f.gap(0.0, first, lo, hi) + acc)
        });
        let end_table: Vec<f64> = (0..full).map(|d| f.end(d as f64 * delta, (d + 1) as f64 * delta)).collect();
        let conv = full_convolution(&tail, &end_table);
        let mut a = Vec::with_capacity(n);
        a.push(a0);
        a.extend_from_slice(&tail);
        let mut z = Vec::with_capacity(n + 1);
        z.push(1.0);
        for k in 1..=n {
            let bk = bounds[k];
            let mut s = a0 * f.end(bk - first, bk);
            if k >= 2 {
                s += conv[k - 2];
            }
            z.push(1.0 + f.pre(bk) * s);
        }
        Self { factors, delta, raw, bounds, a, z }
    }

    /// Row from `origin` covering distances up to `reach` (clipped to the path).
    pub fn new(spec: &ChaosSpec, path: &BrownianPath, origin: f64, reach: f64, dir: Direction) -> Result<Self> {
        check_path(spec, path)?;
        let m = path.cells();
        let d = path.cell_width();
        let horizon = path.horizon();
        if !(origin >= -1e-12 * horizon && origin <= horizon * (1.0 + 1e-12)) || !(reach >= 0.0) {
            return Err(Error::InvalidParameter(format!("row origin {origin}, reach {reach}")));
        }
        let factors = Factors::new(spec, dir);
        let pos = (origin / d).clamp(0.0, m as f64);
        let snapped = path.grid_index(origin).map(|i| i as f64);
        let coef = |i: usize| spec.beta_hat * path.increment(i) + spec.h_hat * d;
        let cells_for = |first: f64, avail: usize| -> usize {
            if reach <= first {
                1
            } else {
                (1 + ((reach - first) / d - 1e-9).ceil().max(0.0) as usize).min(avail)
            }
        };
        let (first, raw) = match dir {
            Direction::Forward => {
                let p = snapped.unwrap_or(pos.floor()) as usize;
                if p >= m {
                    return Ok(Self::build(factors, d, d, Vec::new()));
                }
                let first = snapped.map_or((p + 1) as f64 * d - origin, |_| d);
                let n = cells_for(first, m - p);
                (first, (p..p + n).map(coef).collect::<Vec<_>>())
            }
            Direction::Backward => {
                let q = snapped.unwrap_or(pos.ceil()) as usize;
                if q == 0 {
                    return Ok(Self::build(factors, d, d, Vec::new()));
                }
                let first = snapped.map_or(origin - (q - 1) as f64 * d, |_| d);
                let n = cells_for(first, q);
                (first, (0..n).map(|k| coef(q - 1 - k)).collect::<Vec<_>>())
            }
        };
        let first = first.clamp(f64::MIN_POSITIVE, d);
        if spec.is_trivial() {
            let mut row = Self::build(factors, d, first, vec![0.0; raw.len()]);
            row.raw = raw;
            return Ok(row);
        }
        Ok(Self::build(factors, d, first, raw))
    }

    /// Boundaries of the cells, as distances from the fixed end.
    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// `Z` at each boundary.
    pub fn values(&self) -> &[f64] {
        &self.z
    }

    pub fn alpha(&self) -> f64 {
        self.factors.alpha
    }

    pub fn reach(&self) -> f64 {
        *self.bounds.last().unwrap_or(&0.0)
    }

    /// `Z` at distance `x` from the fixed end, with the cell containing `x`
    /// cut at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.raw.len();
        if x <= 0.0 || n == 0 {
            return 1.0;
        }
        let k = self.bounds.partition_point(|&b| b <= x) - 1;
        if k >= n {
            return self.z[n];
        }
        let w = x - self.bounds[k];
        if w <= 1e-12 * self.delta {
            return self.z[k];
        }
        let f = &self.factors;
        let lo = self.bounds[k];
        let mut inner = f.start(lo, x);
        let mut s = 0.0;
        for r in 0..k {
            let (a, b) = (self.bounds[r], self.bounds[r + 1]);
            inner += self.a[r] * f.gap(a, b, lo, x);
            s += self.a[r] * f.end(x - b, x - a);
        }
        let ap = self.raw[k] * (w / self.delta) * inner;
        s += ap * f.end(0.0, w);
        1.0 + f.pre(x) * s
    }
}

/// First `a.len()` entries of the linear convolution `a * b`.
fn full_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n <= 256 {
        return (0..n).map(|m| (0..=m).map(|r| a[r] * b[m - r]).sum()).collect();
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |v: &[f64]| -> Vec<Complex64> {
        (0..size).map(|i| Complex64::new(if i < n { v[i] } else { 0.0 }, 0.0)).collect()
    };
    let mut x = pad(a);
    let mut y = pad(b);
    fwd.process(&mut x);
    fwd.process(&mut y);
    for (u, v) in x.iter_mut().zip(&y) {
        *u *= *v;
    }
    inv.process(&mut x);
    let scale = 1.0 / size as f64;
    x[..n].iter().map(|c| c.re * scale).collect()
}

fn check_path(spec: &ChaosSpec, path: &BrownianPath) -> Result<()> {
    spec.validate()?;
    if (path.horizon() - spec.horizon).abs() > 1e-12 * spec.horizon {
        return Err(Error::InvalidParameter(format!(
            "path horizon {} differs from T = {}",
            path.horizon(),
            spec.horizon
        )));
    }
    Ok(())
}

/// `Z(t_p, t_{p+Q})` for `Q = 0..=len` where `t_i = iΔ` is the path grid.
pub fn z_row(spec: &ChaosSpec, path: &BrownianPath, p: usize, len: usize) -> Result<Vec<f64>> {
    if p + len > path.cells() {
        return Err(Error::InvalidParameter(format!("row {p}+{len} beyond grid {}", path.cells())));
    }
    let d = path.cell_width();
    let row = ChaosRow::new(spec, path, p as f64 * d, len as f64 * d, Direction::Forward)?;
    Ok(row.z[..=len].to_vec())
}

/// `Z(t_{q−Q}, t_q)` for `Q = 0..=len`.
pub fn z_column(spec: &ChaosSpec, path: &BrownianPath, q: usize, len: usize) -> Result<Vec<f64>> {
    if len > q || q > path.cells() {
        return Err(Error::InvalidParameter(format!("column {q}-{len} outside grid {}", path.cells())));
    }
    let d = path.cell_width();
    let row = ChaosRow::new(spec, path, q as f64 * d, len as f64 * d, Direction::Backward)?;
    Ok(row.z[..=len].to_vec())
}

/// `Z(s, t)` for grid points `s ≤ t`, possibly negative.
pub fn z_point(spec: &ChaosSpec, path: &BrownianPath, s: f64, t: f64) -> Result<f64> {
    match (path.grid_index(s), path.grid_index(t)) {
        (Some(p), Some(q)) if p <= q => Ok(z_row(spec, path, p, q - p)?[q - p]),
        _ => Err(Error::OffGrid { s, t }),
    }
}

/// `Z(s, t)` for any `0 ≤ s ≤ t ≤ T`, cutting the cells that contain `s`
/// and `t`.
pub fn z_between(spec: &ChaosSpec, path: &BrownianPath, s: f64, t: f64) -> Result<f64> {
    if !(s <= t) {
        return Err(Error::InvalidParameter(format!("need s <= t, got ({s}, {t})")));
    }
    let row = ChaosRow::new(spec, path, s, t - s, Direction::Forward)?;
    Ok(row.eval(t - s))
}


#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveZ {
    pub value: f64,
    /// Value on the original grid.
    pub raw: f64,
    /// Grid doublings needed to reach a positive value.
    pub doublings: u32,
}

/// [`z_point`], doubling the grid by Brownian bridge refinement of the path
/// while the value is not positive.
pub fn z_point_positive(spec: &ChaosSpec, path: &BrownianPath, s: f64, t: f64) -> Result<PositiveZ> {
    let raw = z_point(spec, path, s, t)?;
    let mut value = raw;
    let mut doublings = 0;
    let mut fine = None;
    while !(value > 0.0) {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Numerical(format!(
                "Z({s}, {t}) = {value} still not positive after {doublings} grid doublings"
            )));
        }
        let next = fine.as_ref().unwrap_or(path).refine();
        value = z_point(spec, &next, s, t)?;
        fine = Some(next);
        doublings += 1;
    }
    Ok(PositiveZ { value, raw, doublings })
}
