//! Evaluators of the two-parameter field `(s, t) ↦ Z(s, t)`.

use std::io::Write;
use std::sync::Arc;

use super::brownian::BrownianPath;
use super::chaos::ChaosSpec;
use super::grid::{ChaosRow, Direction};
use crate::{Error, Result};

/// Piecewise-linear function through `(knots[i], values[i])`, knots increasing.
///
/// Profiles cut from a [`ChaosRow`] keep the row and can be evaluated
/// exactly between knots or refined near a point.
#[derive(Debug, Clone)]
pub struct Profile {
    knots: Vec<f64>,
    values: Vec<f64>,
    exact: Option<Exact>,
}

#[derive(Debug, Clone)]
struct Exact {
    row: Arc<ChaosRow>,
    /// Position of the fixed end.
    origin: f64,
    backward: bool,
}

impl Exact {
    fn eval(&self, x: f64) -> f64 {
        self.row.eval(if self.backward { self.origin - x } else { x - self.origin })
    }
}

impl Profile {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.is_empty() || knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("profile knots must increase and match values".into()));
        }
        Ok(Self { knots, values, exact: None })
    }

    pub fn constant(lo: f64, hi: f64, value: f64) -> Self {
        if hi > lo {
            Self { knots: vec![lo, hi], values: vec![value, value], exact: None }
        } else {
            Self { knots: vec![lo], values: vec![value], exact: None }
        }
    }

    /// `x ↦ Z` along a row, forward from `origin` or backward from it.
    pub fn from_row(row: ChaosRow, origin: f64, backward: bool) -> Self {
        let mut pairs: Vec<(f64, f64)> = row
            .bounds()
            .iter()
            .zip(row.values())
            .map(|(b, z)| (if backward { origin - b } else { origin + b }, *z))
            .collect();
        if backward {
            pairs.reverse();
        }
        pairs.dedup_by(|a, b| a.0 <= b.0);
        let (knots, values) = pairs.into_iter().unzip();
        Self { knots, values, exact: Some(Exact { row: Arc::new(row), origin, backward }) }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `x`, clamped to the end values outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.knots.partition_point(|&v| v <= x);
        if k == 0 {
            return self.values[0];
        }
        if k == self.knots.len() {
            return self.values[k - 1];
        }
        let (x0, x1) = (self.knots[k - 1], self.knots[k]);
        let f = (x - x0) / (x1 - x0);
        self.values[k - 1] * (1.0 - f) + self.values[k] * f
    }

    /// Exact value between knots when the profile has a row, else [`eval`](Self::eval).
    pub fn eval_exact(&self, x: f64) -> f64 {
        let (lo, hi) = (self.knots[0], self.knots[self.knots.len() - 1]);
        match &self.exact {
            Some(e) if x > lo && x < hi => e.eval(x),
            _ => self.eval(x),
        }
    }

    /// Copy with `per − 1` exact values added inside each knot interval that
    /// meets `[lo, hi]`. Inside a cell `Z` moves like `w^α` in the distance
    /// `w` from the knot nearer the fixed end, so the new knots are packed
    /// towards that knot.
    pub fn refined(&self, lo: f64, hi: f64, per: usize) -> Self {
        let Some(e) = &self.exact else { return self.clone() };
        if per < 2 {
            return self.clone();
        }
        let alpha = e.row.alpha();
        let fracs: Vec<f64> = (1..per).map(|k| (k as f64 / per as f64).powf(1.0 / alpha)).collect();
        let mut knots = Vec::with_capacity(self.knots.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.knots.len() {
            knots.push(self.knots[i]);
            values.push(self.values[i]);
            if i + 1 == self.knots.len() {
                break;
            }
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            if b < lo || a > hi {
                continue;
            }
            let mut extra: Vec<f64> =
                fracs.iter().map(|f| if e.backward { b - f * (b - a) } else { a + f * (b - a) }).collect();
            if e.backward {
                extra.reverse();
            }
            for x in extra {
                if x > *knots.last().unwrap() && x < b {
                    knots.push(x);
                    values.push(e.eval(x));
                }
            }
        }
        Self { knots, values, exact: self.exact.clone() }
    }

    /// Largest value on `[lo, hi]`.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        let inner = self
            .knots
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, v)| *v);
        inner.fold(self.eval(lo).max(self.eval(hi)), f64::max)
    }

    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        let inner = self
            .knots
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, v)| *v);
        inner.fold(self.eval(lo).min(self.eval(hi)), f64::min)
    }
}

/// Anything that can evaluate `Z(s, t)` for `0 ≤ s ≤ t ≤ T`.
pub trait PartitionField: Sync {
    fn horizon(&self) -> f64;

    fn z(&self, s: f64, t: f64) -> Result<f64>;

    /// `x ↦ Z(s, x)` on `[s, T]`.
    fn row(&self, s: f64) -> Result<Profile>;

    /// `x ↦ Z(x, t)` on `[0, t]`.
    fn column(&self, t: f64) -> Result<Profile>;
}

/// `Z ≡ 1`, the field at `β̂ = ĥ = 0`.
#[derive(Debug, Clone, Copy)]
pub struct UnitField {
    pub horizon: f64,
}

impl PartitionField for UnitField {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn z(&self, s: f64, t: f64) -> Result<f64> {
        check_pair(s, t, self.horizon)?;
        Ok(1.0)
    }

    fn row(&self, s: f64) -> Result<Profile> {
        Ok(Profile::constant(s, self.horizon, 1.0))
    }

    fn column(&self, t: f64) -> Result<Profile> {
        Ok(Profile::constant(0.0, t, 1.0))
    }
}

fn check_pair(s: f64, t: f64, horizon: f64) -> Result<()> {
    let tol = 1e-12 * horizon;
    if !(s >= -tol && s <= t + tol && t <= horizon + tol) {
        return Err(Error::InvalidParameter(format!("need 0 <= s <= t <= T, got ({s}, {t})")));
    }
    Ok(())
}

/// Continuum partition functions of one Brownian environment.
///
/// Rows from the dyadic anchors `jT/2^m` and the column ending at `T` are
/// computed once; other rows are computed from the path on demand. Values
/// off the grid cut the end cells, so no interpolation is involved.
#[derive(Debug, Clone)]
pub struct ZSurface {
    spec: ChaosSpec,
    path: BrownianPath,
    anchor_level: u32,
    anchor_rows: Vec<Arc<ChaosRow>>,
    end_column: Arc<ChaosRow>,
}

impl ZSurface {
    pub fn new(spec: ChaosSpec, path: BrownianPath, anchor_level: u32) -> Result<Self> {
        let m = path.cells();
        let anchors = 1usize << anchor_level;
        if m % anchors != 0 {
            return Err(Error::InvalidParameter(format!("grid {m} not divisible by 2^{anchor_level}")));
        }
        let horizon = path.horizon();
        let anchor_rows = (0..=anchors)
            .map(|j| {
                let s = horizon * j as f64 / anchors as f64;
                ChaosRow::new(&spec, &path, s, horizon - s, Direction::Forward).map(Arc::new)
            })
            .collect::<Result<Vec<_>>>()?;
        let end_column = Arc::new(ChaosRow::new(&spec, &path, horizon, horizon, Direction::Backward)?);
        Ok(Self { spec, path, anchor_level, anchor_rows, end_column })
    }

    pub fn spec(&self) -> &ChaosSpec {
        &self.spec
    }

    pub fn path(&self) -> &BrownianPath {
        &self.path
    }

    pub fn anchor_level(&self) -> u32 {
        self.anchor_level
    }

    fn step(&self) -> usize {
        self.path.cells() >> self.anchor_level
    }

    fn anchor(&self, s: f64) -> Option<&Arc<ChaosRow>> {
        let p = self.path.grid_index(s)?;
        (p % self.step() == 0).then(|| &self.anchor_rows[p / self.step()])
    }

    fn at_end(&self, t: f64) -> bool {
        self.path.grid_index(t) == Some(self.path.cells())
    }

    /// Anchor rows as CSV `s,t,Z` on the grid points.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
        w.write_record(["s", "t", "Z"]).map_err(io)?;
        let d = self.path.cell_width();
        for (j, row) in self.anchor_rows.iter().enumerate() {
            let p = j * self.step();
            for (q, z) in row.values().iter().enumerate() {
                let s = (p as f64 * d).to_string();
                let t = ((p + q) as f64 * d).to_string();
                w.write_record([s, t, z.to_string()]).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        Ok(())
    }
}

impl PartitionField for ZSurface {
    fn horizon(&self) -> f64 {
        self.spec.horizon
    }

    fn z(&self, s: f64, t: f64) -> Result<f64> {
        check_pair(s, t, self.horizon())?;
        let (s, t) = (s.max(0.0), t.min(self.horizon()));
        if t <= s {
            return Ok(1.0);
        }
        if let Some(row) = self.anchor(s) {
            return Ok(row.eval(t - s));
        }
        if self.at_end(t) {
            return Ok(self.end_column.eval(t - s));
        }
        Ok(ChaosRow::new(&self.spec, &self.path, s, t - s, Direction::Forward)?.eval(t - s))
    }

    fn row(&self, s: f64) -> Result<Profile> {
        check_pair(s, s, self.horizon())?;
        let s = s.clamp(0.0, self.horizon());
        let row = match self.anchor(s) {
            Some(r) => (**r).clone(),
            None => ChaosRow::new(&self.spec, &self.path, s, self.horizon() - s, Direction::Forward)?,
        };
        Ok(Profile::from_row(row, s, false))
    }

    fn column(&self, t: f64) -> Result<Profile> {
        check_pair(t, t, self.horizon())?;
        let t = t.clamp(0.0, self.horizon());
        let row = if self.at_end(t) {
            (*self.end_column).clone()
        } else {
            ChaosRow::new(&self.spec, &self.path, t, t, Direction::Backward)?
        };
        Ok(Profile::from_row(row, t, true))
    }
}
