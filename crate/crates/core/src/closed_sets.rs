//! Closed subsets of ℝ at finite resolution.

use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of resolved points standing in for a closed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSetR {
    points: Vec<f64>,
    resolution: f64,
    contains_neg_inf: bool,
    contains_pos_inf: bool,
}

impl ClosedSetR {
    /// Points must be finite and strictly increasing.
    pub fn new(points: Vec<f64>, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidParameter(format!("resolution {resolution}")));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("points must be finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("points must be strictly increasing".into()));
        }
        Ok(Self { points, resolution, contains_neg_inf: false, contains_pos_inf: false })
    }

    /// Sorts and removes duplicates first.
    pub fn from_unsorted(mut points: Vec<f64>, resolution: f64) -> Result<Self> {
        points.sort_by(f64::total_cmp);
        points.dedup();
        Self::new(points, resolution)
    }

    pub fn empty(resolution: f64) -> Result<Self> {
        Self::new(Vec::new(), resolution)
    }

    /// Integer support `{p/scale}` of a discrete sample, at resolution `1/scale`.
    pub fn from_lattice(points: &[usize], scale: f64) -> Result<Self> {
        Self::from_unsorted(points.iter().map(|&p| p as f64 / scale).collect(), 1.0 / scale)
    }

    pub fn with_infinity_marks(mut self, neg: bool, pos: bool) -> Self {
        self.contains_neg_inf = neg;
        self.contains_pos_inf = pos;
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn infinity_marks(&self) -> (bool, bool) {
        (self.contains_neg_inf, self.contains_pos_inf)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `g_t = sup{x ∈ C : x ≤ t}`, `−∞` if there is none.
    pub fn g(&self, t: f64) -> f64 {
        let k = self.points.partition_point(|&x| x <= t);
        if k == 0 { f64::NEG_INFINITY } else { self.points[k - 1] }
    }

    /// `d_t = inf{x ∈ C : x > t}`, `+∞` if there is none.
    pub fn d(&self, t: f64) -> f64 {
        let k = self.points.partition_point(|&x| x <= t);
        self.points.get(k).copied().unwrap_or(f64::INFINITY)
    }

    pub fn gd(&self, t: f64) -> GDRecord {
        GDRecord { t, g: self.g(t), d: self.d(t) }
    }

    /// Whether `C ∩ (a, b]` is non-empty.
    pub fn meets(&self, a: f64, b: f64) -> bool {
        self.d(a) <= b
    }

    /// CSV with a `# resolution=<r>` header line and one point per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# resolution={:e}", self.resolution).map_err(io_err)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["point"]).map_err(csv_err)?;
        for p in &self.points {
            w.write_record([format!("{p:e}")]).map_err(csv_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header).map_err(io_err)?;
        let resolution = header
            .trim()
            .strip_prefix("# resolution=")
            .and_then(|r| r.parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("bad header line {header:?}")))?;
        let mut points = Vec::new();
        for rec in csv::Reader::from_reader(input).records() {
            let rec = rec.map_err(csv_err)?;
            let p = rec.get(0).and_then(|f| f.trim().parse::<f64>().ok());
            points.push(p.ok_or_else(|| Error::InvalidParameter(format!("bad row {rec:?}")))?);
        }
        Self::new(points, resolution)
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Numerical(format!("io: {e}"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Numerical(format!("csv: {e}"))
}

/// `(t, g_t, d_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GDRecord {
    pub t: f64,
    pub g: f64,
    pub d: f64,
}

pub fn g_map(c: &ClosedSetR, t: f64) -> f64 {
    c.g(t)
}

pub fn d_map(c: &ClosedSetR, t: f64) -> f64 {
    c.d(t)
}

fn angles(c: &ClosedSetR) -> Vec<f64> {
    let mut a = Vec::with_capacity(c.len() + 2);
    a.push(-FRAC_PI_2);
    a.extend(c.points.iter().map(|x| x.atan()));
    a.push(FRAC_PI_2);
    a
}

/// `sup_{a ∈ A} dist(a, B)` for sorted `A`, `B`.
fn directed(a: &[f64], b: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    let mut k = 0;
    for &x in a {
        while k < b.len() && b[k] < x {
            k += 1;
        }
        let right = if k < b.len() { b[k] - x } else { f64::INFINITY };
        let left = if k > 0 { x - b[k - 1] } else { f64::INFINITY };
        worst = worst.max(left.min(right));
    }
    worst
}

/// Fell–Matheron distance: Hausdorff distance of `C ∪ {±∞}` under
/// `|arctan x − arctan y|`.
pub fn fm_distance(c1: &ClosedSetR, c2: &ClosedSetR) -> f64 {
    let (a, b) = (angles(c1), angles(c2));
    directed(&a, &b).max(directed(&b, &a))
}

/// `(g_{t_i}, d_{t_i})` pairs and whether `C` meets every `(t_i, t_{i+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedFdd {
    pub pairs: Vec<GDRecord>,
    pub on_event: bool,
}

pub fn restricted_fdd_extract(c: &ClosedSetR, times: &[f64]) -> Result<RestrictedFdd> {
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadTimes);
    }
    let pairs: Vec<GDRecord> = times.iter().map(|&t| c.gd(t)).collect();
    let on_event = times.windows(2).all(|w| c.meets(w[0], w[1]));
    Ok(RestrictedFdd { pairs, on_event })
}

/// Dyadic block index of `x` in `[0, T]`: block 1 is `[0, h]`, block `j ≥ 2`
/// is `((j−1)h, jh]`.
fn block_of(x: f64, h: f64, blocks: usize) -> Option<usize> {
    if x < 0.0 || x > h * blocks as f64 {
        return None;
    }
    let j = (x / h).ceil() as usize;
    Some(j.clamp(1, blocks))
}

fn check_level(c: &ClosedSetR, n: u32, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon {horizon}")));
    }
    if n > 52 {
        return Err(Error::InvalidParameter(format!("dyadic level {n}")));
    }
    let h = horizon / (1u64 << n) as f64;
    if h < c.resolution * (1.0 - 1e-12) {
        return Err(Error::ResolutionTooCoarse { resolution: c.resolution, level: n });
    }
    Ok(h)
}

/// Occupied dyadic blocks of level `n` with the min and max of `C` in each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub index: usize,
    pub min: f64,
    pub max: f64,
}

pub fn dyadic_blocks(c: &ClosedSetR, n: u32, horizon: f64) -> Result<Vec<Block>> {
    let h = check_level(c, n, horizon)?;
    let count = 1usize << n;
    let mut blocks: Vec<Block> = Vec::new();
    for &x in &c.points {
        let Some(j) = block_of(x, h, count) else { continue };
        match blocks.last_mut() {
            Some(b) if b.index == j => b.max = x,
            _ => blocks.push(Block { index: j, min: x, max: x }),
        }
    }
    Ok(blocks)
}

/// Number of level-`n` dyadic blocks of `[0, T]` meeting `C`.
pub fn box_count(c: &ClosedSetR, n: u32, horizon: f64) -> Result<usize> {
    Ok(dyadic_blocks(c, n, horizon)?.len())
}

/// `Σ_j (b_j − a_j)^e` over occupied blocks; single-point blocks add nothing.
pub fn covering_sum(c: &ClosedSetR, n: u32, exponent: f64, horizon: f64) -> Result<f64> {
    let pts = c.points();
    let tol = c.resolution * 1e-9;
    if pts.first().is_none_or(|&x| x.abs() > tol) || pts.last().is_none_or(|&x| (x - horizon).abs() > tol)
    {
        return Err(Error::InvalidParameter("covering sums need 0 and T in the set".into()));
    }
    let blocks = dyadic_blocks(c, n, horizon)?;
    Ok(blocks
        .iter()
        .map(|b| b.max - b.min)
        .filter(|&w| w > 0.0)
        .map(|w| w.powf(exponent))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(p: &[f64]) -> ClosedSetR {
        ClosedSetR::new(p.to_vec(), 1e-6).unwrap()
    }

    #[test]
    fn g_and_d() {
        let c = set(&[0.0, 1.0]);
        assert_eq!((c.g(0.5), c.d(0.5)), (0.0, 1.0));
        assert_eq!((c.g(1.0), c.d(1.0)), (1.0, f64::INFINITY));
        let e = ClosedSetR::empty(1.0).unwrap();
        assert_eq!((e.g(3.0), e.d(3.0)), (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!(c.g(-1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn right_continuity() {
        let c = set(&[0.0, 0.4, 0.9]);
        for t in [0.1, 0.4, 0.5] {
            let r = c.gd(t);
            let s = c.gd(t + 1e-3);
            assert_eq!((r.g, r.d), (s.g, s.d));
        }
    }

    #[test]
    fn rejects_unsorted_points() {
        assert!(ClosedSetR::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(ClosedSetR::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(ClosedSetR::new(vec![0.0], 0.0).is_err());
        assert_eq!(ClosedSetR::from_unsorted(vec![1.0, 0.0, 1.0], 1.0).unwrap().points(), &[0.0, 1.0]);
    }

    #[test]
    fn fm_reference_values() {
        let e = ClosedSetR::empty(1.0).unwrap();
        assert_eq!(fm_distance(&e, &e), 0.0);
        assert!((fm_distance(&set(&[0.0]), &e) - FRAC_PI_2).abs() < 1e-15);
        let c = set(&[0.0, 1.0, 2.0]);
        assert_eq!(fm_distance(&c, &c), 0.0);
        let mut last = f64::INFINITY;
        for n in [1.0, 2.0, 4.0, 8.0] {
            let shifted = set(&[1.0 / n, 1.0 + 1.0 / n, 2.0 + 1.0 / n]);
            let d = fm_distance(&c, &shifted);
            assert!(d < last && d > 0.0);
            last = d;
        }
    }

    #[test]
    fn restricted_examples() {
        let c = set(&[0.0, 0.4, 0.9, 1.0]);
        let r = restricted_fdd_extract(&c, &[0.3, 0.7]).unwrap();
        assert_eq!(r.pairs[0].g, 0.0);
        assert_eq!(r.pairs[0].d, 0.4);
        assert_eq!(r.pairs[1].g, 0.4);
        assert_eq!(r.pairs[1].d, 0.9);
        assert!(r.on_event);
        assert!(!restricted_fdd_extract(&set(&[0.0, 1.0]), &[0.3, 0.7]).unwrap().on_event);
        assert!(restricted_fdd_extract(&c, &[0.7, 0.3]).is_err());
    }

    #[test]
    fn box_counts() {
        let c = set(&[0.0, 1.0]);
        for n in 0..10 {
            let want = if n == 0 { 1 } else { 2 };
            assert_eq!(box_count(&c, n, 1.0).unwrap(), want);
        }
        let grid: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let g = ClosedSetR::new(grid, 1.0 / 64.0).unwrap();
        assert_eq!(box_count(&g, 6, 1.0).unwrap(), 64);
        assert!(matches!(box_count(&g, 7, 1.0), Err(Error::ResolutionTooCoarse { .. })));
    }

    #[test]
    fn covering_sum_closed_form() {
        let m = 10;
        let s = 1.0 / (1u64 << m) as f64;
        let grid: Vec<f64> = (0..=1usize << m).map(|k| k as f64 * s).collect();
        let g = ClosedSetR::new(grid, s).unwrap();
        for n in 1..m {
            let h = 1.0 / (1u64 << n) as f64;
            let blocks = (1u64 << n) as f64;
            let want = h.powf(0.5) + (blocks - 1.0) * (h - s).powf(0.5);
            assert!((covering_sum(&g, n as u32, 0.5, 1.0).unwrap() - want).abs() < 1e-10);
            assert!(covering_sum(&g, n as u32, 1.0, 1.0).unwrap() <= 1.0 + 1e-12);
        }
        assert!(covering_sum(&set(&[0.5]), 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = set(&[0.0, 0.25, 1.0 / 3.0, 1.0]);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = ClosedSetR::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    fn arb_set() -> impl Strategy<Value = ClosedSetR> {
        proptest::collection::vec(-50.0f64..50.0, 0..12)
            .prop_map(|p| ClosedSetR::from_unsorted(p, 1e-9).unwrap())
    }

    proptest! {
        #[test]
        fn metric_axioms(a in arb_set(), b in arb_set(), c in arb_set()) {
            let ab = fm_distance(&a, &b);
            prop_assert_eq!(ab, fm_distance(&b, &a));
            prop_assert!(fm_distance(&a, &c) <= ab + fm_distance(&b, &c) + 1e-12);
            prop_assert_eq!(fm_distance(&a, &a), 0.0);
            if a != b {
                prop_assert!(ab > 0.0);
            }
        }

        #[test]
        fn on_event_pairs_are_ordered(a in arb_set(), t1 in -40.0f64..0.0, dt in 0.1f64..40.0) {
            let r = restricted_fdd_extract(&a, &[t1, t1 + dt]).unwrap();
            if r.on_event {
                prop_assert!(r.pairs[0].d <= r.pairs[1].g);
            }
            for p in &r.pairs {
                prop_assert!(p.g <= p.t && p.t < p.d);
            }
        }
    }
}
