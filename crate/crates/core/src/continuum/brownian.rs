//! Brownian environments on a uniform grid.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{label, substream};
use crate::{Error, Result};

/// Where a path came from, so it can be regenerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathOrigin {
    pub seed: u64,
    pub stream: u64,
}

/// `W` sampled at `iT/M`, `i = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    horizon: f64,
    w: Vec<f64>,
    origin: Option<PathOrigin>,
    refinements: u32,
}

/// Cumulative sum of `M` i.i.d. `N(0, T/M)` increments.
pub fn sample_brownian<R: Rng + ?Sized>(horizon: f64, cells: usize, rng: &mut R) -> Result<BrownianPath> {
    check(horizon, cells)?;
    let sd = (horizon / cells as f64).sqrt();
    let mut w = Vec::with_capacity(cells + 1);
    w.push(0.0);
    let mut x = 0.0;
    for _ in 0..cells {
        let z: f64 = rng.sample(StandardNormal);
        x += sd * z;
        w.push(x);
    }
    Ok(BrownianPath { horizon, w, origin: None, refinements: 0 })
}

fn check(horizon: f64, cells: usize) -> Result<()> {
    if cells < 2 {
        return Err(Error::InvalidParameter(format!("grid size {cells} < 2")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon}")));
    }
    Ok(())
}

impl BrownianPath {
    /// Path drawn from stream `(seed, stream)`; refinements of it draw from
    /// substreams of the same pair, so the whole refinement tower is reproducible.
    pub fn from_stream(horizon: f64, cells: usize, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = crate::rng::stream(seed, stream);
        let mut p = sample_brownian(horizon, cells, &mut rng)?;
        p.origin = Some(PathOrigin { seed, stream });
        Ok(p)
    }

    /// Path through given values `w[0] = 0, w[1], …, w[M]`.
    pub fn from_values(horizon: f64, w: Vec<f64>) -> Result<Self> {
        check(horizon, w.len().saturating_sub(1))?;
        if w[0] != 0.0 {
            return Err(Error::InvalidParameter("path must start at 0".into()));
        }
        Ok(Self { horizon, w, origin: None, refinements: 0 })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of cells `M`.
    pub fn cells(&self) -> usize {
        self.w.len() - 1
    }

    pub fn cell_width(&self) -> f64 {
        self.horizon / self.cells() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn origin(&self) -> Option<PathOrigin> {
        self.origin
    }

    pub fn refinements(&self) -> u32 {
        self.refinements
    }

    pub fn increment(&self, i: usize) -> f64 {
        self.w[i + 1] - self.w[i]
    }

    pub fn end_value(&self) -> f64 {
        self.w[self.cells()]
    }

    /// Grid index of time `t`, if `t` is a grid point.
    pub fn grid_index(&self, t: f64) -> Option<usize> {
        let x = t / self.cell_width();
        let i = x.round();
        if (x - i).abs() <= 1e-9 * x.abs().max(1.0) && i >= 0.0 && i <= self.cells() as f64 {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Halve every cell by inserting Brownian bridge midpoints
    /// `(W_l + W_r)/2 + N(0, Δ/4)`. The coarse values are kept, so the
    /// coarse path is the restriction of the fine one.
    pub fn refine(&self) -> BrownianPath {
        let level = self.refinements + 1;
        let mut rng = match self.origin {
            Some(o) => substream(o.seed, &[o.stream, label("refine"), level as u64]),
            None => substream(0, &[label("refine"), level as u64, self.cells() as u64]),
        };
        self.refine_with(&mut rng)
    }

    pub fn refine_with<R: Rng + ?Sized>(&self, rng: &mut R) -> BrownianPath {
        let sd = (0.25 * self.cell_width()).sqrt();
        let mut w = Vec::with_capacity(2 * self.cells() + 1);
        w.push(self.w[0]);
        for pair in self.w.windows(2) {
            let z: f64 = rng.sample(StandardNormal);
            w.push(0.5 * (pair[0] + pair[1]) + sd * z);
            w.push(pair[1]);
        }
        BrownianPath { horizon: self.horizon, w, origin: self.origin, refinements: self.refinements + 1 }
    }

    /// The path `x ↦ W(T) − W(T − x)`, whose increments are those of `W`
    /// in reverse order.
    pub fn reversed(&self) -> BrownianPath {
        let end = self.end_value();
        let w = self.w.iter().rev().map(|&v| end - v).collect();
        BrownianPath { horizon: self.horizon, w, origin: None, refinements: self.refinements }
    }

    /// Linear interpolation of `W` at `t ∈ [0, T]`.
    pub fn at(&self, t: f64) -> f64 {
        let x = (t / self.cell_width()).clamp(0.0, self.cells() as f64);
        let i = (x.floor() as usize).min(self.cells() - 1);
        let f = x - i as f64;
        self.w[i] * (1.0 - f) + self.w[i + 1] * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn starts_at_zero_and_variance_is_t() {
        let n = 10_000;
        let mut rng = stream(3, 0);
        let ends: Vec<f64> = (0..n)
            .map(|_| sample_brownian(2.0, 16, &mut rng).unwrap().end_value())
            .collect();
        let mean = ends.iter().sum::<f64>() / n as f64;
        let var = ends.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // SE of the sample variance of a Gaussian: T·sqrt(2/(n−1))
        let se = 2.0 * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - 2.0).abs() < 4.0 * se, "{var}");
        assert_eq!(sample_brownian(1.0, 4, &mut rng).unwrap().values()[0], 0.0);
    }

    #[test]
    fn refinement_keeps_coarse_values() {
        let p = BrownianPath::from_stream(1.0, 64, 11, 5).unwrap();
        let f = p.refine();
        assert_eq!(f.cells(), 128);
        for i in 0..=64 {
            assert_eq!(f.values()[2 * i], p.values()[i]);
        }
        assert_eq!(f, p.refine());
        assert_eq!(BrownianPath::from_stream(1.0, 64, 11, 5).unwrap(), p);
    }

    #[test]
    fn refined_increments_have_fine_variance() {
        let mut acc = 0.0;
        let mut count = 0;
        for s in 0..200 {
            let f = BrownianPath::from_stream(1.0, 32, 1, s).unwrap().refine();
            for i in 0..f.cells() {
                acc += f.increment(i).powi(2);
                count += 1;
            }
        }
        let v = acc / count as f64;
        assert!((v * 64.0 - 1.0).abs() < 0.05, "{}", v * 64.0);
    }

    #[test]
    fn reversal_reverses_increments() {
        let p = BrownianPath::from_stream(1.0, 8, 2, 2).unwrap();
        let r = p.reversed();
        for i in 0..8 {
            assert!((r.increment(i) - p.increment(7 - i)).abs() < 1e-15);
        }
        assert_eq!(p.grid_index(0.375), Some(3));
        assert_eq!(p.grid_index(0.3), None);
    }
}
