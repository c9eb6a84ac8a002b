use std::collections::BTreeMap;
use std::io::Write;

use super::disorder::DisorderField;
use crate::convolution::online;
use crate::error::{Error, Result};
use crate::renewal::{RenewalFunction, RenewalKernel};

/// Above this `β·max|ω|` the recursion runs on logarithms.
pub const LOG_DOMAIN_THRESHOLD: f64 = 30.0;
const LOG_SUM_LIMIT: f64 = 500.0;

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln W(0, m)` for `m = 0..=len`, where `W(0,0) = 1` and
/// `W(0, m) = K(m) + Σ_{0<i<m} W(0,i) e^{log_w[i]} K(m−i)`.
///
/// `log_w[m]` is the site log-weight at offset `m`; entries `0` and `len`
/// are never read.
pub(crate) fn log_weighted_row(table: &[f64], log_w: &[f64], len: usize, log_domain: bool) -> Vec<f64> {
    assert!(table.len() > len && log_w.len() > len.saturating_sub(1));
    if !log_domain {
        let mut w = Vec::with_capacity(len + 1);
        let weights: Vec<f64> = log_w.iter().map(|x| x.exp()).collect();
        online(table, len + 1, |m, acc| {
            if m == 0 {
                w.push(1.0);
                1.0
            } else {
                w.push(acc);
                if m < len { acc * weights[m] } else { 0.0 }
            }
        });
        return w.into_iter().map(f64::ln).collect();
    }
    let ln_k: Vec<f64> = table[..=len].iter().map(|k| k.ln()).collect();
    let mut ln_w = vec![0.0; len + 1];
    let mut ln_v = vec![0.0; len + 1];
    for m in 1..=len {
        ln_w[m] = log_sum_exp((0..m).map(|i| ln_v[i] + ln_k[m - i]));
        ln_v[m] = if m < len { ln_w[m] + log_w[m] } else { f64::NEG_INFINITY };
    }
    ln_w
}

/// Whether the weights need the log-domain recursion.
pub(crate) fn needs_log_domain(beta: f64, max_abs_omega: f64, log_w: &[f64]) -> bool {
    let positive: f64 = log_w.iter().filter(|x| **x > 0.0).sum();
    beta.abs() * max_abs_omega > LOG_DOMAIN_THRESHOLD || positive > LOG_SUM_LIMIT
}

fn check_span(kernel: &RenewalKernel, u: &RenewalFunction, disorder: &DisorderField, a: usize, b: usize) -> Result<()> {
    if a > b {
        return Err(Error::InvalidParameter(format!("anchors ({a}, {b}) out of order")));
    }
    let len = b - a;
    let limit = kernel.n_max().min(u.n_max());
    if len > limit {
        return Err(Error::HorizonTooLarge { horizon: len, n_max: limit });
    }
    if !(u.get(len) > 0.0) {
        return Err(Error::ZeroRenewalMass(len));
    }
    if len > 1 && disorder.len() < b {
        return Err(Error::InvalidParameter(format!(
            "disorder has {} sites, need {b}",
            disorder.len()
        )));
    }
    Ok(())
}

/// `ln Z(a, a+m)` for `m = 0..=len` in one pass.
pub fn log_partition_row(
    kernel: &RenewalKernel,
    u: &RenewalFunction,
    disorder: &DisorderField,
    beta: f64,
    h: f64,
    a: usize,
    len: usize,
) -> Result<Vec<f64>> {
    check_span(kernel, u, disorder, a, a + len)?;
    if len <= 1 {
        return Ok(vec![0.0; len + 1]);
    }
    let log_w: Vec<f64> = (0..len)
        .map(|m| if m == 0 { 0.0 } else { disorder.log_weight(a + m, beta, h) })
        .collect();
    let log_mode = needs_log_domain(beta, disorder.max_abs(a + 1, a + len), &log_w[1..]);
    let ln_w = log_weighted_row(kernel.table(), &log_w, len, log_mode);
    Ok(ln_w
        .iter()
        .enumerate()
        .map(|(m, w)| if m == 0 { 0.0 } else { w - u.get(m).ln() })
        .collect())
}

/// `ln Z^{ω,c}_{β,h}(a, b)`.
pub fn log_partition_dp(
    kernel: &RenewalKernel,
    u: &RenewalFunction,
    disorder: &DisorderField,
    beta: f64,
    h: f64,
    a: usize,
    b: usize,
) -> Result<f64> {
    check_span(kernel, u, disorder, a, b)?;
    Ok(log_partition_row(kernel, u, disorder, beta, h, a, b - a)?[b - a])
}

/// Conditioned partition function `Z^{ω,c}_{β,h}(a, b)`, weighting the
/// sites strictly between `a` and `b`.
pub fn partition_dp(
    kernel: &RenewalKernel,
    u: &RenewalFunction,
    disorder: &DisorderField,
    beta: f64,
    h: f64,
    a: usize,
    b: usize,
) -> Result<f64> {
    let z = log_partition_dp(kernel, u, disorder, beta, h, a, b)?.exp();
    if !z.is_finite() {
        return Err(Error::Numerical(format!("Z({a}, {b}) overflows; use the log form")));
    }
    Ok(z)
}

/// `Z(a, b)` on a set of integer anchor pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteZSurface {
    n: usize,
    values: BTreeMap<(usize, usize), f64>,
}

impl DiscreteZSurface {
    pub const INTERPOLATION: &'static str = "triangular_bisection";

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        if a == b && a <= self.n {
            return Some(1.0);
        }
        self.values.get(&(a, b)).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values.iter().map(|(&(a, b), &z)| (a, b, z))
    }

    fn corner(&self, a: usize, b: usize) -> Result<f64> {
        self.get(a, b).ok_or(Error::OffGrid { s: a as f64, t: b as f64 })
    }

    /// Linear interpolation on the two triangles of each unit square, split
    /// along the main diagonal.
    pub fn interpolate(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0 <= x && x <= y && y <= self.n as f64) {
            return Err(Error::OffGrid { s: x, t: y });
        }
        let i = (x.floor() as usize).min(self.n.saturating_sub(1));
        let j = (y.floor() as usize).min(self.n.saturating_sub(1));
        let (fx, fy) = (x - i as f64, y - j as f64);
        if fx == 0.0 && fy == 0.0 {
            return self.corner(i, j);
        }
        let z00 = self.corner(i, j)?;
        let z11 = self.corner(i + 1, j + 1)?;
        if fx > fy {
            let z10 = self.corner(i + 1, j)?;
            Ok(z00 + fx * (z10 - z00) + fy * (z11 - z10))
        } else {
            let z01 = self.corner(i, j + 1)?;
            Ok(z00 + fy * (z01 - z00) + fx * (z11 - z01))
        }
    }

    /// `Z(N s, N t)` for macroscopic times.
    pub fn scaled(&self, s: f64, t: f64, scale: f64) -> Result<f64> {
        self.interpolate(s * scale, t * scale)
    }

    /// CSV triples `(a, b, Z)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
        w.write_record(["a", "b", "Z"]).map_err(err)?;
        for (a, b, z) in self.iter() {
            w.write_record([a.to_string(), b.to_string(), format!("{z:e}")]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Numerical(format!("io: {e}")))
    }
}

/// All pairs `0 ≤ a ≤ b ≤ n`.
pub fn full_anchor_set(n: usize) -> Vec<(usize, usize)> {
    (0..=n).flat_map(|a| (a..=n).map(move |b| (a, b))).collect()
}

/// Partition functions at every anchor, one row per distinct left end.
#[allow(clippy::too_many_arguments)]
pub fn partition_surface(
    kernel: &RenewalKernel,
    u: &RenewalFunction,
    disorder: &DisorderField,
    beta: f64,
    h: f64,
    n: usize,
    anchors: &[(usize, usize)],
) -> Result<DiscreteZSurface> {
    let mut reach: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in anchors {
        if a > b || b > n {
            return Err(Error::InvalidParameter(format!("anchor ({a}, {b}) outside 0 ≤ a ≤ b ≤ {n}")));
        }
        let e = reach.entry(a).or_insert(b);
        *e = (*e).max(b);
    }
    let mut rows = BTreeMap::new();
    for (&a, &b) in &reach {
        rows.insert(a, log_partition_row(kernel, u, disorder, beta, h, a, b - a)?);
    }
    let mut values = BTreeMap::new();
    for &(a, b) in anchors {
        let z = rows[&a][b - a].exp();
        if !z.is_finite() {
            return Err(Error::Numerical(format!("Z({a}, {b}) overflows")));
        }
        values.insert((a, b), z);
    }
    Ok(DiscreteZSurface { n, values })
}
