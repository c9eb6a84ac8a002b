//! Monte Carlo estimators with standard errors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// `|value − target| ≤ k·se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }
}

fn need(xs: &[f64], n: usize) -> Result<()> {
    if xs.len() < n {
        return Err(Error::SampleTooSmall { got: xs.len(), need: n });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite value in sample".into()));
    }
    Ok(())
}

fn central(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    (m, m2 / n, m4 / n)
}

pub fn mean_se(xs: &[f64]) -> Result<Estimate> {
    need(xs, 2)?;
    let n = xs.len();
    let (m, m2, _) = central(xs);
    let var = m2 * n as f64 / (n - 1) as f64;
    Ok(Estimate { value: m, se: (var / n as f64).sqrt(), n })
}

/// Unbiased sample variance; the error uses the fourth central moment.
pub fn variance_se(xs: &[f64]) -> Result<Estimate> {
    need(xs, 4)?;
    let n = xs.len();
    let nf = n as f64;
    let (_, m2, m4) = central(xs);
    let var = m2 * nf / (nf - 1.0);
    let se = ((m4 - var * var * (nf - 3.0) / (nf - 1.0)).max(0.0) / nf).sqrt();
    Ok(Estimate { value: var, se, n })
}

/// Mean of `a − b` over paired draws.
pub fn paired_difference(a: &[f64], b: &[f64]) -> Result<Estimate> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter("paired samples differ in length".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_se(&d)
}

/// `E[Z^γ]` for a positive sample with `E[Z] = 1`, using `Z − 1` as a
/// control variate with fitted coefficient.
pub fn fractional_moment(zs: &[f64], gamma: f64) -> Result<Estimate> {
    need(zs, 4)?;
    if let Some(z) = zs.iter().find(|z| !(**z > 0.0)) {
        return Err(Error::InvalidParameter(format!("fractional moment of non-positive value {z}")));
    }
    let g: Vec<f64> = zs.iter().map(|z| z.powf(gamma)).collect();
    let n = zs.len() as f64;
    let (mg, mz) = (g.iter().sum::<f64>() / n, zs.iter().sum::<f64>() / n);
    let (mut cov, mut var) = (0.0, 0.0);
    for (a, z) in g.iter().zip(zs) {
        cov += (a - mg) * (z - mz);
        var += (z - mz) * (z - mz);
    }
    let c = if var > 0.0 { cov / var } else { 0.0 };
    let adjusted: Vec<f64> = g.iter().zip(zs).map(|(a, z)| a - c * (z - 1.0)).collect();
    mean_se(&adjusted)
}

pub fn median(xs: &[f64]) -> Result<f64> {
    need(xs, 1)?;
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Pearson correlation with its standard error `1/√n` under independence.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<Estimate> {
    need(a, 3)?;
    need(b, 3)?;
    if a.len() != b.len() {
        return Err(Error::InvalidParameter("paired samples differ in length".into()));
    }
    let (ma, va, _) = central(a);
    let (mb, vb, _) = central(b);
    let n = a.len() as f64;
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    let rho = if va > 0.0 && vb > 0.0 { cov / (va * vb).sqrt() } else { 0.0 };
    Ok(Estimate { value: rho, se: 1.0 / n.sqrt(), n: a.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, Exp, StandardNormal};

    #[test]
    fn normal_moments() {
        let mut rng = stream(3, 0);
        let xs: Vec<f64> = (0..40_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = mean_se(&xs).unwrap();
        assert!(m.within(0.0, 4.0));
        assert!((m.se - 0.005).abs() < 2e-4);
        let v = variance_se(&xs).unwrap();
        assert!(v.within(1.0, 4.0));
        // Var of the sample variance of a normal is 2σ⁴/n
        assert!((v.se - (2.0f64 / 40_000.0).sqrt()).abs() < 5e-4);
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
    }

    #[test]
    fn control_variate_is_unbiased_and_tighter() {
        // Exp(1) has mean one and E[Z^γ] = Γ(1+γ)
        let mut rng = stream(3, 1);
        let zs: Vec<f64> = (0..20_000).map(|_| Exp::new(1.0).unwrap().sample(&mut rng)).collect();
        let e = fractional_moment(&zs, 0.4).unwrap();
        let want = crate::special::gamma(1.4);
        assert!(e.within(want, 4.0), "{e:?} vs {want}");
        let plain = mean_se(&zs.iter().map(|z| z.powf(0.4)).collect::<Vec<_>>()).unwrap();
        assert!(e.se < 0.5 * plain.se);
        assert!(fractional_moment(&[1.0, -1.0, 2.0, 0.5], 0.4).is_err());
    }

    #[test]
    fn correlation_of_independent_and_equal() {
        let mut rng = stream(3, 2);
        let a: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = correlation(&a, &b).unwrap();
        assert!(r.value.abs() < 4.0 * r.se);
        assert!((correlation(&a, &a).unwrap().value - 1.0).abs() < 1e-12);
    }
}
