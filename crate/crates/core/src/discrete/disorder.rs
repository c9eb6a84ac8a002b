use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of the i.i.d. environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderLaw {
    StandardNormal,
    Rademacher,
}

impl FromStr for DisorderLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard_normal" | "normal" | "gaussian" => Ok(Self::StandardNormal),
            "rademacher" => Ok(Self::Rademacher),
            other => Err(Error::Unsupported(format!("disorder law {other:?}"))),
        }
    }
}

impl DisorderLaw {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::StandardNormal => rng.sample(StandardNormal),
            Self::Rademacher => {
                if rng.random::<bool>() { 1.0 } else { -1.0 }
            }
        }
    }
}

/// `Λ(t) = log E[e^{tω}]`.
pub fn lambda_of(law: DisorderLaw, t: f64) -> f64 {
    match law {
        DisorderLaw::StandardNormal => 0.5 * t * t,
        // log cosh t without overflow
        DisorderLaw::Rademacher => {
            let a = t.abs();
            a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
        }
    }
}

/// One realization `ω_0, ω_1, …` indexed by site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderField {
    law: DisorderLaw,
    omega: Vec<f64>,
}

impl DisorderField {
    /// Sites `0..len`.
    pub fn generate<R: Rng + ?Sized>(law: DisorderLaw, len: usize, rng: &mut R) -> Self {
        let omega = (0..len).map(|_| law.sample(rng)).collect();
        Self { law, omega }
    }

    pub fn from_values(law: DisorderLaw, omega: Vec<f64>) -> Self {
        Self { law, omega }
    }

    pub fn law(&self) -> DisorderLaw {
        self.law
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn lambda(&self, t: f64) -> f64 {
        lambda_of(self.law, t)
    }

    /// `βω_i − Λ(β) + h`.
    pub fn log_weight(&self, i: usize, beta: f64, h: f64) -> f64 {
        beta * self.omega[i] - self.lambda(beta) + h
    }

    /// `ξ_i = e^{βω_i − Λ(β) + h} − 1`.
    pub fn xi(&self, i: usize, beta: f64, h: f64) -> f64 {
        self.log_weight(i, beta, h).exp_m1()
    }

    /// `ζ_i = ξ_i / β`.
    pub fn zeta(&self, i: usize, beta: f64, h: f64) -> f64 {
        self.xi(i, beta, h) / beta
    }

    pub fn max_abs(&self, lo: usize, hi: usize) -> f64 {
        self.omega[lo..hi].iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Sample mean and variance, for sanity checks against `(0, 1)`.
    pub fn moments(&self) -> (f64, f64) {
        let n = self.omega.len() as f64;
        let mean = self.omega.iter().sum::<f64>() / n;
        let var = self.omega.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }
}
