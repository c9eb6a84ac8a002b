use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renewal::RenewalKernel;

/// Continuum couplings and their size-`N` counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingScale {
    pub beta_hat: f64,
    pub h_hat: f64,
    pub n: usize,
    pub alpha: f64,
    /// `L(N)`, unused when `α > 1`.
    pub l_n: f64,
    pub beta_n: f64,
    pub h_n: f64,
}

/// `β_N = β̂ L(N)/N^{α−1/2}`, `h_N = ĥ L(N)/N^α` for `α < 1`;
/// `β_N = β̂/√N`, `h_N = ĥ/N` for `α > 1`.
pub fn scale_couplings_with(beta_hat: f64, h_hat: f64, n: usize, alpha: f64, l_n: f64) -> Result<CouplingScale> {
    if alpha == 1.0 {
        return Err(Error::AlphaOne);
    }
    if !(alpha > 0.0) || !(beta_hat >= 0.0) || n == 0 || !(l_n > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha}, beta_hat {beta_hat}, N {n}, L(N) {l_n}"
        )));
    }
    let nf = n as f64;
    let (beta_n, h_n) = if alpha < 1.0 {
        (beta_hat * l_n / nf.powf(alpha - 0.5), h_hat * l_n / nf.powf(alpha))
    } else {
        (beta_hat / nf.sqrt(), h_hat / nf)
    };
    Ok(CouplingScale { beta_hat, h_hat, n, alpha, l_n, beta_n, h_n })
}

/// [`scale_couplings_with`] using the kernel's own `L`.
pub fn scale_couplings(beta_hat: f64, h_hat: f64, n: usize, kernel: &RenewalKernel) -> Result<CouplingScale> {
    scale_couplings_with(beta_hat, h_hat, n, kernel.alpha(), kernel.l(n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let s = scale_couplings_with(1.0, 0.0, 10_000, 0.75, 1.0).unwrap();
        assert!((s.beta_n - 0.1).abs() < 1e-15);
        assert_eq!(s.h_n, 0.0);
        let s = scale_couplings_with(2.0, 3.0, 100, 1.5, 1.0).unwrap();
        assert!((s.beta_n - 0.2).abs() < 1e-15);
        assert!((s.h_n - 0.03).abs() < 1e-15);
        assert_eq!(scale_couplings_with(1.0, 0.0, 10, 1.0, 1.0), Err(Error::AlphaOne));
    }

    #[test]
    fn kernel_l_is_used() {
        use crate::renewal::{build_kernel, KernelSpec};
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 100 }).unwrap();
        let s = scale_couplings(1.0, 1.0, 10_000, &k).unwrap();
        let c = k.l(1.0);
        assert!((s.beta_n - 0.1 * c).abs() < 1e-15);
        assert!((s.h_n - c / 1000.0).abs() < 1e-15);
    }
}
