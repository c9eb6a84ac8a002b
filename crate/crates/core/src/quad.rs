//! Numerical integration: tanh-sinh (double exponential) quadrature for
//! integrands with algebraic endpoint singularities, and Halton points for
//! quasi Monte Carlo.

use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub tol: f64,
    pub max_level: u32,
    /// Truncation of the transformed axis; nodes reach gaps of about
    /// `exp(-π sinh(t_max))` from the endpoints.
    pub t_max: f64,
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self { tol: 1e-12, max_level: 10, t_max: 4.5 }
    }
}

impl TanhSinh {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    /// Integrate `f(x, x - a, b - x)` over `[a, b]`. The gap arguments are
    /// computed without cancellation so singular factors like `(b - x)^{-s}`
    /// stay accurate next to the endpoints.
    pub fn integrate_gaps<F>(&self, a: f64, b: f64, mut f: F) -> QuadResult
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        if b <= a {
            return QuadResult { value: 0.0, error: 0.0, evaluations: 0 };
        }
        let half = 0.5 * (b - a);
        let mut evals = 0usize;
        let mut node = |t: f64| -> f64 {
            let u = FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            // 1 - tanh(|u|) = 2 / (exp(2|u|) + 1)
            let comp = 2.0 / ((2.0 * u.abs()).exp() + 1.0);
            let w = FRAC_PI_2 * t.cosh() / (cu * cu);
            if !w.is_finite() || w == 0.0 {
                return 0.0;
            }
            let (left, right) = if t < 0.0 {
                (half * comp, half * (2.0 - comp))
            } else {
                (half * (2.0 - comp), half * comp)
            };
            if left <= 0.0 || right <= 0.0 {
                return 0.0;
            }
            let x = if t < 0.0 { a + left } else { b - right };
            evals += 1;
            let v = f(x, left, right);
            if v.is_finite() { w * v } else { 0.0 }
        };

        let mut h = 1.0;
        let mut sum = node(0.0);
        let mut k = 1;
        while k as f64 * h <= self.t_max {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 1;
        }
        let mut estimate = sum * h * half;
        let mut error = f64::INFINITY;
        for _level in 1..=self.max_level {
            h *= 0.5;
            let mut add = 0.0;
            let mut k = 1;
            while k as f64 * h <= self.t_max {
                let t = k as f64 * h;
                add += node(t) + node(-t);
                k += 2;
            }
            sum += add;
            let next = sum * h * half;
            error = (next - estimate).abs();
            estimate = next;
            if error <= self.tol * estimate.abs().max(1e-300) {
                break;
            }
        }
        QuadResult { value: estimate, error, evaluations: evals }
    }

    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> QuadResult
    where
        F: FnMut(f64) -> f64,
    {
        self.integrate_gaps(a, b, |x, _, _| f(x))
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// The `i`-th point of the `dim`-dimensional Halton sequence (i ≥ 1).
pub fn halton(i: u64, dim: usize, out: &mut [f64]) {
    assert!(dim <= PRIMES.len());
    for (d, o) in out.iter_mut().take(dim).enumerate() {
        *o = radical_inverse(i, PRIMES[d]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn smooth_integrand() {
        let r = TanhSinh::default().integrate(0.0, PI, |x| x.sin());
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn arcsine_singularities() {
        // ∫₀¹ x^{-1/2}(1-x)^{-1/2} dx = π
        let r = TanhSinh::default()
            .integrate_gaps(0.0, 1.0, |_, l, r| l.powf(-0.5) * r.powf(-0.5));
        assert_relative_eq!(r.value, PI, max_relative = 1e-10);
    }

    #[test]
    fn strong_endpoint_singularity() {
        // ∫₀¹ x^{-0.75} dx = 4
        let r = TanhSinh::with_tol(1e-10).integrate_gaps(0.0, 1.0, |_, l, _| l.powf(-0.75));
        assert_relative_eq!(r.value, 4.0, max_relative = 1e-8);
    }

    #[test]
    fn halton_low_discrepancy_mean() {
        let mut p = [0.0; 3];
        let mut s = [0.0; 3];
        let n = 1 << 14;
        for i in 1..=n {
            halton(i, 3, &mut p);
            for d in 0..3 {
                s[d] += p[d];
            }
        }
        for v in s {
            assert!((v / n as f64 - 0.5).abs() < 1e-3);
        }
    }
}
