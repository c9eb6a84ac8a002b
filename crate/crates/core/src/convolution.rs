//! Online (causal) convolution: `acc[i] = Σ_{j<i} v[j]·k[i-j]` where each
//! `v[i]` may depend on `acc[i]`. Renewal functions, weighted renewal sums and
//! second-moment recursions all have this shape.
//!
//! The FFT route is the usual divide and conquer over index blocks: the left
//! half of every block is finished before its contribution to the right half
//! is added with one FFT product, giving O(n log² n).

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

const DIRECT_BLOCK: usize = 64;

/// Direct O(n²) evaluation. `kernel[0]` is ignored. `feed(i, acc_i)` returns
/// the value `v[i]`; `acc_0 = 0`.
pub fn online_direct<F>(kernel: &[f64], len: usize, mut feed: F) -> Vec<f64>
where
    F: FnMut(usize, f64) -> f64,
{
    assert!(kernel.len() >= len);
    let mut v = Vec::with_capacity(len);
    // reversed kernel so the inner product runs over contiguous memory
    let rev: Vec<f64> = (0..len).map(|d| kernel[len - 1 - d]).collect();
    for i in 0..len {
        let acc = if i == 0 {
            0.0
        } else {
            // Σ_{j<i} v[j] k[i-j] ; k[i-j] = rev[len-1-i+j]
            let off = len - 1 - i;
            dot(&v[..i], &rev[off..off + i])
        };
        v.push(feed(i, acc));
    }
    v
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

/// FFT-accelerated evaluation with the same contract as [`online_direct`].
pub fn online_fft<F>(kernel: &[f64], len: usize, mut feed: F) -> Vec<f64>
where
    F: FnMut(usize, f64) -> f64,
{
    assert!(kernel.len() >= len);
    let mut state = Cdq {
        kernel,
        acc: vec![0.0; len],
        v: vec![0.0; len],
        planner: FftPlanner::new(),
    };
    state.solve(0, len, &mut feed);
    state.v
}

struct Cdq<'a> {
    kernel: &'a [f64],
    acc: Vec<f64>,
    v: Vec<f64>,
    planner: FftPlanner<f64>,
}

impl Cdq<'_> {
    fn solve<F: FnMut(usize, f64) -> f64>(&mut self, lo: usize, hi: usize, feed: &mut F) {
        if hi - lo <= DIRECT_BLOCK {
            for i in lo..hi {
                let mut extra = 0.0;
                for j in lo..i {
                    extra += self.v[j] * self.kernel[i - j];
                }
                let a = self.acc[i] + extra;
                self.acc[i] = a;
                self.v[i] = feed(i, a);
            }
            return;
        }
        let mid = (lo + hi) / 2;
        self.solve(lo, mid, feed);
        self.cross(lo, mid, hi);
        self.solve(mid, hi, feed);
    }

    /// acc[i] += Σ_{j∈[lo,mid)} v[j] k[i-j] for i ∈ [mid, hi)
    fn cross(&mut self, lo: usize, mid: usize, hi: usize) {
        let la = mid - lo;
        let lb = hi - lo;
        let size = (la + lb).next_power_of_two();
        let fwd = self.planner.plan_fft_forward(size);
        let inv = self.planner.plan_fft_inverse(size);
        let mut a: Vec<Complex64> = (0..size)
            .map(|x| Complex64::new(if x < la { self.v[lo + x] } else { 0.0 }, 0.0))
            .collect();
        let mut b: Vec<Complex64> = (0..size)
            .map(|x| Complex64::new(if x > 0 && x < lb { self.kernel[x] } else { 0.0 }, 0.0))
            .collect();
        fwd.process(&mut a);
        fwd.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= *y;
        }
        inv.process(&mut a);
        let scale = 1.0 / size as f64;
        for i in mid..hi {
            self.acc[i] += a[i - lo].re * scale;
        }
    }
}

/// Lengths above this use the FFT route in [`online`].
pub const FFT_THRESHOLD: usize = 4096;

/// [`online_direct`] for short inputs, [`online_fft`] beyond [`FFT_THRESHOLD`].
pub fn online<F>(kernel: &[f64], len: usize, feed: F) -> Vec<f64>
where
    F: FnMut(usize, f64) -> f64,
{
    if len > FFT_THRESHOLD {
        online_fft(kernel, len, feed)
    } else {
        online_direct(kernel, len, feed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_matches_direct() {
        let len = 3000;
        let kernel: Vec<f64> = (0..len)
            .map(|n| if n == 0 { 0.0 } else { 0.6 * (n as f64).powf(-1.75) })
            .collect();
        let weights: Vec<f64> = (0..len).map(|i| 1.0 + 0.3 * ((i as f64) * 0.37).sin()).collect();
        let d = online_direct(&kernel, len, |i, acc| if i == 0 { 1.0 } else { acc * weights[i] });
        let f = online_fft(&kernel, len, |i, acc| if i == 0 { 1.0 } else { acc * weights[i] });
        for (x, y) in d.iter().zip(&f) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}
