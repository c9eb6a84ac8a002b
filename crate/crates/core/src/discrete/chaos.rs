use super::disorder::DisorderField;
use crate::convolution::online;
use crate::error::{Error, Result};
use crate::renewal::RenewalFunction;
use crate::special::CompensatedSum;

/// Largest `r` for the full `2^{r−1}`-term enumeration.
pub const MAX_FULL_ORDER_R: usize = 22;
const MAX_TERMS: f64 = 1e8;

fn binomial_partial_sum(n: usize, k_max: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0;
    for k in 0..=k_max.min(n) {
        total += c;
        c *= (n - k) as f64 / (k + 1) as f64;
    }
    total
}

/// `Σ_{I ⊆ {1..r−1}, |I| ≤ max_order} P(I ⊂ τ | r ∈ τ) ∏_{i∈I} ξ_i` by
/// enumerating subsets. With `max_order = None` every subset is included and
/// the sum equals `Z(0, r)`.
pub fn chaos_expansion_exact(
    u: &RenewalFunction,
    disorder: &DisorderField,
    beta: f64,
    h: f64,
    r: usize,
    max_order: Option<usize>,
) -> Result<f64> {
    if r > u.n_max() {
        return Err(Error::HorizonTooLarge { horizon: r, n_max: u.n_max() });
    }
    if r >= 1 && disorder.len() < r {
        return Err(Error::InvalidParameter(format!("disorder has {} sites, need {r}", disorder.len())));
    }
    if !(u.get(r) > 0.0) {
        return Err(Error::ZeroRenewalMass(r));
    }
    let sites = r.saturating_sub(1);
    let order = max_order.unwrap_or(sites);
    if max_order.is_none() && r > MAX_FULL_ORDER_R {
        return Err(Error::EnumerationTooLarge { r, max: MAX_FULL_ORDER_R });
    }
    if binomial_partial_sum(sites, order) > MAX_TERMS {
        return Err(Error::EnumerationTooLarge { r, max: MAX_FULL_ORDER_R });
    }
    let xi: Vec<f64> = (0..r).map(|i| if i == 0 { 0.0 } else { disorder.xi(i, beta, h) }).collect();
    let uv = u.values();
    let mut sum = CompensatedSum::new();
    // depth-first over increasing index sequences; `w` carries ∏ u(gaps) ξ
    #[allow(clippy::too_many_arguments)]
    fn walk(last: usize, w: f64, depth: usize, order: usize, r: usize, uv: &[f64], xi: &[f64], sum: &mut CompensatedSum) {
        sum.add(w * uv[r - last]);
        if depth == order {
            return;
        }
        for i in last + 1..r {
            walk(i, w * uv[i - last] * xi[i], depth + 1, order, r, uv, xi, sum);
        }
    }
    walk(0, 1.0, 0, order, r, uv, &xi, &mut sum);
    Ok(sum.value() / uv[r])
}

/// `Σ_{0<n<r} P(n ∈ τ | r ∈ τ) = Σ u(n) u(r−n) / u(r)`.
pub fn expected_visits(u: &RenewalFunction, r: usize) -> f64 {
    let uv = u.values();
    (1..r).map(|n| uv[n] * uv[r - n]).sum::<f64>() / uv[r]
}

/// Exact `E[Z(0, n)²]` over centred weights with `Var ξ = sigma2`:
/// `Σ_I P(I ⊂ τ | n ∈ τ)² σ^{2|I|}`, computed as a renewal recursion with
/// kernel `u²`.
pub fn second_moment_exact(u: &RenewalFunction, sigma2: f64, n: usize) -> Result<f64> {
    if n > u.n_max() {
        return Err(Error::HorizonTooLarge { horizon: n, n_max: u.n_max() });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let sq: Vec<f64> = u.values()[..=n].iter().map(|x| x * x).collect();
    let mut last = 0.0;
    online(&sq, n + 1, |i, acc| {
        if i == n {
            last = acc;
        }
        if i == 0 { 1.0 } else { acc * sigma2 }
    });
    Ok(last / sq[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{partition_dp, DisorderLaw};
    use crate::renewal::{build_kernel, renewal_function, KernelSpec};
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn identity_with_dp() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 64 }).unwrap();
        let u = renewal_function(&k, 64).unwrap();
        let mut rng = stream(21, 0);
        for _ in 0..10 {
            let r = rng.random_range(1..=16);
            let (beta, h) = (rng.random_range(0.0..1.5), rng.random_range(-0.5..0.5));
            let d = DisorderField::generate(DisorderLaw::StandardNormal, r + 1, &mut rng);
            let c = chaos_expansion_exact(&u, &d, beta, h, r, None).unwrap();
            let z = partition_dp(&k, &u, &d, beta, h, 0, r).unwrap();
            assert!((c - z).abs() <= 1e-10 * z, "{c} vs {z}");
        }
    }

    #[test]
    fn free_weights_and_limits() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.6, n_max: 64 }).unwrap();
        let u = renewal_function(&k, 64).unwrap();
        let d = DisorderField::generate(DisorderLaw::Rademacher, 30, &mut stream(1, 1));
        assert!((chaos_expansion_exact(&u, &d, 0.0, 0.0, 12, None).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            chaos_expansion_exact(&u, &d, 0.5, 0.0, 23, None),
            Err(Error::EnumerationTooLarge { .. })
        ));
        assert!(chaos_expansion_exact(&u, &d, 0.5, 0.0, 28, Some(2)).is_ok());
    }

    #[test]
    fn first_order_mean_is_h_times_visits() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 64 }).unwrap();
        let u = renewal_function(&k, 64).unwrap();
        let (r, beta, h) = (12, 0.3, 0.01);
        let mut rng = stream(22, 0);
        let reps = 20_000;
        let vals: Vec<f64> = (0..reps)
            .map(|_| {
                let d = DisorderField::generate(DisorderLaw::StandardNormal, r, &mut rng);
                chaos_expansion_exact(&u, &d, beta, h, r, Some(1)).unwrap() - 1.0
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let sd = (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
        let want = h.exp_m1() * expected_visits(&u, r);
        assert!((mean - want).abs() < 4.0 * sd / (reps as f64).sqrt(), "{mean} vs {want}");
    }

    #[test]
    fn second_moment_matches_enumeration() {
        let k = build_kernel(&KernelSpec::PurePower { alpha: 0.75, n_max: 64 }).unwrap();
        let u = renewal_function(&k, 64).unwrap();
        let r = 9;
        let s2: f64 = 0.3;
        // Σ_I P(I ⊂ τ | r)² s2^{|I|} by brute force over bit masks
        let uv = u.values();
        let mut total = 0.0;
        for mask in 0u32..(1 << (r - 1)) {
            let mut last = 0;
            let mut p = 1.0;
            for i in 1..r {
                if mask & (1 << (i - 1)) != 0 {
                    p *= uv[i - last] * s2.sqrt();
                    last = i;
                }
            }
            p *= uv[r - last] / uv[r];
            total += p * p;
        }
        assert!((second_moment_exact(&u, s2, r).unwrap() - total).abs() < 1e-13);
    }
}
