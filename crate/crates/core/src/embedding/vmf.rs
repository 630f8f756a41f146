//! von Mises-Fisher normalization on the unit sphere `S^{p-1}`.
//!
//! `f(x; μ, κ) = c_p(κ) exp(κ μᵀx)` with
//! `c_p(κ) = κ^{p/2-1} / ((2π)^{p/2} I_{p/2-1}(κ))`.
//! The learned per-word κ plays the role of the concentration of a word's
//! context distribution around its input vector.

use crate::scalar::{dot, Scalar};

/// `ln Γ(n / 2)` for a positive integer `n`, exact up to rounding.
fn ln_gamma_half(n: usize) -> f64 {
    assert!(n > 0, "ln_gamma_half(0) is undefined");
    if n % 2 == 0 {
        // Γ(m) = (m-1)!
        (1..n / 2).map(|i| (i as f64).ln()).sum()
    } else {
        // Γ(m + 1/2) = √π · Π_{i<m} (i + 1/2)
        let m = n / 2;
        0.5 * std::f64::consts::PI.ln() + (0..m).map(|i| (i as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// `ln I_ν(x)` for `ν = order2 / 2` via the power series summed in log space.
///
/// Every term of the series is positive, so there is no cancellation; terms are
/// rescaled against the running maximum which keeps the sum finite for `x` in
/// the tens of thousands.
pub fn ln_bessel_i_half_order<F: Scalar>(order2: usize, x: F) -> F {
    let x = x.to_f64_lossy();
    let nu = order2 as f64 / 2.0;
    if x == 0.0 {
        return if order2 == 0 { F::zero() } else { F::neg_infinity() };
    }
    let ln_half_x = (0.5 * x).ln();
    let step = 2.0 * ln_half_x;
    // ln t_0 = ν ln(x/2) - ln Γ(ν + 1)
    let mut ln_term = nu * ln_half_x - ln_gamma_half(order2 + 2);
    let mut ln_ref = ln_term;
    let mut acc = 1.0f64;
    let peak = 0.5 * x;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        ln_term += step - (kf + 1.0).ln() - (kf + nu + 1.0).ln();
        k += 1;
        if ln_term > ln_ref {
            acc = acc * (ln_ref - ln_term).exp() + 1.0;
            ln_ref = ln_term;
        } else {
            let rel = ln_term - ln_ref;
            acc += rel.exp();
            if (k as f64) > peak && rel < -40.0 {
                break;
            }
        }
        if k > 10_000_000 {
            break;
        }
    }
    F::of(ln_ref + acc.ln())
}

/// `ln c_p(κ)`, the log normalizing constant of the p-variate vMF density.
///
/// `κ = 0` gives the uniform density `Γ(p/2) / (2 π^{p/2})`.
pub fn vmf_log_normalizer<F: Scalar>(kappa: F, p: usize) -> F {
    assert!(p >= 2, "vMF requires p >= 2");
    let k = kappa.to_f64_lossy();
    assert!(k >= 0.0, "concentration must be non-negative");
    let half_p = p as f64 / 2.0;
    if k == 0.0 {
        let v = ln_gamma_half(p) - std::f64::consts::LN_2 - half_p * std::f64::consts::PI.ln();
        return F::of(v);
    }
    let nu = half_p - 1.0;
    let ln_i = ln_bessel_i_half_order::<f64>(p - 2, k);
    F::of(nu * k.ln() - half_p * (2.0 * std::f64::consts::PI).ln() - ln_i)
}

/// Log density of `vMF_p(μ, κ)` at unit vector `x`.
pub fn vmf_log_density<F: Scalar>(x: &[F], mu: &[F], kappa: F) -> F {
    vmf_log_normalizer(kappa, x.len()) + kappa * dot(mu, x)
}
