//! The simple symmetric walk conditioned to stay non-negative.
//!
//! With tau the hitting time of -1 from a start x >= 0, the density is
//! P_x(tau = n) = (x+1)/n * P_0(S_n = x+1), and the reflection principle
//! collapses the survival probability to a finite sum of binomial terms:
//! P_x(tau > n) = sum_{k=-x}^{x+1} P_0(S_n = k). The k-step transition law of
//! the conditioned walk converges to (1/2)(y+1)/(x+1), which is exactly the
//! gamma = 0 maximum-entropy kernel.
//!
//! Note on the asymptotic constant: expanding the exact survival sum (x+1
//! lattice terms of size P_0(S_n = k) ~ sqrt(2/(pi n)) each) gives
//! P_x(tau > n) ~ sqrt(2)(x+1)/sqrt(pi n).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest n for which binomials are evaluated exactly; log-space above.
pub const EXACT_BINOMIAL_CAP: u64 = 1000;

/// ln C(n, k).
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// P_0(S_n = y) = 2^{-n} C(n, (n+y)/2) for the simple symmetric walk,
/// zero when the parity does not match.
pub fn srw_point_probability(n: u64, y: i64) -> f64 {
    let n_i = n as i64;
    if y.abs() > n_i || (n_i + y) % 2 != 0 {
        return 0.0;
    }
    let k = ((n_i + y) / 2) as u64;
    (ln_binomial(n, k) - n as f64 * std::f64::consts::LN_2).exp()
}

/// P_x(tau = n): probability the walk started at x >= 0 first hits -1 at
/// step n. Nonzero only when n + x is odd.
pub fn hitting_time_pmf(x: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (x as f64 + 1.0) / n as f64 * srw_point_probability(n, x as i64 + 1)
}

/// Exact rational P_x(tau = n) for n below the exact-binomial cap.
pub fn hitting_time_pmf_exact(x: u64, n: u64) -> Result<BigRational> {
    if n > EXACT_BINOMIAL_CAP {
        return Err(Error::Domain(format!(
            "exact evaluation capped at n = {EXACT_BINOMIAL_CAP}, got {n}"
        )));
    }
    if n == 0 {
        return Ok(BigRational::zero());
    }
    let n_i = n as i64;
    let y = x as i64 + 1;
    if y > n_i || (n_i + y) % 2 != 0 {
        return Ok(BigRational::zero());
    }
    let k = ((n_i + y) / 2) as u64;
    let mut binom = BigInt::one();
    for i in 0..k {
        binom = binom * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    let num = BigInt::from(x + 1) * binom;
    let den = BigInt::from(n) * num::pow::pow(BigInt::from(2), n as usize);
    Ok(BigRational::new(num, den))
}

/// P_x(tau > n) by the reflection identity: a sum of at most x+1 binomial
/// point masses. Exact up to floating-point rounding, so it doubles as the
/// oracle for the summation route and the asymptotic.
pub fn survival_exact(x: u64, n: u64) -> f64 {
    let mut acc = 0.0;
    let mut k = -(x as i64);
    while k <= x as i64 + 1 {
        acc += srw_point_probability(n, k);
        k += 1;
    }
    acc
}

/// P_x(tau > n) = 1 - sum_{k <= n} P_x(tau = k).
pub fn survival_by_summation(x: u64, n: u64) -> f64 {
    let mut acc = 0.0;
    for k in 1..=n {
        acc += hitting_time_pmf(x, k);
    }
    1.0 - acc
}

/// Leading-order tail: P_x(tau > n) ~ sqrt(2) (x+1) / sqrt(pi n).
pub fn survival_asymptotic(x: u64, n: u64) -> f64 {
    std::f64::consts::SQRT_2 * (x as f64 + 1.0) / (std::f64::consts::PI * n as f64).sqrt()
}

/// Limiting transition probability of the conditioned walk,
/// (1/2) (y+1)/(x+1) for |y - x| = 1, y >= 0.
pub fn limit_kernel(x: u64, y: u64) -> Result<f64> {
    let dx = y as i64 - x as i64;
    if dx.abs() != 1 {
        return Err(Error::Domain(format!(
            "states {x} and {y} are not adjacent"
        )));
    }
    Ok(0.5 * (y as f64 + 1.0) / (x as f64 + 1.0))
}
