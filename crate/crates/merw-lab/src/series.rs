//! Return-probability generating function of the half-line walk.
//!
//! With a_n the weighted count of n-step loops at the origin, the generating
//! function G(z) = sum a_n z^n satisfies G(z) (1 - gamma z - z^2 S(z)) = 1
//! where S is the Catalan generating function in z^2. Matching coefficients
//! gives the convolution recurrence
//!
//! ```text
//! a_0 = 1,   a_m = gamma a_{m-1} + sum_{j >= 0} C_j a_{m-2-2j}
//! ```
//!
//! which this module evaluates either exactly (big integers, gamma rational)
//! or in rescaled double precision b_n = a_n x^n so that 10^4 coefficients
//! stay in range. The growth rate of a_n recovers the spectral radius; the
//! value G(1/2) = 2/(1-gamma) separates transience from recurrence.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default cap on exact big-integer work.
pub const CATALAN_CAP: usize = 10_000;

/// Exact n-th Catalan number.
pub fn catalan(n: usize) -> Result<BigInt> {
    if n > CATALAN_CAP {
        return Err(Error::Domain(format!(
            "catalan index {n} exceeds the configured cap {CATALAN_CAP}"
        )));
    }
    Ok(catalan_table(n).pop().unwrap())
}

/// Catalan numbers C_0 ... C_n via C_{k+1} = C_k 2(2k+1)/(k+2).
pub fn catalan_table(n: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(n + 1);
    let mut c = BigInt::one();
    out.push(c.clone());
    for k in 0..n {
        c = c * BigInt::from(2 * (2 * k + 1)) / BigInt::from(k + 2);
        out.push(c.clone());
    }
    out
}

#[derive(Debug, Clone)]
pub enum Coefficients {
    /// a_n = scaled[n] / denom^n, exactly.
    Exact { scaled: Vec<BigInt>, denom: BigInt },
    /// values[n] = a_n * x^n in double precision.
    Scaled { values: Vec<f64>, x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffMode {
    Exact,
    Scaled,
}

#[derive(Debug, Clone)]
pub struct GeneratingFunctionTable {
    gamma: BigRational,
    coeffs: Coefficients,
    /// Estimated radius of convergence of G (that is, 1/rho).
    pub radius_estimate: f64,
}

/// Coefficients a_0 ... a_n of the return generating function.
pub fn return_coefficients(
    gamma: &BigRational,
    n_max: usize,
    mode: CoeffMode,
) -> Result<GeneratingFunctionTable> {
    if gamma.is_negative() {
        return Err(Error::Domain("gamma must be >= 0".into()));
    }
    if n_max > CATALAN_CAP {
        return Err(Error::Domain(format!(
            "coefficient count {n_max} exceeds the cap {CATALAN_CAP}"
        )));
    }
    let coeffs = match mode {
        CoeffMode::Exact => exact_coefficients(gamma, n_max),
        CoeffMode::Scaled => scaled_coefficients(gamma, n_max),
    };
    let radius_estimate = estimate_radius(&coeffs);
    Ok(GeneratingFunctionTable {
        gamma: gamma.clone(),
        coeffs,
        radius_estimate,
    })
}

fn exact_coefficients(gamma: &BigRational, n_max: usize) -> Coefficients {
    // Work with b_n = a_n d^n (d the denominator of gamma), which satisfies
    // b_m = p b_{m-1} + sum_j C_j b_{m-2-2j} d^{2j+2}.
    let p = gamma.numer().clone();
    let d = gamma.denom().clone();
    let d2 = &d * &d;
    let catalans = catalan_table(n_max / 2 + 1);
    // d2_pows[j] = d^{2j+2}
    let mut d2_pows = Vec::with_capacity(n_max / 2 + 2);
    let mut acc = d2.clone();
    for _ in 0..=(n_max / 2 + 1) {
        d2_pows.push(acc.clone());
        acc *= &d2;
    }
    let mut b: Vec<BigInt> = Vec::with_capacity(n_max + 1);
    b.push(BigInt::one());
    for m in 1..=n_max {
        let mut v = &p * &b[m - 1];
        let mut j = 0usize;
        while m >= 2 + 2 * j {
            v += &catalans[j] * &b[m - 2 - 2 * j] * &d2_pows[j];
            j += 1;
        }
        b.push(v);
    }
    Coefficients::Exact {
        scaled: b,
        denom: d,
    }
}

fn scaled_coefficients(gamma: &BigRational, n_max: usize) -> Coefficients {
    let g = gamma.to_f64().unwrap();
    // Rescale by x = 1/rho so b_n = a_n x^n stays bounded.
    let rho = if g <= 1.0 { 2.0 } else { g + 1.0 / g };
    let x = 1.0 / rho;
    let x2 = x * x;
    // c_j = C_j x^{2j}
    let mut c = Vec::with_capacity(n_max / 2 + 1);
    let mut cj = 1.0f64;
    for j in 0..=(n_max / 2) {
        c.push(cj);
        cj *= x2 * (2 * (2 * j + 1)) as f64 / (j + 2) as f64;
    }
    let gx = g * x;
    let mut b = Vec::with_capacity(n_max + 1);
    b.push(1.0f64);
    for m in 1..=n_max {
        let mut v = gx * b[m - 1];
        let mut j = 0usize;
        while m >= 2 + 2 * j {
            v += x2 * c[j] * b[m - 2 - 2 * j];
            j += 1;
        }
        b.push(v);
    }
    Coefficients::Scaled { values: b, x }
}

/// Ratio test on even coefficients with one Aitken acceleration step:
/// a_{2k+2}/a_{2k} -> rho^2, slowed by the polynomial factor n^{-3/2} for
/// gamma <= 1, which the Delta^2 step removes.
fn estimate_radius(coeffs: &Coefficients) -> f64 {
    let (ratio_scaled, x) = match coeffs {
        Coefficients::Exact { scaled, denom } => {
            // a_{2k+2}/a_{2k} = scaled[2k+2] / (scaled[2k] d^2)
            let n = scaled.len() - 1;
            let k_hi = n / 2;
            let mut ratios = Vec::new();
            let d2 = BigRational::from_integer(denom * denom);
            for k in k_hi.saturating_sub(8)..k_hi {
                if scaled[2 * k].is_zero() {
                    continue;
                }
                let r = BigRational::new(scaled[2 * k + 2].clone(), scaled[2 * k].clone()) / &d2;
                ratios.push(r.to_f64().unwrap());
            }
            (aitken_tail(&ratios), 1.0)
        }
        Coefficients::Scaled { values, x } => {
            let n = values.len() - 1;
            let k_hi = n / 2;
            let mut ratios = Vec::new();
            for k in k_hi.saturating_sub(8)..k_hi {
                if values[2 * k] != 0.0 {
                    ratios.push(values[2 * k + 2] / values[2 * k]);
                }
            }
            (aitken_tail(&ratios), *x)
        }
    };
    // ratio_scaled -> (rho x)^2, so 1/rho = x / sqrt(ratio).
    x / ratio_scaled.sqrt()
}

fn aitken_tail(ratios: &[f64]) -> f64 {
    if ratios.len() < 3 {
        return *ratios.last().unwrap_or(&f64::NAN);
    }
    let k = ratios.len() - 3;
    let (r0, r1, r2) = (ratios[k], ratios[k + 1], ratios[k + 2]);
    let denom = r2 - 2.0 * r1 + r0;
    if denom.abs() < 1e-14 * r2.abs().max(1.0) {
        return r2;
    }
    r0 - (r1 - r0) * (r1 - r0) / denom
}

impl GeneratingFunctionTable {
    pub fn gamma(&self) -> &BigRational {
        &self.gamma
    }

    pub fn len(&self) -> usize {
        match &self.coeffs {
            Coefficients::Exact { scaled, .. } => scaled.len(),
            Coefficients::Scaled { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    /// Exact a_n, when the table was built in exact mode.
    pub fn coefficient_exact(&self, n: usize) -> Option<BigRational> {
        match &self.coeffs {
            Coefficients::Exact { scaled, denom } => Some(BigRational::new(
                scaled.get(n)?.clone(),
                num::pow::pow(denom.clone(), n),
            )),
            Coefficients::Scaled { .. } => None,
        }
    }

    /// a_n x^n for the table's scale x (Scaled mode only).
    pub fn scaled_coefficient(&self, n: usize) -> Option<f64> {
        match &self.coeffs {
            Coefficients::Scaled { values, .. } => values.get(n).copied(),
            Coefficients::Exact { .. } => None,
        }
    }

    /// Partial sums of G(1/2) = sum a_n 2^{-n}. Only meaningful for
    /// gamma <= 1, where the radius of convergence is exactly 1/2.
    pub fn g_half_partial_sums(&self) -> Result<Vec<f64>> {
        let one = BigRational::one();
        if self.gamma > one {
            return Err(Error::Domain(
                "G(1/2) lies outside the disc of convergence for gamma > 1".into(),
            ));
        }
        match &self.coeffs {
            Coefficients::Scaled { values, x } => {
                // x = 1/2 for gamma <= 1, so the partial sums are cumulative
                // sums of the scaled coefficients.
                debug_assert!((x - 0.5).abs() < 1e-15);
                let mut acc = 0.0;
                Ok(values
                    .iter()
                    .map(|b| {
                        acc += b;
                        acc
                    })
                    .collect())
            }
            Coefficients::Exact { .. } => Err(Error::Domain(
                "G(1/2) partial sums are computed on scaled tables".into(),
            )),
        }
    }

    /// Limit of the G(1/2) partial-sum sequence.
    ///
    /// The tail behaves like c1 N^{-1/2} + c2 N^{-3/2} + ..., so the limit is
    /// recovered by Richardson extrapolation in powers of N^{-1/2} on four
    /// anchors N, N/2, N/4, N/8. For gamma < 1 this reproduces 2/(1-gamma) to
    /// well below 1e-6 at N = 10^4; at gamma = 1 the sums diverge and this
    /// returns a domain error.
    pub fn g_half_limit(&self) -> Result<f64> {
        if self.gamma >= BigRational::one() {
            return Err(Error::Domain(
                "G(1/2) diverges at gamma = 1 (null recurrence witness)".into(),
            ));
        }
        let sums = self.g_half_partial_sums()?;
        let n = sums.len() - 1;
        if n < 64 {
            return Err(Error::Domain("need at least 64 coefficients".into()));
        }
        // Even anchors so the alternating component of the tail stays smooth.
        let mut anchors = Vec::with_capacity(4);
        let mut m = n - (n % 2);
        for _ in 0..4 {
            anchors.push(m);
            m /= 2;
            m -= m % 2;
        }
        let exponents = [0.0f64, 1.0, 3.0, 5.0];
        let mut mat = [[0.0f64; 4]; 4];
        let mut rhs = [0.0f64; 4];
        for (i, &a) in anchors.iter().enumerate() {
            let u = 1.0 / (a as f64).sqrt();
            for (j, &e) in exponents.iter().enumerate() {
                mat[i][j] = u.powf(e);
            }
            rhs[i] = sums[a];
        }
        solve4(&mut mat, &mut rhs)?;
        Ok(rhs[0])
    }

    /// CSV rows (n, a_n). Exact tables print exact decimal strings when the
    /// denominator is 2^a 5^b and `p/q` otherwise; scaled tables print the
    /// rescaled coefficient and record the scale in the header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.coeffs {
            Coefficients::Exact { scaled, denom } => {
                out.push_str("n,a_n\n");
                for (n, b) in scaled.iter().enumerate() {
                    let a = BigRational::new(b.clone(), num::pow::pow(denom.clone(), n));
                    let rendered =
                        decimal_string(&a).unwrap_or_else(|| format!("{}/{}", a.numer(), a.denom()));
                    out.push_str(&format!("{n},{rendered}\n"));
                }
            }
            Coefficients::Scaled { values, x } => {
                out.push_str(&format!("n,a_n_times_x_pow_n_with_x_{x}\n"));
                for (n, v) in values.iter().enumerate() {
                    out.push_str(&format!("{n},{v:.17e}\n"));
                }
            }
        }
        out
    }
}

/// Exact decimal expansion of a rational whose reduced denominator divides a
/// power of ten; None otherwise.
pub fn decimal_string(r: &BigRational) -> Option<String> {
    let mut den = r.denom().clone();
    let mut twos = 0usize;
    let mut fives = 0usize;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if den != BigInt::one() {
        return None;
    }
    let k = twos.max(fives);
    let scaled = r.numer() * num::pow::pow(BigInt::from(10), k) / r.denom();
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let body = if k == 0 {
        digits
    } else if digits.len() > k {
        format!("{}.{}", &digits[..digits.len() - k], &digits[digits.len() - k..])
    } else {
        format!("0.{}{}", "0".repeat(k - digits.len()), digits)
    };
    Some(if negative { format!("-{body}") } else { body })
}

/// 4x4 Gaussian elimination with partial pivoting, solution left in rhs.
fn solve4(mat: &mut [[f64; 4]; 4], rhs: &mut [f64; 4]) -> Result<()> {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&a, &b| mat[a][col].abs().partial_cmp(&mat[b][col].abs()).unwrap())
            .unwrap();
        if mat[pivot][col].abs() < 1e-300 {
            return Err(Error::Data("singular extrapolation system".into()));
        }
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..4 {
            let f = mat[row][col] / mat[col][col];
            for k in col..4 {
                mat[row][k] -= f * mat[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    for col in (0..4).rev() {
        for row in 0..col {
            let f = mat[row][col] / mat[col][col];
            rhs[row] -= f * rhs[col];
        }
        rhs[col] /= mat[col][col];
    }
    Ok(())
}
