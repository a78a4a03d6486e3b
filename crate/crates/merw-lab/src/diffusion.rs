//! Reference laws for the diffusive scaling limits and the goodness-of-fit
//! harness.
//!
//! Closed forms: the Bessel(3) marginal (from the origin and, via the
//! h-transform kernel (y/x0)(phi_t(y - x0) - phi_t(y + x0)), from x0 > 0),
//! the folded normal |x0 + B_t|, and the exponential stationary law of the
//! reflected drifted motion. The reflected SDE itself is simulated with a
//! projected Euler scheme Z <- |Z + dB - lambda dt|, which backs the
//! closed-form validation tests.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::simulate::normal_cdf;
use crate::stats;

fn gaussian_density(u: f64, variance: f64) -> f64 {
    (-(u * u) / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// CDF of the Bessel(3) marginal at time t started from x0.
///
/// x0 = 0: density sqrt(2/pi) t^{-3/2} y^2 e^{-y^2/(2t)}, integrated in
/// closed form. x0 > 0: h-transform kernel, integrated by parts.
pub fn bessel3_cdf(x0: f64, t: f64, y: f64) -> Result<f64> {
    if t <= 0.0 || y.is_nan() || x0 < 0.0 {
        return Err(Error::Domain(format!(
            "bessel3_cdf needs t > 0, x0 >= 0 (got t={t}, x0={x0})"
        )));
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    let s = t.sqrt();
    if x0 == 0.0 {
        let z = y / s;
        Ok(2.0 * normal_cdf(z) - 1.0 - (2.0 / std::f64::consts::PI).sqrt() * z * (-0.5 * z * z).exp())
    } else {
        let phi = |u: f64| gaussian_density(u, t);
        let cdf = normal_cdf((y - x0) / s) - normal_cdf(-x0 / s) + normal_cdf((y + x0) / s)
            - normal_cdf(x0 / s)
            + (t / x0) * (phi(y + x0) - phi(y - x0));
        Ok(cdf.clamp(0.0, 1.0))
    }
}

/// Density of the Bessel(3) marginal (used by the quadrature checks).
pub fn bessel3_density(x0: f64, t: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if x0 == 0.0 {
        (2.0 / std::f64::consts::PI).sqrt() * t.powf(-1.5) * y * y * (-y * y / (2.0 * t)).exp()
    } else {
        (y / x0) * (gaussian_density(y - x0, t) - gaussian_density(y + x0, t))
    }
}

/// CDF of |x0 + B_t|.
pub fn folded_normal_cdf(x0: f64, t: f64, y: f64) -> Result<f64> {
    if t <= 0.0 || y.is_nan() {
        return Err(Error::Domain(format!("folded_normal_cdf needs t > 0 (got {t})")));
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    let s = t.sqrt();
    Ok(normal_cdf((y - x0) / s) - normal_cdf((-y - x0) / s))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceLaw {
    Bessel3 {
        x0: f64,
        t: f64,
    },
    FoldedNormal {
        x0: f64,
        t: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Empirical law backed by simulation; carries its own error estimates.
    Simulated {
        scheme: String,
        seed: u64,
        steps_per_path: u64,
        samples: Vec<f64>,
        /// 1%-level KS radius of the empirical CDF around the truth.
        mc_error: f64,
        /// KS distance to a half-step companion run (discretization probe).
        discretization_error: f64,
    },
}

impl ReferenceLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        if rate <= 0.0 {
            return Err(Error::Domain(format!("exponential rate must be > 0, got {rate}")));
        }
        Ok(ReferenceLaw::Exponential { rate })
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            ReferenceLaw::Bessel3 { x0, t } => bessel3_cdf(*x0, *t, y).unwrap_or(f64::NAN),
            ReferenceLaw::FoldedNormal { x0, t } => {
                folded_normal_cdf(*x0, *t, y).unwrap_or(f64::NAN)
            }
            ReferenceLaw::Exponential { rate } => {
                if y <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * y).exp()
                }
            }
            ReferenceLaw::Simulated { samples, .. } => stats::ecdf(samples, y),
        }
    }

    /// Monte Carlo + discretization error for simulated laws, zero otherwise.
    pub fn intrinsic_error(&self) -> f64 {
        match self {
            ReferenceLaw::Simulated {
                mc_error,
                discretization_error,
                ..
            } => mc_error + discretization_error,
            _ => 0.0,
        }
    }

    /// CSV rows (y, cdf) on a uniform grid.
    pub fn to_csv(&self, lo: f64, hi: f64, points: usize) -> String {
        let mut out = String::from("y,cdf\n");
        for i in 0..points {
            let y = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            out.push_str(&format!("{y},{}\n", self.cdf(y)));
        }
        out
    }
}

/// Euler-Maruyama for dZ = dB - lambda dt + dL with reflection at zero,
/// implemented as the projection Z <- |Z + dB - lambda dt|.
pub fn reflected_drifted_euler(
    lambda: f64,
    x0: f64,
    t: f64,
    dt: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<ReferenceLaw> {
    if lambda <= 0.0 || x0 < 0.0 || t <= 0.0 {
        return Err(Error::Domain(
            "reflected Euler needs lambda > 0, x0 >= 0, t > 0".into(),
        ));
    }
    let max_dt = 1e-3 * t.max(1.0);
    if dt > max_dt {
        return Err(Error::StepTooCoarse { dt, max_dt });
    }
    let endpoints = simulate_reflected(lambda, x0, t, dt, replicas, master_seed, 0);
    // Half-step companion on an independent stream probes the scheme bias.
    let companion_n = replicas.min(100_000);
    let half = simulate_reflected(lambda, x0, t, dt / 2.0, companion_n, master_seed, 1);
    let samples = stats::sorted_sample(endpoints)?;
    let half_sorted = stats::sorted_sample(half)?;
    let disc = two_sample_ks(&samples, &half_sorted);
    let mc_error = kolmogorov_quantile(0.01) / (samples.len() as f64).sqrt();
    Ok(ReferenceLaw::Simulated {
        scheme: "euler_projection".into(),
        seed: master_seed,
        steps_per_path: (t / dt).ceil() as u64,
        samples,
        mc_error,
        discretization_error: disc,
    })
}

fn simulate_reflected(
    lambda: f64,
    x0: f64,
    t: f64,
    dt: f64,
    replicas: u64,
    master_seed: u64,
    label: u64,
) -> Vec<f64> {
    let steps = (t / dt).ceil() as u64;
    let sqrt_dt = dt.sqrt();
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = CounterRng::with_label(master_seed, r, label);
            let mut z = x0;
            for _ in 0..steps {
                z = (z + sqrt_dt * rng.normal() - lambda * dt).abs();
            }
            z
        })
        .collect()
}

/// Mean increment of the reflected scheme away from the boundary, by
/// regression on simulated one-step increments started at z0.
pub fn reflected_drift_estimate(
    lambda: f64,
    z0: f64,
    dt: f64,
    replicas: u64,
    master_seed: u64,
) -> (f64, f64) {
    let increments: Vec<f64> = (0..replicas)
        .map(|r| {
            let mut rng = CounterRng::new(master_seed, r);
            (z0 + dt.sqrt() * rng.normal() - lambda * dt).abs() - z0
        })
        .collect();
    (stats::mean(&increments), stats::standard_error(&increments))
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

/// One-sample two-sided KS statistic of a sorted sample against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample KS statistic of two sorted samples.
pub fn two_sample_ks(xs: &[f64], ys: &[f64]) -> f64 {
    let mut d = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < xs.len() && j < ys.len() {
        if xs[i] <= ys[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fx = i as f64 / xs.len() as f64;
        let fy = j as f64 / ys.len() as f64;
        d = d.max((fx - fy).abs());
    }
    d
}

/// Survival function of the Kolmogorov distribution,
/// Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut sign = 1.0;
    for k in 1..200 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        acc += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// K_alpha with Q(K_alpha) = alpha; the asymptotic threshold is K_alpha/sqrt(n).
pub fn kolmogorov_quantile(alpha: f64) -> f64 {
    let mut lo = 1e-6f64;
    let mut hi = 4.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct GoFReport {
    pub ks_statistic: f64,
    pub sample_size: usize,
    /// Asymptotic 1%-level threshold K_{0.01}/sqrt(n), inflated by the
    /// reference law's own error when the reference is simulated.
    pub null_threshold: f64,
    pub reference_error: f64,
    pub pass: bool,
}

/// Two-sided KS test of a sample against a reference law at the 1% level.
pub fn ks_test(samples: Vec<f64>, reference: &ReferenceLaw) -> Result<GoFReport> {
    let sorted = stats::sorted_sample(samples)?;
    if sorted.len() < 1000 {
        return Err(Error::Data(format!(
            "KS harness needs at least 10^3 samples, got {}",
            sorted.len()
        )));
    }
    let d = ks_statistic(&sorted, |y| reference.cdf(y));
    let reference_error = reference.intrinsic_error();
    let threshold = kolmogorov_quantile(0.01) / (sorted.len() as f64).sqrt() + reference_error;
    Ok(GoFReport {
        ks_statistic: d,
        sample_size: sorted.len(),
        null_threshold: threshold,
        reference_error,
        pass: d <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bessel3_cdf_basics() {
        assert_eq!(bessel3_cdf(0.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(bessel3_cdf(0.0, 1.0, 30.0).unwrap() > 1.0 - 1e-12);
        assert!(bessel3_cdf(0.0, -1.0, 1.0).is_err());
        // Brownian scaling: CDF_t(y) = CDF_1(y / sqrt(t)).
        for y in [0.3, 0.9, 1.7, 2.5] {
            let a = bessel3_cdf(0.0, 4.0, y).unwrap();
            let b = bessel3_cdf(0.0, 1.0, y / 2.0).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn bessel3_cdf_matches_density_quadrature() {
        for (x0, t) in [(0.0, 1.0), (0.5, 1.0), (2.0, 0.7)] {
            for y in [0.4, 1.0, 2.2] {
                let by_quadrature =
                    stats::adaptive_simpson(&|s| bessel3_density(x0, t, s), 0.0, y, 1e-12)
                        .unwrap();
                let closed = bessel3_cdf(x0, t, y).unwrap();
                assert_relative_eq!(closed, by_quadrature, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn bessel3_mean_from_origin() {
        // E Y_1 = 2 sqrt(2/pi) when started at zero.
        let mean = stats::adaptive_simpson(
            &|y| y * bessel3_density(0.0, 1.0, y),
            0.0,
            40.0,
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(mean, 2.0 * (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn bessel3_density_integrates_to_one_and_cdf_is_monotone() {
        for (x0, t) in [(0.0, 1.0), (1.0, 2.0), (3.0, 0.5)] {
            let mass = stats::adaptive_simpson(
                &|y| bessel3_density(x0, t, y),
                0.0,
                x0 + 50.0 * t.sqrt(),
                1e-12,
            )
            .unwrap();
            assert_relative_eq!(mass, 1.0, epsilon = 1e-10);
            let mut last = 0.0;
            for i in 0..1000 {
                let y = (x0 + 8.0) * i as f64 / 999.0;
                let c = bessel3_cdf(x0, t, y).unwrap();
                assert!(c + 1e-14 >= last);
                last = c;
            }
        }
    }

    #[test]
    fn folded_normal_basics() {
        assert_relative_eq!(
            folded_normal_cdf(0.0, 1.0, 100.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // Mean sqrt(2/pi) at (x0, t) = (0, 1).
        let mean = stats::adaptive_simpson(
            &|y: f64| 1.0 - folded_normal_cdf(0.0, 1.0, y).unwrap(),
            0.0,
            40.0,
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(mean, (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-9);
        // Far from the origin the folded term is invisible.
        for y in [2.0, 2.5, 3.0, 3.5, 4.0] {
            let folded = folded_normal_cdf(3.0, 0.09, y).unwrap();
            let plain = normal_cdf((y - 3.0) / 0.3);
            assert!((folded - plain).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_law_rejects_bad_rate() {
        assert!(ReferenceLaw::exponential(0.0).is_err());
        let law = ReferenceLaw::exponential(2.0).unwrap();
        assert_relative_eq!(law.cdf(2.0f64.ln() / 2.0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn euler_rejects_coarse_steps() {
        assert!(matches!(
            reflected_drifted_euler(1.0, 0.0, 1.0, 0.1, 10, 1),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn euler_endpoints_are_nonnegative_and_t_to_zero_is_a_point_mass() {
        let law = reflected_drifted_euler(2.0, 1.5, 0.01, 1e-5, 2_000, 5).unwrap();
        match &law {
            ReferenceLaw::Simulated { samples, .. } => {
                assert!(samples.iter().all(|&z| z >= 0.0));
                let m = stats::mean(samples);
                assert!((m - 1.5).abs() < 0.05, "mean {m}");
            }
            _ => panic!(),
        }
    }

    #[test]
    fn reflected_drift_matches_minus_lambda_away_from_zero() {
        let (mean, se) = reflected_drift_estimate(1.5, 10.0, 1e-3, 200_000, 7);
        assert!(
            (mean + 1.5e-3).abs() < 3.0 * se,
            "mean {mean} se {se}"
        );
    }

    #[test]
    fn ks_statistic_on_exact_quantile_grid_is_small() {
        // Deterministic stratified sample of Exp(1): D = 1/(2n) at midpoints.
        let n = 10_000;
        let sample: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                -(1.0 - u).ln()
            })
            .collect();
        let d = ks_statistic(&sample, |y| if y <= 0.0 { 0.0 } else { 1.0 - (-y).exp() });
        assert!(d <= 0.5 / n as f64 + 1e-12, "d = {d}");
    }

    #[test]
    fn ks_detects_wrong_exponential_rate() {
        // sup |e^{-x} - e^{-2x}| = 1/4 at x = ln 2.
        let n = 20_000;
        let sample: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                -(1.0 - u).ln() // Exp(1)
            })
            .collect();
        let law = ReferenceLaw::exponential(2.0).unwrap();
        let report = ks_test(sample, &law).unwrap();
        assert!(!report.pass);
        assert_relative_eq!(report.ks_statistic, 0.25, epsilon = 5e-3);
    }

    #[test]
    fn ks_null_calibration_passes_on_reference_samples() {
        // Pseudo-random draws from the reference itself at n = 1e5.
        let mut rng = CounterRng::new(4242, 0);
        let sample: Vec<f64> = (0..100_000).map(|_| rng.exponential() / 2.0).collect();
        let law = ReferenceLaw::exponential(2.0).unwrap();
        let report = ks_test(sample, &law).unwrap();
        assert!(
            report.pass,
            "ks {} threshold {}",
            report.ks_statistic, report.null_threshold
        );
    }

    #[test]
    fn ks_harness_rejects_tiny_or_nan_samples() {
        let law = ReferenceLaw::exponential(1.0).unwrap();
        assert!(ks_test(vec![1.0; 10], &law).is_err());
        let mut bad = vec![1.0; 2000];
        bad[7] = f64::NAN;
        assert!(ks_test(bad, &law).is_err());
    }

    #[test]
    fn kolmogorov_quantile_matches_tabulated_value() {
        // K_{0.01} = 1.6276 (classical table).
        assert_relative_eq!(kolmogorov_quantile(0.01), 1.6276, epsilon = 2e-4);
        assert_relative_eq!(kolmogorov_quantile(0.05), 1.3581, epsilon = 2e-4);
    }
}
