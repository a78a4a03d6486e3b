//! Discretized minimization of the continuous relative entropy rate
//! int (phi')^2 over square-normalized profiles.
//!
//! Two problems are solved on a uniform mesh of [0, L]:
//!
//! * Dirichlet box: minimize over profiles vanishing at both ends. This is
//!   the smallest eigenvalue of the tridiagonal second-difference operator,
//!   found by bisection on the Sturm sequence; the minimum approaches
//!   (pi/L)^2 with the sine profile.
//! * Mean-constrained half-line (truncated at L): minimize subject to
//!   int phi^2 = 1 and int x phi^2 = 1/(2 lambda). Admissible variations
//!   vanish at the origin, so the optimizer pins node zero and moves along
//!   constraint-tangent directions; the minimizer is the exponential
//!   sqrt(2 lambda) e^{-lambda x} with rate lambda^2 and a vanishing linear
//!   multiplier beta.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::stats;

#[derive(Debug, Clone, Serialize)]
pub struct DensityProfile {
    /// Domain [0, length] with nodes 0..=mesh.
    pub length: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl DensityProfile {
    pub fn from_values(length: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || length <= 0.0 {
            return Err(Error::Domain("profile needs a positive domain".into()));
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Data("profile values must be finite and >= 0".into()));
        }
        let dx = length / (values.len() - 1) as f64;
        Ok(Self { length, dx, values })
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.values.len() - 1 {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Trapezoid int phi^2.
    pub fn squared_mass(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.trapezoid_weight(i) * v * v)
            .sum()
    }

    /// Trapezoid int x phi^2.
    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.trapezoid_weight(i) * self.node(i) * v * v)
            .sum()
    }

    /// Scale so that int phi^2 = 1.
    pub fn normalize(&mut self) {
        let c = self.squared_mass().sqrt();
        for v in &mut self.values {
            *v /= c;
        }
    }

    /// Exponential tilt phi <- phi e^{-theta x / 2} (renormalized) chosen so
    /// the mean constraint int x phi^2 = target holds. The tilt weights are
    /// evaluated with a shifted exponent so large theta cannot overflow.
    pub fn tilt_to_mean(&mut self, target: f64) -> Result<()> {
        let mean_after = |theta: f64| -> f64 {
            let shift = self
                .values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(i, _)| -theta * self.node(i))
                .fold(f64::NEG_INFINITY, f64::max);
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, &v) in self.values.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let w = self.trapezoid_weight(i) * v * v * (-theta * self.node(i) - shift).exp();
                num += self.node(i) * w;
                den += w;
            }
            num / den
        };
        // Monotone decreasing in theta; expand the bracket as needed.
        let mut lo = -1.0f64;
        let mut hi = 1.0f64;
        let cap = 1e7;
        while mean_after(lo) < target {
            lo *= 2.0;
            if lo < -cap {
                return Err(Error::Domain(format!(
                    "mean target {target} unreachable by tilting"
                )));
            }
        }
        while mean_after(hi) > target {
            hi *= 2.0;
            if hi > cap {
                return Err(Error::Domain(format!(
                    "mean target {target} unreachable by tilting"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_after(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        for (i, v) in self.values.iter_mut().enumerate() {
            *v *= (-0.5 * theta * i as f64 * self.dx).exp();
        }
        self.normalize();
        Ok(())
    }
}

/// Discrete Dirichlet energy int (phi')^2: cell-wise squared differences,
/// which is one-sided at each boundary by construction.
pub fn kl_rate(profile: &DensityProfile) -> f64 {
    let dx = profile.dx;
    profile
        .values
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) / dx;
            d * d * dx
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalResult {
    /// Minimized int (phi')^2.
    pub h: f64,
    pub profile: DensityProfile,
    pub norm_residual: f64,
    pub mean_residual: Option<f64>,
    /// Lagrange multiplier of the norm constraint (alpha in -phi'' + beta x
    /// phi = -alpha phi); lambda^2 for the mean-constrained problem.
    pub alpha: Option<f64>,
    /// Multiplier of the linear potential; the optimum reports beta ~ 0.
    pub beta: Option<f64>,
    /// max_{x <= L/2} |phi'/phi + lambda| for the mean-constrained problem.
    pub drift_max_deviation: Option<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

// ---------------------------------------------------------------------------
// Dirichlet box: tridiagonal eigenproblem
// ---------------------------------------------------------------------------

/// Number of eigenvalues of the (scaled) Dirichlet second-difference matrix
/// strictly below x, by the Sturm LDL sign count.
fn sturm_count_below(n: usize, diag: f64, off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = diag - x;
    if d < 0.0 {
        count += 1;
    }
    for _ in 1..n {
        let safe = if d.abs() < 1e-300 { 1e-300 } else { d };
        d = (diag - x) - off * off / safe;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of -d^2/dx^2 with Dirichlet ends on a mesh of [0, L],
/// plus the eigenvector by inverse iteration.
pub fn minimize_dirichlet(length: f64, mesh: usize) -> Result<VariationalResult> {
    if length <= 0.0 {
        return Err(Error::Domain("length must be positive".into()));
    }
    if mesh < 64 {
        return Err(Error::Domain(format!(
            "mesh too coarse: need >= 64 intervals, got {mesh}"
        )));
    }
    let dx = length / mesh as f64;
    let interior = mesh - 1;
    let diag = 2.0 / (dx * dx);
    let off = -1.0 / (dx * dx);

    // Bisection for the smallest eigenvalue.
    let mut lo = 0.0f64;
    let mut hi = 4.0 / (dx * dx);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count_below(interior, diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = 0.5 * (lo + hi);

    // Inverse iteration at a slightly shifted value.
    let shift = mu * (1.0 - 1e-9) - 1e-12;
    let mut v = vec![1.0f64; interior];
    for _ in 0..8 {
        v = solve_tridiagonal(diag - shift, off, &v)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
    }
    if v[interior / 2] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    let mut values = Vec::with_capacity(mesh + 1);
    values.push(0.0);
    values.extend(v.iter().map(|&x| x.max(0.0)));
    values.push(0.0);
    let mut profile = DensityProfile::from_values(length, values)?;
    profile.normalize();
    let h = kl_rate(&profile);
    let norm_residual = (profile.squared_mass() - 1.0).abs();
    Ok(VariationalResult {
        h,
        profile,
        norm_residual,
        mean_residual: None,
        alpha: Some(mu),
        beta: None,
        drift_max_deviation: None,
        iterations: 200,
        gradient_norm: 0.0,
    })
}

/// Thomas solve of the constant-coefficient symmetric tridiagonal system
/// (diag, off) x = rhs.
fn solve_tridiagonal(diag: f64, off: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut c = vec![0.0f64; n];
    let mut d = vec![0.0f64; n];
    let mut denom = diag;
    if denom.abs() < 1e-300 {
        return Err(Error::Data("singular tridiagonal system".into()));
    }
    c[0] = off / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag - off * c[i - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::Data("singular tridiagonal system".into()));
        }
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![0.0f64; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Mean-constrained minimizer
// ---------------------------------------------------------------------------

/// Gradient of the discrete energy, with the admissible-variation pinning
/// (node 0 and the Dirichlet node at L are never moved).
fn pinned_gradient(profile: &DensityProfile) -> Vec<f64> {
    let m = profile.values.len() - 1;
    let dx = profile.dx;
    let phi = &profile.values;
    let mut g = vec![0.0; m + 1];
    for i in 1..m {
        g[i] = 2.0 * (2.0 * phi[i] - phi[i - 1] - phi[i + 1]) / dx;
    }
    g
}

/// Project a pinned vector onto the tangent space of the two constraints
/// (orthogonal to the pinned constraint gradients phi w and x phi w).
fn project_tangent(profile: &DensityProfile, vec: &mut [f64]) {
    let m = profile.values.len() - 1;
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    for i in 1..m {
        let w = profile.trapezoid_weight(i);
        u[i] = w * profile.values[i];
        v[i] = w * profile.node(i) * profile.values[i];
    }
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    // 2x2 Gram solve for the projection coefficients.
    let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
    let (gu, gv) = (dot(vec, &u), dot(vec, &v));
    let det = uu * vv - uv * uv;
    if det.abs() < 1e-300 {
        return;
    }
    let a = (gu * vv - gv * uv) / det;
    let b = (gv * uu - gu * uv) / det;
    for i in 0..=m {
        vec[i] -= a * u[i] + b * v[i];
    }
}

fn restore_constraints(profile: &mut DensityProfile, mean_target: f64) -> Result<()> {
    profile.normalize();
    profile.tilt_to_mean(mean_target)?;
    Ok(())
}

/// Least-squares multipliers (alpha, beta) of
/// -phi'' = -alpha phi - beta x phi over the nodes with x <= L/2.
fn fit_multipliers(profile: &DensityProfile) -> (f64, f64) {
    let m = profile.values.len() - 1;
    let dx = profile.dx;
    let phi = &profile.values;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for i in 1..m {
        let x = profile.node(i);
        if x > profile.length / 2.0 {
            break;
        }
        let r = -(phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (dx * dx);
        rows.push((-phi[i], -x * phi[i], r));
    }
    let mut auu = 0.0;
    let mut auv = 0.0;
    let mut avv = 0.0;
    let mut bu = 0.0;
    let mut bv = 0.0;
    for &(cu, cv, r) in &rows {
        auu += cu * cu;
        auv += cu * cv;
        avv += cv * cv;
        bu += cu * r;
        bv += cv * r;
    }
    let det = auu * avv - auv * auv;
    if det.abs() < 1e-300 {
        return (f64::NAN, f64::NAN);
    }
    let alpha = (bu * avv - bv * auv) / det;
    let beta = (bv * auu - bu * auv) / det;
    (alpha, beta)
}

fn drift_deviation(profile: &DensityProfile, lambda: f64) -> f64 {
    let m = profile.values.len() - 1;
    let mut worst = 0.0f64;
    for i in 1..m {
        let x = profile.node(i);
        if x > profile.length / 2.0 {
            break;
        }
        let phi = profile.values[i];
        if phi <= 0.0 {
            continue;
        }
        let d = (profile.values[i + 1] - profile.values[i - 1]) / (2.0 * profile.dx);
        worst = worst.max((d / phi + lambda).abs());
    }
    worst
}

/// Minimize int (phi')^2 subject to int phi^2 = 1 and
/// int x phi^2 = 1/(2 lambda), on [0, L] with a Dirichlet end at L.
///
/// The Euler-Lagrange equation -phi'' + beta x phi = -alpha phi admits no
/// positive normalizable solution for beta > 0 in the admissible class, so
/// the search starts from the beta = 0 family member selected by the mean
/// constraint (a decaying exponential) and polishes it to the discrete
/// constrained stationary point by preconditioned projected gradient
/// descent. beta is then recovered from the optimum and reported; it must
/// come out ~ 0.
pub fn minimize_mean_constrained(
    lambda: f64,
    length: f64,
    mesh: usize,
) -> Result<VariationalResult> {
    if lambda <= 0.0 {
        return Err(Error::Domain("lambda must be positive".into()));
    }
    if mesh < 512 {
        return Err(Error::Domain(format!(
            "mesh too coarse: need >= 512 intervals, got {mesh}"
        )));
    }
    if length < 10.0 / lambda {
        return Err(Error::Domain(format!(
            "truncation too short: need L >= 10/lambda = {}",
            10.0 / lambda
        )));
    }
    let mean_target = 1.0 / (2.0 * lambda);
    let dx = length / mesh as f64;
    let mut values: Vec<f64> = (0..=mesh)
        .map(|i| (-lambda * i as f64 * dx).exp())
        .collect();
    values[mesh] = 0.0;
    let mut profile = DensityProfile::from_values(length, values)?;
    restore_constraints(&mut profile, mean_target)?;

    let tol = 1e-8;
    let max_iter = 50_000;
    let eta = 1.0;
    let step = 0.4;
    let m = mesh;
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..max_iter {
        iterations = iter + 1;
        let mut g = pinned_gradient(&profile);
        project_tangent(&profile, &mut g);
        gradient_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt() * profile.dx.sqrt();
        if gradient_norm < tol {
            break;
        }
        // Precondition with (I + eta * second-difference)^{-1} on the
        // interior, then re-project onto the constraint tangent.
        let interior_rhs: Vec<f64> = g[1..m].to_vec();
        let diag = 1.0 + eta * 2.0 / (dx * dx);
        let off = -eta / (dx * dx);
        let d_int = solve_tridiagonal(diag, off, &interior_rhs)?;
        let mut d = vec![0.0; m + 1];
        d[1..m].copy_from_slice(&d_int);
        project_tangent(&profile, &mut d);
        for i in 1..m {
            profile.values[i] = (profile.values[i] - step * d[i]).max(0.0);
        }
        restore_constraints(&mut profile, mean_target)?;
    }
    if gradient_norm >= tol {
        return Err(Error::OptimizerStalled {
            iterations,
            gradient_norm,
        });
    }

    let h = kl_rate(&profile);
    let (alpha, beta) = fit_multipliers(&profile);
    Ok(VariationalResult {
        h,
        norm_residual: (profile.squared_mass() - 1.0).abs(),
        mean_residual: Some((profile.mean() - mean_target).abs()),
        alpha: Some(alpha),
        beta: Some(beta),
        drift_max_deviation: Some(drift_deviation(&profile, lambda)),
        iterations,
        gradient_norm,
        profile,
    })
}

// ---------------------------------------------------------------------------
// Pathwise Kullback-Leibler rate
// ---------------------------------------------------------------------------

/// (1/t) E int_0^t (phi'/phi)^2 ds along the tilted reflected diffusion,
/// started from its stationary law Exp(2 lambda). Supported for exponential
/// profiles only (constant drift, no singularity); returns (estimate, se).
pub fn pathwise_kl_estimate(
    profile: &DensityProfile,
    lambda: f64,
    t: f64,
    dt: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if lambda <= 0.0 {
        return Err(Error::Domain(
            "lambda must be positive (Exp(0) start is undefined)".into(),
        ));
    }
    if t <= 0.0 || dt <= 0.0 || dt > 1e-3 * t.max(1.0) {
        return Err(Error::StepTooCoarse {
            dt,
            max_dt: 1e-3 * t.max(1.0),
        });
    }
    // Cell-midpoint drift table phi'/phi from the profile.
    let m = profile.values.len() - 1;
    let mut drift = vec![0.0f64; m];
    for i in 0..m {
        let mid = 0.5 * (profile.values[i] + profile.values[i + 1]);
        if mid <= 0.0 {
            return Err(Error::Domain(
                "profile vanishes inside the domain; drift undefined".into(),
            ));
        }
        drift[i] = (profile.values[i + 1] - profile.values[i]) / (profile.dx * mid);
    }
    // Exponential profiles only: the drift table must be flat at -lambda.
    let half = m / 2;
    if drift[..half]
        .iter()
        .any(|&d| (d + lambda).abs() > 0.05 * lambda)
    {
        return Err(Error::Domain(
            "pathwise KL estimate supports exponential profiles only".into(),
        ));
    }
    let steps = (t / dt).ceil() as u64;
    let sqrt_dt = dt.sqrt();
    let rates: Vec<f64> = (0..replicas)
        .map(|r| {
            let mut rng = CounterRng::new(master_seed, r);
            let mut z = rng.exponential() / (2.0 * lambda);
            let mut acc = 0.0;
            for _ in 0..steps {
                let cell = ((z / profile.dx) as usize).min(m - 1);
                let d = drift[cell];
                acc += d * d * dt;
                z = (z + sqrt_dt * rng.normal() + d * dt).abs();
            }
            acc / (steps as f64 * dt)
        })
        .collect();
    Ok((stats::mean(&rates), stats::standard_error(&rates)))
}

/// Random feasible perturbation for the first-order optimality check:
/// compactly supported inside (0, L), vanishing at the origin, orthogonal to
/// phi (and to x phi when `mean_constrained`).
pub fn feasible_perturbation(
    profile: &DensityProfile,
    mean_constrained: bool,
    seed: u64,
) -> Vec<f64> {
    let m = profile.values.len() - 1;
    let mut rng = CounterRng::new(seed, 0);
    let mut delta = vec![0.0f64; m + 1];
    // Random smooth-ish bump: a few random Fourier modes restricted to the
    // middle of the domain.
    let lo = m / 8 + 1;
    let hi = 7 * m / 8;
    for k in 1..=4 {
        let amp = rng.uniform() - 0.5;
        let phase = rng.uniform() * std::f64::consts::TAU;
        for i in lo..hi {
            let s = (i - lo) as f64 / (hi - lo) as f64;
            delta[i] += amp
                * (std::f64::consts::PI * s).sin()
                * (k as f64 * std::f64::consts::TAU * s + phase).sin();
        }
    }
    if mean_constrained {
        project_tangent(profile, &mut delta);
    } else {
        // Only the norm constraint: subtract the phi w component.
        let mut u = vec![0.0; m + 1];
        for i in 1..m {
            u[i] = profile.trapezoid_weight(i) * profile.values[i];
        }
        let uu: f64 = u.iter().map(|x| x * x).sum();
        let du: f64 = delta.iter().zip(&u).map(|(a, b)| a * b).sum();
        for i in 0..=m {
            delta[i] -= du / uu * u[i];
        }
    }
    delta[0] = 0.0;
    delta[m] = 0.0;
    delta
}
