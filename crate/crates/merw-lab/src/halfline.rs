//! The origin-perturbed half-line walk in closed form.
//!
//! State space {0, 1, 2, ...} with nearest-neighbour unit weights and a
//! self-loop of weight gamma at the origin. Everything here is exact: gamma
//! is kept as a big rational and the spectral radius, eigenfunction, kernel
//! rows and invariant measure come from the closed forms
//!
//! ```text
//! rho = 2                  for gamma <= 1
//! rho = gamma + 1/gamma    for gamma >= 1
//! ```
//!
//! Floating point enters only through the `*_f64` accessors and the fast
//! stepping kernel used by the Monte Carlo engine.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone)]
pub struct HalfLineModel {
    gamma: BigRational,
    rho: BigRational,
    regime: Regime,
    /// Set when the model was built as gamma = 1 + lambda/sqrt(n).
    lambda_scaling: Option<f64>,
    n_scale: Option<u64>,
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl HalfLineModel {
    pub fn new(gamma: BigRational) -> Result<Self> {
        if gamma.is_negative() {
            return Err(Error::Domain(format!("gamma must be >= 0, got {gamma}")));
        }
        let one = BigRational::one();
        let two = big(2);
        let (regime, rho) = if gamma < one {
            (Regime::Subcritical, two)
        } else if gamma == one {
            (Regime::Critical, two)
        } else {
            (Regime::Supercritical, &gamma + gamma.recip())
        };
        Ok(Self {
            gamma,
            rho,
            regime,
            lambda_scaling: None,
            n_scale: None,
        })
    }

    pub fn from_f64(gamma: f64) -> Result<Self> {
        let g = BigRational::from_float(gamma)
            .ok_or_else(|| Error::Domain(format!("gamma must be finite, got {gamma}")))?;
        Self::new(g)
    }

    /// Exact rational gamma = num/den.
    pub fn from_rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("gamma denominator is zero".into()));
        }
        Self::new(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Supercritical scaling gamma = 1 + lambda/sqrt(n).
    pub fn with_scaling(lambda: f64, n: u64) -> Result<Self> {
        if lambda <= 0.0 || n == 0 {
            return Err(Error::Domain(
                "scaling requires lambda > 0 and n >= 1".into(),
            ));
        }
        let gamma = 1.0 + lambda / (n as f64).sqrt();
        let mut model = Self::from_f64(gamma)?;
        model.lambda_scaling = Some(lambda);
        model.n_scale = Some(n);
        Ok(model)
    }

    pub fn gamma(&self) -> &BigRational {
        &self.gamma
    }

    pub fn gamma_f64(&self) -> f64 {
        ratio_to_f64(&self.gamma)
    }

    pub fn rho(&self) -> &BigRational {
        &self.rho
    }

    pub fn rho_f64(&self) -> f64 {
        ratio_to_f64(&self.rho)
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn lambda_scaling(&self) -> Option<f64> {
        self.lambda_scaling
    }

    pub fn n_scale(&self) -> Option<u64> {
        self.n_scale
    }

    /// Positive eigenfunction normalized to psi_0 = 1:
    /// gamma < 1: 1 + (1-gamma) n; gamma = 1: 1; gamma > 1: gamma^(-n).
    pub fn eigenfunction(&self, n: u64) -> BigRational {
        match self.regime {
            Regime::Subcritical | Regime::Critical => {
                let slope = BigRational::one() - &self.gamma;
                BigRational::one() + slope * BigRational::from_integer(BigInt::from(n))
            }
            Regime::Supercritical => self.gamma.recip().pow(n as i32),
        }
    }

    pub fn eigenfunction_f64(&self, n: u64) -> f64 {
        match self.regime {
            Regime::Subcritical | Regime::Critical => {
                1.0 + (1.0 - self.gamma_f64()) * n as f64
            }
            Regime::Supercritical => (1.0 / self.gamma_f64()).powi(n as i32),
        }
    }

    /// Exact transition row from state n, as (target, probability) pairs in
    /// ascending target order. Rows sum to one exactly.
    pub fn kernel_row(&self, n: u64) -> Vec<(u64, BigRational)> {
        let one = BigRational::one();
        let two = big(2);
        match self.regime {
            Regime::Subcritical | Regime::Critical => {
                let g = &self.gamma;
                if n == 0 {
                    let stay = g / &two;
                    let up = &one - &stay;
                    vec![(0, stay), (1, up)]
                } else {
                    let slope = &one - g;
                    let nn = BigRational::from_integer(BigInt::from(n));
                    let denom = &one + &slope * &nn;
                    let down = (g + &slope * &nn) / (&two * &denom);
                    let up = ((&two - g) + &slope * &nn) / (&two * &denom);
                    vec![(n - 1, down), (n + 1, up)]
                }
            }
            Regime::Supercritical => {
                let g2 = &self.gamma * &self.gamma;
                let denom = &one + &g2;
                let up = &one / &denom;
                let heavy = &g2 / &denom;
                if n == 0 {
                    vec![(0, heavy), (1, up)]
                } else {
                    vec![(n - 1, heavy), (n + 1, up)]
                }
            }
        }
    }

    pub fn kernel_row_f64(&self, n: u64) -> Vec<(u64, f64)> {
        self.kernel_row(n)
            .into_iter()
            .map(|(t, p)| (t, ratio_to_f64(&p)))
            .collect()
    }

    /// Invariant measure: (1 + (1-gamma) n)^2 for gamma <= 1 (infinite mass,
    /// unnormalized), geometric gamma^(-2n) (1 - gamma^(-2)) for gamma > 1.
    pub fn invariant_measure(&self, n: u64) -> BigRational {
        match self.regime {
            Regime::Subcritical | Regime::Critical => {
                let psi = self.eigenfunction(n);
                &psi * &psi
            }
            Regime::Supercritical => {
                let q = self.gamma.recip().pow(2);
                q.pow(n as i32) * (BigRational::one() - q)
            }
        }
    }

    pub fn invariant_measure_f64(&self, n: u64) -> f64 {
        ratio_to_f64(&self.invariant_measure(n))
    }

    /// Whether the invariant measure is a probability distribution.
    pub fn invariant_is_probability(&self) -> bool {
        self.regime == Regime::Supercritical
    }

    /// One-step mean displacement d(x) = E[X_{k+1} - X_k | X_k = x].
    pub fn drift_f64(&self, x: u64) -> f64 {
        let row = self.kernel_row_f64(x);
        row.iter()
            .map(|&(t, p)| (t as f64 - x as f64) * p)
            .sum()
    }

    /// p(from, to) in double precision, zero off the support. Allocation-free
    /// so the Monte Carlo layer can call it per step.
    pub fn transition_probability_f64(&self, from: u64, to: u64) -> f64 {
        let p_up = self.step_kernel().up_probability(from);
        if to == from + 1 {
            p_up
        } else if (from > 0 && to + 1 == from) || (from == 0 && to == 0) {
            1.0 - p_up
        } else {
            0.0
        }
    }

    /// Fast stepping kernel for the Monte Carlo engine.
    pub fn step_kernel(&self) -> StepKernel {
        match self.regime {
            Regime::Subcritical | Regime::Critical => StepKernel {
                kind: StepKind::AtMostCritical {
                    gamma: self.gamma_f64(),
                },
            },
            Regime::Supercritical => {
                let g = self.gamma_f64();
                StepKernel {
                    kind: StepKind::Supercritical {
                        p_up: 1.0 / (1.0 + g * g),
                    },
                }
            }
        }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    num::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// Closed-form transition sampling in double precision. A single uniform
/// decides each step, with "move up" occupying the interval [0, p_up); the
/// structural ordering is shared by all gammas, which is what the monotone
/// coupling in the occupation check relies on.
#[derive(Debug, Clone, Copy)]
pub struct StepKernel {
    kind: StepKind,
}

#[derive(Debug, Clone, Copy)]
enum StepKind {
    AtMostCritical { gamma: f64 },
    Supercritical { p_up: f64 },
}

impl StepKernel {
    #[inline]
    pub fn up_probability(&self, x: u64) -> f64 {
        match self.kind {
            StepKind::AtMostCritical { gamma } => {
                if x == 0 {
                    1.0 - 0.5 * gamma
                } else {
                    let s = (1.0 - gamma) * x as f64;
                    0.5 * (2.0 - gamma + s) / (1.0 + s)
                }
            }
            StepKind::Supercritical { p_up } => p_up,
        }
    }

    /// Step from x given a uniform u in [0, 1). Mass not going up goes down,
    /// or stays at the origin.
    #[inline]
    pub fn step(&self, x: u64, u: f64) -> u64 {
        if u < self.up_probability(x) {
            x + 1
        } else {
            x.saturating_sub(1)
        }
    }
}

/// JSON model description: either a plain gamma or the supercritical scaling
/// (lambda, n).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_scaling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_scale: Option<u64>,
}

impl ModelSpecJson {
    pub fn build(&self) -> Result<HalfLineModel> {
        match (self.gamma, self.lambda_scaling, self.n_scale) {
            (Some(g), None, None) => HalfLineModel::from_f64(g),
            (None, Some(l), Some(n)) => HalfLineModel::with_scaling(l, n),
            _ => Err(Error::Parse(
                "model spec needs either gamma or both lambda_scaling and n_scale".into(),
            )),
        }
    }
}

// ---------------------------------------------------------------------------
// Discrete generators on the rescaled grids
// ---------------------------------------------------------------------------

/// A test function with two derivatives, for generator comparisons.
pub trait SmoothFn {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
}

/// Compactly supported polynomial window ((x-a)(b-x))^4 / c on [a, b],
/// C^3 at the edges with bounded fourth derivative.
#[derive(Debug, Clone, Copy)]
pub struct PolyBump {
    pub a: f64,
    pub b: f64,
    scale: f64,
}

impl PolyBump {
    pub fn new(a: f64, b: f64) -> Self {
        let half = (b - a) / 2.0;
        Self {
            a,
            b,
            scale: (half * half).powi(4),
        }
    }
}

impl SmoothFn for PolyBump {
    fn value(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        let u = (x - self.a) * (self.b - x);
        u.powi(4) / self.scale
    }

    fn d1(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        let u = (x - self.a) * (self.b - x);
        let du = self.a + self.b - 2.0 * x;
        4.0 * u.powi(3) * du / self.scale
    }

    fn d2(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        let u = (x - self.a) * (self.b - x);
        let du = self.a + self.b - 2.0 * x;
        (12.0 * u.powi(2) * du * du - 8.0 * u.powi(3)) / self.scale
    }
}

pub fn squared_grid_point(n: u64, k: u64) -> f64 {
    (k as f64) * (k as f64) / n as f64
}

pub fn linear_grid_point(n: u64, k: u64) -> f64 {
    k as f64 / (n as f64).sqrt()
}

fn grid_index(model: &HalfLineModel, n: u64, x: f64) -> Result<u64> {
    let (k, rebuilt) = match model.regime() {
        Regime::Subcritical => {
            let k = (x * n as f64).sqrt().round() as u64;
            (k, squared_grid_point(n, k))
        }
        Regime::Critical | Regime::Supercritical => {
            let k = (x * (n as f64).sqrt()).round() as u64;
            (k, linear_grid_point(n, k))
        }
    };
    if (rebuilt - x).abs() > 1e-9 * x.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "x = {x} is not on the rescaled grid at scale n = {n}"
        )));
    }
    Ok(k)
}

/// Discrete generator L_n f(x) = n (P - I)(f o rescale) evaluated at the grid
/// point x. For gamma < 1 the grid is {k^2/n} (squared process); for the
/// critical and scaled supercritical models it is {k/sqrt(n)}.
pub fn discrete_generator<F: SmoothFn + ?Sized>(
    model: &HalfLineModel,
    f: &F,
    n: u64,
    x: f64,
) -> Result<f64> {
    let k = grid_index(model, n, x)?;
    let embed: Box<dyn Fn(u64) -> f64> = match model.regime() {
        Regime::Subcritical => Box::new(move |s: u64| squared_grid_point(n, s)),
        _ => Box::new(move |s: u64| linear_grid_point(n, s)),
    };
    let here = f.value(embed(k));
    let mut acc = 0.0;
    for (target, p) in model.kernel_row_f64(k) {
        acc += p * (f.value(embed(target)) - here);
    }
    Ok(n as f64 * acc)
}

/// The limit generator matching `discrete_generator` on the same grid:
/// 2x f'' + 3 f' for the squared subcritical process, f''/2 for the critical
/// walk, f''/2 - lambda f' for the scaled supercritical walk.
pub fn limit_generator<F: SmoothFn + ?Sized>(
    model: &HalfLineModel,
    f: &F,
    x: f64,
) -> Result<f64> {
    match model.regime() {
        Regime::Subcritical => Ok(2.0 * x * f.d2(x) + 3.0 * f.d1(x)),
        Regime::Critical => Ok(0.5 * f.d2(x)),
        Regime::Supercritical => {
            let lambda = model.lambda_scaling().ok_or_else(|| {
                Error::Domain(
                    "supercritical limit generator requires the lambda/sqrt(n) scaling".into(),
                )
            })?;
            Ok(0.5 * f.d2(x) - lambda * f.d1(x))
        }
    }
}
