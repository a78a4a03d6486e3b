//! Deterministic, seedable Monte Carlo engine.
//!
//! Replica r of a run draws from the counter stream keyed by
//! (master_seed, r), so ensembles are bit-identical across thread counts and
//! schedulings. Everything downstream (empirical entropy rates, rescaled
//! marginals, the occupation bound, the conditioned-walk sampler) consumes
//! these ensembles.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::defaults;
use crate::error::{Error, Result};
use crate::halfline::{HalfLineModel, StepKernel};
use crate::kernel::MarkovKernel;
use crate::rng::CounterRng;
use crate::stats::{self, Histogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    /// Keep only the final state of each replica.
    Endpoint,
    /// Keep the whole trajectory of each replica.
    FullPath,
    /// Keep, per replica, the number of steps k < steps with X_k <= threshold.
    Occupation { threshold: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSpec {
    pub start: u64,
    pub steps: u64,
    pub replicas: u64,
    pub master_seed: u64,
    pub record: RecordKind,
    /// Total step budget this run may consume.
    pub budget: u64,
}

impl SimulationSpec {
    pub fn new(start: u64, steps: u64, replicas: u64, master_seed: u64, record: RecordKind) -> Self {
        Self {
            start,
            steps,
            replicas,
            master_seed,
            record,
            budget: defaults::default_step_budget(),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn required_steps(&self) -> u64 {
        self.steps.saturating_mul(self.replicas)
    }

    fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Domain("replicas must be >= 1".into()));
        }
        if self.required_steps() > self.budget {
            return Err(Error::BudgetExceeded {
                required: self.required_steps(),
                budget: self.budget,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Records {
    Endpoints(Vec<u64>),
    Paths(Vec<Vec<u64>>),
    Occupation(Vec<u64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    /// Histogram of the per-replica scalar (endpoint / sqrt(steps), or the
    /// occupation fraction) on the standard rescaled grid.
    pub histogram: Histogram,
    /// Mean of the raw per-replica scalar (endpoint or occupation count).
    pub mean: f64,
    pub variance: f64,
    pub rescale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathEnsemble {
    pub spec: SimulationSpec,
    pub records: Records,
    pub summary: EnsembleSummary,
}

impl PathEnsemble {
    pub fn endpoints(&self) -> Vec<u64> {
        match &self.records {
            Records::Endpoints(e) => e.clone(),
            Records::Paths(p) => p.iter().map(|path| *path.last().unwrap()).collect(),
            Records::Occupation(_) => Vec::new(),
        }
    }
}

fn summarize(values: &[f64], rescale: f64) -> EnsembleSummary {
    let d = defaults::Defaults::default();
    let mut histogram = Histogram::new(d.histogram_lo, d.histogram_hi, d.histogram_dx);
    for &v in values {
        histogram.record(v / rescale);
    }
    EnsembleSummary {
        histogram,
        mean: stats::mean(values),
        variance: stats::variance(values),
        rescale,
    }
}

/// Run the half-line walk. Each step samples the exact kernel row (rendered
/// to f64 by the closed forms).
pub fn run(model: &HalfLineModel, spec: &SimulationSpec) -> Result<PathEnsemble> {
    spec.validate()?;
    let kernel = model.step_kernel();
    let records = match spec.record {
        RecordKind::Endpoint => {
            let endpoints: Vec<u64> = (0..spec.replicas)
                .into_par_iter()
                .map(|r| {
                    let mut rng = CounterRng::new(spec.master_seed, r);
                    let mut x = spec.start;
                    for _ in 0..spec.steps {
                        x = kernel.step(x, rng.uniform());
                    }
                    x
                })
                .collect();
            Records::Endpoints(endpoints)
        }
        RecordKind::FullPath => {
            let paths: Vec<Vec<u64>> = (0..spec.replicas)
                .into_par_iter()
                .map(|r| {
                    let mut rng = CounterRng::new(spec.master_seed, r);
                    let mut path = Vec::with_capacity(spec.steps as usize + 1);
                    let mut x = spec.start;
                    path.push(x);
                    for _ in 0..spec.steps {
                        x = kernel.step(x, rng.uniform());
                        path.push(x);
                    }
                    path
                })
                .collect();
            Records::Paths(paths)
        }
        RecordKind::Occupation { threshold } => {
            let counts: Vec<u64> = (0..spec.replicas)
                .into_par_iter()
                .map(|r| {
                    let mut rng = CounterRng::new(spec.master_seed, r);
                    let mut x = spec.start;
                    let mut count = 0u64;
                    for _ in 0..spec.steps {
                        if x <= threshold {
                            count += 1;
                        }
                        x = kernel.step(x, rng.uniform());
                    }
                    count
                })
                .collect();
            Records::Occupation(counts)
        }
    };
    let rescale = if spec.steps > 0 {
        (spec.steps as f64).sqrt()
    } else {
        1.0
    };
    let summary = match &records {
        Records::Endpoints(e) => {
            let vals: Vec<f64> = e.iter().map(|&x| x as f64).collect();
            summarize(&vals, rescale)
        }
        Records::Paths(p) => {
            let vals: Vec<f64> = p.iter().map(|path| *path.last().unwrap() as f64).collect();
            summarize(&vals, rescale)
        }
        Records::Occupation(c) => {
            let vals: Vec<f64> = c.iter().map(|&x| x as f64).collect();
            summarize(&vals, spec.steps.max(1) as f64)
        }
    };
    Ok(PathEnsemble {
        spec: spec.clone(),
        records,
        summary,
    })
}

/// Run a finite-state kernel chain.
pub fn run_kernel(kernel: &MarkovKernel, spec: &SimulationSpec) -> Result<PathEnsemble> {
    spec.validate()?;
    if (spec.start as usize) >= kernel.state_count() {
        return Err(Error::Domain(format!(
            "start state {} outside kernel with {} states",
            spec.start,
            kernel.state_count()
        )));
    }
    let rows: Vec<&[(usize, f64)]> = (0..kernel.state_count()).map(|x| kernel.row(x)).collect();
    let sample = |x: usize, u: f64| -> usize {
        let mut acc = 0.0;
        let row = rows[x];
        for &(t, p) in row {
            acc += p;
            if u < acc {
                return t;
            }
        }
        row.last().map(|&(t, _)| t).unwrap_or(x)
    };
    let want_paths = matches!(spec.record, RecordKind::FullPath);
    let paths: Vec<Vec<u64>> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = CounterRng::new(spec.master_seed, r);
            let mut x = spec.start as usize;
            let mut path = Vec::with_capacity(if want_paths { spec.steps as usize + 1 } else { 1 });
            path.push(x as u64);
            for _ in 0..spec.steps {
                x = sample(x, rng.uniform());
                if want_paths {
                    path.push(x as u64);
                }
            }
            if !want_paths {
                path[0] = x as u64;
            }
            path
        })
        .collect();
    let records = if want_paths {
        Records::Paths(paths)
    } else {
        Records::Endpoints(paths.into_iter().map(|p| p[0]).collect())
    };
    let rescale = if spec.steps > 0 {
        (spec.steps as f64).sqrt()
    } else {
        1.0
    };
    let summary = match &records {
        Records::Endpoints(e) => {
            let vals: Vec<f64> = e.iter().map(|&x| x as f64).collect();
            summarize(&vals, rescale)
        }
        Records::Paths(p) => {
            let vals: Vec<f64> = p.iter().map(|path| *path.last().unwrap() as f64).collect();
            summarize(&vals, rescale)
        }
        Records::Occupation(_) => unreachable!(),
    };
    Ok(PathEnsemble {
        spec: spec.clone(),
        records,
        summary,
    })
}

/// Pathwise entropy-rate estimate: mean over replicas of
/// -(1/n) sum_k ln p(X_k, X_{k+1}).
pub fn empirical_entropy_rate<F: Fn(u64, u64) -> f64>(
    ensemble: &PathEnsemble,
    transition_probability: F,
) -> Result<f64> {
    let paths = match &ensemble.records {
        Records::Paths(p) => p,
        _ => {
            return Err(Error::Data(
                "empirical entropy rate needs full_path records".into(),
            ))
        }
    };
    let mut rates = Vec::with_capacity(paths.len());
    for path in paths {
        let mut acc = 0.0;
        for w in path.windows(2) {
            let p = transition_probability(w[0], w[1]);
            if p <= 0.0 {
                return Err(Error::ZeroProbabilityTransition {
                    from: w[0],
                    to: w[1],
                });
            }
            acc -= p.ln();
        }
        rates.push(acc / (path.len() - 1) as f64);
    }
    Ok(stats::mean(&rates))
}

/// Empirical law of X_{floor(n t)} / sqrt(n).
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalMarginal {
    pub n_scale: u64,
    pub t: f64,
    pub start: u64,
    pub steps: u64,
    pub replicas: u64,
    pub master_seed: u64,
    /// Rescaled endpoints, sorted ascending.
    pub samples: Vec<f64>,
}

impl EmpiricalMarginal {
    pub fn cdf(&self, y: f64) -> f64 {
        stats::ecdf(&self.samples, y)
    }
}

pub fn scaled_marginal(
    model: &HalfLineModel,
    n_scale: u64,
    t: f64,
    start: u64,
    replicas: u64,
    master_seed: u64,
    budget: u64,
) -> Result<EmpiricalMarginal> {
    if t < 0.0 {
        return Err(Error::Domain("t must be >= 0".into()));
    }
    let steps = (n_scale as f64 * t).floor() as u64;
    let spec = SimulationSpec::new(start, steps, replicas, master_seed, RecordKind::Endpoint)
        .with_budget(budget);
    let ensemble = run(model, &spec)?;
    let scale = (n_scale as f64).sqrt();
    let samples = match &ensemble.records {
        Records::Endpoints(e) => {
            stats::sorted_sample(e.iter().map(|&x| x as f64 / scale).collect())?
        }
        _ => unreachable!(),
    };
    Ok(EmpiricalMarginal {
        n_scale,
        t,
        start,
        steps,
        replicas,
        master_seed,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Conditioned simple random walk: rejection sampling of {tau > n}
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ConditionedSample {
    pub start: u64,
    pub horizon: u64,
    pub prefix_len: usize,
    pub accepted: u64,
    pub attempts: u64,
    pub acceptance_rate: f64,
    pub acceptance_se: f64,
    /// sqrt(2) (x+1) / sqrt(pi n), the large-n acceptance probability.
    pub expected_rate_asymptotic: f64,
    /// Prefix (X_1, ..., X_k) counts over accepted paths.
    pub prefix_counts: BTreeMap<Vec<u64>, u64>,
}

/// Sample prefixes of the simple walk conditioned to stay non-negative for
/// `horizon` steps, by rejection. Deterministic: attempts are numbered and
/// processed in blocks, and exactly the first `target_accepted` accepted
/// attempt indices contribute.
pub fn conditioned_srw_sample(
    start: u64,
    horizon: u64,
    prefix_len: usize,
    target_accepted: u64,
    max_attempts: u64,
    master_seed: u64,
) -> Result<ConditionedSample> {
    if prefix_len as u64 > horizon {
        return Err(Error::Domain("prefix length exceeds horizon".into()));
    }
    let block = 1u64 << 14;
    let mut accepted: Vec<(u64, Vec<u64>)> = Vec::new();
    let mut attempts_done = 0u64;
    let mut attempts_used = 0u64;
    'outer: while attempts_done < max_attempts {
        let hi = (attempts_done + block).min(max_attempts);
        let mut batch: Vec<(u64, Vec<u64>)> = (attempts_done..hi)
            .into_par_iter()
            .filter_map(|attempt| {
                let mut rng = CounterRng::new(master_seed, attempt);
                let mut pos = start as i64;
                let mut prefix = Vec::with_capacity(prefix_len);
                for step in 0..horizon {
                    pos += if rng.uniform() < 0.5 { 1 } else { -1 };
                    if pos < 0 {
                        return None;
                    }
                    if (step as usize) < prefix_len {
                        prefix.push(pos as u64);
                    }
                }
                Some((attempt, prefix))
            })
            .collect();
        batch.sort_unstable_by_key(|&(idx, _)| idx);
        attempts_done = hi;
        for (idx, prefix) in batch {
            accepted.push((idx, prefix));
            if accepted.len() as u64 == target_accepted {
                attempts_used = idx + 1;
                break 'outer;
            }
        }
    }
    if (accepted.len() as u64) < target_accepted {
        return Err(Error::AcceptanceStarvation {
            accepted: accepted.len() as u64,
            target: target_accepted,
            attempts: attempts_done,
        });
    }
    let mut prefix_counts = BTreeMap::new();
    for (_, prefix) in &accepted {
        *prefix_counts.entry(prefix.clone()).or_insert(0u64) += 1;
    }
    let rate = target_accepted as f64 / attempts_used as f64;
    let se = (rate * (1.0 - rate) / attempts_used as f64).sqrt();
    Ok(ConditionedSample {
        start,
        horizon,
        prefix_len,
        accepted: target_accepted,
        attempts: attempts_used,
        acceptance_rate: rate,
        acceptance_se: se,
        expected_rate_asymptotic: crate::conditioned::survival_asymptotic(start, horizon),
        prefix_counts,
    })
}

/// Exact law of the k-step prefix of the half-line walk from `start`,
/// by enumeration of the closed-form kernel.
pub fn halfline_prefix_law(
    model: &HalfLineModel,
    start: u64,
    prefix_len: usize,
) -> BTreeMap<Vec<u64>, f64> {
    let mut law: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    let mut frontier: Vec<(u64, Vec<u64>, f64)> = vec![(start, Vec::new(), 1.0)];
    for _ in 0..prefix_len {
        let mut next = Vec::new();
        for (state, prefix, weight) in frontier {
            for (target, p) in model.kernel_row_f64(state) {
                if p <= 0.0 {
                    continue;
                }
                let mut pre = prefix.clone();
                pre.push(target);
                next.push((target, pre, weight * p));
            }
        }
        frontier = next;
    }
    for (_, prefix, weight) in frontier {
        *law.entry(prefix).or_insert(0.0) += weight;
    }
    law
}

// ---------------------------------------------------------------------------
// Occupation bound
// ---------------------------------------------------------------------------

/// C_{v,lambda} = P(U + V/(2 lambda sqrt(v)) + 2 lambda sqrt(v) <= 0) with
/// U standard normal and V standard exponential, via the 1-D integral
/// int_0^inf e^{-s} Phi(-2 lambda sqrt(v) - s/(2 lambda sqrt(v))) ds.
pub fn occupation_constant(v: f64, lambda: f64, tol: f64) -> Result<f64> {
    if v <= 0.0 || lambda <= 0.0 {
        return Err(Error::Domain("need v > 0 and lambda > 0".into()));
    }
    let a = 2.0 * lambda * v.sqrt();
    let integrand = move |s: f64| (-s).exp() * normal_cdf(-a - s / a);
    // e^{-s} caps the tail; 60 covers everything above double rounding.
    stats::adaptive_simpson(&integrand, 0.0, 60.0, tol)
}

/// Monte Carlo estimate of the same probability, for cross-checking the
/// quadrature. Returns (estimate, standard error).
pub fn occupation_constant_mc(v: f64, lambda: f64, samples: u64, master_seed: u64) -> (f64, f64) {
    let a = 2.0 * lambda * v.sqrt();
    let chunk = 1u64 << 16;
    let chunks = samples.div_ceil(chunk);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = CounterRng::new(master_seed, c);
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(samples);
            let mut h = 0u64;
            for _ in lo..hi {
                let u = rng.normal();
                let v_exp = rng.exponential();
                if u + v_exp / a + a <= 0.0 {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    (p, se)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Serialize)]
pub struct OccupationParams {
    pub n: u64,
    pub u: f64,
    pub v: f64,
    pub eta: f64,
    pub lambda: f64,
    pub replicas: u64,
    pub master_seed: u64,
    pub budget: u64,
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OccupationReport {
    pub params: OccupationParams,
    pub gamma: f64,
    /// Mean over replicas of card{k < floor(n u): X_k <= eta sqrt(n)} / n.
    pub empirical_lhs: f64,
    pub lhs_se: f64,
    pub c_v_lambda: f64,
    /// 2 lambda (u + v)(1 - e^{-2 lambda eta}) / C_{v,lambda}.
    pub bound_rhs: f64,
    /// Fraction of bootstrap resamples of the LHS that stay below the bound.
    pub bootstrap_fraction_below: f64,
    pub satisfied: bool,
}

pub fn occupation_check(params: &OccupationParams) -> Result<OccupationReport> {
    let model = HalfLineModel::with_scaling(params.lambda, params.n)?;
    let threshold = (params.eta * (params.n as f64).sqrt()).floor() as u64;
    let steps = (params.n as f64 * params.u).floor() as u64;
    let spec = SimulationSpec::new(
        0,
        steps,
        params.replicas,
        params.master_seed,
        RecordKind::Occupation { threshold },
    )
    .with_budget(params.budget);
    let ensemble = run(&model, &spec)?;
    let counts = match &ensemble.records {
        Records::Occupation(c) => c,
        _ => unreachable!(),
    };
    let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / params.n as f64).collect();
    let lhs = stats::mean(&fractions);
    let lhs_se = stats::standard_error(&fractions);

    let c = occupation_constant(params.v, params.lambda, 1e-12)?;
    let rhs = 2.0 * params.lambda * (params.u + params.v)
        * (1.0 - (-2.0 * params.lambda * params.eta).exp())
        / c;

    let boot = stats::bootstrap_means(&fractions, params.bootstrap_resamples, params.master_seed);
    let below = boot.iter().filter(|&&b| b <= rhs).count() as f64 / boot.len() as f64;

    Ok(OccupationReport {
        params: params.clone(),
        gamma: model.gamma_f64(),
        empirical_lhs: lhs,
        lhs_se,
        c_v_lambda: c,
        bound_rhs: rhs,
        bootstrap_fraction_below: below,
        satisfied: lhs <= rhs,
    })
}

/// The subcritical/critical extension: run a gamma <= 1 chain and the
/// supercritical bound chain from the same uniforms (monotone coupling: a
/// single uniform moves each chain up iff it falls below that chain's
/// up-probability). The gamma <= 1 chain then dominates pathwise, so its
/// occupation of [0, eta sqrt(n)] is bounded by the supercritical one.
#[derive(Debug, Clone, Serialize)]
pub struct CoupledOccupationReport {
    pub gamma: f64,
    pub report: OccupationReport,
    /// Occupation fraction of the dominated (gamma <= 1) chain.
    pub sub_empirical_lhs: f64,
    /// Coupling order violations observed (must be zero).
    pub dominance_violations: u64,
}

pub fn occupation_check_coupled(
    gamma: f64,
    params: &OccupationParams,
) -> Result<CoupledOccupationReport> {
    if gamma > 1.0 {
        return Err(Error::Domain(
            "the coupled check is for gamma <= 1 against a supercritical bound chain".into(),
        ));
    }
    let sub_model = HalfLineModel::from_f64(gamma)?;
    let sup_model = HalfLineModel::with_scaling(params.lambda, params.n)?;
    let sub_kernel = sub_model.step_kernel();
    let sup_kernel = sup_model.step_kernel();
    let threshold = (params.eta * (params.n as f64).sqrt()).floor() as u64;
    let steps = (params.n as f64 * params.u).floor() as u64;
    if steps.saturating_mul(params.replicas) > params.budget {
        return Err(Error::BudgetExceeded {
            required: steps.saturating_mul(params.replicas),
            budget: params.budget,
        });
    }
    let per_replica: Vec<(u64, u64, u64)> = (0..params.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = CounterRng::new(params.master_seed, r);
            let mut x_sub = 0u64;
            let mut x_sup = 0u64;
            let mut count_sub = 0u64;
            let mut count_sup = 0u64;
            let mut violations = 0u64;
            for _ in 0..steps {
                if x_sub <= threshold {
                    count_sub += 1;
                }
                if x_sup <= threshold {
                    count_sup += 1;
                }
                let u = rng.uniform();
                x_sub = sub_kernel.step(x_sub, u);
                x_sup = sup_kernel.step(x_sup, u);
                if x_sub < x_sup {
                    violations += 1;
                }
            }
            (count_sub, count_sup, violations)
        })
        .collect();
    let sub_fracs: Vec<f64> = per_replica
        .iter()
        .map(|&(c, _, _)| c as f64 / params.n as f64)
        .collect();
    let sup_fracs: Vec<f64> = per_replica
        .iter()
        .map(|&(_, c, _)| c as f64 / params.n as f64)
        .collect();
    let violations: u64 = per_replica.iter().map(|&(_, _, v)| v).sum();

    let c = occupation_constant(params.v, params.lambda, 1e-12)?;
    let rhs = 2.0 * params.lambda * (params.u + params.v)
        * (1.0 - (-2.0 * params.lambda * params.eta).exp())
        / c;
    let boot = stats::bootstrap_means(&sup_fracs, params.bootstrap_resamples, params.master_seed);
    let below = boot.iter().filter(|&&b| b <= rhs).count() as f64 / boot.len() as f64;
    let report = OccupationReport {
        params: params.clone(),
        gamma: sup_model.gamma_f64(),
        empirical_lhs: stats::mean(&sup_fracs),
        lhs_se: stats::standard_error(&sup_fracs),
        c_v_lambda: c,
        bound_rhs: rhs,
        bootstrap_fraction_below: below,
        satisfied: stats::mean(&sup_fracs) <= rhs,
    };
    Ok(CoupledOccupationReport {
        gamma,
        report,
        sub_empirical_lhs: stats::mean(&sub_fracs),
        dominance_violations: violations,
    })
}

/// Convenience wrapper used by couplings and tests.
pub fn step_chain(kernel: &StepKernel, x: u64, u: f64) -> u64 {
    kernel.step(x, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_specs_give_bit_identical_ensembles_across_pools() {
        let model = HalfLineModel::from_f64(1.0).unwrap();
        let spec = SimulationSpec::new(0, 500, 64, 99, RecordKind::Endpoint);
        let a = run(&model, &spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run(&model, &spec).unwrap());
        match (&a.records, &b.records) {
            (Records::Endpoints(x), Records::Endpoints(y)) => assert_eq!(x, y),
            _ => panic!("unexpected records"),
        }
        assert_eq!(a.summary.histogram.counts, b.summary.histogram.counts);
    }

    #[test]
    fn zero_steps_gives_constant_paths() {
        let model = HalfLineModel::from_f64(0.5).unwrap();
        let spec = SimulationSpec::new(3, 0, 10, 1, RecordKind::FullPath);
        let ens = run(&model, &spec).unwrap();
        match &ens.records {
            Records::Paths(paths) => {
                for p in paths {
                    assert_eq!(p, &vec![3u64]);
                }
            }
            _ => panic!(),
        }
    }

    #[test]
    fn budget_violation_is_reported_with_requirement() {
        let model = HalfLineModel::from_f64(0.5).unwrap();
        let spec =
            SimulationSpec::new(0, 100, 100, 1, RecordKind::Endpoint).with_budget(100);
        match run(&model, &spec) {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(required, 10_000);
                assert_eq!(budget, 100);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn histogram_mass_sums_to_one() {
        let model = HalfLineModel::from_f64(1.0).unwrap();
        let spec = SimulationSpec::new(0, 1000, 500, 7, RecordKind::Endpoint);
        let ens = run(&model, &spec).unwrap();
        assert!((ens.summary.histogram.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn critical_walk_endpoint_mean_matches_folded_normal() {
        // E|B_1| = sqrt(2/pi) after rescaling by sqrt(steps).
        let model = HalfLineModel::from_f64(1.0).unwrap();
        let spec = SimulationSpec::new(0, 2_500, 40_000, 11, RecordKind::Endpoint)
            .with_budget(200_000_000);
        let ens = run(&model, &spec).unwrap();
        let mean = ens.summary.mean / ens.summary.rescale;
        let expect = (2.0 / std::f64::consts::PI).sqrt();
        let se = (ens.summary.variance.sqrt() / ens.summary.rescale)
            / (spec.replicas as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * se + 0.01,
            "mean {mean} expect {expect} se {se}"
        );
    }

    #[test]
    fn entropy_rate_of_deterministic_kernel_is_zero() {
        // gamma = 0 at the origin always steps up; a 2-state deterministic
        // cycle kernel gives rate exactly zero.
        let rows = vec![vec![(1usize, 1.0)], vec![(0usize, 1.0)]];
        let kernel = MarkovKernel::from_rows(rows, None);
        let spec = SimulationSpec::new(0, 100, 4, 5, RecordKind::FullPath);
        let ens = run_kernel(&kernel, &spec).unwrap();
        let h = empirical_entropy_rate(&ens, |from, to| {
            kernel.probability(from as usize, to as usize)
        })
        .unwrap();
        assert_relative_eq!(h, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn critical_pathwise_entropy_is_exactly_ln_two() {
        // Every gamma = 1 transition has probability 1/2, so the pathwise
        // log-probability is deterministic.
        let model = HalfLineModel::from_f64(1.0).unwrap();
        let spec = SimulationSpec::new(0, 10_000, 8, 3, RecordKind::FullPath);
        let ens = run(&model, &spec).unwrap();
        let h = empirical_entropy_rate(&ens, |from, to| {
            model.transition_probability_f64(from, to)
        })
        .unwrap();
        assert_relative_eq!(h, 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn corrupted_path_reports_zero_probability_transition() {
        let model = HalfLineModel::from_f64(0.0).unwrap();
        let ens = PathEnsemble {
            spec: SimulationSpec::new(0, 2, 1, 0, RecordKind::FullPath),
            records: Records::Paths(vec![vec![0, 0, 1]]),
            summary: summarize(&[1.0], 1.0),
        };
        // gamma = 0 has no self-loop mass at the origin.
        match empirical_entropy_rate(&ens, |from, to| model.transition_probability_f64(from, to)) {
            Err(Error::ZeroProbabilityTransition { from: 0, to: 0 }) => {}
            other => panic!("expected zero-probability error, got {other:?}"),
        }
    }

    #[test]
    fn per_step_frequencies_match_the_kernel_row() {
        // Frequencies over >= 1e6 visits to a fixed state agree with the
        // exact row to 4 standard errors. Needs a recurrent chain, so gamma
        // above one; the origin carries stationary mass 1 - 1/gamma^2 = 3/4.
        let model = HalfLineModel::from_f64(2.0).unwrap();
        let spec = SimulationSpec::new(0, 1_500_000, 1, 17, RecordKind::FullPath)
            .with_budget(4_000_000);
        let ens = run(&model, &spec).unwrap();
        let path = match &ens.records {
            Records::Paths(p) => &p[0],
            _ => unreachable!(),
        };
        let state = 0u64;
        let mut visits = 0u64;
        let mut ups = 0u64;
        for w in path.windows(2) {
            if w[0] == state {
                visits += 1;
                if w[1] == state + 1 {
                    ups += 1;
                }
            }
        }
        assert!(visits > 1_000_000, "visits {visits}");
        let p_up = model.step_kernel().up_probability(state);
        let freq = ups as f64 / visits as f64;
        let se = (p_up * (1.0 - p_up) / visits as f64).sqrt();
        assert!(
            (freq - p_up).abs() < 4.0 * se,
            "freq {freq} vs {p_up} (se {se})"
        );
    }

    #[test]
    fn martingale_mean_away_from_the_boundary() {
        // gamma = 1 is a martingale off the origin. Far from 0 on a short
        // horizon no path touches the boundary, so the empirical mean
        // displacement vanishes to 3 standard errors.
        let model = HalfLineModel::from_f64(1.0).unwrap();
        let start = 200u64;
        let spec = SimulationSpec::new(start, 1000, 20_000, 23, RecordKind::Endpoint)
            .with_budget(20_000_000);
        let ens = run(&model, &spec).unwrap();
        let endpoints = ens.endpoints();
        let displacements: Vec<f64> = endpoints
            .iter()
            .map(|&x| x as f64 - start as f64)
            .collect();
        let mean = stats::mean(&displacements);
        let se = stats::standard_error(&displacements);
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn conditioned_sampler_first_step_from_origin_is_up() {
        let s = conditioned_srw_sample(0, 400, 1, 2_000, 2_000_000, 31).unwrap();
        // From 0, surviving paths must step up first.
        assert_eq!(s.prefix_counts.len(), 1);
        assert!(s.prefix_counts.contains_key(&vec![1u64]));
    }

    #[test]
    fn conditioned_sampler_matches_limit_kernel_from_one() {
        let s = conditioned_srw_sample(1, 10_000, 1, 20_000, 40_000_000, 37).unwrap();
        let ups = s.prefix_counts.get(&vec![2u64]).copied().unwrap_or(0);
        let p = ups as f64 / s.accepted as f64;
        let se = (0.75 * 0.25 / s.accepted as f64).sqrt();
        assert!((p - 0.75).abs() < 3.0 * se + 1e-3, "p {p}");
        // Acceptance rate tracks the survival asymptotic.
        let rel = s.acceptance_rate / s.expected_rate_asymptotic - 1.0;
        assert!(rel.abs() < 0.15, "rate {} vs {}", s.acceptance_rate, s.expected_rate_asymptotic);
    }

    #[test]
    fn starved_sampler_reports_counts() {
        match conditioned_srw_sample(0, 10_000, 1, 1_000, 50, 3) {
            Err(Error::AcceptanceStarvation { target, .. }) => assert_eq!(target, 1_000),
            other => panic!("expected starvation, got {other:?}"),
        }
    }

    #[test]
    fn prefix_law_enumeration_sums_to_one() {
        let model = HalfLineModel::from_f64(0.0).unwrap();
        let law = halfline_prefix_law(&model, 1, 3);
        let total: f64 = law.values().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        // Hand values: paths from 1 with probabilities out of 16.
        assert_relative_eq!(law[&vec![0, 1, 0]], 1.0 / 16.0, epsilon = 1e-12);
        assert_relative_eq!(law[&vec![2, 3, 4]], 5.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn occupation_constant_quadrature_matches_monte_carlo() {
        let c = occupation_constant(1.0, 1.0, 1e-12).unwrap();
        let (mc, se) = occupation_constant_mc(1.0, 1.0, 10_000_000, 41);
        assert!(
            (c - mc).abs() < 3.0 * se,
            "quadrature {c} vs mc {mc} (se {se})"
        );
        assert!(c > 0.0 && c < 1.0);
    }

    #[test]
    fn occupation_lhs_saturates_when_eta_is_huge() {
        // With eta sqrt(n) far above anything the chain reaches, every one of
        // the floor(n u) counted steps is below the threshold.
        let params = OccupationParams {
            n: 400,
            u: 1.0,
            v: 1.0,
            eta: 50.0,
            lambda: 1.0,
            replicas: 200,
            master_seed: 7,
            budget: 10_000_000,
            bootstrap_resamples: 100,
        };
        let report = occupation_check(&params).unwrap();
        assert_relative_eq!(report.empirical_lhs, params.u, epsilon = 1e-12);
    }

    #[test]
    fn coupled_chains_preserve_dominance() {
        let params = OccupationParams {
            n: 2_000,
            u: 1.0,
            v: 1.0,
            eta: 0.25,
            lambda: 1.0,
            replicas: 100,
            master_seed: 13,
            budget: 10_000_000,
            bootstrap_resamples: 100,
        };
        for gamma in [0.0, 0.5, 1.0] {
            let coupled = occupation_check_coupled(gamma, &params).unwrap();
            assert_eq!(coupled.dominance_violations, 0, "gamma {gamma}");
            assert!(coupled.sub_empirical_lhs <= coupled.report.empirical_lhs + 1e-12);
            assert!(coupled.report.satisfied);
        }
    }

    #[test]
    fn scaled_marginal_at_time_zero_is_a_point_mass() {
        let model = HalfLineModel::from_f64(0.0).unwrap();
        let m = scaled_marginal(&model, 10_000, 0.0, 300, 50, 3, 1_000_000).unwrap();
        for &s in &m.samples {
            assert_relative_eq!(s, 3.0, epsilon = 1e-12);
        }
    }
}
