//! Two-particle exclusion walk on the integers.
//!
//! Particles at x < y each hop left or right, never onto the same site. With
//! the gap eigenfunction Psi(g) = g (g = y - x >= 1) the move weights give
//! the maximum-entropy pair kernel at spectral radius 4:
//!
//! ```text
//! p(x -> x-1) = p(y -> y+1) = (g+1)/(4g)     (gap grows)
//! p(x -> x+1) = p(y -> y-1) = (g-1)/(4g)     (gap shrinks; zero at g = 1)
//! ```
//!
//! The eigen identity A Psi = 4 Psi holds at every gap including the
//! boundary, and the gap-minus-one process is exactly the gamma = 0
//! half-line walk, with drift E[dg | g] = 1/g. With jumps restricted to one
//! direction (totally asymmetric variant) the same Psi is the eigenfunction
//! at radius 2.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairState {
    pub x: i64,
    pub y: i64,
}

impl PairState {
    pub fn new(x: i64, y: i64) -> Result<Self> {
        if x >= y {
            return Err(Error::Domain(format!(
                "exclusion requires x < y, got ({x}, {y})"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn gap(&self) -> u64 {
        (self.y - self.x) as u64
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.x + self.y) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMove {
    LeftDown,
    LeftUp,
    RightDown,
    RightUp,
}

impl PairMove {
    pub fn gap_delta(&self) -> i64 {
        match self {
            PairMove::LeftDown | PairMove::RightUp => 1,
            PairMove::LeftUp | PairMove::RightDown => -1,
        }
    }

    fn apply(&self, s: PairState) -> PairState {
        match self {
            PairMove::LeftDown => PairState { x: s.x - 1, ..s },
            PairMove::LeftUp => PairState { x: s.x + 1, ..s },
            PairMove::RightDown => PairState { y: s.y - 1, ..s },
            PairMove::RightUp => PairState { y: s.y + 1, ..s },
        }
    }
}

/// One row of the pair kernel: the four move probabilities at gap g, exact.
/// JSON renders the probabilities as exact `p/q` strings.
#[derive(Debug, Clone, Serialize)]
pub struct PairKernelRow {
    pub gap: u64,
    pub asymmetric: bool,
    #[serde(serialize_with = "serialize_moves")]
    pub moves: Vec<(PairMove, BigRational)>,
}

fn serialize_moves<S: serde::Serializer>(
    moves: &[(PairMove, BigRational)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rendered: Vec<(PairMove, String)> = moves
        .iter()
        .map(|(m, p)| (*m, format!("{}/{}", p.numer(), p.denom())))
        .collect();
    serde::Serialize::serialize(&rendered, s)
}

impl PairKernelRow {
    pub fn probability_f64(&self, mv: PairMove) -> f64 {
        self.moves
            .iter()
            .find(|(m, _)| *m == mv)
            .map(|(_, p)| num::ToPrimitive::to_f64(p).unwrap())
            .unwrap_or(0.0)
    }
}

/// Exact move distribution at gap g >= 1. The symmetric kernel divides by
/// rho = 4, the totally asymmetric one (right moves only) by rho = 2.
pub fn pair_kernel(gap: u64, asymmetric: bool) -> Result<PairKernelRow> {
    if gap == 0 {
        return Err(Error::Domain("exclusion gap must be >= 1".into()));
    }
    let g = BigInt::from(gap);
    let up = BigRational::new(&g + BigInt::one(), BigInt::from(4u32) * &g);
    let down = BigRational::new(&g - BigInt::one(), BigInt::from(4u32) * &g);
    let moves = if asymmetric {
        // Only x -> x+1 (gap shrinks) and y -> y+1 (gap grows), over rho = 2.
        let up2 = BigRational::new(&g + BigInt::one(), BigInt::from(2u32) * &g);
        let down2 = BigRational::new(&g - BigInt::one(), BigInt::from(2u32) * &g);
        vec![(PairMove::RightUp, up2), (PairMove::LeftUp, down2)]
    } else {
        vec![
            (PairMove::LeftDown, up.clone()),
            (PairMove::RightUp, up),
            (PairMove::LeftUp, down.clone()),
            (PairMove::RightDown, down),
        ]
    };
    Ok(PairKernelRow {
        gap,
        asymmetric,
        moves,
    })
}

/// Residual of the eigen identity A Psi = rho Psi at gap g with Psi(g) = g,
/// in exact integer arithmetic (0 when it holds).
pub fn eigen_identity_residual(gap: u64, asymmetric: bool) -> i128 {
    let g = gap as i128;
    let psi = |h: i128| h.max(0);
    if asymmetric {
        // Neighbors g+1 (y up) and g-1 (x up): A Psi = Psi(g+1) + Psi(g-1).
        psi(g + 1) + psi(g - 1) - 2 * g
    } else {
        2 * psi(g + 1) + 2 * psi(g - 1) - 4 * g
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairEnsemble {
    pub start: PairState,
    pub steps: u64,
    pub replicas: u64,
    pub master_seed: u64,
    pub asymmetric: bool,
    /// Final gap per replica.
    pub gap_endpoints: Vec<u64>,
    /// Final center of mass per replica.
    pub center_endpoints: Vec<f64>,
    /// (gap, up-moves, visits) tallies for drift regression, summed over
    /// replicas for gaps up to the tally cap.
    pub gap_tallies: Vec<(u64, u64)>,
}

const TALLY_CAP: usize = 256;

/// Simulate the pair walk. The exclusion constraint x < y is asserted on
/// every step.
pub fn simulate_pair(
    start: PairState,
    steps: u64,
    replicas: u64,
    master_seed: u64,
    asymmetric: bool,
    budget: u64,
) -> Result<PairEnsemble> {
    if steps.saturating_mul(replicas) > budget {
        return Err(Error::BudgetExceeded {
            required: steps.saturating_mul(replicas),
            budget,
        });
    }
    let results: Vec<(u64, f64, Vec<(u64, u64)>)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = CounterRng::new(master_seed, r);
            let mut state = start;
            let mut tallies = vec![(0u64, 0u64); TALLY_CAP];
            for _ in 0..steps {
                let g = state.gap();
                let gf = g as f64;
                let u = rng.uniform();
                let mv = if asymmetric {
                    // up (gap grows, y moves) with probability (g+1)/(2g)
                    if u < (gf + 1.0) / (2.0 * gf) {
                        PairMove::RightUp
                    } else {
                        PairMove::LeftUp
                    }
                } else {
                    let up_each = (gf + 1.0) / (4.0 * gf);
                    let down_each = (gf - 1.0) / (4.0 * gf);
                    if u < up_each {
                        PairMove::LeftDown
                    } else if u < 2.0 * up_each {
                        PairMove::RightUp
                    } else if u < 2.0 * up_each + down_each {
                        PairMove::LeftUp
                    } else {
                        PairMove::RightDown
                    }
                };
                if (g as usize) < TALLY_CAP {
                    tallies[g as usize].1 += 1;
                    if mv.gap_delta() == 1 {
                        tallies[g as usize].0 += 1;
                    }
                }
                state = mv.apply(state);
                assert!(state.x < state.y, "exclusion violated at ({}, {})", state.x, state.y);
            }
            (state.gap(), state.center(), tallies)
        })
        .collect();
    let mut gap_tallies = vec![(0u64, 0u64); TALLY_CAP];
    for (_, _, t) in &results {
        for (acc, item) in gap_tallies.iter_mut().zip(t) {
            acc.0 += item.0;
            acc.1 += item.1;
        }
    }
    Ok(PairEnsemble {
        start,
        steps,
        replicas,
        master_seed,
        asymmetric,
        gap_endpoints: results.iter().map(|&(g, _, _)| g).collect(),
        center_endpoints: results.iter().map(|&(_, c, _)| c).collect(),
        gap_tallies,
    })
}

/// Regression (through the origin) of the empirical drift E[dg | g] on 1/g
/// over a gap window. Returns (slope, sample count); the exact kernel gives
/// slope 1.
pub fn drift_slope_on_inverse_gap(
    ensemble: &PairEnsemble,
    g_lo: u64,
    g_hi: u64,
) -> Result<(f64, u64)> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut total_visits = 0u64;
    for g in g_lo..=g_hi {
        let (ups, visits) = ensemble.gap_tallies[g as usize];
        if visits == 0 {
            continue;
        }
        total_visits += visits;
        let p_up = ups as f64 / visits as f64;
        let drift = 2.0 * p_up - 1.0;
        let inv = 1.0 / g as f64;
        // Weight by visit counts so well-sampled gaps dominate.
        num += visits as f64 * drift * inv;
        den += visits as f64 * inv * inv;
    }
    if den == 0.0 {
        return Err(Error::Data("no visits in the requested gap window".into()));
    }
    Ok((num / den, total_visits))
}

/// Exact law of the k-step gap path (as a sequence of gaps) by enumeration
/// of all move sequences.
pub fn gap_path_law(start_gap: u64, k: usize, asymmetric: bool) -> BTreeMap<Vec<u64>, BigRational> {
    let mut law: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
    let mut frontier: Vec<(u64, Vec<u64>, BigRational)> =
        vec![(start_gap, Vec::new(), BigRational::one())];
    for _ in 0..k {
        let mut next = Vec::new();
        for (gap, path, weight) in frontier {
            let row = pair_kernel(gap, asymmetric).unwrap();
            for (mv, p) in &row.moves {
                if p.is_zero() {
                    continue;
                }
                let new_gap = (gap as i64 + mv.gap_delta()) as u64;
                let mut new_path = path.clone();
                new_path.push(new_gap);
                next.push((new_gap, new_path, &weight * p));
            }
        }
        frontier = next;
    }
    for (_, path, weight) in frontier {
        *law.entry(path).or_insert_with(BigRational::zero) += weight;
    }
    law
}
