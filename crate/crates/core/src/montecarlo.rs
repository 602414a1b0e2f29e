//! Parallel Monte Carlo estimation of `u(t0, x0) = E[φ(X) Y + Z]`.
//!
//! Trajectories are split into fixed-size blocks in index order and fanned out
//! over a rayon pool. Each trajectory owns the stream `(seed, index)`, and all
//! reductions run sequentially in index order afterwards, so every statistic
//! is bitwise independent of the worker count.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::problem::Problem;
use crate::real::{compensated_sum, Real};
use crate::rng::{trajectory_stream, Rademacher};
use crate::schemes::{projected_trajectory, sticky_trajectory, FinalStepCorrection, SchemeError};

const BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    StickyEuler,
    ProjectedEuler,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::StickyEuler => "sticky-euler",
            Scheme::ProjectedEuler => "projected-euler",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sticky-euler" => Ok(Scheme::StickyEuler),
            "projected-euler" => Ok(Scheme::ProjectedEuler),
            other => Err(format!("unknown scheme `{other}` (expected sticky-euler|projected-euler)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("trajectory {index} failed: {source}")]
    Trajectory { index: u64, source: SchemeError },
    #[error("could not build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig<T, const D: usize> {
    pub scheme: Scheme,
    pub correction: FinalStepCorrection,
    pub t0: T,
    pub x0: [T; D],
    pub h: T,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// Halfwidth multiplier `k` in `k √(D_M / M)`.
    pub multiplier: T,
}

impl<T: Real, const D: usize> EstimateConfig<T, D> {
    pub fn new(scheme: Scheme, t0: T, x0: [T; D], h: T, samples: u64) -> Self {
        Self {
            scheme,
            correction: FinalStepCorrection::default(),
            t0,
            x0,
            h,
            samples,
            seed: 0,
            workers: 1,
            multiplier: T::lit(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    /// Unbiased sample variance `D_M`.
    pub variance: T,
    pub halfwidth: T,
    pub samples: u64,
    pub avg_hits: f64,
    pub avg_steps: f64,
    pub scheme: Scheme,
    pub correction: FinalStepCorrection,
    pub h: T,
    pub seed: u64,
}

pub fn confidence_halfwidth<T: Real>(variance: T, samples: u64, multiplier: T) -> T {
    let m = T::from_u64(samples.max(1)).expect("sample count representable");
    multiplier * (variance / m).sqrt()
}

/// Payoffs and counters of a contiguous index range.
struct Block<T> {
    payoffs: Vec<T>,
    hits: u64,
    steps: u64,
}

fn run_block<T: Real, const D: usize>(
    problem: &Problem<T, D>,
    config: &EstimateConfig<T, D>,
    range: std::ops::Range<u64>,
) -> Result<Block<T>, EstimateError> {
    let mut block = Block { payoffs: Vec::with_capacity((range.end - range.start) as usize), hits: 0, steps: 0 };
    for index in range {
        let mut noise = Rademacher::new(trajectory_stream(config.seed, index));
        let result = match config.scheme {
            Scheme::StickyEuler => {
                sticky_trajectory(problem, config.t0, config.x0, config.h, config.correction, &mut noise)
            }
            Scheme::ProjectedEuler => projected_trajectory(problem, config.t0, config.x0, config.h, &mut noise),
        }
        .map_err(|source| EstimateError::Trajectory { index, source })?;
        block.payoffs.push(result.payoff(problem));
        block.hits += result.hits;
        block.steps += result.steps;
    }
    Ok(block)
}

pub fn estimate<T: Real, const D: usize>(
    problem: &Problem<T, D>,
    config: &EstimateConfig<T, D>,
) -> Result<Estimate<T>, EstimateError> {
    if config.samples == 0 {
        return Err(EstimateError::NoSamples);
    }
    if config.workers == 0 {
        return Err(EstimateError::NoWorkers);
    }
    let m = config.samples;
    let ranges: Vec<_> = (0..m)
        .step_by(BLOCK)
        .map(|start| start..(start + BLOCK as u64).min(m))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build()?;
    let blocks: Vec<Result<Block<T>, EstimateError>> =
        pool.install(|| ranges.into_par_iter().map(|r| run_block(problem, config, r)).collect());

    let mut payoffs = Vec::with_capacity(m as usize);
    let (mut hits, mut steps) = (0u64, 0u64);
    for block in blocks {
        // Blocks are in index order, so the first error is the lowest index.
        let block = block?;
        payoffs.extend_from_slice(&block.payoffs);
        hits += block.hits;
        steps += block.steps;
    }

    let count = T::from_u64(m).expect("sample count representable");
    let mean = compensated_sum(payoffs.iter().copied()) / count;
    let variance = if m > 1 {
        let ss = compensated_sum(payoffs.iter().map(|&x| (x - mean) * (x - mean)));
        ss / (count - T::one())
    } else {
        T::zero()
    };

    Ok(Estimate {
        mean,
        variance,
        halfwidth: confidence_halfwidth(variance, m, config.multiplier),
        samples: m,
        avg_hits: hits as f64 / m as f64,
        avg_steps: steps as f64 / m as f64,
        scheme: config.scheme,
        correction: config.correction,
        h: config.h,
        seed: config.seed,
    })
}
