//! Per-trajectory chain dynamics.
//!
//! Both schemes start from `(t0, x, 1, 0)` and evolve `(t, X, Y, Z)` with
//! weak Euler steps driven by Rademacher increments. They differ at the
//! boundary:
//!
//! * **Sticky Euler** reflects an exterior auxiliary point `X'` symmetrically
//!   through its projection `X^π` (`X = X' + 2rν`) and charges `2rμ(X^π)` of
//!   time spent stuck on the boundary. The time charge can overshoot `T`, so
//!   the final step has its own correction (cases IIIb and IV).
//! * **Projected Euler** moves an exterior point onto its projection and
//!   charges `rμ` of time; it may stop past `T`.
//!
//! ```text
//!            X' ∈ Ḡ        X' ∉ Ḡ
//! t' <  T    I: accept     III: t'' = t' + 2rμ;  t'' < T → IIIa (reflect)
//!                                                t'' ≥ T → IIIb (stop at T)
//! t' ≥  T    II: stop      IV: stop at T after reflecting
//! ```

use thiserror::Error;

use crate::geometry::{GeometryError, Projection};
use crate::problem::Problem;
use crate::real::{axpy, Real};
use crate::rng::Rademacher;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("boundary projection failed: {0}")]
    Projection(#[from] GeometryError),
    #[error("trajectory exceeded its step budget of {budget} steps")]
    Runaway { budget: u64 },
    #[error("invalid step size {0}: expected 0 < h < 1")]
    InvalidStep(f64),
    #[error("starting point is not interior to the domain")]
    StartOutsideDomain,
    #[error("start time {t0} is not before the horizon {horizon}")]
    StartAfterHorizon { t0: f64, horizon: f64 },
}

/// Which form of the case IIIb update (sticking interval cut short by `T`).
///
/// `Listing` is the algorithm's statement: `Y` gains `2rγ − 2pμc`, `Z` gains
/// `−2μ(r−p)𝒜φ − 2pμg − 2rψ`. `Proof` is the form used in the one-step
/// error expansion: `Y` gains `2rγ + 2pμc`, `Z` gains
/// `−2μ(r−p)𝒜φ + 2pμ(cφ + g) − 2rψ`. `Consistent` keeps the proof's `Y`
/// update and drops the `2pμcφ` term from `Z`, which is the combination whose
/// first-order Taylor terms cancel against the boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalStepCorrection {
    Listing,
    Proof,
    #[default]
    Consistent,
}

impl FinalStepCorrection {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Listing => "listing",
            Self::Proof => "proof",
            Self::Consistent => "consistent",
        }
    }
}

impl std::str::FromStr for FinalStepCorrection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "listing" => Ok(Self::Listing),
            "proof" => Ok(Self::Proof),
            "consistent" => Ok(Self::Consistent),
            other => Err(format!("unknown final-step correction `{other}` (expected listing|proof|consistent)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainState<T, const D: usize> {
    pub time: T,
    pub position: [T; D],
    pub weight: T,
    pub accumulator: T,
    pub hits: u64,
    pub steps: u64,
}

impl<T: Real, const D: usize> ChainState<T, D> {
    pub fn start(time: T, position: [T; D]) -> Self {
        Self { time, position, weight: T::one(), accumulator: T::zero(), hits: 0, steps: 0 }
    }

    fn finish(self, time: T, position: [T; D], weight: T, accumulator: T) -> TrajectoryResult<T, D> {
        TrajectoryResult { time, position, weight, accumulator, steps: self.steps + 1, hits: self.hits }
    }
}

/// Auxiliary Euler step `(t', X', Y', Z')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxState<T, const D: usize> {
    pub time: T,
    pub position: [T; D],
    pub weight: T,
    pub accumulator: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryResult<T, const D: usize> {
    pub time: T,
    pub position: [T; D],
    pub weight: T,
    pub accumulator: T,
    pub steps: u64,
    pub hits: u64,
}

impl<T: Real, const D: usize> TrajectoryResult<T, D> {
    /// `φ(X) Y + Z`; φ is evaluated by formula even slightly outside `Ḡ`.
    pub fn payoff(&self, problem: &Problem<T, D>) -> T {
        payoff(self, problem)
    }
}

pub fn payoff<T: Real, const D: usize>(result: &TrajectoryResult<T, D>, problem: &Problem<T, D>) -> T {
    (problem.terminal)(&result.position) * result.weight + result.accumulator
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StickyCase {
    Interior,
    Terminal,
    Reflect,
    StickyTerminal,
    ReflectTerminal,
}

/// Boundary data of a sticky step whose auxiliary point left `Ḡ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEvent<T, const D: usize> {
    pub projection: Projection<T, D>,
    /// `X' + 2rν`.
    pub reflected: [T; D],
    /// `t' + 2rμ(X^π)`, only computed when `t' < T`.
    pub check_time: Option<T>,
    /// Fraction `p = (T - t') / 2μ` of the sticking time before `T` (case IIIb).
    pub remaining: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome<T, const D: usize> {
    Continue(ChainState<T, D>),
    Terminated(TrajectoryResult<T, D>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickyStep<T, const D: usize> {
    pub case: StickyCase,
    pub outcome: StepOutcome<T, D>,
    pub event: Option<BoundaryEvent<T, D>>,
}

/// Tolerance under which `t' ≈ T` counts as having reached the horizon.
#[inline]
fn time_tie<T: Real>(h: T) -> T {
    h * T::lit(1e-9)
}

pub fn euler_aux_step<T: Real, const D: usize>(
    state: &ChainState<T, D>,
    problem: &Problem<T, D>,
    h: T,
    increment: &[T; D],
) -> AuxState<T, D> {
    let (t, x) = (state.time, &state.position);
    let drift = (problem.drift)(t, x);
    let sigma = (problem.diffusion)(t, x);
    let root_h = h.sqrt();
    let position = std::array::from_fn(|i| {
        let noise = sigma[i].iter().zip(increment).fold(T::zero(), |acc, (&s, &xi)| acc + s * xi);
        x[i] + h * drift[i] + root_h * noise
    });
    let y = state.weight;
    AuxState {
        time: t + h,
        position,
        weight: y + h * (problem.potential)(t, x) * y,
        accumulator: state.accumulator + h * (problem.source)(t, x) * y,
    }
}

/// One step of the sticky Euler chain.
pub fn sticky_step<T: Real, const D: usize>(
    state: &ChainState<T, D>,
    problem: &Problem<T, D>,
    h: T,
    increment: &[T; D],
    correction: FinalStepCorrection,
) -> Result<StickyStep<T, D>, SchemeError> {
    let horizon = problem.horizon;
    let reached = |t: T| t >= horizon - time_tie(h);
    let aux = euler_aux_step(state, problem, h, increment);

    if problem.domain.in_closure(&aux.position) {
        let (case, outcome) = if reached(aux.time) {
            let result = state.finish(horizon, aux.position, aux.weight, aux.accumulator);
            (StickyCase::Terminal, StepOutcome::Terminated(result))
        } else {
            let next = ChainState {
                time: aux.time,
                position: aux.position,
                weight: aux.weight,
                accumulator: aux.accumulator,
                hits: state.hits,
                steps: state.steps + 1,
            };
            (StickyCase::Interior, StepOutcome::Continue(next))
        };
        return Ok(StickyStep { case, outcome, event: None });
    }

    let projection = problem.domain.project_to_boundary(&aux.position)?;
    let r = projection.distance;
    let foot = &projection.foot;
    let two = T::lit(2.0);
    let reflected = axpy(&aux.position, two * r, &projection.inward_normal);
    let mu = (problem.stickiness)(foot);
    let y = state.weight;
    let hit = ChainState { hits: state.hits + 1, ..*state };

    if reached(aux.time) {
        // IV: the auxiliary time already passed T.
        let gamma = (problem.absorption)(horizon, foot);
        let psi = (problem.boundary_datum)(horizon, foot);
        let a_phi = (problem.terminal_generator)(horizon, foot);
        let weight = aux.weight + two * r * gamma * y + two * r * r * gamma * gamma * y;
        let accumulator = aux.accumulator
            + (-two * r * mu * a_phi - two * r * r * gamma * mu * a_phi - two * r * psi - two * r * r * gamma * psi)
                * y;
        let event = BoundaryEvent { projection, reflected, check_time: None, remaining: None };
        return Ok(StickyStep {
            case: StickyCase::ReflectTerminal,
            outcome: StepOutcome::Terminated(hit.finish(horizon, reflected, weight, accumulator)),
            event: Some(event),
        });
    }

    let check_time = aux.time + two * r * mu;
    debug_assert!(check_time >= aux.time, "negative sticking time");

    if !reached(check_time) {
        // IIIa: coefficients frozen at the midpoint of the sticking interval.
        let mid = aux.time + r * mu;
        let gamma = (problem.absorption)(mid, foot);
        let c = (problem.potential)(mid, foot);
        let psi = (problem.boundary_datum)(mid, foot);
        let g = (problem.source)(mid, foot);
        let r2 = r * r;
        let weight = aux.weight
            + (two * r * gamma + two * r * mu * c + two * r2 * gamma * gamma + T::lit(4.0) * r2 * mu * gamma * c
                + two * r2 * mu * mu * c * c)
                * y;
        let accumulator = aux.accumulator
            + (-two * r * psi - two * r2 * gamma * psi - two * r2 * mu * c * psi
                + two * r * mu * g
                + two * r2 * mu * gamma * g
                + two * r2 * mu * mu * c * g)
                * y;
        let next = ChainState {
            time: check_time,
            position: reflected,
            weight,
            accumulator,
            hits: hit.hits,
            steps: state.steps + 1,
        };
        let event = BoundaryEvent { projection, reflected, check_time: Some(check_time), remaining: None };
        return Ok(StickyStep { case: StickyCase::Reflect, outcome: StepOutcome::Continue(next), event: Some(event) });
    }

    // IIIb: t' < T <= t''; μ > 0 here because 2rμ covers a positive gap.
    let remaining = ((horizon - aux.time) / (two * mu)).max(T::zero()).min(r);
    let p = remaining;
    let gamma = (problem.absorption)(horizon, foot);
    let c = (problem.potential)(horizon, foot);
    let psi = (problem.boundary_datum)(horizon, foot);
    let g = (problem.source)(horizon, foot);
    let a_phi = (problem.terminal_generator)(horizon, foot);
    let (weight, accumulator) = match correction {
        FinalStepCorrection::Listing => (
            aux.weight + two * r * gamma * y - two * p * mu * c * y,
            aux.accumulator - two * mu * (r - p) * a_phi * y - two * p * mu * g * y - two * r * psi * y,
        ),
        FinalStepCorrection::Proof => {
            let phi = (problem.terminal)(foot);
            (
                aux.weight + two * r * gamma * y + two * p * mu * c * y,
                aux.accumulator - two * mu * (r - p) * a_phi * y + two * p * mu * c * phi * y + two * p * mu * g * y
                    - two * r * psi * y,
            )
        }
        FinalStepCorrection::Consistent => (
            aux.weight + two * r * gamma * y + two * p * mu * c * y,
            aux.accumulator - two * mu * (r - p) * a_phi * y + two * p * mu * g * y - two * r * psi * y,
        ),
    };
    let event = BoundaryEvent { projection, reflected, check_time: Some(check_time), remaining: Some(p) };
    Ok(StickyStep {
        case: StickyCase::StickyTerminal,
        outcome: StepOutcome::Terminated(hit.finish(horizon, reflected, weight, accumulator)),
        event: Some(event),
    })
}

fn validate_start<T: Real, const D: usize>(problem: &Problem<T, D>, t0: T, x0: &[T; D], h: T) -> Result<u64, SchemeError> {
    if !(h > T::zero() && h < T::one()) {
        return Err(SchemeError::InvalidStep(h.as_f64()));
    }
    if !(t0 < problem.horizon) {
        return Err(SchemeError::StartAfterHorizon { t0: t0.as_f64(), horizon: problem.horizon.as_f64() });
    }
    if !problem.domain.contains(x0) {
        return Err(SchemeError::StartOutsideDomain);
    }
    let nominal = (T::lit(10.0) * (problem.horizon - t0) / h).ceil().to_u64().unwrap_or(u64::MAX);
    Ok(nominal.max(10))
}

/// Runs the sticky Euler chain to termination at `T`.
pub fn sticky_trajectory<T: Real, const D: usize, R: rand_core::RngCore>(
    problem: &Problem<T, D>,
    t0: T,
    x0: [T; D],
    h: T,
    correction: FinalStepCorrection,
    noise: &mut Rademacher<R>,
) -> Result<TrajectoryResult<T, D>, SchemeError> {
    let budget = validate_start(problem, t0, &x0, h)?;
    let mut state = ChainState::start(t0, x0);
    loop {
        let increment = noise.vector();
        match sticky_step(&state, problem, h, &increment, correction)?.outcome {
            StepOutcome::Continue(next) => state = next,
            StepOutcome::Terminated(result) => return Ok(result),
        }
        if state.steps > budget {
            return Err(SchemeError::Runaway { budget });
        }
    }
}

/// One step of the projected Euler chain.
pub fn projected_step<T: Real, const D: usize>(
    state: &ChainState<T, D>,
    problem: &Problem<T, D>,
    h: T,
    increment: &[T; D],
) -> Result<ChainState<T, D>, SchemeError> {
    if problem.domain.in_closure(&state.position) {
        let aux = euler_aux_step(state, problem, h, increment);
        return Ok(ChainState {
            time: aux.time,
            position: aux.position,
            weight: aux.weight,
            accumulator: aux.accumulator,
            hits: state.hits,
            steps: state.steps + 1,
        });
    }
    let projection = problem.domain.project_to_boundary(&state.position)?;
    let r = projection.distance;
    let foot = projection.foot;
    let t = state.time;
    let y = state.weight;
    let mu = (problem.stickiness)(&foot);
    Ok(ChainState {
        time: t + r * mu,
        position: foot,
        weight: y + r * (problem.absorption)(t, &foot) * y + r * mu * (problem.potential)(t, &foot) * y,
        accumulator: state.accumulator - r * (problem.boundary_datum)(t, &foot) * y
            + r * mu * (problem.source)(t, &foot) * y,
        hits: state.hits + 1,
        steps: state.steps + 1,
    })
}

/// Runs the projected Euler chain while `t ≤ T`; the final time may exceed `T`.
pub fn projected_trajectory<T: Real, const D: usize, R: rand_core::RngCore>(
    problem: &Problem<T, D>,
    t0: T,
    x0: [T; D],
    h: T,
    noise: &mut Rademacher<R>,
) -> Result<TrajectoryResult<T, D>, SchemeError> {
    let budget = validate_start(problem, t0, &x0, h)?;
    let mut state = ChainState::start(t0, x0);
    while state.time <= problem.horizon {
        let increment = noise.vector();
        state = projected_step(&state, problem, h, &increment)?;
        if state.steps > budget {
            return Err(SchemeError::Runaway { budget });
        }
    }
    Ok(TrajectoryResult {
        time: state.time,
        position: state.position,
        weight: state.weight,
        accumulator: state.accumulator,
        steps: state.steps,
        hits: state.hits,
    })
}
