//! Monte Carlo solvers for linear parabolic PDEs with second-order ("sticky")
//! boundary conditions.
//!
//! The solution of
//!
//! ```text
//! ∂u/∂t + A u + c u + g = 0                    in [0,T) × G
//! u(T, x) = φ(x)
//! -μ A u + ∂u/∂ν + γ u = ψ                     on [0,T] × ∂G
//! ```
//!
//! is represented as `u(t0, x) = E[φ(X) Y + Z]` where `X` is a sticky-reflected
//! diffusion. Two random-walk schemes approximate the chain:
//!
//! * [`schemes::sticky_trajectory`]: symmetrized sticky Euler, weak order 1.
//! * [`schemes::projected_trajectory`]: projected Euler, weak order 1/2.
//!
//! All numerics are generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`) and over the spatial dimension via const generics. The
//! aliases below fix the common `f64` instantiations.

pub mod geometry;
pub mod harness;
pub mod montecarlo;
pub mod problem;
pub mod real;
pub mod rng;
pub mod schemes;

pub use geometry::{Domain, GeometryError, Location, Projection, Shape};
pub use harness::{ConvergenceRow, HarnessError, OrderFit, StudyConfig, StudyOutcome};
pub use montecarlo::{Estimate, EstimateConfig, EstimateError, Scheme};
pub use problem::{Problem, ProblemError};
pub use real::Real;
pub use schemes::{FinalStepCorrection, SchemeError, TrajectoryResult};

/// A point or vector in `R^D`.
pub type Point<T, const D: usize> = [T; D];
/// A `D × D` matrix stored row-major.
pub type Matrix<T, const D: usize> = [[T; D]; D];

/// Planar problems in double precision, the configuration of the disk benchmark.
pub type Problem2 = Problem<f64, 2>;
pub type Domain2 = Domain<f64, 2>;
pub type Projection2 = Projection<f64, 2>;
pub type TrajectoryResult2 = TrajectoryResult<f64, 2>;
pub type Estimate64 = Estimate<f64>;
pub type EstimateConfig2 = EstimateConfig<f64, 2>;
