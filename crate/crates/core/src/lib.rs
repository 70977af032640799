//! Numerical laboratory for a one-dimensional stochastic lattice model and
//! its deterministic, diffusive, and rate-independent limits.
//!
//! A particle on the lattice `(1/n)Z` jumps left and right with rates
//! `n * alpha * exp(-/+ beta * grad E(x,t))` driven by a smooth energy
//! `E(x,t)`. The crate provides
//!
//! * exact simulation of the jump process and Euler-Maruyama simulation of
//!   its diffusive limit ([`stochastic`]),
//! * deterministic solvers for the sinh gradient flow, the quadratic
//!   gradient flow, and the rate-independent stick-slip evolution ([`flows`]),
//! * the family of large-deviation action functionals evaluated on sampled
//!   and BV curves ([`functionals`]),
//! * closed-form dissipation pairs `(psi, psi*)` with their Legendre
//!   transforms, Hamiltonian/Lagrangian, and limit-condition checkers
//!   ([`dissipation`]),
//! * convergence experiments connecting all of the above ([`convergence`]).

pub mod config;
pub mod convergence;
pub mod dissipation;
pub mod energy;
pub mod flows;
pub mod functionals;
pub mod stochastic;

use thiserror::Error;

/// Errors produced by solvers, simulators and functional evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown landscape id `{0}`")]
    UnknownLandscape(String),
    #[error("missing or invalid parameter `{0}` for landscape `{1}`")]
    LandscapeParam(&'static str, String),
    #[error("point (x={x}, t={t}) is outside the landscape domain")]
    DomainExit { x: f64, t: f64 },
    #[error("empty sample grid")]
    EmptyGrid,
    #[error("Legendre maximizer at search-bound edge; widen the bound")]
    WidenBound,
    #[error("beta sequence must be strictly increasing")]
    NonIncreasingBetas,
    #[error("implicit solve failed to converge at t={t} (last state x={x})")]
    NonConvergent { t: f64, x: f64 },
    #[error("initial state violates |grad E| <= A: |{grad}| > {threshold}")]
    OutsideStableSet { grad: f64, threshold: f64 },
    #[error("jump transient failed to re-stabilize before leaving the domain")]
    RunawayJump,
    #[error("start position {0} is not on the lattice (1/{1})Z")]
    OffLattice(f64, u64),
    #[error("time step {dt} exceeds stability bound {bound}")]
    UnstableStep { dt: f64, bound: f64 },
    #[error("path has too few well transitions ({0}) for a rate estimate; need at least {1}")]
    TooFewTransitions(usize, usize),
    #[error("ensemble needs at least 2 replicas")]
    TooFewReplicas,
    #[error("curve is not admissible for the rate-independent functional: |grad E| = {grad} > A at t = {t}")]
    InadmissibleCurve { grad: f64, t: f64 },
    #[error("degenerate plateau: zero speed and zero time-rate on a positive-measure set")]
    DegeneratePlateau,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
