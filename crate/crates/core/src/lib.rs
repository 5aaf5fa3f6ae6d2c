//! δ-complete stability analysis for nonlinear continuous and hybrid systems.
//!
//! Stability properties are encoded as bounded first-order sentences over the
//! reals and δ-decided by interval branch-and-prune. The crate is `no_std`
//! with `alloc`; threads, files and the command line live in the companion
//! `dstab` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

use alloc::string::String;

pub mod formula;
pub mod hybrid;
pub mod interval;
pub mod ode;
pub mod solver;
pub mod stability;

pub use formula::{Formula, Name, Rational, Term};
pub use interval::{Interval, IntervalBox};
pub use ode::OdeSystem;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("perturbation bound must be nonnegative")]
    NegativeDelta,
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("domain violation: {0}")]
    Domain(&'static str),
    #[error("cannot split `{0}`: zero width")]
    ZeroWidth(Name),
    #[error("term is not differentiable")]
    NotDifferentiable,
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("flow enclosure leaves the state box during [{lo}, {hi}]")]
    BoundsEscape { lo: f64, hi: f64 },
    #[error("validated integration failed to converge near t = {time}")]
    NonConvergence { time: f64 },
    #[error("resolution floor reached without a decision")]
    ResolutionFloor,
    #[error("unknown mode `{0}`")]
    UnknownMode(Name),
    #[error("no jump declared from `{0}` to `{1}`")]
    UndeclaredJump(Name, Name),
    #[error("{paths} mode paths exceed the cap of {cap}")]
    PathCap { paths: usize, cap: usize },
}
