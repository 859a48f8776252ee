//! Critical-point toolkit for discrete anisotropic two-point boundary value
//! problems.
//!
//! The objects of study are real sequences `u(0), ..., u(T+1)` with zero
//! Dirichlet boundary, an exponent profile `p(k) > 1` weighting the forward
//! differences, and a per-node nonlinearity `f(k, t)` with antiderivative
//! `F(k, t)`. The energy
//!
//! ```text
//! J(u) = sum_{k=1}^{T+1} |u(k) - u(k-1)|^p(k-1) / p(k-1)
//!        - lambda * sum_{k=1}^{T} F(k, u(k))
//! ```
//!
//! is a function of the `T` interior values, and its critical points are the
//! solutions of the associated difference equation. The crate provides:
//!
//! * [`sequence`]: the sequence space, its norms, and the modular;
//! * [`nonlinearity`]: power-term nonlinearities with exact antiderivatives,
//!   growth checks, and closed-form supremum queries;
//! * [`energy`]: energy, gradient, node-wise residual, numeric Hessian, and
//!   critical-point classification;
//! * [`constants`]: best constants in the discrete embeddings plus fuzzed
//!   verification of the inequalities built on them;
//! * [`criteria`]: coercivity / anti-coercivity thresholds in `lambda`,
//!   multiplicity conditions, and sup-norm radius estimates;
//! * [`solvers`]: certified solvers (direct descent, deflated Newton,
//!   mountain pass, lambda sweep);
//! * [`problem`]: the JSON problem-file format.
//!
//! Every solver output is certified against the plain residual at the
//! returned point, and all randomized routines take explicit seeds so runs
//! reproduce bit-for-bit.

pub mod constants;
pub mod criteria;
pub mod energy;
pub mod nonlinearity;
pub mod problem;
pub mod sequence;
pub mod solvers;

pub use energy::ProblemSpec;
pub use nonlinearity::Nonlinearity;
pub use sequence::{ExponentProfile, Sequence};
