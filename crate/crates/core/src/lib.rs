//! Finite-volume solver and Lyapunov-decay verifier for scalar conservation
//! laws `u_t + f(u)_x = 0` with polynomial flux.
//!
//! The crate provides exact L2 projections onto the monotone cone, the
//! L1-ball and interval sets, exact Riemann fans for nonconvex fluxes via
//! convex envelopes, monotone schemes, and auditing of the distance from the
//! evolving solution to each target set.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod envelope;
pub mod error;
pub mod field;
pub mod flux;
pub mod lyapunov;
pub mod oracle;
pub mod project;
pub mod riemann;
pub mod solver;

pub use envelope::{
    legendre, lower_convex_envelope, upper_concave_envelope, ContactInterval, ContactStructure, EnvelopeResult,
    FluxEnvelope, PiecewiseLinear,
};
pub use error::{Error, Result};
pub use field::{mesh_project, CellField, Field2D, Grid1D, Integrable, StepProfile};
pub use flux::{bitangent_slopes, chord, lipschitz_bound, Chord, PolyFlux};
pub use lyapunov::{audit_decay, norms_and_tv, AuditSummary, DecayReport, Diagnostic, EntropyPair, Observer};
pub use oracle::{analytic_solution, fit_rate, monotone_projection_bruteforce, AnalyticCase, RateFit};
pub use project::{
    distance_l2, project_interval, project_l1ball, project_monotone, project_monotone_infsup, BallProjection,
    MonotoneProjection, TargetSet,
};
pub use riemann::{godunov_flux, kunik_value, solve_riemann, KunikValue, RiemannFan, WavePiece};
pub use solver::{run, run_2d, step, step_2d, Evolution, Scheme, SchemeConfig};
