//! conc-lab: numerical laboratory for multi-regime exponential concentration.
//!
//! The crate has five building blocks:
//!
//! - [`profile`] — exact algebra of concentration envelopes: regimes,
//!   breakpoints, tail and moment bounds, norm degrees;
//! - [`generators`] — reproducible samplers for the fundamental concentrated
//!   families (gaussian, sphere, ball, cube, laplace, lq balls) and their
//!   Lipschitz transforms, with counter-based seed streams;
//! - [`observables`] — per-trial multilinear statistics: entry-wise and
//!   matrix products, bilinear forms, X D Y^T functionals, the diagonal
//!   semi-norm;
//! - [`estimation`] — empirical concentration functions with DKW bands,
//!   tail-exponent fits, observable diameters, envelope/moment verification;
//! - [`rmt`] — the resolvent (I - X D Y^T/n)^{-1}, its deterministic
//!   equivalent via the delta fixed point, leave-one-out identities and the
//!   robust-regression fixed point.

// negated comparisons like !(x > 0.0) are deliberate: they reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod generators;
pub mod linalg;
pub mod observables;
pub mod profile;
pub mod rmt;

pub use error::{Error, Result};
