//! Information-theoretic generalization and excess-risk bounds for transfer
//! learning.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] – instances, hypotheses, distribution families, losses and
//!   seeded random streams.
//! * [`risk`] – empirical, weighted and population risks, and the
//!   integral-probability distance `d_W` between source and target.
//! * [`divergence`] – KL divergence, total variation and noise entropies.
//! * [`mi`] – per-sample mutual information estimated by repeated
//!   generation and a histogram plug-in.
//! * [`bounds`] – the `ψ*⁻¹` inversion and every bound evaluator.
//! * [`optimizers`] – ERM solvers and noisy gradient descent.
//! * [`experiments`] – end-to-end reproductions and CSV output.
//!
//! Sign convention: the generalization error is always
//! `L_target(W) - L̂_α(W, S, S')`, population minus empirical.

pub mod bounds;
pub mod divergence;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod mi;
pub mod model;
pub mod optimizers;
pub mod par;
pub mod report;
pub mod risk;

pub use error::{Error, Result};
