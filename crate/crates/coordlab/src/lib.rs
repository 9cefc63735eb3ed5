//! coordlab: learning coordinated equilibria in fully cooperative repeated
//! state games with stochastic, unobservable actions.
//!
//! The library provides:
//! - [`game`]: cooperative state games, strategic form, optimal joint
//!   actions, best responses, and the builtin game families.
//! - [`learners`]: fictitious play and Dirichlet Bayesian best response,
//!   plus their unobservable-action adaptations (Bayes-rule posteriors and
//!   likelihood-estimate frequency updates).
//! - [`conventions`]: maximum-likelihood pruning of optimal joint actions
//!   toward a frozen convention, with indistinguishability detection.
//! - [`sim`]: seeded Monte Carlo trials producing per-round error curves.
//! - [`exact`]: exact convergence curves via forward enumeration of the
//!   joint belief-state Markov chain, and the plateau-period checker.
//! - [`config`]: experiment configuration files, overrides, and manifests.

pub mod config;
pub mod conventions;
pub mod error;
pub mod exact;
pub mod game;
pub mod learners;
pub mod sim;

pub use error::{Error, Result};
