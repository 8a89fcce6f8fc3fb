//! Pricing of game (Israeli) options on multivariate diffusion asset dynamics.
//!
//! The asset log-price is approximated by the discrete-time chain
//!
//! ```text
//! X((n+1)/N) = X(n/N) + N^{-1/2} sigma(X(n/N)) xi(n+1) + N^{-1} b(X(n/N))
//! ```
//!
//! driven by i.i.d. centered, isotropic innovations `xi`.  With innovations
//! taking finitely many values the chain's filtration is a scenario tree and
//! the option value is the Dynkin-game value computed by backward recursion
//!
//! ```text
//! V_n = min(G_n, max(F_n, E[V_{n+1} | tree node]))
//! ```
//!
//! where `F` is the exercise payoff and `G >= F` the cancellation payoff.
//!
//! The crate is organised as:
//!
//! * [`model`] — diffusion coefficients, innovation laws, payoff functionals
//!   and their probe-based validation;
//! * [`scheme`] — chain simulation, block-coarse variants, coupled fine-grid
//!   diffusion references, path import/export;
//! * [`dynkin`] — scenario trees, backward recursion, strategy extraction,
//!   brute-force stopping-time oracles, Monte Carlo strategy evaluation;
//! * [`diagnostics`] — empirical estimates of every quantity the theory
//!   bounds, with the exact bound constants alongside.
//!
//! All randomness flows through [`rng::StreamRng`], a counter-based generator
//! addressed by `(seed, stream)`, so every computation is reproducible and
//! batches parallelise over disjoint streams.

pub mod diagnostics;
pub mod dynkin;
pub mod error;
pub mod model;
pub mod rng;
pub mod scheme;
pub mod stats;

pub use error::CoreError;
pub use model::{
    BasePayoff, DiffusionModel, InnovationLaw, Payoff, PayoffPair, Penalty, StatKind,
    ValidationReport,
};
pub use scheme::{BlockPartition, CoupledPair, DiscretePath};

pub use dynkin::{GameValueReport, ScenarioTree, StrategyPair};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
