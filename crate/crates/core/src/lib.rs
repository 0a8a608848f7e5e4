//! # kirchhoff-core
//!
//! Divergence, Laplacian and heat semigroup `e^{tΔ}` induced by a coupling
//! measure `π` on a product space `X × X`.
//!
//! Given `π` and an edge function `Φ(x, y)`, the Kirchhoff divergence
//! `Kir_π Φ` is the density of the first marginal of `Φ·dπ` with respect to
//! the first marginal `μ` of `π`. Applied to `F(x, y) = f(y) − f(x)` it gives
//! the Laplacian `Δ_π f`, and `e^{tΔ_π} f` solves the heat problem with
//! initial datum `f`.
//!
//! Three coupling regimes are implemented concretely:
//!
//! | Module | Coupling | Evaluator for `e^{tΔ}` |
//! |--------|----------|------------------------|
//! | [`graph`] | symmetric edge weights on `n` vertices | uniformization of `D⁻¹W` |
//! | [`dyadic`] | kernels `φ(δ(x, y))` on `[0, 1)` with the dyadic ultrametric | Haar spectral damping |
//! | [`transport`] | `π = μ∘G⁻¹`, `G(x) = (x, T(x))` | Poisson mixture of `f∘Tˡ` |
//!
//! [`coupling`] holds the general finite-support calculus every regime
//! reduces to, and [`csvio`] the plain-text formats used by the CLI.

pub mod coupling;
pub mod csvio;
pub mod dyadic;
mod error;
pub mod graph;
pub mod markov;
pub mod poisson;
pub mod trace;
pub mod transport;

pub use error::{Error, Result};
pub use trace::DiffusionTrace;

/// Seed of the test-function generator used by validation routines.
pub const DEFAULT_SEED: u64 = 0x4b49_5243_4848_4f46;
