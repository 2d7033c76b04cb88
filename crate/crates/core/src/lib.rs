//! Sketches, protocols, and divergence experiments around the bilinear form
//! a'Bc for unit vectors a, c and orthogonal B.
//!
//! The crate has three layers that share a common linear-algebra substrate:
//!
//! * [`sketch`]: single-pass estimators for a'Bc over the stream
//!   `c, B (row-major), a`, including the heavy-coordinate decision sketch.
//! * [`protocol`]: a simulator for the one-way Charlie -> Bob -> Alice
//!   protocol with exact per-player bit accounting.
//! * [`divergence`]: Monte Carlo and exact machinery for Renyi divergences
//!   of spherical cap / von Mises-Fisher densities, their restrictions to
//!   random equators, and discrete bipartite conditioning inequalities.
//!
//! Everything randomized is driven by [`rng::StreamRng`], a counter-based
//! (seed, stream) generator, so every experiment is reproducible from two
//! integers.

pub mod divergence;
mod error;
mod gf2;
pub mod hashing;
mod lapack;
pub mod linalg;
pub mod numeric;
pub mod protocol;
pub mod rng;
pub mod sketch;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
