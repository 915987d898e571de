//! Spherical harmonic analysis on homogeneous trees and the Schrödinger
//! equation `i∂_t u + Lu = F(u)` driven by the combinatorial Laplacian.
//!
//! Modules, bottom-up:
//!
//! - [`tree`]: tree combinatorics, radial functions, mean/Laplace operators,
//!   convolution (radial formula and vertex-level oracle).
//! - [`spectral`]: spherical functions, `H`, Abel and Fourier transforms.
//! - [`bessel`], [`kernel`]: the Schrödinger kernel `s_t` and its estimates.
//! - [`propagator`]: `e^{itL}` by spectral multiplier or kernel convolution.
//! - [`nls`]: Strang splitting, Duhamel–Picard iteration, conservation laws.
//! - [`analysis`]: Strichartz norms, decay fits and the scattering probe.
//! - [`cli`], [`config`], [`selftest`]: the command-line front end.

pub mod analysis;
pub mod bessel;
pub mod cli;
pub mod config;
pub mod error;
pub mod kernel;
pub mod nls;
pub mod propagator;
pub mod selftest;
pub mod spectral;
pub mod tree;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use tree::{RadialFunction, TreeParams};
