//! Low-rank solver for multidimensional Fokker-Planck equations.
//!
//! Densities live on Chebyshev tensor-product grids and are stored in
//! tensor-train (TT) form. Time stepping uses second-order operator
//! splitting: diffusion half-steps act mode-by-mode through precomputed
//! matrix exponentials of the spectral second-derivative operators, and the
//! convection step follows characteristics backwards through a Chebyshev
//! interpolant of the current density, with the result re-compressed by
//! rank-adaptive cross approximation.
//!
//! Module map:
//! - [`tt`]: tensor-train representation and its core operations,
//! - [`cross`]: maxvol-pivoted cross approximation of black-box tensors,
//! - [`cheb`]: Chebyshev grids, spectral differentiation, interpolation and
//!   Clenshaw-Curtis quadrature,
//! - [`solver`]: the splitting stepper and solve driver,
//! - [`models`]: Ornstein-Uhlenbeck and dumbbell problem definitions plus
//!   their reference solutions and observables.
//!
//! All indices at the public API are 0-based; grid node `n` of an `N`-point
//! mode sits at `cos(pi*n/(N-1))` mapped affinely onto the mode's interval,
//! so node 0 is the right endpoint. Multi-indices linearize big-endian (last
//! index fastest), matching row-major memory order.

pub mod cheb;
pub mod cross;
mod linalg;
pub mod models;
pub mod solver;
pub mod tt;
