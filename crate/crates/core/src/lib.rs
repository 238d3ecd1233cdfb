//! Finite-resolution harmonic analysis on the dyadic grid of `[0, 1)`.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: weights and their Muckenhoupt / reverse-Hölder
//! characteristics, a small algebra of Banach function space norms,
//! discrete maximal, Hilbert, bilinear and multiplier operators, the
//! Rubio de Francia majorant, sparse collections and the experiment
//! harness built on top of them.
//!
//! File formats, the CLI and parallel drivers live in the `weightlab` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod fft;
pub mod lab;
pub mod lattice;
pub mod math;
pub mod operators;
pub mod rng;
pub mod rubio_francia;
pub mod spaces;
pub mod sparse;
pub mod weights;

pub use error::{Error, Result};
pub use lattice::{CubeFamily, DyadicGrid, Interval, LatticeFunction, MeasurePoints};
pub use operators::Operator;
pub use spaces::{NormReport, SolverConfig, SpaceExpr};
pub use weights::Weight;
