//! Spherical-shell steady states of the aggregation equation with
//! repulsive-attractive power-law potentials: the radial velocity kernel,
//! stability classification of shells, and implicit simulation of the radial
//! flow in mass coordinates.

pub mod error;
pub mod kernel;
pub mod potential;
pub mod quadrature;
pub mod solver;
pub mod specfun;
pub mod stability;

pub use error::{Error, Result};
pub use potential::{OmegaContinuity, PowerLawPotential, RadialPotentialDescriptor, RegularityFlags};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
