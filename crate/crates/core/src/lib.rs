//! Fourth-order compact 9-point finite-difference solvers for nonlinear
//! convection-diffusion equations on the unit square.

pub mod cases;
pub mod coefficients;
pub mod derivatives;
pub mod error;
pub mod grid;
pub mod harness;
pub mod jet;
pub mod solvers;
pub mod sparse;
pub mod stencil;

pub use error::{Error, Result};

/// The guide's code samples, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cases.md")]
    mod cases {}
    #[doc = include_str!("../../../book/src/derivatives.md")]
    mod derivatives {}
    #[doc = include_str!("../../../book/src/stencils.md")]
    mod stencils {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
