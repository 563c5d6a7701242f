pub mod bench;
pub mod bounds;
pub mod error;
pub mod formats;
pub mod generative;
pub mod measurement;
pub mod numerics;
pub mod optimize;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// The guide's code listings, compiled and run as doc tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/measurements.md")]
    mod measurements {}
    #[doc = include_str!("../../../book/src/generative.md")]
    mod generative {}
    #[doc = include_str!("../../../book/src/formulations.md")]
    mod formulations {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/experiment.md")]
    mod experiment {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
