//! Discovery of open-form partial differential equations from gridded data.
//!
//! A candidate right-hand side for `u_t` is a forest of symbolic binary trees,
//! one tree per additive term. A genetic algorithm evolves populations of
//! forests; each forest is evaluated on the grid, its term coefficients are
//! fitted with sequentially thresholded ridge regression, and candidates are
//! ranked by the Akaike information criterion.
//!
//! | module | contents |
//! |---|---|
//! | [`expr`] | vocabulary, trees, forests, random generation, rendering, parsing |
//! | [`eval`] | datasets, finite differences, tree evaluation, feature matrices |
//! | [`regress`] | ridge solve, STRidge, MSE/AIC scoring |
//! | [`ga`] | crossover, mutation, replacement, the evolution loop and its log |
//! | [`data`] | benchmark solvers and the dataset file format |
//! | [`cli`] | the `pdeforest` command-line tool |

// `!(a > b)` rejects NaN along with the out-of-range case
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// stencil loops index several aligned buffers at once
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod expr;
pub mod ga;
pub mod regress;

pub use error::ConfigError;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/representation.md")]
    mod representation {}
    #[doc = include_str!("../../../book/src/generation.md")]
    mod generation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/regression.md")]
    mod regression {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
}
