//! Numerical laboratory for expanding cones of Anosov flows.
//!
//! The crate builds explicit cone models and measures, on each of them, the
//! quantities that the theory of Hamenstädt metrics, Gromov hyperbolicity,
//! conformal uniformization and Patterson-Sullivan measures predicts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod geometry;
pub mod gromov;
pub mod hamenstadt;
pub mod measures;
pub mod models;
pub mod numerics;
pub mod uniformize;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/hamenstadt.md")]
    mod hamenstadt {}
    #[doc = include_str!("../../../book/src/uniformization.md")]
    mod uniformization {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/patterson_sullivan.md")]
    mod patterson_sullivan {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
