//! Cocycle-weighted tiling of finite graphs.
//!
//! A finite graph carries positive vertex weights `w`, read as the cocycle
//! `ρ(x, y) = w(x) / w(y)` on each connected component. On top of that this
//! crate provides weighted averages, ρ-flows, packed and saturated
//! prepartitions, visibility blocks, finitizing cuts and the staged tiling
//! loop that drives averages toward the mean.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod averages;
pub mod cuts;
mod error;
pub mod flows;
pub mod graph_core;
mod math;
pub mod prepartitions;
pub mod tiling;
pub mod visibility;

pub use error::{Error, Result};
pub use graph_core::{build_graph, Cocycle, EquivRel, Prepartition, RhoMeasure, WeightedGraph};
