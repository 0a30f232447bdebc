//! Collaborative mean estimation over a dynamic peer graph.
//!
//! Agents observe i.i.d. streams from one of several similarity classes and
//! try to estimate their own class mean faster than they could alone, by
//! discovering same-class peers through confidence-interval tests on the
//! mean, the standard deviation, and the kurtosis of their data.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod confidence;
pub mod distributions;
pub mod error;
pub mod graph;
pub mod harness;
pub mod moments;
pub mod presets;
pub mod separation;

pub use confidence::{BoundConfig, BoundKind, Decision, Fold, FoldSet, Interval};
pub use distributions::{ClassSpec, Family};
pub use error::{Error, Result};
pub use graph::{DynamicGraph, MixingMatrix};
pub use moments::{DifferenceMode, MomentAccumulator};
