// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point segmentation of piecewise-constant signals with the
//! tail-greedy unbalanced Haar (TGUH) transform.
//!
//! The pipeline has three stages:
//!
//! 1. [`forward_transform`] builds a bottom-up merge tree of unbalanced Haar
//!    detail coefficients.
//! 2. [`threshold`] applies connected (tree-preserving) thresholding followed
//!    by unconnected minimum-arm thresholding, which removes one-window
//!    "spikes" left behind by outliers.
//! 3. [`fit_segments`] turns the surviving breakpoints into a piecewise-constant
//!    fit made of per-segment sample means.
//!
//! [`segment`] runs all three. The [`sim`] and [`eval`] modules provide the
//! synthetic test signals, noise models and detection metrics used to
//! validate the method.
//!
//! ```
//! use tguhm::{segment, Series64, ThresholdConfig64, DEFAULT_RHO};
//!
//! let y = Series64::from_values(vec![1.0, 1.1, 0.9, 1.0, 2.0, 2.1, 1.9, 2.0]).unwrap();
//! let report = segment(&y, &ThresholdConfig64::default().with_lambda(0.3), DEFAULT_RHO).unwrap();
//! assert_eq!(report.segmentation.change_points, vec![4]);
//! ```
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix it to `f64`, which the simulation harness uses.

#![forbid(unsafe_code)]

mod error;
pub mod eval;
mod reconstruct;
mod series;
pub mod sim;
mod stats;
mod threshold;
mod transform;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

pub use error::{Error, Result};
pub use reconstruct::{
    extract_change_points, fit_segments, segment, segment_with_tree, SegmentReport, Segmentation,
};
pub use series::Series;
pub use stats::{mad, median};
pub use threshold::{
    connected_threshold, default_lambda, estimate_sigma, threshold, unconnected_threshold,
    universal_lambda, ResolvedThreshold, SurvivorSet, ThresholdConfig, DEFAULT_LAMBDA_CONSTANT,
    MAD_GAUSSIAN_CONSISTENCY,
};
pub use transform::{
    detail_value, detail_weights, forward_transform, local_average, merge_pass, merges_per_pass,
    DetailCoefficient, MergeState, MergeTree, Region, DEFAULT_RHO,
};

/// Floating-point type the transform and thresholding code is generic over.
pub trait Scalar: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {}

pub type Series64 = Series<f64>;
pub type MergeTree64 = MergeTree<f64>;
pub type DetailCoefficient64 = DetailCoefficient<f64>;
pub type ThresholdConfig64 = ThresholdConfig<f64>;
pub type Segmentation64 = Segmentation<f64>;
pub type SegmentReport64 = SegmentReport<f64>;

/// Converts a count or configuration constant into the scalar type.
#[inline]
pub(crate) fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 value representable in scalar type")
}

#[inline]
pub(crate) fn cast_usize<T: Scalar>(x: usize) -> T {
    T::from_usize(x).expect("usize value representable in scalar type")
}
