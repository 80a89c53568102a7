// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::{
    cast_usize, forward_transform, threshold, Error, MergeTree, Result, Scalar, Series,
    SurvivorSet, ThresholdConfig,
};

/// Piecewise-constant fit.
///
/// A change-point `b` means the level changes between windows `b - 1` and
/// `b` (0-based), i.e. after the `b`-th window. Segments are the half-open
/// ranges `bounds[j]..bounds[j + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation<T> {
    pub change_points: Vec<usize>,
    /// `0, b_1, ..., b_N, n`.
    pub bounds: Vec<usize>,
    pub segment_means: Vec<T>,
    pub fitted: Vec<T>,
}

impl<T: Scalar> Segmentation<T> {
    pub fn num_segments(&self) -> usize {
        self.segment_means.len()
    }

    /// `(start, end, mean)` for every segment.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.bounds
            .windows(2)
            .zip(&self.segment_means)
            .map(|(w, &m)| (w[0], w[1], m))
    }
}

/// Segmentation plus the quantities used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport<T> {
    pub segmentation: Segmentation<T>,
    pub sigma: T,
    pub lambda: T,
    pub sigma_estimated: bool,
    pub degenerate_sigma: bool,
    pub n_details: usize,
    pub n_stage1: usize,
    pub n_kept: usize,
}

/// Sorted, deduplicated breakpoints of the kept coefficients.
pub fn extract_change_points<T>(tree: &MergeTree<T>, kept: &[usize]) -> Vec<usize> {
    let mut cps: Vec<usize> = kept.iter().map(|&i| tree.details[i].breakpoint()).collect();
    cps.sort_unstable();
    cps.dedup();
    cps
}

/// Fits the sample mean of every segment delimited by `change_points`.
pub fn fit_segments<T: Scalar>(
    series: &Series<T>,
    change_points: &[usize],
) -> Result<Segmentation<T>> {
    let n = series.len();
    let mut prev = 0;
    for &b in change_points {
        if b <= prev || b >= n {
            return Err(Error::Index {
                what: format!("change-point {b} (must be increasing and inside 1..{n})"),
                len: n,
            });
        }
        prev = b;
    }

    let mut bounds = Vec::with_capacity(change_points.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(change_points);
    bounds.push(n);

    let y = series.values();
    let mut segment_means = Vec::with_capacity(bounds.len() - 1);
    let mut fitted = Vec::with_capacity(n);
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mean = y[a..b].iter().copied().sum::<T>() / cast_usize::<T>(b - a);
        segment_means.push(mean);
        fitted.extend(std::iter::repeat_n(mean, b - a));
    }

    Ok(Segmentation {
        change_points: change_points.to_vec(),
        bounds,
        segment_means,
        fitted,
    })
}

/// Thresholds an existing transform of `series` and fits segment means.
pub fn segment_with_tree<T: Scalar>(
    series: &Series<T>,
    tree: &MergeTree<T>,
    cfg: &ThresholdConfig<T>,
) -> Result<SegmentReport<T>> {
    let (survivors, resolved) = threshold(tree, cfg, series)?;
    let SurvivorSet { stage1_kept, kept } = survivors;
    let cps = extract_change_points(tree, &kept);
    Ok(SegmentReport {
        segmentation: fit_segments(series, &cps)?,
        sigma: resolved.sigma,
        lambda: resolved.lambda,
        sigma_estimated: resolved.sigma_estimated,
        degenerate_sigma: resolved.degenerate_sigma,
        n_details: tree.details.len(),
        n_stage1: stage1_kept.len(),
        n_kept: kept.len(),
    })
}

/// Full pipeline: transform, two-stage thresholding, segment means.
pub fn segment<T: Scalar>(
    series: &Series<T>,
    cfg: &ThresholdConfig<T>,
    rho: f64,
) -> Result<SegmentReport<T>> {
    let tree = forward_transform(series, rho)?;
    segment_with_tree(series, &tree, cfg)
}
