// SPDX-License-Identifier: MIT OR Apache-2.0

//! Forward tail-greedy unbalanced Haar transform.
//!
//! Indices are 0-based and regions are half-open: a detail with
//! `(start, split, end)` has left arm `start..split` and right arm
//! `split..end`. `split` is also the number of windows before the candidate
//! change-point, so it equals the 1-based index of the last window of the
//! left arm.

use std::cmp::Ordering;

use crate::{cast_usize, Error, Result, Scalar, Series};

/// Proportion of adjacent pairs merged per pass.
pub const DEFAULT_RHO: f64 = 0.01;

/// One unbalanced Haar detail coefficient in the merge tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailCoefficient<T> {
    /// Pass that produced this coefficient, starting at 1.
    pub scale: usize,
    /// Position within its pass, starting at 1, ordered by `start`.
    pub index: usize,
    pub start: usize,
    pub split: usize,
    pub end: usize,
    pub value: T,
    pub left_weight: T,
    pub right_weight: T,
    /// Coefficient that formed the left arm, if the arm is wider than one window.
    pub left_child: Option<usize>,
    /// Coefficient that formed the right arm, if the arm is wider than one window.
    pub right_child: Option<usize>,
    pub parent: Option<usize>,
}

impl<T> DetailCoefficient<T> {
    pub fn left_len(&self) -> usize {
        self.split - self.start
    }

    pub fn right_len(&self) -> usize {
        self.end - self.split
    }

    /// Change-point location implied by this coefficient: the level changes
    /// between windows `split - 1` and `split` (0-based).
    pub fn breakpoint(&self) -> usize {
        self.split
    }

    pub fn children(&self) -> impl Iterator<Item = usize> {
        self.left_child.into_iter().chain(self.right_child)
    }
}

/// The full record of a forward transform.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTree<T> {
    /// Coefficients in production order; children always precede parents.
    pub details: Vec<DetailCoefficient<T>>,
    /// Rescaled average over the whole series.
    pub root_smooth: T,
    pub n: usize,
    pub rho: f64,
    /// The last coefficient produced, if any.
    pub root: Option<usize>,
    pub passes: usize,
}

impl<T: Scalar> MergeTree<T> {
    /// Sum of squared details plus the squared smooth coefficient.
    pub fn energy(&self) -> T {
        self.details
            .iter()
            .map(|d| d.value * d.value)
            .fold(self.root_smooth * self.root_smooth, |a, b| a + b)
    }

    /// Indices of `node` and every coefficient below it.
    pub fn subtree(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.details[i].children());
        }
        out.sort_unstable();
        out
    }
}

/// A contiguous block of windows awaiting a merge.
#[derive(Debug, Clone, PartialEq)]
pub struct Region<T> {
    pub start: usize,
    pub end: usize,
    /// Raw sum of the observations in `start..end`.
    pub sum: T,
    /// Coefficient whose merge created this region; `None` for single windows.
    pub node: Option<usize>,
}

impl<T: Scalar> Region<T> {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Rescaled average: the sum divided by the square root of the width.
    pub fn rescaled_average(&self) -> T {
        self.sum / cast_usize::<T>(self.len()).sqrt()
    }
}

/// Region list between passes of the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeState<T> {
    pub regions: Vec<Region<T>>,
    /// Passes completed so far.
    pub scale: usize,
    /// Coefficients produced so far; the next one gets this index.
    pub produced: usize,
}

impl<T: Scalar> MergeState<T> {
    /// Initial state: one region per observation.
    pub fn new(values: &[T]) -> Self {
        let regions = values
            .iter()
            .enumerate()
            .map(|(i, &y)| Region {
                start: i,
                end: i + 1,
                sum: y,
                node: None,
            })
            .collect();
        Self {
            regions,
            scale: 0,
            produced: 0,
        }
    }
}

/// Rescaled average `(end - start)^{-1/2} * sum(values[start..end])`.
pub fn local_average<T: Scalar>(values: &[T], start: usize, end: usize) -> Result<T> {
    if start >= end || end > values.len() {
        return Err(Error::Index {
            what: format!("region {start}..{end}"),
            len: values.len(),
        });
    }
    let sum: T = values[start..end].iter().copied().sum();
    Ok(sum / cast_usize::<T>(end - start).sqrt())
}

/// Weights `(l, r)` of the detail filter for arms `start..split` and
/// `split..end`: the unique nonnegative pair with `l^2 + r^2 = 1` that
/// annihilates constant vectors.
pub fn detail_weights<T: Scalar>(start: usize, split: usize, end: usize) -> Result<(T, T)> {
    if !(start < split && split < end) {
        return Err(Error::Index {
            what: format!("split {split} outside {}..{end}", start + 1),
            len: end,
        });
    }
    Ok(weights(split - start, end - split))
}

fn weights<T: Scalar>(left_len: usize, right_len: usize) -> (T, T) {
    let total = cast_usize::<T>(left_len + right_len);
    let l = (cast_usize::<T>(right_len) / total).sqrt();
    let r = (cast_usize::<T>(left_len) / total).sqrt();
    (l, r)
}

/// Detail coefficient `l * c(start..split) - r * c(split..end)`.
pub fn detail_value<T: Scalar>(values: &[T], start: usize, split: usize, end: usize) -> Result<T> {
    if end > values.len() {
        return Err(Error::Index {
            what: format!("region {start}..{end}"),
            len: values.len(),
        });
    }
    detail_weights::<T>(start, split, end)?;
    let left: T = values[start..split].iter().copied().sum();
    let right: T = values[split..end].iter().copied().sum();
    Ok(contrast(left, split - start, right, end - split))
}

// l*c_L - r*c_R rewritten as sqrt(pq/(p+q)) * (mean_L - mean_R), which is
// exactly zero whenever both arm means agree.
fn contrast<T: Scalar>(left_sum: T, left_len: usize, right_sum: T, right_len: usize) -> T {
    let p = cast_usize::<T>(left_len);
    let q = cast_usize::<T>(right_len);
    (p * q / (p + q)).sqrt() * (left_sum / p - right_sum / q)
}

/// Number of merges attempted in a pass over `regions` regions: `ceil(rho * regions)`.
pub fn merges_per_pass(rho: f64, regions: usize) -> usize {
    // Guard against products such as 0.01 * 300 = 3.0000000000000004.
    let raw = (rho * regions as f64 * (1.0 - 1e-12)).ceil();
    (raw as usize).max(1)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "rho",
            format!("must lie in (0, 1], got {rho}"),
        ))
    }
}

/// Runs one pass of the transform.
///
/// All adjacent pairs are scored by their detail coefficient; pairs are
/// accepted in order of increasing magnitude (ties by position) until
/// `ceil(rho * regions)` have been taken, skipping any pair that shares a
/// region with one already accepted in this pass.
pub fn merge_pass<T: Scalar>(
    state: &MergeState<T>,
    rho: f64,
) -> Result<(Vec<DetailCoefficient<T>>, MergeState<T>)> {
    check_rho(rho)?;
    let regions = &state.regions;
    let count = regions.len();
    if count < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: count,
        });
    }

    let values: Vec<T> = regions
        .windows(2)
        .map(|w| contrast(w[0].sum, w[0].len(), w[1].sum, w[1].len()))
        .collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .abs()
            .partial_cmp(&values[b].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let target = merges_per_pass(rho, count);
    let mut used = vec![false; count];
    let mut merge_at = vec![false; count];
    let mut accepted = 0;
    for i in order {
        if used[i] || used[i + 1] {
            continue;
        }
        used[i] = true;
        used[i + 1] = true;
        merge_at[i] = true;
        accepted += 1;
        if accepted == target {
            break;
        }
    }

    let scale = state.scale + 1;
    let mut details = Vec::with_capacity(accepted);
    let mut next = Vec::with_capacity(count - accepted);
    let mut i = 0;
    while i < count {
        if merge_at[i] {
            let (left, right) = (&regions[i], &regions[i + 1]);
            let (left_weight, right_weight) = weights(left.len(), right.len());
            let id = state.produced + details.len();
            details.push(DetailCoefficient {
                scale,
                index: details.len() + 1,
                start: left.start,
                split: left.end,
                end: right.end,
                value: values[i],
                left_weight,
                right_weight,
                left_child: left.node,
                right_child: right.node,
                parent: None,
            });
            next.push(Region {
                start: left.start,
                end: right.end,
                sum: left.sum + right.sum,
                node: Some(id),
            });
            i += 2;
        } else {
            next.push(regions[i].clone());
            i += 1;
        }
    }

    let produced = state.produced + details.len();
    Ok((
        details,
        MergeState {
            regions: next,
            scale,
            produced,
        },
    ))
}

/// Forward transform of `series`, merging `ceil(rho * regions)` pairs per
/// pass until a single region remains.
pub fn forward_transform<T: Scalar>(series: &Series<T>, rho: f64) -> Result<MergeTree<T>> {
    check_rho(rho)?;
    let n = series.len();
    if n == 0 {
        return Err(Error::EmptyInput("cannot transform an empty series"));
    }

    let mut state = MergeState::new(series.values());
    let mut details: Vec<DetailCoefficient<T>> = Vec::with_capacity(n - 1);
    while state.regions.len() > 1 {
        let (produced, next) = merge_pass(&state, rho)?;
        details.extend(produced);
        state = next;
    }

    for i in 0..details.len() {
        let children: Vec<usize> = details[i].children().collect();
        for c in children {
            details[c].parent = Some(i);
        }
    }

    let last = &state.regions[0];
    Ok(MergeTree {
        details,
        root_smooth: last.rescaled_average(),
        n,
        rho,
        root: last.node,
        passes: state.scale,
    })
}
