// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-stage thresholding of a [`MergeTree`]: connected thresholding keeps
//! a coefficient when anything in its subtree exceeds `lambda`; unconnected
//! thresholding then drops coefficients with an arm narrower than `c_star`.

use serde::{Deserialize, Serialize};

use crate::{cast, cast_usize, mad, Error, MergeTree, Result, Scalar, Series};

/// Inflation in `sigma * sqrt(2 * 1.01 * ln n)`.
pub const DEFAULT_LAMBDA_CONSTANT: f64 = 1.01;

/// Scale factor making the MAD consistent for the Gaussian standard deviation.
pub const MAD_GAUSSIAN_CONSISTENCY: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig<T> {
    /// Explicit threshold; `None` derives it from `sigma`.
    pub lambda: Option<T>,
    /// Explicit noise level; `None` estimates it from the data.
    pub sigma: Option<T>,
    /// Minimum arm width a surviving coefficient must have.
    pub c_star: usize,
    pub lambda_constant: T,
}

impl<T: Scalar> Default for ThresholdConfig<T> {
    fn default() -> Self {
        Self {
            lambda: None,
            sigma: None,
            c_star: 2,
            lambda_constant: cast(DEFAULT_LAMBDA_CONSTANT),
        }
    }
}

impl<T: Scalar> ThresholdConfig<T> {
    pub fn with_c_star(mut self, c_star: usize) -> Self {
        self.c_star = c_star;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_star < 1 {
            return Err(Error::param("c_star", "must be at least 1"));
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= T::zero()) {
                return Err(Error::param(
                    "lambda",
                    format!("must be finite and >= 0, got {l}"),
                ));
            }
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s >= T::zero()) {
                return Err(Error::param(
                    "sigma",
                    format!("must be finite and >= 0, got {s}"),
                ));
            }
        }
        if !(self.lambda_constant.is_finite() && self.lambda_constant > T::zero()) {
            return Err(Error::param("lambda_constant", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Resolves `sigma` and `lambda` for `series`.
    ///
    /// A zero noise estimate is passed through as `lambda = 0` with
    /// `degenerate_sigma` set; pass an explicit `lambda` for noiseless data.
    pub fn resolve(&self, series: &Series<T>) -> Result<ResolvedThreshold<T>> {
        self.validate()?;
        let n = series.len();
        let (sigma, sigma_estimated) = match self.sigma {
            Some(s) => (s, false),
            None if n >= 2 => (estimate_sigma(series.values())?, true),
            None => (T::zero(), true),
        };
        let lambda = match self.lambda {
            Some(l) => l,
            None if n >= 2 => universal_lambda(sigma, n, self.lambda_constant)?,
            None => T::zero(),
        };
        Ok(ResolvedThreshold {
            sigma,
            lambda,
            sigma_estimated,
            degenerate_sigma: self.lambda.is_none() && sigma == T::zero(),
        })
    }
}

/// Noise level and threshold actually used for one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedThreshold<T> {
    pub sigma: T,
    pub lambda: T,
    pub sigma_estimated: bool,
    /// Set when `lambda` was derived from a zero noise level.
    pub degenerate_sigma: bool,
}

/// Surviving coefficients, as sorted indices into [`MergeTree::details`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SurvivorSet {
    pub stage1_kept: Vec<usize>,
    pub kept: Vec<usize>,
}

/// Gaussian-consistent MAD of the finest-scale Haar coefficients
/// `(y[i+1] - y[i]) / sqrt(2)`.
pub fn estimate_sigma<T: Scalar>(values: &[T]) -> Result<T> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let root2 = cast::<T>(2.0).sqrt();
    let w: Vec<T> = values.windows(2).map(|p| (p[1] - p[0]) / root2).collect();
    let raw = mad(&w).expect("non-empty differences");
    Ok(cast::<T>(MAD_GAUSSIAN_CONSISTENCY) * raw)
}

/// `sigma * sqrt(2 * inflation * ln n)`.
pub fn universal_lambda<T: Scalar>(sigma: T, n: usize, inflation: T) -> Result<T> {
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if sigma < T::zero() {
        return Err(Error::param("sigma", "must be >= 0"));
    }
    let two = cast::<T>(2.0);
    Ok(sigma * (two * inflation * cast_usize::<T>(n).ln()).sqrt())
}

/// `sigma * sqrt(2 * 1.01 * ln n)`.
pub fn default_lambda<T: Scalar>(sigma: T, n: usize) -> Result<T> {
    universal_lambda(sigma, n, cast(DEFAULT_LAMBDA_CONSTANT))
}

/// Indices of coefficients whose subtree holds a magnitude strictly above
/// `lambda`. The result is closed under taking ancestors.
pub fn connected_threshold<T: Scalar>(tree: &MergeTree<T>, lambda: T) -> Vec<usize> {
    let mut subtree_max: Vec<T> = Vec::with_capacity(tree.details.len());
    for d in &tree.details {
        let m = d
            .children()
            .map(|c| subtree_max[c])
            .fold(d.value.abs(), T::max);
        subtree_max.push(m);
    }
    subtree_max
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > lambda)
        .map(|(i, _)| i)
        .collect()
}

/// Drops every coefficient in `stage1` with an arm narrower than `c_star`.
pub fn unconnected_threshold<T: Scalar>(
    tree: &MergeTree<T>,
    stage1: &[usize],
    c_star: usize,
) -> Result<Vec<usize>> {
    if c_star < 1 {
        return Err(Error::param("c_star", "must be at least 1"));
    }
    Ok(stage1
        .iter()
        .copied()
        .filter(|&i| {
            let d = &tree.details[i];
            d.left_len() >= c_star && d.right_len() >= c_star
        })
        .collect())
}

/// Resolves the configuration against `series` and applies both stages.
pub fn threshold<T: Scalar>(
    tree: &MergeTree<T>,
    cfg: &ThresholdConfig<T>,
    series: &Series<T>,
) -> Result<(SurvivorSet, ResolvedThreshold<T>)> {
    if tree.n != series.len() {
        return Err(Error::LengthMismatch {
            left: tree.n,
            right: series.len(),
        });
    }
    let resolved = cfg.resolve(series)?;
    let stage1_kept = connected_threshold(tree, resolved.lambda);
    let kept = unconnected_threshold(tree, &stage1_kept, cfg.c_star)?;
    Ok((SurvivorSet { stage1_kept, kept }, resolved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{forward_transform, DEFAULT_RHO};
    use approx::assert_abs_diff_eq;

    fn tree_of(v: &[f64]) -> (Series<f64>, MergeTree<f64>) {
        let s = Series::from_values(v.to_vec()).unwrap();
        let t = forward_transform(&s, DEFAULT_RHO).unwrap();
        (s, t)
    }

    fn step(outlier: Option<(usize, f64)>) -> Vec<f64> {
        let mut v: Vec<f64> = (0..40).map(|i| if i < 20 { 0.0 } else { 1.0 }).collect();
        if let Some((i, x)) = outlier {
            v[i] = x;
        }
        v
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(estimate_sigma(&[0.4; 12]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            estimate_sigma(&[0.0, 1.0, 0.0, 1.0, 0.0]).unwrap(),
            1.4826 / 2f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            estimate_sigma(&[0.0, 1.0, 0.0, 1.0, 0.0]).unwrap(),
            1.0483565138,
            epsilon = 1e-9
        );
        assert!(matches!(
            estimate_sigma(&[1.0]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn lambda_examples() {
        // 0.3 * sqrt(2.02 * ln 1000) and 0.5 * sqrt(2.02 * ln 100)
        assert_abs_diff_eq!(
            default_lambda(0.3, 1000).unwrap(),
            1.1206381707,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            default_lambda(0.5, 100).unwrap(),
            1.5249953914,
            epsilon = 1e-9
        );
        assert_eq!(default_lambda(0.0, 57).unwrap(), 0.0);
        assert!(default_lambda(0.3, 1).is_err());
    }

    #[test]
    fn zero_lambda_keeps_nonzero_details() {
        let (_, tree) = tree_of(&[0.1, 0.5, -0.3, 2.0, 1.1, 0.9]);
        assert!(tree.details.iter().all(|d| d.value != 0.0));
        assert_eq!(connected_threshold(&tree, 0.0), (0..5).collect::<Vec<_>>());
    }

    #[test]
    fn constant_subtree_zeroed() {
        let (_, tree) = tree_of(&[0.0, 0.0, 0.0, 4.0]);
        assert_eq!(connected_threshold(&tree, 1.0), vec![2]);
        let (_, flat) = tree_of(&[2.0; 10]);
        assert!(connected_threshold(&flat, 1e-9).is_empty());
    }

    #[test]
    fn equality_with_lambda_is_zeroed() {
        let (_, tree) = tree_of(&[0.0, 0.0, 0.0, 4.0]);
        let exact = tree.details[2].value.abs();
        assert!(connected_threshold(&tree, exact).is_empty());
    }

    #[test]
    fn unconnected_examples() {
        let (_, tree) = tree_of(&step(Some((10, 5.0))));
        let stage1 = connected_threshold(&tree, 0.5);
        assert_eq!(unconnected_threshold(&tree, &stage1, 1).unwrap(), stage1);
        let kept = unconnected_threshold(&tree, &stage1, 2).unwrap();
        assert!(kept.iter().all(|&i| {
            let d = &tree.details[i];
            d.left_len() >= 2 && d.right_len() >= 2
        }));
        assert!(stage1
            .iter()
            .any(|&i| tree.details[i].left_len() == 1 || tree.details[i].right_len() == 1));
        assert!(unconnected_threshold(&tree, &stage1, 0).is_err());
    }

    #[test]
    fn wide_arms_survive() {
        // Arms of 3 and 5 windows: the last merge of [0,0,0,1,1,1,1,1].
        let (_, tree) = tree_of(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let root = tree.root.unwrap();
        assert_eq!(
            (
                tree.details[root].left_len(),
                tree.details[root].right_len()
            ),
            (3, 5)
        );
        for c in [2, 3] {
            assert_eq!(
                unconnected_threshold(&tree, &[root], c).unwrap(),
                vec![root]
            );
        }
        assert!(unconnected_threshold(&tree, &[root], 4).unwrap().is_empty());
    }

    #[test]
    fn constant_series_auto_threshold() {
        let (s, tree) = tree_of(&[1.0; 25]);
        let (surv, res) = threshold(&tree, &ThresholdConfig::default(), &s).unwrap();
        assert!(surv.kept.is_empty());
        assert!(res.degenerate_sigma);
        assert_eq!(res.lambda, 0.0);
    }

    #[test]
    fn noiseless_step_single_survivor() {
        let (s, tree) = tree_of(&step(None));
        let cfg = ThresholdConfig::default().with_lambda(0.5);
        let (surv, _) = threshold(&tree, &cfg, &s).unwrap();
        assert_eq!(surv.kept.len(), 1);
        assert_eq!(tree.details[surv.kept[0]].split, 20);
    }

    #[test]
    fn outlier_spike_removed_in_stage_two() {
        let (s, tree) = tree_of(&step(Some((9, 5.0))));
        let cfg = ThresholdConfig::default().with_lambda(0.5);
        let (surv, _) = threshold(&tree, &cfg, &s).unwrap();
        let mut splits: Vec<usize> = surv.kept.iter().map(|&i| tree.details[i].split).collect();
        splits.sort_unstable();
        // The one-window arm goes; the wide-armed merge enclosing the
        // outlier keeps its far flank.
        assert_eq!(splits, vec![9, 20]);
        assert!(surv
            .kept
            .iter()
            .all(|&i| tree.details[i].left_len() >= 2 && tree.details[i].right_len() >= 2));
        let spikes = surv
            .stage1_kept
            .iter()
            .filter(|&&i| tree.details[i].left_len() == 1 || tree.details[i].right_len() == 1)
            .count();
        assert!(spikes >= 1);
    }

    #[test]
    fn config_validation() {
        let bad = ThresholdConfig::<f64>::default().with_c_star(0);
        assert!(bad.validate().is_err());
        assert!(ThresholdConfig::<f64>::default()
            .with_lambda(-1.0)
            .validate()
            .is_err());
        assert!(ThresholdConfig::<f64>::default()
            .with_sigma(f64::NAN)
            .validate()
            .is_err());
    }

    #[test]
    fn explicit_lambda_without_sigma_still_reports_estimate() {
        let s = Series::from_values(vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let res = ThresholdConfig::default()
            .with_lambda(0.25)
            .resolve(&s)
            .unwrap();
        assert_eq!(res.lambda, 0.25);
        assert!(res.sigma > 1.0);
        assert!(!res.degenerate_sigma);
    }
}
