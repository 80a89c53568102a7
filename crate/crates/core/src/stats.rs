// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::{cast, Scalar};

/// Sample median; the mean of the two middle order statistics for even
/// lengths. `None` for an empty slice.
pub fn median<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        Some(v[mid])
    } else {
        Some((v[mid - 1] + v[mid]) / cast(2.0))
    }
}

/// Raw median absolute deviation about the median (no consistency constant).
pub fn mad<T: Scalar>(xs: &[T]) -> Option<T> {
    let m = median(xs)?;
    let dev: Vec<T> = xs.iter().map(|&x| (x - m).abs()).collect();
    median(&dev)
}
