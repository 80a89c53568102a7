// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::{Error, Result, Scalar};

/// One chromosome's ordered ratio observations.
///
/// Positions are window coordinates (base pairs or an abstract index) and
/// must be strictly increasing. Values must be finite; missing windows are
/// expected to have been dropped before construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    label: String,
    values: Vec<T>,
    positions: Vec<u64>,
}

impl<T: Scalar> Series<T> {
    pub fn new(label: impl Into<String>, values: Vec<T>, positions: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("series has no observations"));
        }
        if values.len() != positions.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: positions.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = positions.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedPositions(i + 1));
        }
        Ok(Self {
            label: label.into(),
            values,
            positions,
        })
    }

    /// Series with positions `1..=n` and an empty label.
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        let positions = (1..=values.len() as u64).collect();
        Self::new("", values, positions)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a series holds at least one observation.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
