//! Dense rank-4 arrays plus the deterministic convolution / unfold / fold kernel.
//!
//! Everything here is a pure function of its inputs: identical inputs give
//! bit-identical outputs across runs. Values are stored in single precision;
//! all accumulation happens in double precision.

mod conv;
mod pad;
mod patches;

pub use conv::{conv2d, ConvSpec};
pub(crate) use conv::{conv2d_scaled, crossing_factors, TapScales};
pub use pad::{pad, PaddingMode};
pub(crate) use pad::resolve_index;
pub use patches::{fold, fold_normalized, overlap_count, unfold, PatchMatrix};

use crate::error::{Error, Result};

/// Spatial axis selector. `Rows` names horizontal lines (constant row index),
/// `Cols` vertical lines (constant column index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Rows,
    Cols,
}

/// Dense (batch, channel, height, width) array of finite reals, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    batch: usize,
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(
        batch: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if batch == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(Error::ShapeMismatch(format!(
                "all dims must be >= 1, got ({batch}, {channels}, {height}, {width})"
            )));
        }
        let expected = batch * channels * height * width;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "data length {} does not match dims product {expected}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("feature map contains NaN/Inf".into()));
        }
        Ok(Self {
            batch,
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(batch: usize, channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(
            batch,
            channels,
            height,
            width,
            vec![0.0; batch * channels * height * width],
        )
    }

    /// Build from a per-cell function over (b, c, i, j).
    pub fn from_fn<F: FnMut(usize, usize, usize, usize) -> f32>(
        batch: usize,
        channels: usize,
        height: usize,
        width: usize,
        mut f: F,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(batch * channels * height * width);
        for b in 0..batch {
            for c in 0..channels {
                for i in 0..height {
                    for j in 0..width {
                        data.push(f(b, c, i, j));
                    }
                }
            }
        }
        Self::new(batch, channels, height, width, data)
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.batch, self.channels, self.height, self.width)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub(crate) fn index(&self, b: usize, c: usize, i: usize, j: usize) -> usize {
        ((b * self.channels + c) * self.height + i) * self.width + j
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, i: usize, j: usize) -> f32 {
        self.data[self.index(b, c, i, j)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, i: usize, j: usize, value: f32) {
        let idx = self.index(b, c, i, j);
        self.data[idx] = value;
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Apply an elementwise function, revalidating finiteness.
    pub fn map<F: Fn(f32) -> f32>(&self, f: F) -> Result<Self> {
        Self::new(
            self.batch,
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Largest absolute elementwise difference. Errors on dim mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .fold(0.0, f64::max))
    }

    /// Largest elementwise difference relative to the magnitude of the values.
    pub fn max_rel_diff(&self, other: &Self) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let (a, b) = (a as f64, b as f64);
                (a - b).abs() / 1.0f64.max(a.abs()).max(b.abs())
            })
            .fold(0.0, f64::max))
    }
}
