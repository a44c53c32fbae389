//! Diagnostic padding interventions: trench-style bidirectional zero padding
//! and unidirectional region padding for central-region correction.
//!
//! A trench is a zero-width line between two adjacent cells; window reads
//! crossing it are zeroed in both directions, so each side behaves as an
//! independently zero-padded image along that axis. Trenches are applied at
//! window-gather time; the map is never physically split.

use crate::error::{Error, Result};
use crate::tensor::{
    conv2d, conv2d_scaled, crossing_factors, resolve_index, Axis, ConvSpec, FeatureMap, TapScales,
};

/// A bidirectional interior zero boundary on one axis.
///
/// `position` is a line index `p` with `0 < p < axis size`: the line sits
/// between cell `p - 1` and cell `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrenchSpec {
    pub axis: Axis,
    pub position: usize,
}

impl TrenchSpec {
    pub fn new(axis: Axis, position: usize) -> Self {
        Self { axis, position }
    }

    fn validate(&self, h: usize, w: usize) -> Result<()> {
        let size = match self.axis {
            Axis::Rows => h,
            Axis::Cols => w,
        };
        if self.position == 0 || self.position >= size {
            return Err(Error::InvalidArgument(format!(
                "trench position {} coincides with or exceeds the real border (axis size {size})",
                self.position
            )));
        }
        Ok(())
    }
}

/// Which side of a region border convolves with modified reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Output positions inside the rectangle are treated as the padded
    /// interior; their reads from outside are attenuated.
    Inward,
    /// Output positions outside the rectangle; reads from inside attenuated.
    Outward,
}

/// Unidirectional padded region: a rectangle and the side whose windows are
/// modified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionSpec {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    pub side: Side,
}

impl RegionSpec {
    pub fn new(top: usize, left: usize, height: usize, width: usize, side: Side) -> Self {
        Self {
            top,
            left,
            height,
            width,
            side,
        }
    }

    fn validate(&self, h: usize, w: usize) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArgument("region must be at least 1x1".into()));
        }
        if self.top + self.height > h || self.left + self.width > w {
            return Err(Error::InvalidArgument(format!(
                "region ({}, {}, {}, {}) exceeds {h}x{w} map",
                self.top, self.left, self.height, self.width
            )));
        }
        Ok(())
    }

    #[inline]
    fn contains(&self, i: isize, j: isize) -> bool {
        i >= self.top as isize
            && i < (self.top + self.height) as isize
            && j >= self.left as isize
            && j < (self.left + self.width) as isize
    }
}

pub(crate) fn trench_tap_scales(
    trenches: &[TrenchSpec],
    h: usize,
    w: usize,
    kernel: usize,
    dilation: usize,
) -> (TapScales, TapScales) {
    let rows: Vec<(usize, f64)> = trenches
        .iter()
        .filter(|t| t.axis == Axis::Rows)
        .map(|t| (t.position, 0.0))
        .collect();
    let cols: Vec<(usize, f64)> = trenches
        .iter()
        .filter(|t| t.axis == Axis::Cols)
        .map(|t| (t.position, 0.0))
        .collect();
    (
        crossing_factors(kernel, h, dilation, &rows),
        crossing_factors(kernel, w, dilation, &cols),
    )
}

/// Convolution with interior trenches: any window read crossing a trench line
/// is zeroed; the outer border follows the spec's padding mode as usual.
pub fn conv2d_with_trenches(
    f: &FeatureMap,
    spec: &ConvSpec,
    trenches: &[TrenchSpec],
) -> Result<FeatureMap> {
    let (_, _, h, w) = f.dims();
    for t in trenches {
        t.validate(h, w)?;
    }
    if trenches.is_empty() {
        return conv2d(f, spec);
    }
    let (row_scales, col_scales) = trench_tap_scales(trenches, h, w, spec.kernel(), spec.dilation());
    conv2d_scaled(f, spec, &row_scales, &col_scales)
}

/// Convolution with a unidirectional attenuated region border: for output
/// positions on the designated side, window reads from the other side are
/// multiplied by `lambda` (0 replaces them by zero). The other side convolves
/// normally.
pub fn conv2d_with_region(
    f: &FeatureMap,
    spec: &ConvSpec,
    region: &RegionSpec,
    lambda: f64,
) -> Result<FeatureMap> {
    let (b, c, h, w) = f.dims();
    region.validate(h, w)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be in [0, 1], got {lambda}"
        )));
    }
    if c != spec.c_in() {
        return Err(Error::ShapeMismatch(format!(
            "input has {c} channels, spec expects {}",
            spec.c_in()
        )));
    }
    let k = spec.kernel();
    let d = spec.dilation() as isize;
    let c0 = (k as isize - 1) / 2;
    FeatureMap::from_fn(b, spec.c_out(), h, w, |bb, co, i, j| {
        let designated = match region.side {
            Side::Inward => region.contains(i as isize, j as isize),
            Side::Outward => !region.contains(i as isize, j as isize),
        };
        let mut acc = 0.0f64;
        for ci in 0..c {
            for kh in 0..k {
                for kw in 0..k {
                    let r = i as isize + d * (kh as isize - c0);
                    let cc = j as isize + d * (kw as isize - c0);
                    let v = match (
                        resolve_index(r, h, spec.padding()),
                        resolve_index(cc, w, spec.padding()),
                    ) {
                        (Some(si), Some(sj)) => f.get(bb, ci, si, sj) as f64,
                        _ => 0.0,
                    };
                    let crosses = match region.side {
                        Side::Inward => !region.contains(r, cc),
                        Side::Outward => region.contains(r, cc),
                    };
                    let factor = if designated && crosses { lambda } else { 1.0 };
                    acc += spec.weight(co, ci, kh, kw) as f64 * v * factor;
                }
            }
        }
        (acc + spec.bias(co) as f64) as f32
    })
}
