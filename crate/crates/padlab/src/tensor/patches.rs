//! Patch extraction (unfold) and overlap-add reconstruction (fold).
//!
//! No implicit padding: callers pad first, so padding semantics live in one
//! place. `fold(unfold(F))` divided by `overlap_count` recovers `F` whenever
//! the sliding windows cover every cell.

use super::FeatureMap;
use crate::error::{Error, Result};

/// Unfolded patches: (B, C*K*K, L) with the geometry needed to fold back.
#[derive(Clone, Debug)]
pub struct PatchMatrix {
    batch: usize,
    channels: usize,
    height: usize,
    width: usize,
    kernel: usize,
    stride: usize,
    data: Vec<f32>, // (B, C*K*K, L) row-major
}

impl PatchMatrix {
    pub fn new(
        batch: usize,
        channels: usize,
        height: usize,
        width: usize,
        kernel: usize,
        stride: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let (oh, ow) = out_positions(height, width, kernel, stride)?;
        let expected = batch * channels * kernel * kernel * oh * ow;
        if data.len() != expected {
            return Err(Error::Geometry(format!(
                "patch data length {} != {expected}",
                data.len()
            )));
        }
        Ok(Self {
            batch,
            channels,
            height,
            width,
            kernel,
            stride,
            data,
        })
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Number of rows per column: C * K * K.
    pub fn patch_len(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    /// Number of sliding-window positions L.
    pub fn columns(&self) -> usize {
        let (oh, ow) = out_positions(self.height, self.width, self.kernel, self.stride)
            .expect("validated at construction");
        oh * ow
    }

    /// Geometry recorded for fold: (H, W, K, S).
    pub fn geometry(&self) -> (usize, usize, usize, usize) {
        (self.height, self.width, self.kernel, self.stride)
    }

    #[inline]
    pub fn get(&self, b: usize, row: usize, col: usize) -> f32 {
        self.data[(b * self.patch_len() + row) * self.columns() + col]
    }

    /// Multiply every entry of column `col` (all batches) by `factor`.
    pub fn scale_column(&mut self, col: usize, factor: f32) {
        let cols = self.columns();
        let rows = self.patch_len();
        for b in 0..self.batch {
            for r in 0..rows {
                self.data[(b * rows + r) * cols + col] *= factor;
            }
        }
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

fn out_positions(h: usize, w: usize, k: usize, s: usize) -> Result<(usize, usize)> {
    if s == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    if k == 0 || k > h || k > w {
        return Err(Error::Geometry(format!(
            "kernel {k} does not fit a {h}x{w} map"
        )));
    }
    Ok(((h - k) / s + 1, (w - k) / s + 1))
}

/// Extract K x K windows at stride S. Column `l` holds the window at sliding
/// position `l` (row-major scan of positions), with rows ordered (c, kh, kw).
pub fn unfold(f: &FeatureMap, kernel: usize, stride: usize) -> Result<PatchMatrix> {
    let (b, c, h, w) = f.dims();
    let (oh, ow) = out_positions(h, w, kernel, stride)?;
    let cols = oh * ow;
    let rows = c * kernel * kernel;
    let mut data = vec![0.0f32; b * rows * cols];
    for bb in 0..b {
        for cc in 0..c {
            for kh in 0..kernel {
                for kw in 0..kernel {
                    let row = (cc * kernel + kh) * kernel + kw;
                    let base = (bb * rows + row) * cols;
                    for ph in 0..oh {
                        for pw in 0..ow {
                            data[base + ph * ow + pw] =
                                f.get(bb, cc, ph * stride + kh, pw * stride + kw);
                        }
                    }
                }
            }
        }
    }
    PatchMatrix::new(b, c, h, w, kernel, stride, data)
}

/// Overlap-add: each output cell is the sum of every patch entry mapping to it.
pub fn fold(p: &PatchMatrix) -> Result<FeatureMap> {
    let (h, w, k, s) = p.geometry();
    let (oh, ow) = out_positions(h, w, k, s)?;
    let b = p.batch;
    let c = p.channels;
    let mut acc = vec![0.0f64; b * c * h * w];
    for bb in 0..b {
        for cc in 0..c {
            for kh in 0..k {
                for kw in 0..k {
                    let row = (cc * k + kh) * k + kw;
                    for ph in 0..oh {
                        for pw in 0..ow {
                            let v = p.get(bb, row, ph * ow + pw) as f64;
                            let idx =
                                ((bb * c + cc) * h + ph * s + kh) * w + pw * s + kw;
                            acc[idx] += v;
                        }
                    }
                }
            }
        }
    }
    FeatureMap::new(b, c, h, w, acc.into_iter().map(|v| v as f32).collect())
}

/// Per-cell count of covering windows for the given geometry. Errors if any
/// cell is covered by no window (the geometry leaves holes).
pub fn overlap_count(h: usize, w: usize, k: usize, s: usize) -> Result<FeatureMap> {
    let (oh, ow) = out_positions(h, w, k, s)?;
    let mut counts = vec![0.0f32; h * w];
    for ph in 0..oh {
        for pw in 0..ow {
            for kh in 0..k {
                for kw in 0..k {
                    counts[(ph * s + kh) * w + pw * s + kw] += 1.0;
                }
            }
        }
    }
    if counts.contains(&0.0) {
        return Err(Error::Geometry(format!(
            "windows K={k} S={s} leave uncovered cells on a {h}x{w} map"
        )));
    }
    FeatureMap::new(1, 1, h, w, counts)
}

/// fold(unfold(F)) normalized by the overlap counts.
pub fn fold_normalized(p: &PatchMatrix) -> Result<FeatureMap> {
    let (h, w, k, s) = p.geometry();
    let counts = overlap_count(h, w, k, s)?;
    let summed = fold(p)?;
    let (b, c, _, _) = summed.dims();
    FeatureMap::from_fn(b, c, h, w, |bb, cc, i, j| {
        (summed.get(bb, cc, i, j) as f64 / counts.get(0, 0, i, j) as f64) as f32
    })
}
