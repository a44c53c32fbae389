//! "Same"-size 2-D convolution, stride 1, with padding modes and dilation.

use super::pad::pad;
use super::{FeatureMap, PaddingMode};
use crate::error::{Error, Result};

/// A convolution layer description: kernel, dilation, padding mode, weights.
#[derive(Clone, Debug)]
pub struct ConvSpec {
    c_in: usize,
    c_out: usize,
    kernel: usize,
    dilation: usize,
    padding: PaddingMode,
    weights: Vec<f32>, // (c_out, c_in, k, k) row-major
    bias: Vec<f32>,    // (c_out)
}

impl ConvSpec {
    pub fn new(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        dilation: usize,
        padding: PaddingMode,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if kernel == 0 || kernel.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "kernel size must be odd and positive, got {kernel}"
            )));
        }
        if dilation == 0 {
            return Err(Error::InvalidArgument("dilation must be >= 1".into()));
        }
        if c_in == 0 || c_out == 0 {
            return Err(Error::InvalidArgument("channel counts must be >= 1".into()));
        }
        if weights.len() != c_out * c_in * kernel * kernel {
            return Err(Error::ShapeMismatch(format!(
                "weights length {} != {}",
                weights.len(),
                c_out * c_in * kernel * kernel
            )));
        }
        if bias.len() != c_out {
            return Err(Error::ShapeMismatch(format!(
                "bias length {} != {c_out}",
                bias.len()
            )));
        }
        if !weights.iter().chain(bias.iter()).all(|v| v.is_finite()) {
            return Err(Error::Numeric("conv weights contain NaN/Inf".into()));
        }
        Ok(Self {
            c_in,
            c_out,
            kernel,
            dilation,
            padding,
            weights,
            bias,
        })
    }

    /// Kernel with 1 at the center, mapping each channel to itself.
    pub fn identity(channels: usize, kernel: usize, padding: PaddingMode) -> Result<Self> {
        let mut weights = vec![0.0; channels * channels * kernel * kernel];
        let center = kernel / 2;
        for c in 0..channels {
            weights[((c * channels + c) * kernel + center) * kernel + center] = 1.0;
        }
        Self::new(channels, channels, kernel, 1, padding, weights, vec![0.0; channels])
    }

    /// Single-output kernel with every weight 1 (window sums).
    pub fn box_sum(c_in: usize, kernel: usize, padding: PaddingMode) -> Result<Self> {
        Self::new(
            c_in,
            1,
            kernel,
            1,
            padding,
            vec![1.0; c_in * kernel * kernel],
            vec![0.0],
        )
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn dilation(&self) -> usize {
        self.dilation
    }

    pub fn padding(&self) -> PaddingMode {
        self.padding
    }

    pub fn with_padding(mut self, padding: PaddingMode) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_dilation(mut self, dilation: usize) -> Result<Self> {
        if dilation == 0 {
            return Err(Error::InvalidArgument("dilation must be >= 1".into()));
        }
        self.dilation = dilation;
        Ok(self)
    }

    #[inline]
    pub fn weight(&self, co: usize, ci: usize, kh: usize, kw: usize) -> f32 {
        self.weights[((co * self.c_in + ci) * self.kernel + kh) * self.kernel + kw]
    }

    #[inline]
    pub fn bias(&self, co: usize) -> f32 {
        self.bias[co]
    }

    /// Padding amount that keeps "same" spatial size: d * (K - 1) / 2.
    pub fn pad_amount(&self) -> usize {
        self.dilation * (self.kernel - 1) / 2
    }
}

/// Per-tap, per-position multipliers along one axis.
///
/// `factor(kh, i)` scales the read that window center `i` makes at tap row
/// `kh` (raw source row `i + d * (kh - (K-1)/2)`). Plain convolution uses the
/// unit table; trenches and virtual boundaries use crossing-dependent tables.
#[derive(Clone, Debug)]
pub(crate) struct TapScales {
    k: usize,
    n: usize,
    factors: Vec<f64>, // (k, n) row-major
}

impl TapScales {
    pub(crate) fn unit(k: usize, n: usize) -> Self {
        Self {
            k,
            n,
            factors: vec![1.0; k * n],
        }
    }

    #[inline]
    fn factor(&self, tap: usize, pos: usize) -> f64 {
        self.factors[tap * self.n + pos]
    }

    fn is_unit(&self) -> bool {
        self.factors.iter().all(|&f| f == 1.0)
    }
}

/// Build tap factors for zero-width inter-cell lines on one axis.
///
/// A line at position `p` separates cell `p - 1` from cell `p`. A read from
/// center `i` at raw coordinate `r` crosses it when `min < p <= max`; each
/// crossed line multiplies the read by its ratio (0 for a trench).
pub(crate) fn crossing_factors(
    k: usize,
    n: usize,
    dilation: usize,
    lines: &[(usize, f64)],
) -> TapScales {
    let c0 = (k as isize - 1) / 2;
    let mut factors = vec![1.0f64; k * n];
    for tap in 0..k {
        let off = dilation as isize * (tap as isize - c0);
        for i in 0..n {
            let r = i as isize + off;
            let (lo, hi) = (r.min(i as isize), r.max(i as isize));
            let mut f = 1.0;
            for &(p, ratio) in lines {
                let p = p as isize;
                if lo < p && p <= hi {
                    f *= ratio;
                }
            }
            factors[tap * n + i] = f;
        }
    }
    TapScales { k, n, factors }
}

/// "Same" 2-D convolution (cross-correlation), stride 1.
pub fn conv2d(f: &FeatureMap, spec: &ConvSpec) -> Result<FeatureMap> {
    let (_, c, h, w) = f.dims();
    conv2d_scaled(
        f,
        spec,
        &TapScales::unit(spec.kernel, h),
        &TapScales::unit(spec.kernel, w),
    )
    .inspect(|out| {
        debug_assert_eq!(out.channels(), spec.c_out);
        let _ = c;
    })
}

/// Convolution with per-axis tap multipliers (trenches, virtual boundaries).
pub(crate) fn conv2d_scaled(
    f: &FeatureMap,
    spec: &ConvSpec,
    row_scales: &TapScales,
    col_scales: &TapScales,
) -> Result<FeatureMap> {
    let (b, c, h, w) = f.dims();
    if c != spec.c_in {
        return Err(Error::ShapeMismatch(format!(
            "input has {c} channels, spec expects {}",
            spec.c_in
        )));
    }
    if row_scales.k != spec.kernel || col_scales.k != spec.kernel {
        return Err(Error::ShapeMismatch("tap scale kernel mismatch".into()));
    }
    if row_scales.n != h || col_scales.n != w {
        return Err(Error::ShapeMismatch("tap scale size mismatch".into()));
    }
    let k = spec.kernel;
    let d = spec.dilation;
    let a = spec.pad_amount();
    let padded = pad(f, spec.padding, (a, a))?;
    let pw = w + 2 * a;
    let plain = row_scales.is_unit() && col_scales.is_unit();

    let mut out = Vec::with_capacity(b * spec.c_out * h * w);
    let mut buf = vec![0.0f64; h * w];
    for bb in 0..b {
        for co in 0..spec.c_out {
            buf.iter_mut().for_each(|v| *v = 0.0);
            for ci in 0..c {
                let plane = {
                    let base = padded.index(bb, ci, 0, 0);
                    &padded.data()[base..base + (h + 2 * a) * pw]
                };
                for kh in 0..k {
                    for kw in 0..k {
                        let wgt = spec.weight(co, ci, kh, kw) as f64;
                        if wgt == 0.0 {
                            continue;
                        }
                        if plain {
                            for i in 0..h {
                                let src = (i + kh * d) * pw + kw * d;
                                let row = &plane[src..src + w];
                                let dst = &mut buf[i * w..(i + 1) * w];
                                for j in 0..w {
                                    dst[j] += wgt * row[j] as f64;
                                }
                            }
                        } else {
                            for i in 0..h {
                                let wr = wgt * row_scales.factor(kh, i);
                                if wr == 0.0 {
                                    continue;
                                }
                                let src = (i + kh * d) * pw + kw * d;
                                let row = &plane[src..src + w];
                                let dst = &mut buf[i * w..(i + 1) * w];
                                for j in 0..w {
                                    dst[j] += wr * col_scales.factor(kw, j) * row[j] as f64;
                                }
                            }
                        }
                    }
                }
            }
            let bias = spec.bias(co) as f64;
            out.extend(buf.iter().map(|&v| (v + bias) as f32));
        }
    }
    FeatureMap::new(b, spec.c_out, h, w, out)
}
