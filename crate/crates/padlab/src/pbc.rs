//! Progressive Boundary Complement: hierarchical virtual boundaries with
//! valued padding ratios, random position perturbation, and the
//! unfold-scale-fold application.
//!
//! A virtual boundary on an axis of size `s` is a symmetric pair of
//! attenuation lines at offset `l` and `s - 1 - l`, carrying a ratio
//! `lambda` in [0, 1] (0 behaves like a hard zero boundary, 1 like no
//! boundary at all). Two application modes exist:
//!
//! * whole-patch: unfold the map, multiply every patch whose window center
//!   sits on a boundary cell by that boundary's ratio, fold back and
//!   normalize by the overlap counts;
//! * cross-boundary: convolve normally but multiply window reads that cross
//!   a boundary's interior cell edge (the zero-width line between cells `l`
//!   and `l + 1`, mirrored at `s - 1 - l`) by the ratio, in both directions.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeds::derive;
use crate::tensor::{
    conv2d, conv2d_scaled, crossing_factors, fold_normalized, unfold, Axis, ConvSpec, FeatureMap,
};

/// One virtual boundary: a symmetric pair of attenuation lines on one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualBoundary {
    axis: Axis,
    axis_len: usize,
    offset: usize,
    ratio: f64,
}

impl VirtualBoundary {
    pub fn new(axis: Axis, axis_len: usize, offset: usize, ratio: f64) -> Result<Self> {
        if offset == 0 || 2 * offset >= axis_len {
            return Err(Error::InvalidArgument(format!(
                "boundary offset must satisfy 0 < l < s/2, got l={offset} for s={axis_len}"
            )));
        }
        if !(0.0..=1.0).contains(&ratio) || !ratio.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "boundary ratio must be in [0, 1], got {ratio}"
            )));
        }
        Ok(Self {
            axis,
            axis_len,
            offset,
            ratio,
        })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn axis_len(&self) -> usize {
        self.axis_len
    }

    /// Distance `l` from the nearer real edge, in cells.
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Attenuation ratio lambda.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// The pair of boundary cells (window centers scaled in whole-patch
    /// mode): offsets `l` and `s - 1 - l`. They coincide on the midline.
    pub fn cell_offsets(&self) -> (usize, usize) {
        (self.offset, self.axis_len - 1 - self.offset)
    }

    /// The pair of zero-width inter-cell lines attenuated in cross-boundary
    /// mode: the interior-facing edges of the boundary cells, at positions
    /// `l + 1` and `s - 1 - l` (a line at `p` separates cells `p - 1` and
    /// `p`). For `s = 2l + 2` the two coincide at the midline.
    pub fn edge_positions(&self) -> (usize, usize) {
        (self.offset + 1, self.axis_len - 1 - self.offset)
    }
}

/// Where boundaries are placed for a 2-D map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axes {
    Both,
    RowsOnly,
    ColsOnly,
}

impl Axes {
    pub fn active(&self) -> &'static [Axis] {
        match self {
            Axes::Both => &[Axis::Rows, Axis::Cols],
            Axes::RowsOnly => &[Axis::Rows],
            Axes::ColsOnly => &[Axis::Cols],
        }
    }
}

/// A placed set of virtual boundaries plus its perturbation parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySet {
    boundaries: Vec<VirtualBoundary>,
    count_per_axis: usize,
    perturb_range: usize,
    seed: u64,
}

impl BoundarySet {
    pub fn empty() -> Self {
        Self {
            boundaries: Vec::new(),
            count_per_axis: 0,
            perturb_range: 0,
            seed: 0,
        }
    }

    pub fn from_boundaries(boundaries: Vec<VirtualBoundary>) -> Self {
        let count = boundaries.len();
        let mut set = Self {
            boundaries,
            count_per_axis: count,
            perturb_range: 0,
            seed: 0,
        };
        set.boundaries
            .sort_by_key(|b| (b.axis, b.offset, b.ratio.to_bits()));
        set
    }

    pub fn with_perturbation(mut self, range: usize, seed: u64) -> Self {
        self.perturb_range = range;
        self.seed = seed;
        self
    }

    pub fn boundaries(&self) -> &[VirtualBoundary] {
        &self.boundaries
    }

    pub fn count_per_axis(&self) -> usize {
        self.count_per_axis
    }

    pub fn perturb_range(&self) -> usize {
        self.perturb_range
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    fn check_geometry(&self, h: usize, w: usize) -> Result<()> {
        for b in &self.boundaries {
            let expected = match b.axis {
                Axis::Rows => h,
                Axis::Cols => w,
            };
            if b.axis_len != expected {
                return Err(Error::Geometry(format!(
                    "boundary on {:?} was placed for axis size {}, map has {expected}",
                    b.axis, b.axis_len
                )));
            }
        }
        Ok(())
    }

    /// Inter-cell attenuation lines per axis, deduplicated with the smaller
    /// ratio winning on collisions.
    fn edge_lines(&self, axis: Axis) -> Vec<(usize, f64)> {
        let mut lines: BTreeMap<usize, f64> = BTreeMap::new();
        for b in self.boundaries.iter().filter(|b| b.axis == axis) {
            let (a, bb) = b.edge_positions();
            for p in [a, bb] {
                lines
                    .entry(p)
                    .and_modify(|r| *r = r.min(b.ratio))
                    .or_insert(b.ratio);
            }
        }
        lines.into_iter().collect()
    }
}

/// Place `n` hierarchical boundaries per active axis: ratio
/// `lambda_k = k / (n + 1)` and offset `l_k = round(lambda_k * s / 2)`
/// (half-up), for k = 1..=n. The boundary nearest the edge carries the
/// smallest ratio.
pub fn place_boundaries(n: usize, h: usize, w: usize, axes: Axes) -> Result<BoundarySet> {
    let mut boundaries = Vec::new();
    for &axis in axes.active() {
        let s = match axis {
            Axis::Rows => h,
            Axis::Cols => w,
        };
        if 2 * n >= s {
            return Err(Error::InvalidArgument(format!(
                "{n} boundaries do not fit axis size {s} (need n < s/2)"
            )));
        }
        for k in 1..=n {
            let ratio = k as f64 / (n as f64 + 1.0);
            let offset = (ratio * s as f64 / 2.0 + 0.5).floor() as usize;
            boundaries.push(VirtualBoundary::new(axis, s, offset, ratio)?);
        }
    }
    let mut set = BoundarySet::from_boundaries(boundaries);
    set.count_per_axis = n;
    Ok(set)
}

fn clamp_offset(l: i64, axis_len: usize) -> usize {
    let hi = axis_len.div_ceil(2) - 1;
    l.clamp(1, hi.max(1) as i64) as usize
}

/// Shift every boundary offset by an independent uniform integer in
/// [-range, range], clamped to the valid band; ratios are untouched. The
/// draw sequence is fully determined by the caller's RNG state.
pub fn perturb<R: rand::Rng>(set: &BoundarySet, rng: &mut R) -> BoundarySet {
    if set.perturb_range == 0 {
        return set.clone();
    }
    let dist = Uniform::new_inclusive(-(set.perturb_range as i64), set.perturb_range as i64);
    let boundaries = set
        .boundaries
        .iter()
        .map(|b| {
            let delta = dist.sample(rng);
            VirtualBoundary {
                offset: clamp_offset(b.offset as i64 + delta, b.axis_len),
                ..*b
            }
        })
        .collect();
    BoundarySet {
        boundaries,
        count_per_axis: set.count_per_axis,
        perturb_range: set.perturb_range,
        seed: set.seed,
    }
}

/// Per-layer perturbation: one draw per boundary, seeded from
/// (set seed, layer index, boundary index) so runs replay layer by layer.
pub fn perturbed_for_layer(set: &BoundarySet, layer: usize) -> BoundarySet {
    if set.perturb_range == 0 {
        return set.clone();
    }
    let dist = Uniform::new_inclusive(-(set.perturb_range as i64), set.perturb_range as i64);
    let boundaries = set
        .boundaries
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(set.seed, &[layer as u64, i as u64]));
            let delta = dist.sample(&mut rng);
            VirtualBoundary {
                offset: clamp_offset(b.offset as i64 + delta, b.axis_len),
                ..*b
            }
        })
        .collect();
    BoundarySet {
        boundaries,
        count_per_axis: set.count_per_axis,
        perturb_range: set.perturb_range,
        seed: set.seed,
    }
}

/// Sliding-window positions whose window center sits on a boundary line,
/// grouped by ratio (ascending). Collisions are deduplicated with the
/// smaller ratio winning.
pub fn boundary_locations(
    set: &BoundarySet,
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
) -> Result<Vec<(f64, Vec<usize>)>> {
    set.check_geometry(h, w)?;
    if kernel == 0 || kernel > h || kernel > w || stride == 0 {
        return Err(Error::Geometry(format!(
            "unfold geometry K={kernel} S={stride} invalid for {h}x{w}"
        )));
    }
    let oh = (h - kernel) / stride + 1;
    let ow = (w - kernel) / stride + 1;
    let c0 = (kernel - 1) / 2;

    let mut column_ratio: BTreeMap<usize, f64> = BTreeMap::new();
    let mut mark = |col: usize, ratio: f64| {
        column_ratio
            .entry(col)
            .and_modify(|r| *r = r.min(ratio))
            .or_insert(ratio);
    };
    for b in &set.boundaries {
        let (la, lb) = b.cell_offsets();
        match b.axis {
            Axis::Rows => {
                for line in [la, lb] {
                    // Window centers at row `line`: ph * stride + c0 == line.
                    if line >= c0 && (line - c0).is_multiple_of(stride) {
                        let ph = (line - c0) / stride;
                        if ph < oh {
                            for pw in 0..ow {
                                mark(ph * ow + pw, b.ratio);
                            }
                        }
                    }
                }
            }
            Axis::Cols => {
                for line in [la, lb] {
                    if line >= c0 && (line - c0).is_multiple_of(stride) {
                        let pw = (line - c0) / stride;
                        if pw < ow {
                            for ph in 0..oh {
                                mark(ph * ow + pw, b.ratio);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut grouped: BTreeMap<u64, (f64, Vec<usize>)> = BTreeMap::new();
    for (col, ratio) in column_ratio {
        grouped
            .entry(ratio.to_bits())
            .or_insert_with(|| (ratio, Vec::new()))
            .1
            .push(col);
    }
    let mut out: Vec<(f64, Vec<usize>)> = grouped.into_values().collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ratios are finite"));
    Ok(out)
}

/// Whole-patch PBC (the published pseudo-code semantics): unfold, scale the
/// patches at boundary locations by their ratios, fold back, and normalize
/// by the overlap counts. An empty set returns the input unchanged.
pub fn apply_pbc_wholepatch(
    f: &FeatureMap,
    set: &BoundarySet,
    kernel: usize,
    stride: usize,
) -> Result<FeatureMap> {
    if set.is_empty() {
        return Ok(f.clone());
    }
    let (_, _, h, w) = f.dims();
    let locations = boundary_locations(set, h, w, kernel, stride)?;
    let mut patches = unfold(f, kernel, stride)?;
    for (ratio, columns) in &locations {
        for &col in columns {
            patches.scale_column(col, *ratio as f32);
        }
    }
    fold_normalized(&patches)
}

/// Cross-boundary PBC (the literal valued-padding semantics): convolution in
/// which any window read crossing a boundary's edge line is multiplied by
/// its ratio, in both directions. All ratios 1 reduces to plain conv2d;
/// ratio 0 reduces to trench behavior on the same lines.
pub fn apply_pbc_crossboundary(
    f: &FeatureMap,
    set: &BoundarySet,
    spec: &ConvSpec,
) -> Result<FeatureMap> {
    let (_, _, h, w) = f.dims();
    if set.is_empty() {
        return conv2d(f, spec);
    }
    set.check_geometry(h, w)?;
    let row_scales = crossing_factors(
        spec.kernel(),
        h,
        spec.dilation(),
        &set.edge_lines(Axis::Rows),
    );
    let col_scales = crossing_factors(
        spec.kernel(),
        w,
        spec.dilation(),
        &set.edge_lines(Axis::Cols),
    );
    conv2d_scaled(f, spec, &row_scales, &col_scales)
}

/// How PBC is applied inside a feature network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PbcMode {
    WholePatch,
    CrossBoundary,
}

impl PbcMode {
    pub fn name(&self) -> &'static str {
        match self {
            PbcMode::WholePatch => "wholepatch",
            PbcMode::CrossBoundary => "crossboundary",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wholepatch" => Ok(PbcMode::WholePatch),
            "crossboundary" => Ok(PbcMode::CrossBoundary),
            other => Err(Error::InvalidArgument(format!(
                "unknown pbc mode '{other}' (expected wholepatch|crossboundary)"
            ))),
        }
    }
}

/// Full PBC configuration for a feature network.
#[derive(Clone, Debug)]
pub struct PbcConfig {
    pub count_per_axis: usize,
    pub axes: Axes,
    pub mode: PbcMode,
    pub kernel: usize,
    pub stride: usize,
    pub perturb_range: usize,
    pub seed: u64,
    /// Apply PBC only to the first `n` layers; `None` means every layer.
    pub layer_limit: Option<usize>,
}

impl PbcConfig {
    pub fn new(count_per_axis: usize) -> Self {
        Self {
            count_per_axis,
            axes: Axes::Both,
            mode: PbcMode::WholePatch,
            kernel: 3,
            stride: 1,
            perturb_range: 0,
            seed: 0,
            layer_limit: None,
        }
    }

    pub fn with_mode(mut self, mode: PbcMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_axes(mut self, axes: Axes) -> Self {
        self.axes = axes;
        self
    }

    pub fn with_perturbation(mut self, range: usize, seed: u64) -> Self {
        self.perturb_range = range;
        self.seed = seed;
        self
    }

    pub fn applies_to_layer(&self, layer: usize) -> bool {
        match self.layer_limit {
            Some(limit) => layer < limit,
            None => true,
        }
    }

    pub fn place(&self, h: usize, w: usize) -> Result<BoundarySet> {
        Ok(place_boundaries(self.count_per_axis, h, w, self.axes)?
            .with_perturbation(self.perturb_range, self.seed))
    }
}
