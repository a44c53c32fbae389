//! Border padding. The only place in the crate where out-of-bounds reads are
//! given values; convolution and unfold both route through here or through
//! the same index resolution.

use super::FeatureMap;
use crate::error::{Error, Result};

/// How values outside the feature map are defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PaddingMode {
    /// Outside reads are 0; the source of absolute position information.
    Zero,
    /// Mirror across the edge without repeating the edge cell.
    Reflect,
    /// Repeat the edge cell.
    Replicate,
    /// Wrap around torus-style; destroys absolute position.
    Circular,
}

impl PaddingMode {
    pub const ALL: [PaddingMode; 4] = [
        PaddingMode::Zero,
        PaddingMode::Reflect,
        PaddingMode::Replicate,
        PaddingMode::Circular,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PaddingMode::Zero => "zero",
            PaddingMode::Reflect => "reflect",
            PaddingMode::Replicate => "replicate",
            PaddingMode::Circular => "circular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(PaddingMode::Zero),
            "reflect" => Ok(PaddingMode::Reflect),
            "replicate" => Ok(PaddingMode::Replicate),
            "circular" => Ok(PaddingMode::Circular),
            other => Err(Error::InvalidArgument(format!(
                "unknown padding mode '{other}' (expected zero|reflect|replicate|circular)"
            ))),
        }
    }
}

/// Resolve a possibly out-of-range index to a source index, or `None` for a
/// zero read.
#[inline]
pub(crate) fn resolve_index(idx: isize, n: usize, mode: PaddingMode) -> Option<usize> {
    if idx >= 0 && (idx as usize) < n {
        return Some(idx as usize);
    }
    let n_i = n as isize;
    match mode {
        PaddingMode::Zero => None,
        PaddingMode::Replicate => Some(idx.clamp(0, n_i - 1) as usize),
        PaddingMode::Circular => Some(idx.rem_euclid(n_i) as usize),
        PaddingMode::Reflect => {
            let mut x = idx;
            while x < 0 || x >= n_i {
                if x < 0 {
                    x = -x;
                }
                if x >= n_i {
                    x = 2 * (n_i - 1) - x;
                }
            }
            Some(x as usize)
        }
    }
}

/// Pad by `amount.0` rows on top/bottom and `amount.1` columns on left/right.
/// The interior equals the input bit-exactly; the border follows `mode`.
pub fn pad(f: &FeatureMap, mode: PaddingMode, amount: (usize, usize)) -> Result<FeatureMap> {
    let (b, c, h, w) = f.dims();
    let (av, ah) = amount;
    match mode {
        PaddingMode::Reflect => {
            if av >= h || ah >= w {
                return Err(Error::InvalidArgument(format!(
                    "reflect padding needs amount < map size, got ({av}, {ah}) for {h}x{w}"
                )));
            }
        }
        PaddingMode::Circular
            if (av > h || ah > w) => {
                return Err(Error::InvalidArgument(format!(
                    "circular padding needs amount <= map size, got ({av}, {ah}) for {h}x{w}"
                )));
            }
        _ => {}
    }
    FeatureMap::from_fn(b, c, h + 2 * av, w + 2 * ah, |bb, cc, i, j| {
        let src_i = resolve_index(i as isize - av as isize, h, mode);
        let src_j = resolve_index(j as isize - ah as isize, w, mode);
        match (src_i, src_j) {
            (Some(si), Some(sj)) => f.get(bb, cc, si, sj),
            _ => 0.0,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[f32]) -> FeatureMap {
        FeatureMap::new(1, 1, 1, values.len(), values.to_vec()).unwrap()
    }

    #[test]
    fn zero_pad_single_cell() {
        let f = FeatureMap::new(1, 1, 1, 1, vec![5.0]).unwrap();
        let p = pad(&f, PaddingMode::Zero, (1, 1)).unwrap();
        assert_eq!(p.dims(), (1, 1, 3, 3));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == 1 && j == 1 { 5.0 } else { 0.0 };
                assert_eq!(p.get(0, 0, i, j), expect);
            }
        }
    }

    #[test]
    fn circular_wraps() {
        let p = pad(&row(&[1.0, 2.0, 3.0]), PaddingMode::Circular, (0, 1)).unwrap();
        assert_eq!(p.data(), &[3.0, 1.0, 2.0, 3.0, 1.0]);
    }

    #[test]
    fn replicate_repeats_edges() {
        let p = pad(&row(&[1.0, 2.0, 3.0]), PaddingMode::Replicate, (0, 1)).unwrap();
        assert_eq!(p.data(), &[1.0, 1.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn reflect_mirrors_without_edge_repeat() {
        let p = pad(&row(&[1.0, 2.0, 3.0]), PaddingMode::Reflect, (0, 2)).unwrap();
        assert_eq!(p.data(), &[3.0, 2.0, 1.0, 2.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn reflect_rejects_amount_at_size() {
        let f = row(&[1.0, 2.0, 3.0]);
        assert!(pad(&f, PaddingMode::Reflect, (0, 3)).is_err());
        assert!(pad(&f, PaddingMode::Reflect, (1, 0)).is_err());
    }

    #[test]
    fn circular_rejects_amount_beyond_size() {
        let f = row(&[1.0, 2.0, 3.0]);
        assert!(pad(&f, PaddingMode::Circular, (0, 4)).is_err());
        assert!(pad(&f, PaddingMode::Circular, (0, 3)).is_ok());
    }

    #[test]
    fn interior_preserved_bit_exactly() {
        let f = FeatureMap::from_fn(2, 3, 4, 5, |b, c, i, j| {
            (b as f32 + 1.0) * 0.37 + (c as f32) * 1.7 - (i as f32) * 0.11 + (j as f32) * 0.013
        })
        .unwrap();
        for mode in PaddingMode::ALL {
            let p = pad(&f, mode, (2, 3)).unwrap();
            for b in 0..2 {
                for c in 0..3 {
                    for i in 0..4 {
                        for j in 0..5 {
                            assert_eq!(p.get(b, c, i + 2, j + 3), f.get(b, c, i, j), "{mode:?}");
                        }
                    }
                }
            }
        }
    }
}
