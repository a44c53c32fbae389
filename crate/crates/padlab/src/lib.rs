//! padlab: a convolution-padding laboratory.
//!
//! Convolutional networks with no explicit positional embedding still know
//! where they are: zero padding at the feature-map border injects absolute
//! position information, and stacked convolutions propagate it inward. This
//! crate provides the pieces to measure and manipulate that mechanism at
//! desk scale:
//!
//! * [`tensor`] — deterministic dense convolution with selectable padding
//!   modes and dilation, plus the unfold/fold (patch extraction /
//!   overlap-add) pair;
//! * [`padmodes`] — diagnostic interventions: trench-style interior zero
//!   boundaries and unidirectional region padding;
//! * [`pbc`] — Progressive Boundary Complement: hierarchical virtual
//!   boundaries with valued-padding ratios, random position perturbation,
//!   and whole-patch / cross-boundary application;
//! * [`featnet`] — a seeded toy conv-ReLU stack standing in for a U-Net's
//!   feature extractor;
//! * [`probe`] — the position-information quantifier: a single affine map
//!   fitted from features to normalized coordinates, by exact ridge
//!   regression or full-batch Adam/SGD;
//! * [`richness`] — the Content Richness score: pairwise cosine similarity
//!   across image patches;
//! * [`harness`] — reproducible experiment grids with CSV/JSON reports;
//! * [`pnm`] — binary PPM/PGM image I/O.
//!
//! The `examples/` directory shows each capability end to end; the `padlab`
//! binary exposes the experiment harness as a CLI.

// Index arithmetic is the clearer idiom in the dense numeric loops here.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod featnet;
pub mod harness;
pub mod padmodes;
pub mod pbc;
pub mod pnm;
pub mod probe;
pub mod richness;
mod seeds;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Axis, ConvSpec, FeatureMap, PaddingMode};
