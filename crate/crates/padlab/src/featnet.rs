//! Deterministic toy convolutional feature network: a stack of
//! (PBC?, conv, ReLU) stages with random untrained weights. Stands in for a
//! U-Net's final feature layer as the substrate on which padding modes,
//! dilation, and PBC are compared.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::pbc::{apply_pbc_crossboundary, apply_pbc_wholepatch, perturbed_for_layer, PbcConfig, PbcMode};
use crate::seeds::derive;
use crate::tensor::{conv2d, ConvSpec, FeatureMap, PaddingMode};

/// Toy network shape and seeding.
#[derive(Clone, Debug)]
pub struct ToyNetConfig {
    pub depth: usize,
    pub channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
    pub seed: u64,
    pub padding: PaddingMode,
    /// Dilation per layer; must have `depth` entries.
    pub dilations: Vec<usize>,
    pub pbc: Option<PbcConfig>,
}

impl ToyNetConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            depth: 8,
            channels: 16,
            in_channels: 4,
            kernel: 3,
            seed,
            padding: PaddingMode::Zero,
            dilations: vec![1; 8],
            pbc: None,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self.dilations = vec![1; depth];
        self
    }

    pub fn with_channels(mut self, channels: usize) -> Self {
        self.channels = channels;
        self
    }

    pub fn with_padding(mut self, padding: PaddingMode) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_dilations(mut self, dilations: Vec<usize>) -> Self {
        self.dilations = dilations;
        self
    }

    pub fn with_pbc(mut self, pbc: PbcConfig) -> Self {
        self.pbc = Some(pbc);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.channels == 0 || self.in_channels == 0 {
            return Err(Error::InvalidArgument(
                "depth and channel counts must be >= 1".into(),
            ));
        }
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return Err(Error::InvalidArgument("kernel must be odd".into()));
        }
        if self.dilations.len() != self.depth {
            return Err(Error::InvalidArgument(format!(
                "need one dilation per layer: {} dilations for depth {}",
                self.dilations.len(),
                self.depth
            )));
        }
        if self.dilations.contains(&0) {
            return Err(Error::InvalidArgument("dilations must be >= 1".into()));
        }
        Ok(())
    }
}

/// An immutable toy network: weights drawn once from the config seed.
#[derive(Clone, Debug)]
pub struct ToyNet {
    layers: Vec<ConvSpec>,
    config: ToyNetConfig,
}

/// Draw layer weights i.i.d. zero-mean with scale 1/sqrt(C_in * K^2) and zero
/// biases. The same seed always yields the same network.
pub fn build_toynet(config: &ToyNetConfig) -> Result<ToyNet> {
    config.validate()?;
    let k = config.kernel;
    let mut rng = ChaCha8Rng::seed_from_u64(derive(config.seed, &[0x77E1]));
    let mut layers = Vec::with_capacity(config.depth);
    for layer in 0..config.depth {
        let c_in = if layer == 0 {
            config.in_channels
        } else {
            config.channels
        };
        let scale = 1.0 / ((c_in * k * k) as f64).sqrt();
        let normal = Normal::new(0.0, scale).expect("scale is positive");
        let weights: Vec<f32> = (0..config.channels * c_in * k * k)
            .map(|_| normal.sample(&mut rng) as f32)
            .collect();
        layers.push(ConvSpec::new(
            c_in,
            config.channels,
            k,
            config.dilations[layer],
            config.padding,
            weights,
            vec![0.0; config.channels],
        )?);
    }
    Ok(ToyNet {
        layers,
        config: config.clone(),
    })
}

impl ToyNet {
    pub fn config(&self) -> &ToyNetConfig {
        &self.config
    }

    pub fn layers(&self) -> &[ConvSpec] {
        &self.layers
    }

    /// Chebyshev radius within which one input cell can influence an output
    /// cell: sum over layers of d_l * (K - 1) / 2.
    pub fn receptive_radius(&self) -> usize {
        self.layers.iter().map(|l| l.pad_amount()).sum()
    }
}

fn relu(f: &FeatureMap) -> Result<FeatureMap> {
    f.map(|v| v.max(0.0))
}

/// Forward pass with a custom convolution stage per layer: `stage` receives
/// (layer index, activations, layer spec) and returns the pre-ReLU output.
/// This is the hook the experiment harness uses to splice interventions into
/// individual layers.
pub fn forward_with<F>(net: &ToyNet, input: &FeatureMap, mut stage: F) -> Result<FeatureMap>
where
    F: FnMut(usize, &FeatureMap, &ConvSpec) -> Result<FeatureMap>,
{
    let (_, c, _, _) = input.dims();
    if c != net.config.in_channels {
        return Err(Error::ShapeMismatch(format!(
            "input has {c} channels, network expects {}",
            net.config.in_channels
        )));
    }
    let mut x = input.clone();
    for (idx, layer) in net.layers.iter().enumerate() {
        x = relu(&stage(idx, &x, layer)?)?;
    }
    Ok(x)
}

/// Forward pass: depth alternating (PBC?, conv, ReLU) stages. Spatial size is
/// preserved; output has `channels` channels.
pub fn forward(net: &ToyNet, input: &FeatureMap) -> Result<FeatureMap> {
    let (_, _, h, w) = input.dims();
    let pbc_set = match &net.config.pbc {
        Some(cfg) if cfg.count_per_axis > 0 => Some((cfg, cfg.place(h, w)?)),
        _ => None,
    };
    forward_with(net, input, |idx, x, layer| match &pbc_set {
        Some((cfg, set)) if cfg.applies_to_layer(idx) => {
            let layer_set = perturbed_for_layer(set, idx);
            match cfg.mode {
                PbcMode::WholePatch => {
                    let complemented =
                        apply_pbc_wholepatch(x, &layer_set, cfg.kernel, cfg.stride)?;
                    conv2d(&complemented, layer)
                }
                PbcMode::CrossBoundary => apply_pbc_crossboundary(x, &layer_set, layer),
            }
        }
        _ => conv2d(x, layer),
    })
}

/// Seeded latent input: `mean + std * N(0, 1)` per cell, shape
/// (1, in_channels, h, w).
pub fn seeded_latent(
    seed: u64,
    in_channels: usize,
    h: usize,
    w: usize,
    mean: f32,
    std: f32,
) -> Result<FeatureMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[0x1A7E]));
    let normal = Normal::new(0.0f64, 1.0).expect("unit normal");
    let data = (0..in_channels * h * w)
        .map(|_| mean + std * normal.sample(&mut rng) as f32)
        .collect();
    FeatureMap::new(1, in_channels, h, w, data)
}
