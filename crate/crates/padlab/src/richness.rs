//! Content Richness: partition an image into k^2 equal patches, embed each
//! patch, and sum the pairwise cosine similarities over ordered pairs. Lower
//! S means more diverse content; duplicated patches drive S to its maximum
//! k^2 * (k^2 - 1).

use crate::error::{Error, Result};

/// RGB image, (3, H, W) row-major, values clamped to [0, 1] on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ShapeMismatch("image dims must be >= 1".into()));
        }
        if data.len() != 3 * height * width {
            return Err(Error::ShapeMismatch(format!(
                "image data length {} != {}",
                data.len(),
                3 * height * width
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("image contains NaN/Inf".into()));
        }
        Ok(Self {
            height,
            width,
            data: data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        })
    }

    pub fn solid(height: usize, width: usize, rgb: [f32; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * height * width);
        for c in 0..3 {
            data.extend(std::iter::repeat_n(rgb[c], height * width));
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, channel: usize, i: usize, j: usize) -> f32 {
        self.data[(channel * self.height + i) * self.width + j]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Image {
        let mut data = Vec::with_capacity(3 * height * width);
        for c in 0..3 {
            for i in 0..height {
                for j in 0..width {
                    data.push(self.get(c, top + i, left + j));
                }
            }
        }
        Image {
            height,
            width,
            data,
        }
    }
}

/// Deterministic patch -> vector embedding.
pub trait PatchEmbedder {
    fn embed(&self, patch: &Image) -> Vec<f64>;
    fn name(&self) -> &'static str;
}

/// Per-channel mean and standard deviation plus an 8-bin histogram of
/// luminance gradient magnitudes (length 14).
pub struct StatsEmbedder;

impl PatchEmbedder for StatsEmbedder {
    fn embed(&self, patch: &Image) -> Vec<f64> {
        let (h, w) = (patch.height(), patch.width());
        let n = (h * w) as f64;
        let mut out = Vec::with_capacity(14);
        for c in 0..3 {
            let mut sum = 0.0f64;
            let mut sum2 = 0.0f64;
            for i in 0..h {
                for j in 0..w {
                    let v = patch.get(c, i, j) as f64;
                    sum += v;
                    sum2 += v * v;
                }
            }
            let mean = sum / n;
            out.push(mean);
            out.push((sum2 / n - mean * mean).max(0.0).sqrt());
        }
        // Reorder to means then stds, per channel groups.
        let (means, stds): (Vec<f64>, Vec<f64>) = out
            .chunks(2)
            .map(|pair| (pair[0], pair[1]))
            .unzip();
        let mut vec = means;
        vec.extend(stds);

        let luma =
            |i: usize, j: usize| -> f64 {
                0.299 * patch.get(0, i, j) as f64
                    + 0.587 * patch.get(1, i, j) as f64
                    + 0.114 * patch.get(2, i, j) as f64
            };
        let mut bins = [0.0f64; 8];
        let mut samples = 0usize;
        let max_mag = std::f64::consts::SQRT_2;
        for i in 0..h.saturating_sub(1) {
            for j in 0..w.saturating_sub(1) {
                let gx = luma(i, j + 1) - luma(i, j);
                let gy = luma(i + 1, j) - luma(i, j);
                let mag = (gx * gx + gy * gy).sqrt();
                let bin = ((mag / max_mag) * 8.0).floor() as usize;
                bins[bin.min(7)] += 1.0;
                samples += 1;
            }
        }
        if samples > 0 {
            bins.iter_mut().for_each(|b| *b /= samples as f64);
        }
        vec.extend(bins);
        vec
    }

    fn name(&self) -> &'static str {
        "stats"
    }
}

/// 4 x 4 x 4 RGB color histogram, L1-normalized (length 64).
pub struct HistogramEmbedder;

impl PatchEmbedder for HistogramEmbedder {
    fn embed(&self, patch: &Image) -> Vec<f64> {
        let (h, w) = (patch.height(), patch.width());
        let mut bins = vec![0.0f64; 64];
        for i in 0..h {
            for j in 0..w {
                let quantize = |v: f32| ((v * 4.0).floor() as usize).min(3);
                let idx = quantize(patch.get(0, i, j)) * 16
                    + quantize(patch.get(1, i, j)) * 4
                    + quantize(patch.get(2, i, j));
                bins[idx] += 1.0;
            }
        }
        let total = (h * w) as f64;
        bins.iter_mut().for_each(|b| *b /= total);
        bins
    }

    fn name(&self) -> &'static str {
        "histogram"
    }
}

pub fn embedder_by_name(name: &str) -> Result<Box<dyn PatchEmbedder>> {
    match name {
        "stats" => Ok(Box::new(StatsEmbedder)),
        "histogram" => Ok(Box::new(HistogramEmbedder)),
        other => Err(Error::InvalidArgument(format!(
            "unknown embedder '{other}' (expected stats|histogram)"
        ))),
    }
}

/// Row-major grid of floor(H/k) x floor(W/k) patches; trailing remainder
/// rows/columns are dropped.
pub fn partition(image: &Image, k: usize) -> Result<Vec<Image>> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    if image.height() < k || image.width() < k {
        return Err(Error::InvalidArgument(format!(
            "k={k} exceeds image size {}x{}",
            image.height(),
            image.width()
        )));
    }
    let ph = image.height() / k;
    let pw = image.width() / k;
    let mut patches = Vec::with_capacity(k * k);
    for gi in 0..k {
        for gj in 0..k {
            patches.push(image.crop(gi * ph, gj * pw, ph, pw));
        }
    }
    Ok(patches)
}

/// Sum of pairwise cosine similarities over ordered pairs (i, j), i != j,
/// plus the full cosine matrix. Denominators are guarded below 1e-12 so the
/// zero vector scores zero against everything.
pub fn pairwise_similarity_sum(embeddings: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let m = embeddings.len();
    let norms: Vec<f64> = embeddings
        .iter()
        .map(|e| e.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut matrix = vec![0.0f64; m * m];
    let mut s = 0.0f64;
    for i in 0..m {
        matrix[i * m + i] = 1.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            // Identical nonzero embeddings score exactly 1; duplicated
            // patches must sum to exactly k^2 * (k^2 - 1).
            let cos = if norms[i] > 0.0 && embeddings[i] == embeddings[j] {
                1.0
            } else {
                let dot: f64 = embeddings[i]
                    .iter()
                    .zip(&embeddings[j])
                    .map(|(a, b)| a * b)
                    .sum();
                dot / (norms[i] * norms[j]).max(1e-12)
            };
            matrix[i * m + j] = cos;
            s += cos;
        }
    }
    (s, matrix)
}

/// Content Richness report: k, the score S, and the cosine matrix.
#[derive(Clone, Debug)]
pub struct RichnessReport {
    pub k: usize,
    pub s: f64,
    pub pairwise: Vec<f64>, // (k^2, k^2) row-major, unit diagonal
}

impl RichnessReport {
    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        self.pairwise[i * self.k * self.k + j]
    }
}

pub fn content_richness(
    image: &Image,
    k: usize,
    embedder: &dyn PatchEmbedder,
) -> Result<RichnessReport> {
    let patches = partition(image, k)?;
    let embeddings: Vec<Vec<f64>> = patches.iter().map(|p| embedder.embed(p)).collect();
    let (s, pairwise) = pairwise_similarity_sum(&embeddings);
    Ok(RichnessReport { k, s, pairwise })
}
