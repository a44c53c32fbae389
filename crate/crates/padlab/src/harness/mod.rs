//! Experiment harness: runs the position-encoding ablation grids at desk
//! scale and emits machine-readable tables plus feature visualizations.

mod config;
mod experiments;
mod report;

pub use config::{parse_f64_list, parse_key_values, parse_usize_list, ExperimentConfig, SolverKind};
pub use experiments::{
    compute_features, run_lambda_ablation, run_n_ablation, run_padding_ablation,
    run_resolution_grid, run_richness, DumpIntervention,
};
pub use report::{ExperimentReport, LossRow, ReportFormat, RichnessRow, Rows};

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pnm::{write_pgm, write_ppm};
use crate::richness::Image;
use crate::seeds::derive;
use crate::tensor::FeatureMap;

/// Write the per-position channel-L2 magnitude of a feature map as an 8-bit
/// binary PGM, min-max normalized; the normalization bounds go to a sidecar
/// text file at `<path>.bounds.txt`.
pub fn dump_feature_map(features: &FeatureMap, path: &Path) -> Result<()> {
    let (_, c, h, w) = features.dims();
    let mut magnitudes = vec![0.0f64; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0f64;
            for ch in 0..c {
                let v = features.get(0, ch, i, j) as f64;
                acc += v * v;
            }
            magnitudes[i * w + j] = acc.sqrt();
        }
    }
    let min = magnitudes.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = magnitudes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let pixels: Vec<u8> = magnitudes
        .iter()
        .map(|&m| {
            if span <= 0.0 {
                0
            } else {
                ((m - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_pgm(path, w, h, &pixels)?;
    let sidecar = PathBuf::from(format!("{}.bounds.txt", path.display()));
    std::fs::write(sidecar, format!("min={min}\nmax={max}\n"))?;
    Ok(())
}

/// Synthesize the richness test images: a solid mid-gray image, a 2x2-tiled
/// repetition of one seeded pattern, and a per-pixel noise image. Returns the
/// three paths (solid, tiled, noise).
pub fn gen_test_images(dir: &Path, size: usize, seed: u64) -> Result<Vec<PathBuf>> {
    if size < 6 || !size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "image size must be even and >= 6, got {size}"
        )));
    }
    std::fs::create_dir_all(dir)?;

    let solid = Image::solid(size, size, [0.5, 0.5, 0.5])?;

    let half = size / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[experiments::TAG_IMAGES, 1]));
    let tile: Vec<f32> = (0..3 * half * half).map(|_| rng.gen::<f32>()).collect();
    let mut tiled_data = vec![0.0f32; 3 * size * size];
    for c in 0..3 {
        for i in 0..size {
            for j in 0..size {
                tiled_data[(c * size + i) * size + j] =
                    tile[(c * half + i % half) * half + j % half];
            }
        }
    }
    let tiled = Image::new(size, size, tiled_data)?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[experiments::TAG_IMAGES, 2]));
    let noise_data: Vec<f32> = (0..3 * size * size).map(|_| rng.gen::<f32>()).collect();
    let noise = Image::new(size, size, noise_data)?;

    let paths = vec![
        dir.join("solid.ppm"),
        dir.join("tiled.ppm"),
        dir.join("noise.ppm"),
    ];
    write_ppm(&paths[0], &solid)?;
    write_ppm(&paths[1], &tiled)?;
    write_ppm(&paths[2], &noise)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbc::{apply_pbc_wholepatch, BoundarySet, VirtualBoundary};
    use crate::pnm::read_pgm;
    use crate::richness::{content_richness, StatsEmbedder};
    use crate::tensor::Axis;

    fn tmp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("padlab-harness-tests").join(name);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn constant_features_dump_uniformly() {
        let f = FeatureMap::new(1, 4, 6, 5, vec![0.7; 4 * 30]).unwrap();
        let path = tmp_dir("dump").join("constant.pgm");
        dump_feature_map(&f, &path).unwrap();
        let (w, h, pixels) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (5, 6));
        assert!(pixels.iter().all(|&p| p == pixels[0]));
        let bounds =
            std::fs::read_to_string(format!("{}.bounds.txt", path.display())).unwrap();
        assert!(bounds.contains("min=") && bounds.contains("max="));
    }

    #[test]
    fn boundary_columns_show_as_dark_lines() {
        let f = FeatureMap::new(1, 2, 8, 8, vec![1.0; 2 * 64]).unwrap();
        let set = BoundarySet::from_boundaries(vec![
            VirtualBoundary::new(Axis::Cols, 8, 2, 0.0).unwrap()
        ]);
        let scaled = apply_pbc_wholepatch(&f, &set, 1, 1).unwrap();
        let path = tmp_dir("dump").join("lines.pgm");
        dump_feature_map(&scaled, &path).unwrap();
        let (w, _, pixels) = read_pgm(&path).unwrap();
        for i in 0..8 {
            assert_eq!(pixels[i * w + 2], 0, "boundary column dark");
            assert_eq!(pixels[i * w + 5], 0, "mirror column dark");
            assert_eq!(pixels[i * w], 255, "plain column bright");
        }
    }

    #[test]
    fn generated_images_have_the_expected_richness_ordering() {
        let dir = tmp_dir("genimg");
        let paths = gen_test_images(&dir, 24, 7).unwrap();
        let solid = crate::pnm::read_ppm(&paths[0]).unwrap();
        let tiled = crate::pnm::read_ppm(&paths[1]).unwrap();
        let noise = crate::pnm::read_ppm(&paths[2]).unwrap();
        let s_solid = content_richness(&solid, 3, &StatsEmbedder).unwrap().s;
        let s_tiled = content_richness(&tiled, 2, &StatsEmbedder).unwrap().s;
        let s_noise = content_richness(&noise, 2, &StatsEmbedder).unwrap().s;
        assert_eq!(s_solid, 72.0);
        assert!(
            s_tiled > s_noise,
            "tiled {s_tiled} must exceed noise {s_noise}"
        );
    }

    #[test]
    fn richness_run_skips_bad_files_and_continues() {
        let dir = tmp_dir("richrun");
        let good = gen_test_images(&dir, 12, 1).unwrap();
        let bad = dir.join("broken.ppm");
        std::fs::write(&bad, b"not a ppm").unwrap();
        let all = vec![good[0].clone(), bad.clone(), good[2].clone()];
        let (report, failures) = run_richness(&all, 3, "stats", None).unwrap();
        match &report.rows {
            Rows::Richness(rows) => assert_eq!(rows.len(), 2),
            _ => panic!("wrong row type"),
        }
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].0, bad);
    }
}
