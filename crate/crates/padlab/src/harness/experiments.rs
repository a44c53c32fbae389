//! The experiment grids: padding-type ablation, resolution/central-region
//! grid, lambda ablation, boundary-count ablation, and richness scoring.
//! Every run is a pure function of its configuration; identical configs give
//! byte-identical reports.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::featnet::{build_toynet, forward, forward_with, seeded_latent, ToyNet, ToyNetConfig};
use crate::padmodes::{conv2d_with_region, conv2d_with_trenches, RegionSpec, TrenchSpec};
use crate::pbc::{
    apply_pbc_crossboundary, apply_pbc_wholepatch, perturbed_for_layer, Axes, BoundarySet,
    PbcConfig, PbcMode, VirtualBoundary,
};
use crate::pnm::read_ppm;
use crate::probe::{
    eval_region, fit_closed_form, fit_iterative, make_position_map, FitConfig, ProbeResult,
    Region, Solver,
};
use crate::richness::{content_richness, embedder_by_name};
use crate::seeds::derive;
use crate::tensor::{Axis, FeatureMap, PaddingMode};

use super::config::{ExperimentConfig, SolverKind};
use super::report::{mean_std, ExperimentReport, LossRow, RichnessRow, Rows};

const TAG_WEIGHTS: u64 = 1;
const TAG_LATENT: u64 = 2;
const TAG_RANDOM_FEATURES: u64 = 3;
const TAG_PBC: u64 = 4;
pub(crate) const TAG_IMAGES: u64 = 5;

fn toynet_for(
    cfg: &ExperimentConfig,
    seed: u64,
    padding: PaddingMode,
    dilation_multiplier: usize,
    pbc: Option<PbcConfig>,
) -> Result<ToyNet> {
    let dilations = cfg
        .layer_dilations()
        .into_iter()
        .map(|d| d * dilation_multiplier)
        .collect();
    let net_cfg = ToyNetConfig {
        depth: cfg.depth,
        channels: cfg.channels,
        in_channels: cfg.in_channels,
        kernel: cfg.kernel,
        seed: derive(seed, &[TAG_WEIGHTS]),
        padding,
        dilations,
        pbc,
    };
    build_toynet(&net_cfg)
}

fn latent_for(cfg: &ExperimentConfig, seed: u64, size: usize) -> Result<FeatureMap> {
    seeded_latent(
        derive(seed, &[TAG_LATENT]),
        cfg.in_channels,
        size,
        size,
        cfg.latent_mean,
        cfg.latent_std,
    )
}

/// Independent-noise features for the random-feature floor rows.
fn random_features(cfg: &ExperimentConfig, seed: u64, size: usize) -> Result<FeatureMap> {
    seeded_latent(
        derive(seed, &[TAG_RANDOM_FEATURES]),
        cfg.channels,
        size,
        size,
        0.0,
        1.0,
    )
}

fn fit_probe(cfg: &ExperimentConfig, features: &FeatureMap) -> Result<ProbeResult> {
    let (_, _, h, w) = features.dims();
    let target = make_position_map(h, w)?;
    match cfg.solver {
        SolverKind::Closed => fit_closed_form(features, &target, cfg.ridge),
        SolverKind::Adam => fit_iterative(
            features,
            &target,
            &FitConfig {
                solver: Solver::adam(cfg.adam_lr, cfg.adam_iterations),
            },
        ),
    }
}

fn pbc_config(cfg: &ExperimentConfig, mode: PbcMode, n: usize, seed: u64) -> PbcConfig {
    PbcConfig {
        count_per_axis: n,
        axes: Axes::Both,
        mode,
        kernel: 3,
        stride: 1,
        perturb_range: cfg.perturb_range,
        seed: derive(seed, &[TAG_PBC]),
        layer_limit: None,
    }
}

/// Per-layer intervention applied during a feature dump.
#[derive(Clone, Debug, Default)]
pub enum DumpIntervention {
    #[default]
    None,
    /// PBC with the config's boundary count, in the given mode.
    Pbc(PbcMode),
    /// Trench lines applied to every layer's convolution.
    Trenches(Vec<TrenchSpec>),
    /// A unidirectional attenuated region applied to every layer.
    Region(RegionSpec, f64),
}

/// One toy-net forward at the given size: the building block the grid rows
/// and the feature-dump command share.
pub fn compute_features(
    cfg: &ExperimentConfig,
    seed: u64,
    size: usize,
    padding: PaddingMode,
    dilation_multiplier: usize,
    intervention: &DumpIntervention,
) -> Result<FeatureMap> {
    let pbc = match intervention {
        DumpIntervention::Pbc(mode) => Some(pbc_config(cfg, *mode, cfg.n_boundaries, seed)),
        _ => None,
    };
    let net = toynet_for(cfg, seed, padding, dilation_multiplier, pbc)?;
    let input = latent_for(cfg, seed, size)?;
    match intervention {
        DumpIntervention::None | DumpIntervention::Pbc(_) => forward(&net, &input),
        DumpIntervention::Trenches(trenches) => forward_with(&net, &input, |_, x, layer| {
            conv2d_with_trenches(x, layer, trenches)
        }),
        DumpIntervention::Region(region, lambda) => forward_with(&net, &input, |_, x, layer| {
            conv2d_with_region(x, layer, region, *lambda)
        }),
    }
}

fn loss_row(
    cfg: &ExperimentConfig,
    experiment: &str,
    label: &str,
    size: usize,
    region: &str,
    losses: &[f64],
) -> LossRow {
    let (mean, std) = mean_std(losses);
    LossRow {
        experiment: experiment.into(),
        label: label.into(),
        size,
        region: region.into(),
        seed_count: cfg.seed_count,
        loss_mean: mean,
        loss_std: std,
    }
}

/// Probe loss per padding mode at the base size, plus a random-feature floor
/// row.
pub fn run_padding_ablation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let size = cfg.base_size()?;
    let name = "padding-ablation";
    let mut rows = Vec::new();
    for mode in PaddingMode::ALL {
        let mut losses = Vec::new();
        for seed in cfg.seeds() {
            let net = toynet_for(cfg, seed, mode, 1, None)?;
            let features = forward(&net, &latent_for(cfg, seed, size)?)?;
            losses.push(fit_probe(cfg, &features)?.loss);
        }
        rows.push(loss_row(cfg, name, mode.name(), size, "full", &losses));
    }
    let mut floor = Vec::new();
    for seed in cfg.seeds() {
        let features = random_features(cfg, seed, size)?;
        floor.push(fit_probe(cfg, &features)?.loss);
    }
    rows.push(loss_row(cfg, name, "random", size, "full", &floor));
    Ok(ExperimentReport {
        experiment: name.into(),
        meta: cfg.meta(),
        rows: Rows::Loss(rows),
    })
}

/// The Table-1-shaped grid: {random, zero, circular, dilated(x2), PBC in both
/// modes} x {base size, doubled size, central base-size region of the
/// doubled size}.
pub fn run_resolution_grid(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let s = cfg.base_size()?;
    let s2 = cfg.doubled_size()?;
    let central = Region::central(s2, s2, s);
    let central_label = format!("central-{s}");
    let name = "resolution-grid";

    struct GridLabel {
        label: &'static str,
        padding: PaddingMode,
        dilation_multiplier: usize,
        pbc_mode: Option<PbcMode>,
        random: bool,
    }
    let labels = [
        GridLabel {
            label: "random",
            padding: PaddingMode::Zero,
            dilation_multiplier: 1,
            pbc_mode: None,
            random: true,
        },
        GridLabel {
            label: "zero",
            padding: PaddingMode::Zero,
            dilation_multiplier: 1,
            pbc_mode: None,
            random: false,
        },
        GridLabel {
            label: "circular",
            padding: PaddingMode::Circular,
            dilation_multiplier: 1,
            pbc_mode: None,
            random: false,
        },
        GridLabel {
            label: "dilated-d2",
            padding: PaddingMode::Zero,
            dilation_multiplier: 2,
            pbc_mode: None,
            random: false,
        },
        GridLabel {
            label: "pbc-wholepatch",
            padding: PaddingMode::Zero,
            dilation_multiplier: 1,
            pbc_mode: Some(PbcMode::WholePatch),
            random: false,
        },
        GridLabel {
            label: "pbc-crossboundary",
            padding: PaddingMode::Zero,
            dilation_multiplier: 1,
            pbc_mode: Some(PbcMode::CrossBoundary),
            random: false,
        },
    ];

    let mut rows = Vec::new();
    for gl in &labels {
        let mut base_losses = Vec::new();
        let mut doubled_losses = Vec::new();
        let mut central_losses = Vec::new();
        for seed in cfg.seeds() {
            let features_at = |size: usize| -> Result<FeatureMap> {
                if gl.random {
                    return random_features(cfg, seed, size);
                }
                let pbc = gl
                    .pbc_mode
                    .map(|mode| pbc_config(cfg, mode, cfg.n_boundaries, seed));
                let net = toynet_for(cfg, seed, gl.padding, gl.dilation_multiplier, pbc)?;
                forward(&net, &latent_for(cfg, seed, size)?)
            };
            let f_base = features_at(s)?;
            base_losses.push(fit_probe(cfg, &f_base)?.loss);

            let f_doubled = features_at(s2)?;
            let mut fit = fit_probe(cfg, &f_doubled)?;
            doubled_losses.push(fit.loss);
            let target = make_position_map(s2, s2)?;
            let central_loss = eval_region(&fit, &f_doubled, &target, central)?;
            fit.region_losses.insert(central, central_loss);
            central_losses.push(central_loss);
        }
        rows.push(loss_row(cfg, name, gl.label, s, "full", &base_losses));
        rows.push(loss_row(cfg, name, gl.label, s2, "full", &doubled_losses));
        rows.push(loss_row(cfg, name, gl.label, s2, &central_label, &central_losses));
    }
    Ok(ExperimentReport {
        experiment: name.into(),
        meta: cfg.meta(),
        rows: Rows::Loss(rows),
    })
}

fn format_lambda(lambda: f64) -> String {
    format!("lambda-{lambda}")
}

/// Forward pass with one explicit boundary set applied at every layer in the
/// configured mode, re-perturbed per layer.
fn forward_with_boundary_set(
    net: &ToyNet,
    input: &FeatureMap,
    set: &BoundarySet,
    mode: PbcMode,
) -> Result<FeatureMap> {
    forward_with(net, input, |idx, x, layer| {
        let layer_set = perturbed_for_layer(set, idx);
        match mode {
            PbcMode::WholePatch => {
                let complemented = apply_pbc_wholepatch(x, &layer_set, 3, 1)?;
                crate::tensor::conv2d(&complemented, layer)
            }
            PbcMode::CrossBoundary => apply_pbc_crossboundary(x, &layer_set, layer),
        }
    })
}

/// Probe loss per boundary ratio for a single mid-way boundary (l = s/4 on
/// the column axis) at the doubled size, plus a no-boundary baseline row.
pub fn run_lambda_ablation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let size = cfg.doubled_size()?;
    let offset = size / 4;
    let name = "lambda-ablation";
    let mut rows = Vec::new();

    let mut baseline = Vec::new();
    for seed in cfg.seeds() {
        let net = toynet_for(cfg, seed, PaddingMode::Zero, 1, None)?;
        let features = forward(&net, &latent_for(cfg, seed, size)?)?;
        baseline.push(fit_probe(cfg, &features)?.loss);
    }
    rows.push(loss_row(cfg, name, "baseline", size, "full", &baseline));

    for &lambda in &cfg.lambda_grid {
        let mut losses = Vec::new();
        for seed in cfg.seeds() {
            let set = BoundarySet::from_boundaries(vec![VirtualBoundary::new(
                Axis::Cols,
                size,
                offset,
                lambda,
            )?])
            .with_perturbation(cfg.perturb_range, derive(seed, &[TAG_PBC]));
            let net = toynet_for(cfg, seed, PaddingMode::Zero, 1, None)?;
            let features = forward_with_boundary_set(
                &net,
                &latent_for(cfg, seed, size)?,
                &set,
                cfg.pbc_mode,
            )?;
            losses.push(fit_probe(cfg, &features)?.loss);
        }
        rows.push(loss_row(cfg, name, &format_lambda(lambda), size, "full", &losses));
    }
    Ok(ExperimentReport {
        experiment: name.into(),
        meta: cfg.meta(),
        rows: Rows::Loss(rows),
    })
}

/// Probe loss per boundary count N at the doubled size.
pub fn run_n_ablation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let size = cfg.doubled_size()?;
    let name = "n-ablation";
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let mut losses = Vec::new();
        for seed in cfg.seeds() {
            let pbc = (n > 0).then(|| pbc_config(cfg, cfg.pbc_mode, n, seed));
            let net = toynet_for(cfg, seed, PaddingMode::Zero, 1, pbc)?;
            let features = forward(&net, &latent_for(cfg, seed, size)?)?;
            losses.push(fit_probe(cfg, &features)?.loss);
        }
        rows.push(loss_row(cfg, name, &format!("n-{n}"), size, "full", &losses));
    }
    Ok(ExperimentReport {
        experiment: name.into(),
        meta: cfg.meta(),
        rows: Rows::Loss(rows),
    })
}

/// Content richness per image. Unreadable or malformed files are reported
/// and skipped; the run continues.
pub fn run_richness(
    paths: &[PathBuf],
    k: usize,
    embedder_name: &str,
    dump_cosines_to: Option<&Path>,
) -> Result<(ExperimentReport, Vec<(PathBuf, Error)>)> {
    let embedder = embedder_by_name(embedder_name)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        let outcome = read_ppm(path).and_then(|img| content_richness(&img, k, embedder.as_ref()));
        match outcome {
            Ok(report) => {
                if let Some(dir) = dump_cosines_to {
                    std::fs::create_dir_all(dir)?;
                    let stem = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "image".into());
                    let mut text = String::new();
                    let m = k * k;
                    for i in 0..m {
                        let line: Vec<String> = (0..m)
                            .map(|j| report.cosine(i, j).to_string())
                            .collect();
                        text.push_str(&line.join(","));
                        text.push('\n');
                    }
                    std::fs::write(dir.join(format!("{stem}.cosines.csv")), text)?;
                }
                rows.push(RichnessRow {
                    image: path.display().to_string(),
                    k,
                    embedder: embedder.name().into(),
                    s: report.s,
                });
            }
            Err(err) => failures.push((path.clone(), err)),
        }
    }
    let mut meta = std::collections::BTreeMap::new();
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("k".into(), k.to_string());
    meta.insert("embedder".into(), embedder.name().into());
    Ok((
        ExperimentReport {
            experiment: "richness".into(),
            meta,
            rows: Rows::Richness(rows),
        },
        failures,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> ExperimentConfig {
        ExperimentConfig {
            sizes: vec![16, 32],
            depth: 3,
            channels: 6,
            dilations: vec![1, 2, 4],
            seed_count: 2,
            ..Default::default()
        }
    }

    #[test]
    fn padding_ablation_report_shape() {
        let report = run_padding_ablation(&tiny_cfg()).unwrap();
        let rows = report.loss_rows();
        assert_eq!(rows.len(), 5);
        let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["zero", "reflect", "replicate", "circular", "random"]);
        assert!(rows.iter().all(|r| r.loss_mean.is_finite()));
    }

    #[test]
    fn single_seed_runs_have_zero_std() {
        let cfg = ExperimentConfig {
            seed_count: 1,
            ..tiny_cfg()
        };
        let report = run_padding_ablation(&cfg).unwrap();
        assert!(report.loss_rows().iter().all(|r| r.loss_std == 0.0));
    }

    #[test]
    fn resolution_grid_covers_every_cell_once() {
        let report = run_resolution_grid(&tiny_cfg()).unwrap();
        let rows = report.loss_rows();
        assert_eq!(rows.len(), 18);
        for label in [
            "random",
            "zero",
            "circular",
            "dilated-d2",
            "pbc-wholepatch",
            "pbc-crossboundary",
        ] {
            assert!(report.find_loss(label, 16, "full").is_some());
            assert!(report.find_loss(label, 32, "full").is_some());
            assert!(report.find_loss(label, 32, "central-16").is_some());
        }
    }

    #[test]
    fn lambda_one_equals_the_baseline() {
        let report = run_lambda_ablation(&tiny_cfg()).unwrap();
        // Baseline plus the default 6-value grid, all finite.
        assert_eq!(report.loss_rows().len(), 7);
        assert!(report.loss_rows().iter().all(|r| r.loss_mean.is_finite()));
        let base = report.find_loss("baseline", 32, "full").unwrap();
        let one = report.find_loss("lambda-1", 32, "full").unwrap();
        assert!(
            (base.loss_mean - one.loss_mean).abs() < 1e-6,
            "{} vs {}",
            base.loss_mean,
            one.loss_mean
        );
    }

    #[test]
    fn lambda_zero_equals_a_trench_forward_in_crossboundary_mode() {
        let cfg = ExperimentConfig {
            pbc_mode: PbcMode::CrossBoundary,
            seed_count: 1,
            ..tiny_cfg()
        };
        let report = run_lambda_ablation(&cfg).unwrap();
        let zero_row = report.find_loss("lambda-0", 32, "full").unwrap();

        // Trench baseline rebuilt by hand on the same lines (l+1 and s-1-l
        // for l = 8, s = 32).
        let seed = cfg.seeds()[0];
        let net = toynet_for(&cfg, seed, PaddingMode::Zero, 1, None).unwrap();
        let input = latent_for(&cfg, seed, 32).unwrap();
        let trenches = [TrenchSpec::new(Axis::Cols, 9), TrenchSpec::new(Axis::Cols, 23)];
        let features = forward_with(&net, &input, |_, x, layer| {
            conv2d_with_trenches(x, layer, &trenches)
        })
        .unwrap();
        let loss = fit_probe(&cfg, &features).unwrap().loss;
        assert!(
            (zero_row.loss_mean - loss).abs() < 1e-6,
            "{} vs {loss}",
            zero_row.loss_mean
        );
    }

    #[test]
    fn n_zero_matches_the_plain_zero_row() {
        let cfg = tiny_cfg();
        let grid = run_resolution_grid(&cfg).unwrap();
        let nrep = run_n_ablation(&cfg).unwrap();
        let zero = grid.find_loss("zero", 32, "full").unwrap();
        let n0 = nrep.find_loss("n-0", 32, "full").unwrap();
        assert_eq!(zero.loss_mean, n0.loss_mean);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = tiny_cfg();
        let a = run_n_ablation(&cfg).unwrap().to_csv();
        let b = run_n_ablation(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
    }
}
