//! Thin CLI over the padlab experiment harness.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use padlab::harness::{
    self, parse_f64_list, parse_key_values, parse_usize_list, DumpIntervention, ExperimentConfig,
    ReportFormat, SolverKind,
};
use padlab::padmodes::{RegionSpec, Side, TrenchSpec};
use padlab::pbc::PbcMode;
use padlab::tensor::{Axis, PaddingMode};
use padlab::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "padlab",
    version,
    about = "Convolution-padding laboratory: position-encoding experiments at desk scale"
)]
struct Cli {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base latent size (the doubled size is derived as 2x).
    #[arg(long, global = true)]
    size: Option<usize>,

    /// Explicit comma-separated latent sizes (base, doubled).
    #[arg(long, global = true)]
    sizes: Option<String>,

    /// Toy network depth (layers).
    #[arg(long, global = true)]
    depth: Option<usize>,

    /// Toy network channel count.
    #[arg(long, global = true)]
    channels: Option<usize>,

    /// Comma-separated per-layer dilation schedule (cycled across depth).
    #[arg(long, global = true)]
    dilations: Option<String>,

    /// Number of seeds to average over.
    #[arg(long, global = true)]
    seeds: Option<usize>,

    /// Probe solver: closed | adam.
    #[arg(long, global = true)]
    solver: Option<String>,

    /// PBC application mode: wholepatch | crossboundary.
    #[arg(long = "pbc-mode", global = true)]
    pbc_mode: Option<String>,

    /// Virtual boundaries per axis for the PBC grid rows.
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Comma-separated lambda grid for the lambda ablation.
    #[arg(long = "lambda-grid", global = true)]
    lambda_grid: Option<String>,

    /// Comma-separated N grid for the boundary-count ablation.
    #[arg(long = "n-grid", global = true)]
    n_grid: Option<String>,

    /// Boundary perturbation range in cells.
    #[arg(long, global = true)]
    r: Option<usize>,

    /// Output path (file for reports, directory for gen-test-images).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format: csv | json.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Base seed; runs average seeds seed..seed+seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Latent mean (the deterministic component of the input).
    #[arg(long = "latent-mean", global = true)]
    latent_mean: Option<f32>,

    /// Latent noise standard deviation.
    #[arg(long = "latent-std", global = true)]
    latent_std: Option<f32>,

    /// Ridge epsilon for the closed-form solver.
    #[arg(long, global = true)]
    ridge: Option<f64>,

    /// Learning rate for the Adam solver.
    #[arg(long = "adam-lr", global = true)]
    adam_lr: Option<f64>,

    /// Iteration count for the Adam solver.
    #[arg(long = "adam-iterations", global = true)]
    adam_iterations: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Probe loss per padding mode at the base size.
    PaddingAblation,
    /// The full mode x resolution x region probe-loss grid.
    ResolutionGrid,
    /// Probe loss per boundary ratio for a single mid-way boundary.
    LambdaAblation,
    /// Probe loss per boundary count N at the doubled size.
    NAblation,
    /// Content-richness scores for P6 PPM images.
    Richness {
        /// Input images (binary P6 PPM).
        #[arg(required = true)]
        images: Vec<PathBuf>,
        /// Patch grid side: the image splits into k^2 patches.
        #[arg(long)]
        k: Option<usize>,
        /// Patch embedder: stats | histogram.
        #[arg(long)]
        embedder: Option<String>,
        /// Directory to dump per-image cosine matrices into.
        #[arg(long = "dump-cosines")]
        dump_cosines: Option<PathBuf>,
    },
    /// Write the solid / tiled / noise richness test images.
    GenTestImages,
    /// Run the toy network once and dump the feature magnitude as a PGM.
    DumpFeatures {
        /// Padding mode for every layer: zero | reflect | replicate | circular.
        #[arg(long)]
        padding: Option<String>,
        /// Interior trench line(s), e.g. `rows:16` or `cols:24` (repeatable).
        #[arg(long)]
        trench: Vec<String>,
        /// Attenuated region `top,left,height,width,inward|outward`.
        #[arg(long)]
        region: Option<String>,
        /// Attenuation ratio for `--region` reads (default 0 = hard zero).
        #[arg(long = "region-lambda")]
        region_lambda: Option<f64>,
    },
}

/// Layered key lookup: flag values override config-file values.
struct Settings {
    flags: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
}

impl Settings {
    fn get(&self, key: &str) -> Option<&str> {
        self.flags
            .get(key)
            .or_else(|| self.file.get(key))
            .map(|s| s.as_str())
    }

    fn parse<T, F: Fn(&str) -> Result<T>>(&self, key: &str, f: F) -> Result<Option<T>> {
        self.get(key).map(f).transpose()
    }
}

fn collect_settings(cli: &Cli) -> Result<Settings> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            parse_key_values(&text)?
        }
        None => BTreeMap::new(),
    };
    let mut flags = BTreeMap::new();
    let mut put = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            flags.insert(key.to_string(), v);
        }
    };
    put("size", cli.size.map(|v| v.to_string()));
    put("sizes", cli.sizes.clone());
    put("depth", cli.depth.map(|v| v.to_string()));
    put("channels", cli.channels.map(|v| v.to_string()));
    put("dilations", cli.dilations.clone());
    put("seeds", cli.seeds.map(|v| v.to_string()));
    put("solver", cli.solver.clone());
    put("pbc-mode", cli.pbc_mode.clone());
    put("n", cli.n.map(|v| v.to_string()));
    put("lambda-grid", cli.lambda_grid.clone());
    put("n-grid", cli.n_grid.clone());
    put("r", cli.r.map(|v| v.to_string()));
    put("out", cli.out.as_ref().map(|p| p.display().to_string()));
    put("format", cli.format.clone());
    put("seed", cli.seed.map(|v| v.to_string()));
    put("latent-mean", cli.latent_mean.map(|v| v.to_string()));
    put("latent-std", cli.latent_std.map(|v| v.to_string()));
    put("ridge", cli.ridge.map(|v| v.to_string()));
    put("adam-lr", cli.adam_lr.map(|v| v.to_string()));
    put("adam-iterations", cli.adam_iterations.map(|v| v.to_string()));
    Ok(Settings { flags, file })
}

fn parse_num<T: std::str::FromStr>(what: &str) -> impl Fn(&str) -> Result<T> + '_ {
    move |s: &str| {
        s.parse::<T>()
            .map_err(|_| Error::InvalidArgument(format!("bad {what}: '{s}'")))
    }
}

fn build_experiment_config(settings: &Settings) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    // `sizes` wins over `size` within each layer; flags beat the file.
    let sizes = ["sizes", "size"]
        .iter()
        .find_map(|k| settings.flags.get(*k).map(|v| (*k, v.clone())))
        .or_else(|| {
            ["sizes", "size"]
                .iter()
                .find_map(|k| settings.file.get(*k).map(|v| (*k, v.clone())))
        });
    if let Some((key, value)) = sizes {
        if key == "sizes" {
            cfg.sizes = parse_usize_list(&value)?;
        } else {
            let base = parse_num::<usize>("size")(&value)?;
            cfg.sizes = vec![base, 2 * base];
        }
    }
    if let Some(v) = settings.parse("depth", parse_num::<usize>("depth"))? {
        cfg.depth = v;
    }
    if let Some(v) = settings.parse("channels", parse_num::<usize>("channels"))? {
        cfg.channels = v;
    }
    if let Some(v) = settings.parse("dilations", parse_usize_list)? {
        cfg.dilations = v;
    }
    if let Some(v) = settings.parse("seeds", parse_num::<usize>("seeds"))? {
        cfg.seed_count = v;
    }
    if let Some(v) = settings.parse("solver", SolverKind::parse)? {
        cfg.solver = v;
    }
    if let Some(v) = settings.parse("pbc-mode", PbcMode::parse)? {
        cfg.pbc_mode = v;
    }
    if let Some(v) = settings.parse("n", parse_num::<usize>("n"))? {
        cfg.n_boundaries = v;
    }
    if let Some(v) = settings.parse("lambda-grid", parse_f64_list)? {
        cfg.lambda_grid = v;
    }
    if let Some(v) = settings.parse("n-grid", parse_usize_list)? {
        cfg.n_grid = v;
    }
    if let Some(v) = settings.parse("r", parse_num::<usize>("r"))? {
        cfg.perturb_range = v;
    }
    if let Some(v) = settings.parse("seed", parse_num::<u64>("seed"))? {
        cfg.base_seed = v;
    }
    if let Some(v) = settings.parse("latent-mean", parse_num::<f32>("latent-mean"))? {
        cfg.latent_mean = v;
    }
    if let Some(v) = settings.parse("latent-std", parse_num::<f32>("latent-std"))? {
        cfg.latent_std = v;
    }
    if let Some(v) = settings.parse("ridge", parse_num::<f64>("ridge"))? {
        cfg.ridge = v;
    }
    if let Some(v) = settings.parse("adam-lr", parse_num::<f64>("adam-lr"))? {
        cfg.adam_lr = v;
    }
    if let Some(v) = settings.parse("adam-iterations", parse_num::<usize>("adam-iterations"))? {
        cfg.adam_iterations = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_options(settings: &Settings) -> Result<(Option<PathBuf>, ReportFormat)> {
    let out = settings.get("out").map(PathBuf::from);
    let format = settings
        .parse("format", ReportFormat::parse)?
        .unwrap_or(ReportFormat::Csv);
    Ok((out, format))
}

fn run(cli: &Cli) -> Result<u8> {
    let settings = collect_settings(cli)?;
    let (out, format) = output_options(&settings)?;

    match &cli.command {
        Command::PaddingAblation => {
            let cfg = build_experiment_config(&settings)?;
            harness::run_padding_ablation(&cfg)?.write(format, out.as_deref())?;
        }
        Command::ResolutionGrid => {
            let cfg = build_experiment_config(&settings)?;
            harness::run_resolution_grid(&cfg)?.write(format, out.as_deref())?;
        }
        Command::LambdaAblation => {
            let cfg = build_experiment_config(&settings)?;
            harness::run_lambda_ablation(&cfg)?.write(format, out.as_deref())?;
        }
        Command::NAblation => {
            let cfg = build_experiment_config(&settings)?;
            harness::run_n_ablation(&cfg)?.write(format, out.as_deref())?;
        }
        Command::Richness {
            images,
            k,
            embedder,
            dump_cosines,
        } => {
            let k = match k {
                Some(k) => *k,
                None => settings
                    .parse("k", parse_num::<usize>("k"))?
                    .unwrap_or(3),
            };
            let embedder_name = embedder
                .clone()
                .or_else(|| settings.get("embedder").map(String::from))
                .unwrap_or_else(|| "stats".into());
            let (report, failures) =
                harness::run_richness(images, k, &embedder_name, dump_cosines.as_deref())?;
            report.write(format, out.as_deref())?;
            for (path, err) in &failures {
                eprintln!("warning: skipped {}: {err}", path.display());
            }
            if !failures.is_empty() {
                return Ok(3);
            }
        }
        Command::GenTestImages => {
            let dir = out.unwrap_or_else(|| PathBuf::from("testimages"));
            let size = settings
                .parse("size", parse_num::<usize>("size"))?
                .unwrap_or(96);
            let seed = settings
                .parse("seed", parse_num::<u64>("seed"))?
                .unwrap_or(0);
            let paths = harness::gen_test_images(&dir, size, seed)?;
            for p in paths {
                println!("{}", p.display());
            }
        }
        Command::DumpFeatures {
            padding,
            trench,
            region,
            region_lambda,
        } => {
            let cfg = build_experiment_config(&settings)?;
            let padding = match padding {
                Some(p) => PaddingMode::parse(p)?,
                None => settings
                    .parse("padding", PaddingMode::parse)?
                    .unwrap_or(PaddingMode::Zero),
            };
            let intervention = if !trench.is_empty() {
                let specs = trench
                    .iter()
                    .map(|s| parse_trench(s))
                    .collect::<Result<Vec<_>>>()?;
                DumpIntervention::Trenches(specs)
            } else if let Some(spec) = region {
                DumpIntervention::Region(parse_region(spec)?, region_lambda.unwrap_or(0.0))
            } else if settings.get("n").is_some() && cfg.n_boundaries > 0 {
                // PBC only when boundaries were explicitly requested.
                DumpIntervention::Pbc(cfg.pbc_mode)
            } else {
                DumpIntervention::None
            };
            let size = cfg.base_size()?;
            let features =
                harness::compute_features(&cfg, cfg.base_seed, size, padding, 1, &intervention)?;
            let path = out.unwrap_or_else(|| PathBuf::from("features.pgm"));
            harness::dump_feature_map(&features, &path)?;
            println!("{}", path.display());
        }
    }
    Ok(0)
}

fn parse_trench(s: &str) -> Result<TrenchSpec> {
    let (axis, pos) = s.split_once(':').ok_or_else(|| {
        Error::InvalidArgument(format!("trench '{s}' must look like rows:16 or cols:24"))
    })?;
    let axis = match axis {
        "rows" => Axis::Rows,
        "cols" => Axis::Cols,
        other => {
            return Err(Error::InvalidArgument(format!(
                "trench axis must be rows or cols, got '{other}'"
            )))
        }
    };
    let position = pos
        .parse::<usize>()
        .map_err(|_| Error::InvalidArgument(format!("bad trench position '{pos}'")))?;
    Ok(TrenchSpec::new(axis, position))
}

fn parse_region(s: &str) -> Result<RegionSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(Error::InvalidArgument(format!(
            "region '{s}' must be top,left,height,width,inward|outward"
        )));
    }
    let num = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad region field '{t}'")))
    };
    let side = match parts[4] {
        "inward" => Side::Inward,
        "outward" => Side::Outward,
        other => {
            return Err(Error::InvalidArgument(format!(
                "region side must be inward or outward, got '{other}'"
            )))
        }
    };
    Ok(RegionSpec::new(
        num(parts[0])?,
        num(parts[1])?,
        num(parts[2])?,
        num(parts[3])?,
        side,
    ))
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::MalformedImage(_) => 3,
        Error::InvalidArgument(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
