use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};

use inhand_friction::contact_model::{
    ellipsoid_residual, limit_surface_sweep, read_grid_csv, write_sweep_csv,
    PressureDistribution, DEFAULT_GRID_RESOLUTION,
};
use inhand_friction::estimator::{write_estimates_csv, read_estimates_csv, Estimator, EstimatorParams};
use inhand_friction::ingest::{align, parse_trace, parse_truth_file, IngestError};
use inhand_friction::scenario_file::{apply_overrides, parse_override, parse_scenario, Scenario};
use inhand_friction::simulator::run_scenario;
use inhand_friction::stats::{
    aggregate, render_report_table, summarize_trial, write_report_csv, ReportRow, WindowRule,
};
use inhand_friction::trace::{
    write_events_csv, write_force_csv, write_truth_csv, write_velocity_csv, TracePaths,
};

use crate::output::{manifest_path_for, write_atomic, write_with, RunManifest};

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, configuration or missing inputs (exit 2).
    Usage(anyhow::Error),
    /// Invalid data or a failed computation (exit 1).
    Data(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) => e,
        }
    }
}

type CmdResult = Result<(), Failure>;

trait OrFail<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

fn create_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .usage()
}

fn write_output(path: &Path, result: std::io::Result<()>) -> CmdResult {
    result
        .with_context(|| format!("cannot write {}", path.display()))
        .data()
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["scenario", "paper_like"]))]
pub struct SimulateArgs {
    /// Scenario TOML file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Use the built-in five-segment reference scenario.
    #[arg(long)]
    pub paper_like: bool,
    /// Config override `key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Base seed; trial `i` uses `seed + i`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of trials.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Trial file name prefix.
    #[arg(long, default_value = "trial")]
    pub name: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn simulate(args: &SimulateArgs) -> CmdResult {
    let mut manifest = RunManifest::new("simulate", &args.out);
    let mut scenario = match &args.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read scenario file {}", path.display()))
                .usage()?;
            manifest.inputs.push(path.clone());
            parse_scenario(&text)
                .with_context(|| format!("invalid scenario {}", path.display()))
                .usage()?
        }
        None => Scenario::reference(),
    };
    let overrides = args
        .overrides
        .iter()
        .map(|o| parse_override(o))
        .collect::<Result<Vec<_>, _>>()
        .usage()?;
    scenario.config = apply_overrides(&scenario.config, &overrides).usage()?;
    if let Some(seed) = args.seed {
        scenario.config.seed = seed;
    }
    manifest.overrides = args.overrides.clone();
    manifest.seed = Some(scenario.config.seed);
    create_dir(&args.out)?;

    for i in 0..args.trials {
        let name = if args.trials == 1 {
            args.name.clone()
        } else {
            format!("{}_{i}", args.name)
        };
        let mut config = scenario.config.clone();
        config.seed = scenario
            .config
            .seed
            .checked_add(i)
            .ok_or_else(|| anyhow!("seed {} + trial {i} overflows", scenario.config.seed))
            .usage()?;
        let trace = run_scenario(&scenario.segments, &config).usage()?;
        let paths = TracePaths::in_dir(&args.out, &name);
        write_output(&paths.force, write_with(&paths.force, |b| write_force_csv(&trace.force_stream, b)))?;
        write_output(
            &paths.velocity,
            write_with(&paths.velocity, |b| write_velocity_csv(&trace.velocity_stream, b)),
        )?;
        write_output(&paths.truth, write_with(&paths.truth, |b| write_truth_csv(&trace.truth_stream, b)))?;
        write_output(&paths.events, write_with(&paths.events, |b| write_events_csv(&trace.events, b)))?;
        manifest
            .outputs
            .extend([paths.force, paths.velocity, paths.truth, paths.events]);
        println!(
            "{name}: {} force, {} velocity samples, {} events, seed {}",
            trace.force_stream.len(),
            trace.velocity_stream.len(),
            trace.events.len(),
            config.seed
        );
    }

    let scenario_path = args.out.join(format!("{}_scenario.toml", args.name));
    write_output(&scenario_path, write_atomic(&scenario_path, scenario.to_toml().as_bytes()))?;
    manifest.outputs.push(scenario_path);
    let manifest_path = args.out.join(format!("{}_manifest.json", args.name));
    write_output(&manifest_path, manifest.write(&manifest_path))
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Trace prefix (`<prefix>_force.csv`, `<prefix>_vel.csv`), repeatable.
    #[arg(long, required = true, num_args = 1..)]
    pub trace: Vec<PathBuf>,
    /// Estimator parameter TOML; missing keys take the default tuning.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Disable the normal-force-rate halt.
    #[arg(long)]
    pub no_heuristic: bool,
    /// Material or condition label carried into reports.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

fn ingest_failure(e: IngestError) -> Failure {
    match e {
        IngestError::Io { .. } => Failure::Usage(e.into()),
        _ => Failure::Data(e.into()),
    }
}

pub fn estimate(args: &EstimateArgs) -> CmdResult {
    let mut params = match &args.params {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read parameter file {}", path.display()))
                .usage()?;
            EstimatorParams::from_toml_str(&text)
                .with_context(|| format!("invalid parameter file {}", path.display()))
                .usage()?
        }
        None => EstimatorParams::default(),
    };
    if args.no_heuristic {
        params = params.without_heuristic();
    }
    let suffix = if params.heuristic_enabled { "heuristic" } else { "no_heuristic" };
    create_dir(&args.out)?;

    for prefix in &args.trace {
        let paths = TracePaths::from_prefix(prefix);
        let raw = parse_trace(&paths.force, &paths.velocity).map_err(ingest_failure)?;
        let measurements = align(&raw, params.delta_t).map_err(ingest_failure)?;
        let records = Estimator::new(params.clone())
            .usage()?
            .run(&measurements)
            .with_context(|| format!("estimation failed on {}", prefix.display()))
            .data()?;
        let truth = if paths.truth.exists() {
            Some(parse_truth_file(&paths.truth).map_err(ingest_failure)?)
        } else {
            None
        };

        let base = prefix.file_name().unwrap_or_default().to_string_lossy();
        let name = format!("{base}_{suffix}");
        let out_path = args.out.join(format!("{name}_estimates.csv"));
        write_output(
            &out_path,
            write_with(&out_path, |b| write_estimates_csv(&records, truth.as_deref(), b)),
        )?;

        let mut manifest = RunManifest::new("estimate", &args.out);
        manifest.inputs = vec![paths.force.clone(), paths.velocity.clone()];
        if truth.is_some() {
            manifest.inputs.push(paths.truth.clone());
        }
        manifest.inputs.extend(args.params.clone());
        manifest.label = args.label.clone();
        manifest.heuristic = Some(params.heuristic_enabled);
        manifest.outputs = vec![out_path.clone()];
        let manifest_path = args.out.join(format!("{name}_manifest.json"));
        write_output(&manifest_path, manifest.write(&manifest_path))?;

        let halted = records.iter().filter(|r| r.halted).count();
        if let Some(last) = records.last() {
            println!(
                "{name}: {} ticks, {halted} halted, final mu_c {:.4} mu_s {:.4} r {:.5}",
                records.len(),
                last.mu_c_hat,
                last.mu_s_hat,
                last.r_hat
            );
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Window {
    /// Every in-contact, non-halted tick after the first update.
    Whole,
    /// Only ticks with a μ_c or r update.
    Slip,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Glob over `*_estimates.csv` files.
    #[arg(long)]
    pub runs: String,
    /// Report CSV path; the text table goes next to it with a `.txt` extension.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Window::Whole)]
    pub window: Window,
}

/// Estimate file → its manifest (`x_estimates.csv` → `x_manifest.json`).
fn estimate_manifest(path: &Path) -> PathBuf {
    let name = path.file_name().unwrap_or_default().to_string_lossy();
    let stem = name.strip_suffix("_estimates.csv").unwrap_or(&name);
    path.with_file_name(format!("{stem}_manifest.json"))
}

pub fn report(args: &ReportArgs) -> CmdResult {
    let mut files: Vec<PathBuf> = glob::glob(&args.runs)
        .with_context(|| format!("invalid glob `{}`", args.runs))
        .usage()?
        .filter_map(Result::ok)
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::Usage(anyhow!("no estimate files match `{}`", args.runs)));
    }
    let window = match args.window {
        Window::Whole => WindowRule::WholeTrial,
        Window::Slip => WindowRule::SlipOnly,
    };

    let mut groups: BTreeMap<(String, Option<bool>), Vec<_>> = BTreeMap::new();
    for path in &files {
        let file = File::open(path)
            .with_context(|| format!("cannot open {}", path.display()))
            .usage()?;
        let records = read_estimates_csv(file)
            .map_err(|e| anyhow!("{}: {e}", path.display()))
            .data()?;
        let manifest = RunManifest::read(&estimate_manifest(path)).ok();
        let label = manifest
            .as_ref()
            .and_then(|m| m.label.clone())
            .unwrap_or_else(|| "unlabeled".into());
        let heuristic = manifest.and_then(|m| m.heuristic);
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let summary = summarize_trial(&id, &records, window).data()?;
        groups.entry((label, heuristic)).or_default().push(summary);
    }

    let rows = groups
        .into_iter()
        .map(|((label, heuristic), trials)| {
            let condition = match heuristic {
                Some(true) => format!("{label} with heuristics"),
                Some(false) => format!("{label} no heuristics"),
                None => label,
            };
            aggregate(&trials).map(|aggregate| ReportRow { condition, aggregate })
        })
        .collect::<Result<Vec<_>, _>>()
        .data()?;

    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_output(&args.out, write_with(&args.out, |b| write_report_csv(&rows, b)))?;
    let table = render_report_table(&rows);
    let table_path = args.out.with_extension("txt");
    write_output(&table_path, write_atomic(&table_path, table.as_bytes()))?;
    print!("{table}");

    let mut manifest = RunManifest::new("report", args.out.parent().unwrap_or(Path::new(".")));
    manifest.inputs = files;
    manifest.outputs = vec![args.out.clone(), table_path];
    let manifest_path = manifest_path_for(&args.out);
    write_output(&manifest_path, manifest.write(&manifest_path))
}

#[derive(Debug, Args)]
pub struct LimitSurfaceArgs {
    /// `uniform:<R>`, `rim:<r>` or `grid:<csv with x,y,weight>`; lengths in meters.
    #[arg(long)]
    pub dist: String,
    /// Number of twist directions from pure translation to pure rotation.
    #[arg(long, default_value_t = 33)]
    pub n_dirs: usize,
    /// Grid resolution for continuous distributions.
    #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
    pub resolution: usize,
    /// Sweep CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_dist(spec: &str, inputs: &mut Vec<PathBuf>) -> Result<PressureDistribution, Failure> {
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| Failure::Usage(anyhow!("--dist `{spec}`: expected kind:value")))?;
    let radius = || {
        value
            .parse::<f64>()
            .with_context(|| format!("--dist `{spec}`: invalid radius"))
            .usage()
    };
    match kind {
        "uniform" => Ok(PressureDistribution::UniformDisc { radius: radius()? }),
        "rim" => Ok(PressureDistribution::Rim { radius: radius()? }),
        "grid" => {
            let path = PathBuf::from(value);
            let file = File::open(&path)
                .with_context(|| format!("cannot open grid file {}", path.display()))
                .usage()?;
            inputs.push(path.clone());
            read_grid_csv(file)
                .with_context(|| format!("invalid grid file {}", path.display()))
                .usage()
        }
        other => Err(Failure::Usage(anyhow!(
            "--dist `{spec}`: unknown kind `{other}` (uniform, rim, grid)"
        ))),
    }
}

pub fn limit_surface(args: &LimitSurfaceArgs) -> CmdResult {
    let mut manifest = RunManifest::new("limit-surface", args.out.parent().unwrap_or(Path::new(".")));
    let dist = parse_dist(&args.dist, &mut manifest.inputs)?;
    dist.validate().usage()?;
    let sweep = limit_surface_sweep(&dist, args.n_dirs, args.resolution).usage()?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_output(&args.out, write_with(&args.out, |b| write_sweep_csv(&sweep, b)))?;
    if args.n_dirs >= 8 && args.resolution == DEFAULT_GRID_RESOLUTION {
        let residual = ellipsoid_residual(&dist, args.n_dirs).data()?;
        println!("max relative ellipsoid residual over {} directions: {residual:.4}", args.n_dirs);
    }
    manifest.outputs = vec![args.out.clone()];
    let manifest_path = manifest_path_for(&args.out);
    write_output(&manifest_path, manifest.write(&manifest_path))
}
