mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use roomscope_core::dataset::{
    generate_dataset, ingest_rir, planned_counts, CorrectionPolicy, DatasetManifest, DatasetSubset, GenerateOptions,
};
use roomscope_core::inverse::{infer_room_dimensions, AxialSearchOptions, InferenceOptions, PeakOptions};
use roomscope_core::sim::{apply_source_correction, solve_tf_fdm, synth_tf_modal};
use roomscope_core::spectrum::normalize_spl;
use roomscope_core::validation::{run_suite, Suite};
use roomscope_core::{Error, FrequencyGrid, TransferFunction};
use serde_json::json;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "roomscope",
    version,
    about = "Room transfer functions, datasets and dimension inference"
)]
struct Cli {
    /// Log level (error, warn, info, debug, trace); RUST_LOG also works.
    #[arg(long, global = true, default_value = "warn")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one transfer function and write CSV plus a JSON sidecar.
    Simulate(SimulateArgs),
    /// Generate a training dataset (manifest.json plus binary shards).
    Dataset(DatasetArgs),
    /// Infer room dimensions from a transfer function or impulse response.
    InferDims(InferArgs),
    /// Run self-check suites and print a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Modal,
    Fdm,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Source position x,y,z in metres.
    #[arg(long, value_parser = parse_triple)]
    src: [f64; 3],
    /// Receiver position x,y,z in metres.
    #[arg(long, value_parser = parse_triple)]
    rcv: [f64; 3],
    #[arg(long, value_enum, default_value = "modal")]
    solver: Solver,
    /// Output CSV; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = FrequencyGrid::DATASET_START)]
    f_min: f64,
    #[arg(long, default_value_t = FrequencyGrid::DATASET_STOP)]
    f_max: f64,
    #[arg(long, default_value_t = FrequencyGrid::DATASET_STEP)]
    f_step: f64,
    /// Scale the response to the dataset level at 1 Hz.
    #[arg(long)]
    normalize: bool,
}

#[derive(clap::Args)]
struct DatasetArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Counts of rooms,configs,sources,receivers to take from the start of
    /// each table, e.g. 1,2,2,2.
    #[arg(long, value_parser = parse_subset)]
    subset: Option<[usize; 4]>,
    /// Overrides correction.policy from the config.
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Train fraction of the stored split.
    #[arg(long, default_value_t = 0.8)]
    split_ratio: f64,
    /// Keep complete shards left by an interrupted run.
    #[arg(long)]
    resume: bool,
    /// Print the planned counts without simulating.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Simu,
    Aug,
    Both,
}

impl From<Policy> for CorrectionPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Simu => CorrectionPolicy::Simu,
            Policy::Aug => CorrectionPolicy::Aug,
            Policy::Both => CorrectionPolicy::Both,
        }
    }
}

#[derive(clap::Args)]
struct InferArgs {
    /// Transfer function CSV (frequency_hz,re,im[,...]) or impulse response
    /// (.wav, or .csv with a time_s header).
    #[arg(long)]
    tf: PathBuf,
    /// Harmonic tolerance as a fraction of the expected multiple.
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    /// Absolute harmonic tolerance floor in Hz; defaults to 1.5 grid steps.
    #[arg(long)]
    tolerance_floor: Option<f64>,
    /// Minimum topographic prominence of a peak, dB.
    #[arg(long, default_value_t = 3.0)]
    min_prominence: f64,
    /// Matched orders below which a hypothesis is flagged low-confidence.
    #[arg(long, default_value_t = 2)]
    min_harmonics: usize,
    /// Use the peaks nearest these frequencies as fundamentals.
    #[arg(long, value_delimiter = ',')]
    manual_peaks: Option<Vec<f64>>,
    /// True dimensions Lx,Ly,Lz for error reporting.
    #[arg(long, value_parser = parse_triple)]
    truth: Option<[f64; 3]>,
    /// Also write the full diagnostics report (peaks, hypotheses) here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Speed of sound, m/s.
    #[arg(long, default_value_t = 343.0)]
    c: f64,
}

#[derive(clap::Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    /// Write the table as JSON here as well.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    ModalVsFdm,
    Restoration,
    Materials,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::ModalVsFdm => Suite::ModalVsFdm,
            SuiteArg::Restoration => Suite::Restoration,
            SuiteArg::Materials => Suite::Materials,
            SuiteArg::All => Suite::All,
        }
    }
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected x,y,z, got {} values", v.len()))
}

fn parse_subset(s: &str) -> std::result::Result<[usize; 4], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let v: [usize; 4] = v
        .try_into()
        .map_err(|v: Vec<usize>| format!("expected rooms,configs,sources,receivers, got {} values", v.len()))?;
    if v.contains(&0) {
        return Err("subset counts must be positive".into());
    }
    Ok(v)
}

/// Checks that did not pass; exits with status 1.
#[derive(Debug)]
struct ChecksFailed(usize);

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for ChecksFailed {}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<ChecksFailed>() || cause.is::<std::io::Error>() {
            return 1;
        }
        if let Some(core) = cause.downcast_ref::<Error>() {
            return match core {
                Error::Numerical { .. } | Error::Io(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .parse_env("RUST_LOG")
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Dataset(a) => dataset(a),
        Command::InferDims(a) => infer_dims(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn output_path(arg: Option<PathBuf>, cfg: &RunConfig, what: &str) -> Result<PathBuf> {
    arg.or_else(|| cfg.paths.out.clone())
        .ok_or_else(|| anyhow!("no {what} given: pass --out or set paths.out"))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = RunConfig::load(&a.config)?;
    let geom = cfg.geometry()?;
    let materials = cfg.materials()?;
    let correction = cfg.source_correction()?;
    let out = output_path(a.out, &cfg, "output CSV")?;
    let grid = FrequencyGrid::spanning(a.f_min, a.f_max, a.f_step)?;

    let tf = match a.solver {
        Solver::Modal => synth_tf_modal(&geom, &materials, a.src, a.rcv, &cfg.air, &cfg.solver.modal, &grid)?,
        Solver::Fdm => solve_tf_fdm(&geom, &materials, a.src, a.rcv, &cfg.air, &cfg.solver.fdm, &grid)?,
    };
    let tf = apply_source_correction(&tf, &correction)?;
    let tf = if a.normalize { normalize_spl(&tf)? } else { tf };
    tf.save_csv(&out)
        .with_context(|| format!("writing {}", out.display()))?;

    let sidecar = json!({
        "tool": "roomscope",
        "version": env!("CARGO_PKG_VERSION"),
        "solver": match a.solver { Solver::Modal => "modal", Solver::Fdm => "fdm" },
        "room_m": geom.dims(),
        "materials": materials,
        "air": cfg.air,
        "solver_config": cfg.solver,
        "correction": cfg.correction.source,
        "normalized": a.normalize,
        "source_requested": a.src,
        "receiver_requested": a.rcv,
        "source": tf.meta.source_pos,
        "receiver": tf.meta.receiver_pos,
        "grid": { "start_hz": grid.start(), "step_hz": grid.step(), "bins": grid.len() },
        "seed": cfg.seed()?,
    });
    let side = out.with_extension("json");
    write_json(&side, &sidecar)?;
    println!("wrote {} and {}", out.display(), side.display());
    Ok(())
}

fn dataset(a: DatasetArgs) -> Result<()> {
    let cfg = RunConfig::load(&a.config)?;
    let mut plan = cfg.sampling;
    plan.seed = cfg.seed()?;
    let subset = match a.subset {
        Some([r, c, s, v]) => DatasetSubset {
            rooms: Some((1..=r as u32).collect()),
            configs: Some((0..c as u32).collect()),
            sources: Some((0..s as u32).collect()),
            receivers: Some((0..v as u32).collect()),
        },
        None => DatasetSubset::default(),
    };
    let opts = GenerateOptions {
        plan,
        modal: cfg.solver.modal,
        air: cfg.air,
        policy: a.policy.map_or(cfg.correction.policy, Into::into),
        subset,
        split_ratio: Some(a.split_ratio),
        resume: a.resume,
        ..GenerateOptions::default()
    };
    if a.dry_run {
        let c = planned_counts(&opts)?;
        println!(
            "rooms: {}\nconfigs: {}\nsources: {}\nreceivers: {}\nvariants: {}\ntotal: {}\nseed: {}",
            c.rooms, c.configs, c.sources, c.receivers, c.variants, c.total, opts.plan.seed
        );
        return Ok(());
    }
    let out = output_path(a.out, &cfg, "output directory")?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let manifest = pool.install(|| generate_dataset(&opts, &out))?;
    print_summary(&manifest, &out);
    Ok(())
}

fn print_summary(m: &DatasetManifest, out: &Path) {
    let c = &m.counts;
    println!("dataset: {}", out.display());
    println!(
        "rooms: {}\nconfigs: {}\nsources: {}\nreceivers: {}\nvariants: {}\ntotal: {}",
        c.rooms, c.configs, c.sources, c.receivers, c.variants, c.total
    );
    println!("seed: {}", m.seed);
    if let Some(s) = &m.split {
        println!("split: {} train / {} test", s.train.len(), s.test.len());
    }
    for s in &m.shards {
        println!("{} records={} crc32={:08x}", s.file, s.records, s.crc32);
    }
}

fn load_response(path: &Path) -> Result<TransferFunction> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    if ext.as_deref() == Some("wav") {
        return Ok(ingest_rir(path)?);
    }
    let head = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = head.lines().find(|l| !l.trim_start().starts_with('#')).unwrap_or("");
    if first.trim_start().starts_with("time") {
        Ok(ingest_rir(path)?)
    } else {
        Ok(TransferFunction::load_csv(path)?)
    }
}

fn infer_dims(a: InferArgs) -> Result<()> {
    let tf = load_response(&a.tf)?;
    let air = roomscope_core::AirProperties::new(a.c, 1.2)?;
    let opts = InferenceOptions {
        peaks: PeakOptions {
            min_prominence_db: a.min_prominence,
            ..PeakOptions::default()
        },
        axial: AxialSearchOptions {
            relative_tolerance: a.tolerance,
            tolerance_floor_hz: a.tolerance_floor,
            min_harmonics: a.min_harmonics,
            ..AxialSearchOptions::default()
        },
    };
    let report = infer_room_dimensions(&tf, &air, &opts, a.manual_peaks.as_deref(), a.truth)?;
    let mut out = json!({ "estimate": report.estimate });
    if let Some(errs) = report.axis_errors_m {
        out["truth_m"] = json!(report.truth_m);
        out["axis_errors_m"] = json!(errs);
        out["max_error_m"] = json!(report.max_error());
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    if let Some(p) = &a.report {
        write_json(p, &serde_json::to_value(&report)?)?;
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    let checks = run_suite(a.suite.into())?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    if let Some(p) = &a.json {
        write_json(p, &serde_json::to_value(&checks)?)?;
    }
    if failed > 0 {
        return Err(ChecksFailed(failed).into());
    }
    Ok(())
}
