//! Batch front end for `hpca`: `fit`, `transform`, `diagnose` and `synth`.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 numeric. Every successful
//! command writes one run manifest (`key=value` lines) to stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use thiserror::Error;

use hpca::diagnostics::median;
use hpca::sparse_io::format_f64;
use hpca::{
    compare_with_reference, mix64, parse_libsvm, synth_lowrank, write_libsvm, DiagnosticsError,
    ExactReference, HashSpec, HpcaConfig, LinalgError, PcaError, PcaModel, Projector,
    SparseDataset, SparseIoError, SynthSpec,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<SparseIoError> for CliError {
    fn from(e: SparseIoError) -> Self {
        match e {
            SparseIoError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            SparseIoError::Linalg(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<PcaError> for CliError {
    fn from(e: PcaError) -> Self {
        match e {
            PcaError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            PcaError::Linalg(inner) => inner.into(),
            PcaError::Data(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::Pca(inner) => inner.into(),
            DiagnosticsError::Linalg(inner) => inner.into(),
            DiagnosticsError::Data(inner) => inner.into(),
            DiagnosticsError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn io_error(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "hpca",
    version,
    about = "Truncated PCA of sparse data through feature hashing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on a libsvm file.
    Fit(FitArgs),
    /// Project examples with a fitted model.
    Transform(TransformArgs),
    /// Compare hashed fits against the exact decomposition.
    Diagnose(DiagnoseArgs),
    /// Write a synthetic low-rank dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ProjectionArgs {
    /// Number of components.
    #[arg(long)]
    pub k: usize,
    /// Hashed dimension. Optional with --identity, where it must equal p.
    #[arg(long, required_unless_present = "identity")]
    pub d: Option<usize>,
    /// Probe columns (defaults to k).
    #[arg(long)]
    pub l: Option<usize>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip hashing and work on the raw p features.
    #[arg(long)]
    pub identity: bool,
    #[arg(long)]
    pub declared_p: Option<usize>,
    /// Worker threads for the data passes.
    #[arg(long, env = "HPCA_THREADS", default_value_t = 1)]
    pub parallel: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub projection: ProjectionArgs,
    /// Subtract the mean before fitting.
    #[arg(long)]
    pub center: bool,
    /// Model path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Scores path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Emit `V^T H^T x` instead of whitened scores.
    #[arg(long)]
    pub unwhitened: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub projection: ProjectionArgs,
    #[arg(long)]
    pub center: bool,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Number of hash draws; draw `i` uses master seed `seed + i`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Report path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub rank: usize,
    /// Comma-separated singular values, nonincreasing, `rank` of them.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub spectrum: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

/// Sub-seeds `(seed_h, seed_xi, seed_omega)` derived from a master seed.
pub fn derive_seeds(seed: u64) -> (u64, u64, u64) {
    (mix64(seed ^ 1), mix64(seed ^ 2), mix64(seed ^ 3))
}

/// One run's resolved parameters, timing and checksums.
#[derive(Debug, Default)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

impl std::fmt::Display for RunManifest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file = File::open(path).map_err(io_error(path))?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher).map_err(io_error(path))?;
    Ok(hex(&hasher.finalize()))
}

/// Forwards writes and hashes every byte that passes through.
struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> HashingWriter<W> {
    fn new(inner: W) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
        }
    }

    fn finish(mut self) -> io::Result<String> {
        self.inner.flush()?;
        Ok(hex(&self.hasher.finalize()))
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn open_output(path: Option<&Path>) -> Result<HashingWriter<Box<dyn Write>>, CliError> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_error(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    Ok(HashingWriter::new(sink))
}

fn output_label(path: Option<&Path>) -> String {
    path.map_or_else(|| "-".to_string(), |p| p.display().to_string())
}

fn build_config(
    args: &ProjectionArgs,
    center: bool,
    seed: u64,
    p: usize,
) -> Result<HpcaConfig, CliError> {
    let (seed_h, seed_xi, seed_omega) = derive_seeds(seed);
    let projector = if args.identity {
        if let Some(d) = args.d.filter(|&d| d != p) {
            return Err(CliError::Usage(format!(
                "--identity needs d = p, got d = {d}, p = {p}"
            )));
        }
        Projector::identity(p).map_err(|e| CliError::Data(e.to_string()))?
    } else {
        let d = args.d.unwrap_or(0);
        HashSpec::new(d, seed_h, seed_xi)
            .map_err(|e| CliError::Usage(e.to_string()))?
            .into()
    };
    if args.parallel == 0 {
        return Err(CliError::Usage("--parallel must be at least 1".into()));
    }
    let cfg = HpcaConfig::new(args.k, projector)
        .with_oversampling(args.l.unwrap_or(args.k))
        .with_seed(seed_omega)
        .with_center(center)
        .with_workers(args.parallel, true);
    cfg.validate()?;
    Ok(cfg)
}

/// Rejects a configuration from the flags alone, before any input is read.
fn check_flags(args: &ProjectionArgs) -> Result<(), CliError> {
    if args.identity {
        return Ok(());
    }
    let d = args.d.unwrap_or(0);
    let l = args.l.unwrap_or(args.k);
    let cfg = HpcaConfig::new(
        args.k,
        HashSpec::new(d, 0, 0).map_err(|e| CliError::Usage(e.to_string()))?,
    )
    .with_oversampling(l);
    cfg.validate()?;
    Ok(())
}

fn record_config(m: &mut RunManifest, cfg: &HpcaConfig, seed: u64) {
    m.push("k", cfg.k);
    m.push("d", cfg.d());
    m.push("l", cfg.l);
    m.push("seed", seed);
    match cfg.projector {
        Projector::Hashed(spec) => {
            m.push("projector", "hash");
            m.push("seed_h", spec.seed_h());
            m.push("seed_xi", spec.seed_xi());
        }
        Projector::Identity { .. } => m.push("projector", "identity"),
    }
    m.push("seed_omega", cfg.seed_omega);
    m.push("center", cfg.center);
    m.push("workers", cfg.workers);
    m.push("deterministic", cfg.deterministic_reduce);
    m.push("peak_accumulator_bytes", cfg.peak_accumulator_bytes());
}

fn record_input(
    m: &mut RunManifest,
    key: &str,
    path: &Path,
    ds: Option<&SparseDataset>,
) -> Result<(), CliError> {
    m.push(key, path.display());
    if let Some(ds) = ds {
        m.push("n", ds.n());
        m.push("p", ds.p());
    }
    m.push(&format!("sha256.{key}"), sha256_file(path)?);
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<RunManifest, CliError> {
    check_flags(&args.projection)?;
    let ds = parse_libsvm(&args.input, args.projection.declared_p)?;
    let seed = args.projection.seed;
    let cfg = build_config(&args.projection, args.center, seed, ds.p())?;
    let model = hpca::fit(&ds, &cfg)?;

    let mut out = open_output(args.output.as_deref())?;
    let label = output_label(args.output.as_deref());
    model
        .write_to(&mut out)
        .map_err(|e| CliError::Data(format!("{label}: {e}")))?;
    let digest = out
        .finish()
        .map_err(|e| CliError::Data(format!("{label}: {e}")))?;

    let mut m = RunManifest::new("fit");
    record_input(&mut m, "input", &args.input, Some(&ds))?;
    record_config(&mut m, &cfg, seed);
    m.push("output", label);
    m.push("sha256.output", digest);
    Ok(m)
}

fn cmd_transform(args: &TransformArgs) -> Result<RunManifest, CliError> {
    let model_file = File::open(&args.model).map_err(io_error(&args.model))?;
    let model = PcaModel::read_from(io::BufReader::new(model_file))?;
    let declared = match model.projector() {
        Projector::Identity { p } => Some(*p),
        Projector::Hashed(_) => None,
    };
    let ds = parse_libsvm(&args.input, declared)?;

    let mut out = open_output(args.output.as_deref())?;
    let label = output_label(args.output.as_deref());
    let mut failure: Option<CliError> = None;
    ds.for_each_in_range(0..ds.n(), |row| {
        if failure.is_some() {
            return;
        }
        let scores = if args.unwhitened {
            model.project_unwhitened(row)
        } else {
            model.project_whitened(row)
        };
        let line = scores.map(|s| {
            let fields: Vec<String> = s.iter().map(|v| format_f64(*v)).collect();
            let mut line = fields.join("\t");
            line.push('\n');
            line
        });
        failure = match line {
            Ok(line) => out
                .write_all(line.as_bytes())
                .err()
                .map(|e| CliError::Data(format!("{label}: {e}"))),
            Err(e) => Some(e.into()),
        };
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let digest = out
        .finish()
        .map_err(|e| CliError::Data(format!("{label}: {e}")))?;

    let mut m = RunManifest::new("transform");
    m.push("model", args.model.display());
    m.push("sha256.model", sha256_file(&args.model)?);
    record_input(&mut m, "input", &args.input, Some(&ds))?;
    m.push("k", model.k());
    m.push("d", model.d());
    m.push("unwhitened", args.unwhitened);
    m.push("output", label);
    m.push("sha256.output", digest);
    Ok(m)
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<RunManifest, CliError> {
    check_flags(&args.projection)?;
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let ds = parse_libsvm(&args.input, args.projection.declared_p)?;
    let reference = ExactReference::compute(&ds, args.projection.k)?;

    let mut report = String::new();
    let mut errors = Vec::new();
    let mut first_cfg = None;
    for i in 0..args.seeds {
        let seed = args.projection.seed.wrapping_add(i);
        let cfg = build_config(&args.projection, args.center, seed, ds.p())?;
        let r = compare_with_reference(&ds, &cfg, &reference, args.epsilon, args.delta)?;
        report.push_str(&format!("[seed {seed}]\n{r}\n"));
        errors.push(r.sin_phi_frobenius);
        first_cfg.get_or_insert(cfg);
    }
    report.push_str(&format!(
        "median_sin_phi_frobenius={}\n",
        format_f64(median(&errors))
    ));

    let mut out = open_output(args.output.as_deref())?;
    let label = output_label(args.output.as_deref());
    out.write_all(report.as_bytes())
        .map_err(|e| CliError::Data(format!("{label}: {e}")))?;
    let digest = out
        .finish()
        .map_err(|e| CliError::Data(format!("{label}: {e}")))?;

    let mut m = RunManifest::new("diagnose");
    record_input(&mut m, "input", &args.input, Some(&ds))?;
    if let Some(cfg) = first_cfg {
        record_config(&mut m, &cfg, args.projection.seed);
    }
    m.push("seeds", args.seeds);
    m.push("epsilon", format_f64(args.epsilon));
    m.push("delta", format_f64(args.delta));
    m.push("output", label);
    m.push("sha256.output", digest);
    Ok(m)
}

fn cmd_synth(args: &SynthArgs) -> Result<RunManifest, CliError> {
    if args.spectrum.len() != args.rank {
        return Err(CliError::Usage(format!(
            "--rank {} does not match {} spectrum values",
            args.rank,
            args.spectrum.len()
        )));
    }
    let spec = SynthSpec {
        n: args.n,
        p: args.p,
        spectrum: args.spectrum.clone(),
        noise_sigma: args.noise,
        density: args.density,
        seed: args.seed,
    };
    let ds = synth_lowrank(&spec)?;
    let file = File::create(&args.output).map_err(io_error(&args.output))?;
    let mut out = HashingWriter::new(BufWriter::new(file));
    write_libsvm(&ds, &mut out)?;
    let digest = out.finish().map_err(io_error(&args.output))?;

    let mut m = RunManifest::new("synth");
    m.push("n", args.n);
    m.push("p", args.p);
    m.push("rank", args.rank);
    let spectrum: Vec<String> = args.spectrum.iter().map(|s| format_f64(*s)).collect();
    m.push("spectrum", spectrum.join(","));
    m.push("noise", format_f64(args.noise));
    m.push("density", format_f64(args.density));
    m.push("seed", args.seed);
    m.push("output", args.output.display());
    m.push("sha256.output", digest);
    Ok(m)
}

/// Runs one parsed command and returns its manifest, without the timing
/// and argv entries.
pub fn execute(cli: &Cli) -> Result<RunManifest, CliError> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Parses `argv`, runs the command, prints the manifest or the error, and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    match execute(&cli) {
        Ok(mut manifest) => {
            manifest.push("wall_seconds", format_f64(start.elapsed().as_secs_f64()));
            let args: Vec<String> = argv
                .iter()
                .map(|a| a.to_string_lossy().into_owned())
                .collect();
            manifest.push("argv", args.join(" "));
            eprint!("{manifest}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
