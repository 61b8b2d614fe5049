//! Command-line frontend: `tailsampler <subcommand> [flags]`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 success, 1 property failure, 2 input error, 3 runtime or
//! sampler error.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bns::{toy_dataset, train_toy_embeddings, BnsConfig, ToyTraining};
use crate::data_model::{parse_manifest, write_subset_indices, ClassManifest, ManifestFormat, SamplerVariant};
use crate::dpp::{enumerate_all, expected_size, monte_carlo_marginals, sample_standard, MAX_ENUMERATION};
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, Method, Schedule, SyntheticConfig};
use crate::ipdpp::{balanced_resample, merged_indices, sample_k, SamplerConfig};
use crate::rng::derive_seed;
use crate::stochastic_matrix::{build_stochastic_matrix, validate_lemmas};
use crate::verify::{run_suite, write_table, Fault, Suite, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILURE: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tailsampler",
    version,
    about = "Information-preserving DPP rebalancing toolkit"
)]
pub struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Primary output artifact.
    #[arg(long, visible_alias = "out", global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a class-balanced subset of a manifest with the k-DPP sampler.
    Sample(SampleArgs),
    /// Run randomized property suites, or check the kernel of one manifest.
    Verify(VerifyArgs),
    /// Two-stage synthetic long-tail experiment.
    Experiment(ExperimentArgs),
    /// Train toy embeddings with the balanced contrastive loss.
    BnsToy(BnsToyArgs),
    /// Draw one DPP (or k-DPP) sample from a manifest's probabilities.
    DppSample(DppSampleArgs),
    /// Compare sampler marginals with the marginal kernel by Monte Carlo.
    DppVerify(DppVerifyArgs),
}

#[derive(Debug, Args)]
pub struct ManifestInput {
    /// Manifest path (`.csv` or `.jsonl`).
    #[arg(long)]
    pub input: PathBuf,

    /// Override the format inferred from the extension.
    #[arg(long, value_parser = ["csv", "jsonl"])]
    pub format: Option<String>,
}

impl ManifestInput {
    fn load(&self) -> Result<ClassManifest> {
        let format = match self.format.as_deref() {
            Some("jsonl") => ManifestFormat::Jsonl,
            Some(_) => ManifestFormat::Csv,
            None => ManifestFormat::from_path(&self.input),
        };
        parse_manifest(&self.input, format)
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub manifest: ManifestInput,

    /// Per-class cardinality (default: ten times the smallest class).
    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long, default_value = "paper-argmax")]
    pub variant: SamplerVariant,

    /// Do not top up when the eigenvector walk keeps fewer than k vectors.
    #[arg(long)]
    pub no_topup: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: Suite,

    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    /// Draws per instance for the Monte-Carlo marginal check.
    #[arg(long, default_value_t = 50_000)]
    pub mc_draws: usize,

    /// Check the kernel built from this manifest and print its lemma report.
    #[arg(long)]
    pub matrix: Option<PathBuf>,

    #[arg(long, hide = true, value_parser = ["corrupt-matrix"])]
    pub inject_fault: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, default_value_t = 10)]
    pub classes: usize,

    /// Size of the largest class.
    #[arg(long, default_value_t = 500)]
    pub n1: usize,

    /// Imbalance factor, largest over smallest class size.
    #[arg(long = "if", default_value_t = 100.0)]
    pub imbalance_factor: f64,

    #[arg(long, default_value_t = 8)]
    pub dim: usize,

    #[arg(long, default_value_t = 1.5)]
    pub separation: f64,

    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,

    #[arg(long, default_value_t = 100)]
    pub test_per_class: usize,

    /// Number of seeds, counted up from `--seed`.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,

    /// Per-class cardinality (default: ten times the smallest class).
    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long, default_value = "paper-argmax")]
    pub variant: SamplerVariant,

    /// Comma-separated subset of ip-dpp, random-undersample, full-data.
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL)]
    pub methods: Vec<Method>,

    #[arg(long, default_value_t = 200)]
    pub stage1_epochs: usize,

    #[arg(long, default_value_t = 60)]
    pub stage2_epochs: usize,

    #[arg(long, default_value_t = 10)]
    pub resample_every: usize,

    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,

    /// Per-seed CSV path (default: the report path with a `.csv` extension).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BnsToyArgs {
    #[arg(long, default_value_t = 2)]
    pub classes: usize,

    #[arg(long, default_value_t = 20)]
    pub per_class: usize,

    #[arg(long, default_value_t = 2)]
    pub dim: usize,

    /// Within-class spread of the toy points before normalization.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,

    #[arg(long, default_value_t = 200)]
    pub steps: usize,

    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,

    #[arg(long, default_value_t = 0.3)]
    pub tau: f64,

    /// Extra same-class positives per anchor.
    #[arg(long, default_value_t = 6)]
    pub m: usize,

    /// Negatives per anchor.
    #[arg(long, default_value_t = 5)]
    pub n: usize,

    #[arg(long, default_value_t = 0.05)]
    pub view_noise: f64,
}

#[derive(Debug, Args)]
pub struct DppSampleArgs {
    #[command(flatten)]
    pub manifest: ManifestInput,

    /// Restrict the ground set to one class.
    #[arg(long)]
    pub class: Option<usize>,

    /// Fixed cardinality; omit for a plain DPP draw.
    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long, default_value = "paper-argmax")]
    pub variant: SamplerVariant,
}

#[derive(Debug, Args)]
pub struct DppVerifyArgs {
    #[command(flatten)]
    pub manifest: ManifestInput,

    #[arg(long)]
    pub class: Option<usize>,

    #[arg(long, default_value_t = 200_000)]
    pub draws: usize,

    #[arg(long, default_value = "probabilistic")]
    pub variant: SamplerVariant,

    /// Items whose |z| exceeds this count as misses.
    #[arg(long, default_value_t = 3.0)]
    pub z_max: f64,

    /// Minimum fraction of items within `z_max`.
    #[arg(long, default_value_t = 0.95)]
    pub min_fraction: f64,
}

/// Parse `args` (program name first) and run, writing to the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Execute a parsed command line.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Sample(a) => cmd_sample(cli, a, out),
        Command::Verify(a) => cmd_verify(cli, a, out),
        Command::Experiment(a) => cmd_experiment(cli, a, out),
        Command::BnsToy(a) => cmd_bns_toy(cli, a, out),
        Command::DppSample(a) => cmd_dpp_sample(cli, a, out),
        Command::DppVerify(a) => cmd_dpp_verify(cli, a, out),
    }
}

fn stdout_error(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Run `body` against the output file, or against `out` when no path is set.
fn with_output(
    path: Option<&Path>,
    out: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(p, e))
        }
        None => body(out).map_err(stdout_error),
    }
}

fn require_output(cli: &Cli, command: &str) -> Result<PathBuf> {
    cli.output
        .clone()
        .ok_or_else(|| Error::InvalidArgument(format!("{command} requires --out <path>")))
}

fn cmd_sample(cli: &Cli, a: &SampleArgs, out: &mut dyn Write) -> Result<i32> {
    let output = require_output(cli, "sample")?;
    let manifest = a.manifest.load()?;
    let k = a.k.unwrap_or_else(|| SamplerConfig::default_k(&manifest));
    let config = SamplerConfig::new(k, cli.seed)
        .with_variant(a.variant)
        .with_topup(!a.no_topup);
    let samples = balanced_resample(&manifest, &config)?;
    write_subset_indices(&manifest, &merged_indices(&samples), &output)?;
    writeln!(out, "class,available,selected").map_err(stdout_error)?;
    for (c, s) in &samples {
        writeln!(out, "{c},{},{}", manifest.count(*c), s.len()).map_err(stdout_error)?;
    }
    Ok(EXIT_OK)
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    if let Some(path) = &a.matrix {
        let manifest = parse_manifest(path, ManifestFormat::from_path(path))?;
        let probs = manifest
            .items()
            .iter()
            .map(|it| it.probability.ok_or_else(|| Error::MissingProbability(it.id.clone())))
            .collect::<Result<Vec<f64>>>()?;
        let report = validate_lemmas(&build_stochastic_matrix(&probs)?);
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        with_output(cli.output.as_deref(), out, |w| writeln!(w, "{json}"))?;
        return Ok(if report.all_ok() {
            EXIT_OK
        } else {
            EXIT_PROPERTY_FAILURE
        });
    }
    let opts = VerifyOptions {
        trials: a.trials,
        seed: cli.seed,
        mc_draws: a.mc_draws,
        fault: a.inject_fault.as_ref().map(|_| Fault::CorruptMatrix),
    };
    let outcomes = run_suite(a.suite, &opts);
    write_table(&outcomes, &mut *out).map_err(stdout_error)?;
    if let Some(p) = &cli.output {
        with_output(Some(p), out, |w| write_table(&outcomes, w))?;
    }
    Ok(if outcomes.iter().all(|o| o.passed()) {
        EXIT_OK
    } else {
        EXIT_PROPERTY_FAILURE
    })
}

fn cmd_experiment(cli: &Cli, a: &ExperimentArgs, out: &mut dyn Write) -> Result<i32> {
    let data = SyntheticConfig {
        num_classes: a.classes,
        max_class_size: a.n1,
        imbalance_factor: a.imbalance_factor,
        dim: a.dim,
        class_separation: a.separation,
        noise_sigma: a.noise,
        test_per_class: a.test_per_class,
        seed: cli.seed,
    };
    data.validate()?;
    let smallest = data.class_sizes().last().copied().unwrap_or(0);
    let k = a.k.unwrap_or(10 * smallest);
    let sampler = SamplerConfig::new(k, cli.seed).with_variant(a.variant);
    let schedule = Schedule {
        stage1_epochs: a.stage1_epochs,
        stage2_epochs: a.stage2_epochs,
        resample_every: a.resample_every,
        lr: a.lr,
    };
    let methods: BTreeSet<Method> = a.methods.iter().copied().collect();
    let seeds: Vec<u64> = (0..a.seeds).map(|i| cli.seed.wrapping_add(i)).collect();
    let report = run_experiment(&data, &sampler, &schedule, &methods, &seeds)?;

    let json = report.to_json();
    match &cli.output {
        Some(path) => {
            with_output(Some(path), out, |w| writeln!(w, "{json}"))?;
            let csv_path = a.csv.clone().unwrap_or_else(|| path.with_extension("csv"));
            with_output(Some(&csv_path), out, |w| report.write_csv(w))?;
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
            writeln!(out, "method,many,medium,few,overall").map_err(stdout_error)?;
            for (m, s) in report.summary() {
                writeln!(
                    out,
                    "{m},{},{},{},{:.4}",
                    fmt(s.many),
                    fmt(s.medium),
                    fmt(s.few),
                    s.overall
                )
                .map_err(stdout_error)?;
            }
        }
        None => {
            writeln!(out, "{json}").map_err(stdout_error)?;
            if let Some(csv_path) = &a.csv {
                with_output(Some(csv_path), out, |w| report.write_csv(w))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bns_toy(cli: &Cli, a: &BnsToyArgs, out: &mut dyn Write) -> Result<i32> {
    let (data, labels) = toy_dataset(a.classes, a.per_class, a.dim, a.spread, cli.seed)?;
    let config = BnsConfig::new(a.tau, a.m, a.n)?;
    let training = ToyTraining {
        steps: a.steps,
        lr: a.lr,
        seed: cli.seed,
        view_noise: a.view_noise,
    };
    let trace = train_toy_embeddings(&data, &labels, &config, &training)?;
    with_output(cli.output.as_deref(), out, |w| trace.write_csv(w))?;
    if cli.output.is_some() {
        let first = trace.intra_dist.first().copied().unwrap_or(0.0);
        let last = trace.intra_dist.last().copied().unwrap_or(0.0);
        writeln!(out, "intra_dist {first:.6} -> {last:.6}").map_err(stdout_error)?;
    }
    Ok(EXIT_OK)
}

/// Probabilities of the (optionally class-restricted) ground set, with the
/// manifest row index of each element.
fn ground_set(manifest: &ClassManifest, class: Option<usize>) -> Result<(Vec<usize>, Vec<f64>)> {
    let members: Vec<usize> = match class {
        Some(c) => manifest.class_indices(c),
        None => (0..manifest.len()).collect(),
    };
    if members.is_empty() {
        return Err(Error::EmptyClass(class.unwrap_or(0)));
    }
    let probs = members
        .iter()
        .map(|&i| {
            let it = &manifest.items()[i];
            it.probability.ok_or_else(|| Error::MissingProbability(it.id.clone()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((members, probs))
}

fn cmd_dpp_sample(cli: &Cli, a: &DppSampleArgs, out: &mut dyn Write) -> Result<i32> {
    let manifest = a.manifest.load()?;
    let (members, probs) = ground_set(&manifest, a.class)?;
    let s = build_stochastic_matrix(&probs)?;
    let seed = derive_seed(cli.seed, "dpp-sample");
    let sample = match a.k {
        Some(k) => sample_k(&s, &SamplerConfig::new(k, seed).with_variant(a.variant))?,
        None => sample_standard(&s, seed, a.variant)?,
    };
    let chosen: BTreeSet<usize> = sample.indices.iter().map(|&i| members[i]).collect();
    match &cli.output {
        Some(path) => {
            write_subset_indices(&manifest, &chosen, path)?;
            writeln!(
                out,
                "sampled {} of {} items (expected size {:.4})",
                chosen.len(),
                members.len(),
                expected_size(&s)?
            )
            .map_err(stdout_error)?;
        }
        None => {
            writeln!(out, "id,class").map_err(stdout_error)?;
            for &i in &chosen {
                let it = &manifest.items()[i];
                writeln!(out, "{},{}", it.id, it.class_label).map_err(stdout_error)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_dpp_verify(cli: &Cli, a: &DppVerifyArgs, out: &mut dyn Write) -> Result<i32> {
    if a.draws == 0 {
        return Err(Error::InvalidArgument("--draws must be positive".into()));
    }
    let manifest = a.manifest.load()?;
    let (_, probs) = ground_set(&manifest, a.class)?;
    let s = build_stochastic_matrix(&probs)?;
    let report = monte_carlo_marginals(&s, a.draws, cli.seed, a.variant)?;
    with_output(cli.output.as_deref(), out, |w| report.write_csv(w))?;

    let frac = report.fraction_within(a.z_max);
    let mut ok = frac >= a.min_fraction;
    let mut summary = format!(
        "items within {} SE: {:.4}; mean size {:.4} vs expected {:.4}",
        a.z_max, frac, report.mean_size, report.expected_size
    );
    if probs.len() <= MAX_ENUMERATION.min(16) {
        let rel = enumerate_all(&s)?.normalization_error();
        ok &= rel <= 1e-8;
        summary.push_str(&format!("; normalization error {rel:e}"));
    }
    if cli.output.is_some() {
        writeln!(out, "{summary}").map_err(stdout_error)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_PROPERTY_FAILURE })
}
