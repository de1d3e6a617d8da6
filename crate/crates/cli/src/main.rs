//! `slidedx` command-line front end.
//!
//! Failures print a single line `error: kind=<kind> message=<text>` to stderr
//! and exit with status 1 (2 for command-line usage errors).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slidedx::diagnosis::{sweep, ThresholdRule};
use slidedx::domain::{binarize, merge_classes, ClassScheme, Magnification};
use slidedx::ensemble::{ensemble_multiscale, median_filter};
use slidedx::formats;
use slidedx::labeling::{build_pyramid, PatchLabelGrid};
use slidedx::metrics::agreement_matrix;
use slidedx::stats::{stat_classify, truncate_above_quantile, Population, Sample, StatParams, TestKind};
use slidedx::synth::{gen_population, gen_probability_map, gen_scan_records, MapSpec, PopulationSpec};
use slidedx::{Diagnosis, Error};

#[derive(Parser)]
#[command(name = "slidedx", version, about = "Scan-level decisions from patch probability maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rescale maps to the coarsest magnification present and average them.
    Ensemble(EnsembleArgs),
    /// Diagnose every scan record with a (T_L, T_U) threshold rule.
    Diagnose(DiagnoseArgs),
    /// Accuracy and coverage over a grid of threshold pairs.
    Sweep(SweepArgs),
    /// Classify one scan sample against C and NC reference populations.
    StatClassify(StatClassifyArgs),
    /// Pairwise rank correlation between raters.
    Agreement(AgreementArgs),
    /// Label 40x patches from annotation overlaps, optionally for all magnifications.
    LabelPatches(LabelArgs),
    /// Generate synthetic inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Args)]
struct EnsembleArgs {
    /// Map manifests (JSON), any mix of magnifications.
    #[arg(long, num_args = 1.., required = true)]
    maps: Vec<PathBuf>,
    /// Output manifest; value and mask files are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Median filter kernel size applied to the binarised map (odd).
    #[arg(long)]
    median_k: Option<usize>,
    /// Class setting (1-5 or S1-S5) used to binarise; must have two groups.
    #[arg(long, default_value = "S1")]
    scheme: String,
    /// Write the binary map as CSV (row,col,cancer,valid).
    #[arg(long)]
    binary_out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Scan records CSV (scan_id,cancer_pct,diagnosis).
    #[arg(long)]
    scans: PathBuf,
    /// Lower threshold T_L in percent; p_c <= T_L gives NC.
    #[arg(long, default_value_t = 0.5)]
    tl: f64,
    /// Upper threshold T_U in percent; p_c >= T_U gives C.
    #[arg(long, default_value_t = 7.0)]
    tu: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scans: PathBuf,
    /// T_L grid as start:stop:step (inclusive).
    #[arg(long)]
    tl_grid: String,
    /// T_U grid as start:stop:step (inclusive).
    #[arg(long)]
    tu_grid: String,
    #[arg(long)]
    out_acc: PathBuf,
    #[arg(long)]
    out_cov: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    Welch,
    Wmw,
    Perm,
}

impl From<TestArg> for TestKind {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::Welch => TestKind::Welch,
            TestArg::Wmw => TestKind::Wmw,
            TestArg::Perm => TestKind::Permutation,
        }
    }
}

#[derive(Args)]
struct StatClassifyArgs {
    /// Patch probabilities of the scan, one per line.
    #[arg(long)]
    sample: PathBuf,
    /// Pooled C patch probabilities, one per line.
    #[arg(long)]
    pop_c: PathBuf,
    /// Pooled NC patch probabilities, one per line.
    #[arg(long)]
    pop_nc: PathBuf,
    #[arg(long, value_enum, default_value = "welch")]
    test: TestArg,
    /// Cut-off quantile for populations and sample.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Size of each drawn sample.
    #[arg(long, default_value_t = 20)]
    s: usize,
    /// Number of draws.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Required overhead of passed over failed tests, as a fraction of n.
    #[arg(long, default_value_t = 0.05)]
    r: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Permutations per permutation test.
    #[arg(long, default_value_t = 999)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AgreementArgs {
    /// Rater table CSV (wsi_no, one column per rater, optional cancer_pct).
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    /// Overlap CSV (row,col,class,ratio) for the 40x grid.
    #[arg(long)]
    overlaps: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also derive the 20x, 10x and 5x grids.
    #[arg(long)]
    pyramid: bool,
    /// Grid height; defaults to the largest row index plus one.
    #[arg(long)]
    height: Option<usize>,
    /// Grid width; defaults to the largest column index plus one.
    #[arg(long)]
    width: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    C,
    Nc,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Patch-probability population from the C or NC preset.
    Population {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 10_000)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan records with ground truth.
    Scans {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0.45)]
        prevalence: f64,
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nine-class probability map with cancerous blobs and salt noise.
    Map {
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 3)]
        blobs: usize,
        #[arg(long, default_value_t = 0.01)]
        salt: f64,
        #[arg(long, default_value_t = 20)]
        magnification: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Inclusive `start:stop:step` grid. Points are rounded to 9 decimals so that
/// accumulated steps print cleanly.
fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Parameter(format!("grid must be start:stop:step, got {spec:?}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Parameter(format!("grid {spec:?} needs step > 0 and start <= stop")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(Error::Parameter(format!("grid {spec:?} has more than 100000 points")));
    }
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn run_ensemble(a: &EnsembleArgs) -> Result<(), Error> {
    let maps = a.maps.iter().map(|p| formats::read_map(p)).collect::<Result<Vec<_>, _>>()?;
    let merged = ensemble_multiscale(&maps)?;
    formats::write_map(&a.out, &merged)?;
    if a.median_k.is_some() || a.binary_out.is_some() {
        let scheme: ClassScheme = a.scheme.parse()?;
        let mut bin = binarize(&merge_classes(&merged, &scheme)?)?;
        if let Some(k) = a.median_k {
            bin = median_filter(&bin, k)?;
        }
        if let Some(path) = &a.binary_out {
            formats::write_binary_map(path, &bin)?;
        }
        println!("cancer_pct={}", formats::fmt_pct(bin.cancer_fraction()?));
    }
    Ok(())
}

fn run_diagnose(a: &DiagnoseArgs) -> Result<(), Error> {
    let rule = ThresholdRule::new(a.tl, a.tu)?;
    let records = formats::read_scan_records(&a.scans)?;
    let decisions: Vec<Diagnosis> = records.iter().map(|r| rule.decide(r.cancer_pct())).collect();
    formats::write_decisions(&a.out, &records, &decisions)
}

fn run_sweep(a: &SweepArgs) -> Result<(), Error> {
    let records = formats::read_scan_records(&a.scans)?;
    let result = sweep(&records, &parse_grid(&a.tl_grid)?, &parse_grid(&a.tu_grid)?)?;
    formats::write_sweep(&a.out_acc, &a.out_cov, &result)
}

fn read_population(path: &Path, label: Diagnosis, q: f64) -> Result<Population, Error> {
    truncate_above_quantile(&Population::new(label, formats::read_values(path)?)?, q)
}

fn run_stat_classify(a: &StatClassifyArgs) -> Result<(), Error> {
    let params = StatParams {
        q: a.q,
        sample_size: a.s,
        draws: a.n,
        overhead: a.r,
        alpha: a.alpha,
        permutations: a.m,
        seed: a.seed,
    };
    params.validate()?;
    let x = Sample::new(formats::read_values(&a.sample)?)?;
    let pop_c = read_population(&a.pop_c, Diagnosis::C, a.q)?;
    let pop_nc = read_population(&a.pop_nc, Diagnosis::NC, a.q)?;
    let kind: TestKind = a.test.into();
    let out = stat_classify(&x, &pop_c, &pop_nc, &params, kind)?;
    println!(
        "diagnosis={} test={} c_passed={} c_failed={} nc_passed={} nc_failed={}",
        out.diagnosis, kind, out.c.passed, out.c.failed, out.nc.passed, out.nc.failed
    );
    Ok(())
}

fn run_agreement(a: &AgreementArgs) -> Result<(), Error> {
    let table = formats::read_rater_table(&a.table)?;
    formats::write_agreement(&a.out, &agreement_matrix(&table)?)
}

fn run_label(a: &LabelArgs) -> Result<(), Error> {
    let shape = match (a.height, a.width) {
        (Some(h), Some(w)) => Some((h, w)),
        (None, None) => None,
        _ => return Err(Error::Parameter("--height and --width must be given together".into())),
    };
    let grid = formats::read_overlaps(&a.overlaps, shape)?;
    let base = PatchLabelGrid::from_overlaps(grid.height, grid.width, &grid.cells)?;
    let mut grids = vec![base];
    if a.pyramid {
        grids.extend(build_pyramid(&grids[0])?);
    }
    formats::write_labels(&a.out, &grids)
}

fn run_synth(cmd: &SynthCommand) -> Result<(), Error> {
    match cmd {
        SynthCommand::Population { kind, size, seed, out } => {
            let kind = match kind {
                KindArg::C => Diagnosis::C,
                KindArg::Nc => Diagnosis::NC,
            };
            let pop = gen_population(&PopulationSpec::preset(kind, *size, *seed)?)?;
            formats::write_values(out, pop.values())
        }
        SynthCommand::Scans { count, prevalence, noise, seed, out } => {
            formats::write_scan_records(out, &gen_scan_records(*count, *prevalence, *noise, *seed)?)
        }
        SynthCommand::Map { height, width, blobs, salt, magnification, seed, out } => {
            let spec = MapSpec {
                height: *height,
                width: *width,
                blobs: *blobs,
                salt: *salt,
                magnification: Magnification::from_value(*magnification)?,
                seed: *seed,
            };
            formats::write_map(out, &gen_probability_map(&spec)?)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand) {
                e.exit();
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("error: kind=usage message={}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Ensemble(a) => run_ensemble(a),
        Command::Diagnose(a) => run_diagnose(a),
        Command::Sweep(a) => run_sweep(a),
        Command::StatClassify(a) => run_stat_classify(a),
        Command::Agreement(a) => run_agreement(a),
        Command::LabelPatches(a) => run_label(a),
        Command::Synth(c) => run_synth(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} message={}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
