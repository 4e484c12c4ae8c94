use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mixfit::commands::{self, EvalPoints, FitOptions, Grid};
use mixfit::data_file::{self, DataFile, FormatHint};
use mixfit::model_file::ModelFile;
use mixfit::synth::{self, SynthSpec};
use mixfit::{fmt_short, selfcheck, CliError, Result};
use mixfit_core::{Components, Family, FitConfig};

#[derive(Parser)]
#[command(
    name = "mixfit",
    version,
    about = "Fit finite mixture distributions with EM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Mvn,
    Poisson,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => Family::Gaussian1D,
            FamilyArg::Mvn => Family::Mvn,
            FamilyArg::Poisson => Family::Poisson,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    PaperGaussian,
    PaperPoisson,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sample.
    Synth(SynthArgs),
    /// Fit a K-component mixture with EM.
    Fit(FitArgs),
    /// Label each observation with its most likely component.
    Cluster(ClusterArgs),
    /// Evaluate weighted component densities and the mixture on a grid.
    Eval(EvalArgs),
    /// Run the embedded oracle checks.
    Selfcheck,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, conflicts_with_all = ["family", "component"])]
    preset: Option<Preset>,
    #[arg(long, value_enum, requires = "component")]
    family: Option<FamilyArg>,
    /// MU:SIGMA:SIZE (gaussian), MU1,MU2:SIGMA1,SIGMA2:SIZE (mvn), LAMBDA:SIZE (poisson).
    #[arg(long, allow_hyphen_values = true)]
    component: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write Poisson samples as a frequency table.
    #[arg(long)]
    freq_table: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `index,label` with the generating subset of each row.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    data: PathBuf,
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// reinit | error
    #[arg(long, default_value = "reinit")]
    degenerate: String,
    /// auto | raw | freq
    #[arg(long, default_value = "auto")]
    format: String,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the single-distribution MLE next to --out as `<stem>.mle.json`.
    #[arg(long)]
    baseline_mle: bool,
    /// Keep components in fitted order instead of sorting by location.
    #[arg(long)]
    no_sort: bool,
}

#[derive(Args)]
struct ClusterArgs {
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// density | posterior
    #[arg(long, default_value = "density")]
    rule: String,
    #[arg(long, default_value = "auto")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    model: PathBuf,
    /// MIN:MAX:STEPS
    #[arg(long, conflicts_with = "points", allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = match (args.preset, args.family) {
        (Some(Preset::PaperPoisson), _) => {
            if args.labels.is_some() {
                return Err(CliError::Usage(
                    "the paper-poisson preset has no subset labels".into(),
                ));
            }
            let text = data_file::format_freq_table(&synth::poisson_example_table());
            return emit(args.out.as_deref(), &text);
        }
        (Some(Preset::PaperGaussian), _) => SynthSpec::paper_gaussian(),
        (None, Some(f)) => SynthSpec::parse(f.into(), &args.component)?,
        (None, None) => {
            return Err(CliError::Usage(
                "give --preset or --family with --component".into(),
            ))
        }
    };
    let sample = synth::generate(&spec, args.seed);
    let text = match spec.family {
        Family::Poisson if args.freq_table => {
            data_file::format_freq_table(&mixfit_core::FreqTable::from_observations(&sample.counts))
        }
        Family::Poisson => data_file::format_counts(&sample.counts),
        _ => data_file::format_raw(&sample.reals, sample.dim),
    };
    if let Some(path) = &args.labels {
        if args.freq_table {
            return Err(CliError::Usage("--labels needs raw output".into()));
        }
        let mut csv = String::from("index,label\n");
        for (i, l) in sample.labels.iter().enumerate() {
            csv.push_str(&format!("{i},{l}\n"));
        }
        emit(Some(path), &csv)?;
    }
    emit(args.out.as_deref(), &text)
}

fn summarize(model: &mixfit_core::MixtureModel) -> String {
    let w: Vec<String> = model.weights().iter().map(|v| fmt_short(*v)).collect();
    let params: Vec<String> = match model.components() {
        Components::Gaussian1D(c) => c
            .iter()
            .map(|p| format!("mu={} sigma={}", fmt_short(p.mu), fmt_short(p.sigma())))
            .collect(),
        Components::Mvn(c) => c
            .iter()
            .map(|p| {
                format!(
                    "mu=[{}]",
                    p.mu.iter()
                        .map(|v| fmt_short(*v))
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            })
            .collect(),
        Components::Poisson(c) => c
            .iter()
            .map(|p| format!("lambda={}", fmt_short(p.lambda)))
            .collect(),
    };
    params
        .iter()
        .zip(&w)
        .enumerate()
        .map(|(i, (p, w))| format!("  component {}: w={w} {p}\n", i + 1))
        .collect()
}

fn fit(args: FitArgs) -> Result<()> {
    let family: Family = args.family.into();
    let hint: FormatHint = args.format.parse()?;
    let data = DataFile::read(&args.data, family, hint)?;
    let config = FitConfig {
        k: args.k,
        family,
        tol: args.tol,
        max_iters: args.max_iters,
        restarts: args.restarts,
        seed: args.seed,
        degenerate_policy: commands::parse_policy(&args.degenerate)?,
    };
    let opts = FitOptions {
        config,
        threads: args.threads,
        sort: !args.no_sort,
        baseline_mle: args.baseline_mle,
    };
    let baseline_path = match (&args.out, args.baseline_mle) {
        (Some(out), true) => Some(out.with_extension("mle.json")),
        (None, true) => return Err(CliError::Usage("--baseline-mle needs --out".into())),
        _ => None,
    };
    let output = commands::run_fit(&data.dataset, &opts)?;
    for w in &output.fit.warnings {
        eprintln!("warning: {w:?}");
    }
    eprintln!(
        "{} after {} iterations (restart {}), log-likelihood {}",
        if output.fit.converged {
            "converged"
        } else {
            "stopped"
        },
        output.fit.iters,
        output.fit.best_of,
        fmt_short(output.fit.final_log_likelihood)
    );
    eprint!("{}", summarize(&output.fit.model));
    if let Some(path) = &args.trace {
        emit(Some(path), &output.trace_csv)?;
    }
    if let (Some(path), Some(b)) = (&baseline_path, &output.baseline) {
        b.write(path)?;
    }
    emit(args.out.as_deref(), &output.model_file.to_json())
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let model = ModelFile::read_model(&args.model)?;
    let data = DataFile::read(&args.data, model.family(), args.format.parse()?)?;
    let csv = commands::run_cluster(&data, &model, commands::parse_rule(&args.rule)?)?;
    emit(args.out.as_deref(), &csv)
}

fn eval(args: EvalArgs) -> Result<()> {
    let model = ModelFile::read_model(&args.model)?;
    let csv = match (&args.grid, &args.points) {
        (Some(g), None) => commands::run_eval(&model, EvalPoints::Grid(Grid::parse(g)?))?,
        (None, Some(p)) => {
            let data = DataFile::read(p, model.family(), FormatHint::Raw)?;
            commands::run_eval(&model, EvalPoints::File(&data))?
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --grid or --points".into(),
            ))
        }
    };
    emit(args.out.as_deref(), &csv)
}

fn selfcheck() -> Result<()> {
    let results = selfcheck::run_embedded();
    print!("{}", selfcheck::report(&results));
    match results.iter().filter(|r| !r.passed).count() {
        0 => Ok(()),
        n => Err(CliError::SelfCheck(n)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Fit(a) => fit(a),
        Command::Cluster(a) => cluster(a),
        Command::Eval(a) => eval(a),
        Command::Selfcheck => selfcheck(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
