mod artifact;
mod render;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use departure_core::{
    compute_margins, divide_in_intervals, fit_em, generate_synthetic, ground_truth_bins, impose_and_avg, parse_csv,
    scale_granularity, score, superimpose, trim_range, BinGrid, Dataset, EmConfig, GranularityRule, InitStrategy,
    SyntheticSpec, TimeOfDay, TimeWindow,
};

use artifact::Artifact;

/// Forecast first daily departures per time interval of a commuter window.
#[derive(Debug, Parser)]
#[command(name = "fddt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-bin mean departures with k-sigma Poisson margins.
    Forecast(ForecastArgs),
    /// Search for the finest bin count satisfying an epsilon constraint.
    Scale(ScaleArgs),
    /// Fit a Gaussian mixture by EM and integrate it over the bins.
    FitGmm(FitGmmArgs),
    /// Score a model artifact's per-bin fractions with erf.
    Evaluate(EvaluateArgs),
    /// Write a seeded synthetic training or test CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct WindowArgs {
    #[arg(long, default_value = "06:00:00", value_parser = parse_time)]
    window_start: TimeOfDay,
    #[arg(long, default_value = "09:00:00", value_parser = parse_time)]
    window_end: TimeOfDay,
}

impl WindowArgs {
    fn window(&self) -> anyhow::Result<TimeWindow> {
        Ok(TimeWindow::new(self.window_start, self.window_end)?)
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
    Svg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Rule {
    Paper,
    Relative,
}

impl From<Rule> for GranularityRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Paper => GranularityRule::PaperLiteral,
            Rule::Relative => GranularityRule::RelativeError,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Init {
    Even,
    Random,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    /// Training CSV; repeat to superimpose several cities.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = 12)]
    bins: usize,
    #[arg(long, default_value_t = departure_core::margins::DEFAULT_K)]
    k: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = Rule::Paper)]
    rule: Rule,
    #[arg(long, default_value_t = 1)]
    b_min: usize,
    #[arg(long, default_value_t = 36)]
    b_max: usize,
    #[arg(long, default_value_t = departure_core::margins::DEFAULT_K)]
    k: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct FitGmmArgs {
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = 12)]
    bins: usize,
    /// Mixture components; defaults to the bin count.
    #[arg(long)]
    components: Option<usize>,
    #[arg(long, value_enum, default_value_t = Init::Even)]
    init: Init,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Minimum component variance in seconds squared.
    #[arg(long, default_value_t = 1.0)]
    variance_floor: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// JSON artifact written by forecast, scale or fit-gmm (or a
    /// `predictions` file).
    #[arg(long)]
    model: PathBuf,
    /// Held-out CSV; its per-bin fractions are reported alongside.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Expected bin count; must match the model's grid.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    label: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value = "07:30:00", value_parser = parse_time)]
    mean: TimeOfDay,
    /// Seconds.
    #[arg(long, default_value_t = 2400.0)]
    stddev: f64,
    #[arg(long, default_value_t = 4)]
    sessions: usize,
    #[arg(long, default_value_t = 190)]
    vehicles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "session-")]
    prefix: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_time(s: &str) -> Result<TimeOfDay, String> {
    s.parse().map_err(|e: departure_core::Error| e.to_string())
}

fn load(paths: &[PathBuf]) -> anyhow::Result<Dataset> {
    let parts = paths
        .iter()
        .map(|p| {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            parse_csv(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(superimpose(&parts)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn forecast(a: ForecastArgs) -> anyhow::Result<()> {
    let window = a.window.window()?;
    let grid = BinGrid::new(window, a.bins)?;
    let data = trim_range(&load(&a.input)?, window);
    let stats = impose_and_avg(&divide_in_intervals(&data, grid)?)?;
    let f = compute_margins(&stats, a.k)?;
    let text = match a.output.format {
        Format::Json => Artifact::MarginForecast(f).to_json(),
        Format::Csv => render::margin_csv(&f),
        Format::Table => render::margin_table(&f),
        Format::Svg => render::margin_svg(&format!("Departure margins, {} bins, k = {}", a.bins, a.k), &f),
    };
    emit(&a.output.out, &text)
}

fn scale(a: ScaleArgs) -> anyhow::Result<()> {
    if a.b_min > a.b_max {
        bail!("--b-min ({}) must not exceed --b-max ({})", a.b_min, a.b_max);
    }
    let window = a.window.window()?;
    let data = load(&a.input)?;
    let result = scale_granularity(&data, window, a.epsilon, a.rule.into(), a.b_min, a.b_max)?;
    let f = compute_margins(&result.stats, a.k)?;
    let text = match a.output.format {
        Format::Json => Artifact::Granularity { result, forecast: f }.to_json(),
        Format::Csv => render::margin_csv(&f),
        Format::Table => render::granularity_table(&result, &f),
        Format::Svg => render::margin_svg(&format!("Departure margins at chosen granularity b = {}", result.chosen_b), &f),
    };
    emit(&a.output.out, &text)
}

fn fit_gmm(a: FitGmmArgs) -> anyhow::Result<()> {
    let window = a.window.window()?;
    let grid = BinGrid::new(window, a.bins)?;
    let times = trim_range(&load(&a.input)?, window).departure_seconds();
    let cfg = EmConfig {
        components: a.components.unwrap_or(a.bins),
        max_iterations: a.max_iterations,
        rel_loglik_tolerance: a.tolerance,
        variance_floor: a.variance_floor,
        init: match a.init {
            Init::Even => InitStrategy::EvenlySpaced,
            Init::Random => InitStrategy::SeededRandom,
        },
        rng_seed: a.seed,
        ..EmConfig::for_grid(&grid)
    };
    let model = fit_em(&times, &cfg)?;
    let bin_mass = model.bin_mass(&grid)?;
    let text = match a.output.format {
        Format::Json => Artifact::Gmm { grid, model, bin_mass }.to_json(),
        Format::Csv => render::mass_csv(&grid, &bin_mass),
        Format::Table => render::gmm_table(&grid, &model, &bin_mass),
        Format::Svg => render::bar_svg(&format!("Mixture mass per interval, K = {}", cfg.components), &grid, &bin_mass, None),
    };
    emit(&a.output.out, &text)
}

fn evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let raw = std::fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model: Artifact = serde_json::from_str(&raw).with_context(|| format!("parsing {}", a.model.display()))?;
    let grid = model.grid();
    if let Some(b) = a.bins {
        if b != grid.bin_count() {
            bail!("model grid has {} bins but --bins {} was requested", grid.bin_count(), b);
        }
    }
    let label = a.label.unwrap_or_else(|| format!("{} ({})", model.kind(), file_name(&a.model)));
    let mut report = score(&model.scored_values()?, grid, label)?;
    if let Some(test) = &a.test {
        report.ground_truth = Some(ground_truth_bins(&load(std::slice::from_ref(test))?, grid)?);
    }
    let text = match a.output.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            s
        }
        Format::Csv => render::report_csv(&report),
        Format::Table => render::report_table(&report),
        Format::Svg => render::bar_svg(&report.label, &grid, &report.input_values, report.ground_truth.as_deref()),
    };
    emit(&a.output.out, &text)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let spec = SyntheticSpec {
        session_prefix: a.prefix,
        ..SyntheticSpec::new(a.window.window()?, a.mean, a.stddev, a.sessions, a.vehicles, a.seed)
    };
    let data = generate_synthetic(&spec)?;
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    emit(&a.out, std::str::from_utf8(&buf).map_err(|e| anyhow!(e))?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Forecast(a) => forecast(a),
        Command::Scale(a) => scale(a),
        Command::FitGmm(a) => fit_gmm(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Generate(a) => generate(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(departure_core::Error::NoFeasibleGranularity { trace }) = e.downcast_ref() {
                eprint!("{}", render::trace_table(trace));
            }
            ExitCode::FAILURE
        }
    }
}
