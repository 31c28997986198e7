//! Command-line surface: data ingestion, the detection pipeline, simulation
//! campaigns, distribution fitting and the standalone scale test. Reports are
//! JSON documents; plot data is a flat CSV table.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::changepoint::{estimate_l_v, segment, SegmentationReport};
use crate::distributions::{bootstrap_gof_pvalue, Family, GofResult};
use crate::error::{Error, Result};
use crate::hypothesis::{ansari_bradley, ScaleTestOutcome};
use crate::mars::MarsConfig;
use crate::rng::substream;
use crate::series::{c_statistics, v_statistics, TimeSeries};
use crate::simlab::{self, ErrorKind, ScenarioReport, ScenarioSpec, SummaryRow};

/// Parses one real number per record from a single-column text table. An
/// optional first header record is skipped when non-numeric.
pub fn load_series(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let record = line.trim();
        if record.is_empty() {
            continue;
        }
        match record.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(Error::Parse {
                    record: i + 1,
                    message: format!("non-finite value {v}"),
                })
            }
            Err(_) if i == 0 => {} // header
            Err(e) => {
                return Err(Error::Parse {
                    record: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no data records in {}",
            path.display()
        )));
    }
    TimeSeries::new(values)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommandKind {
    Detect,
    Simulate,
    FitDist,
    TestScale,
}

/// Fully resolved invocation; every run is a pure function of this value.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input_path: Option<PathBuf>,
    pub alpha: f64,
    pub seed: u64,
    pub mars: MarsConfig,
    pub bootstrap_b: usize,
    pub output_path: Option<PathBuf>,
    pub plot_data_path: Option<PathBuf>,
    /// Preset name or spec-file path (simulate only).
    pub scenario: Option<String>,
    /// User-supplied split index (test-scale; optional for fit-dist).
    pub split: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectReport {
    input: String,
    n: usize,
    alpha: f64,
    report: SegmentationReport,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentFits {
    segment: (usize, usize),
    stable: GofResult,
    gaussian: GofResult,
}

#[derive(Debug, Serialize, Deserialize)]
struct FitDistReport {
    input: String,
    n: usize,
    split: usize,
    bootstrap_b: usize,
    segments: Vec<SegmentFits>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SimulateReport {
    scenarios: Vec<ScenarioReport>,
    type_i: Vec<SummaryRow>,
    type_ii: Vec<SummaryRow>,
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
            Ok(())
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("report serialization failed: {e}")))
}

fn input_series(config: &RunConfig) -> Result<(PathBuf, TimeSeries)> {
    let path = config
        .input_path
        .clone()
        .ok_or_else(|| Error::InvalidInput("--input is required for this command".into()))?;
    let series = load_series(&path)?;
    Ok((path, series))
}

fn write_plot_data(series: &TimeSeries, report: &SegmentationReport, path: &Path) -> Result<()> {
    let v = v_statistics(series);
    let c = c_statistics(series);
    let mut out = String::from("j,v,c,v_fit\n");
    let fit = report.result_v.as_ref().map(|r| {
        let (a1, b1, a2, b2) = r.model_summary.segment_lines(r.l_hat as f64);
        (r.l_hat, a1, b1, a2, b2)
    });
    for j in 1..=series.len() {
        let v_fit = match fit {
            None => f64::NAN,
            Some((l, a1, b1, a2, b2)) => {
                if j <= l {
                    a1 + b1 * j as f64
                } else {
                    a2 + b2 * j as f64
                }
            }
        };
        out.push_str(&format!(
            "{j},{},{},{v_fit}\n",
            v.values[j - 1],
            c.values[j - 1]
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn run_detect(config: &RunConfig) -> Result<String> {
    let (path, series) = input_series(config)?;
    let report = segment(&series, config.alpha, &config.mars)?;
    if let Some(plot_path) = &config.plot_data_path {
        write_plot_data(&series, &report, plot_path)?;
    }
    to_json(&DetectReport {
        input: path.display().to_string(),
        n: series.len(),
        alpha: config.alpha,
        report,
    })
}

fn run_fit_dist(config: &RunConfig) -> Result<String> {
    let (path, series) = input_series(config)?;
    let n = series.len();
    let split = match config.split {
        Some(l) => {
            if l == 0 || l >= n {
                return Err(Error::InvalidInput(format!(
                    "--split {l} outside [1, {}]",
                    n - 1
                )));
            }
            l
        }
        None => estimate_l_v(&series, &config.mars)?
            .found()
            .ok_or_else(|| {
                Error::InsufficientData(
                    "no break candidate found; pass --split to fit both halves anyway".into(),
                )
            })?
            .l_hat,
    };
    let (first, second) = series.split_at_break(split);
    let mut segments = Vec::new();
    for (k, (range, values)) in [((1, split), first), ((split + 1, n), second)]
        .into_iter()
        .enumerate()
    {
        let seg = TimeSeries::new(values.to_vec())?;
        let mut rng_s = substream(config.seed, 2 * k as u64);
        let mut rng_g = substream(config.seed, 2 * k as u64 + 1);
        segments.push(SegmentFits {
            segment: range,
            stable: bootstrap_gof_pvalue(&seg, Family::Stable, config.bootstrap_b, &mut rng_s)?,
            gaussian: bootstrap_gof_pvalue(&seg, Family::Gaussian, config.bootstrap_b, &mut rng_g)?,
        });
    }
    to_json(&FitDistReport {
        input: path.display().to_string(),
        n,
        split,
        bootstrap_b: config.bootstrap_b,
        segments,
    })
}

fn run_test_scale(config: &RunConfig) -> Result<String> {
    let (_, series) = input_series(config)?;
    let n = series.len();
    let split = config
        .split
        .ok_or_else(|| Error::InvalidInput("--split is required for test-scale".into()))?;
    if split == 0 || split >= n {
        return Err(Error::InvalidInput(format!(
            "--split {split} outside [1, {}]",
            n - 1
        )));
    }
    let (first, second) = series.split_at_break(split);
    let outcome: ScaleTestOutcome = ansari_bradley(
        &TimeSeries::new(first.to_vec())?,
        &TimeSeries::new(second.to_vec())?,
        config.alpha,
    )?;
    to_json(&outcome)
}

fn resolve_scenarios(config: &RunConfig) -> Result<Vec<ScenarioSpec>> {
    let name = config
        .scenario
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("--scenario is required for simulate".into()))?;
    let specs = match name {
        "null-set" => simlab::null_scenarios(1000, config.alpha, config.seed),
        "small-shift-set" => simlab::small_shift_scenarios(1000, config.alpha, config.seed),
        "large-shift-set" => simlab::large_shift_scenarios(1000, config.alpha, config.seed),
        _ => {
            if let Some(spec) = simlab::preset(name, 1000, config.alpha, config.seed) {
                vec![spec]
            } else if Path::new(name).exists() {
                let text = fs::read_to_string(name)?;
                let spec: ScenarioSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
                    record: e.line(),
                    message: e.to_string(),
                })?;
                vec![spec]
            } else {
                return Err(Error::InvalidInput(format!(
                    "unknown scenario '{name}': not a preset ({}) or readable file",
                    simlab::preset_names().join(", ")
                )));
            }
        }
    };
    Ok(specs)
}

fn run_simulate(config: &RunConfig) -> Result<String> {
    let specs = resolve_scenarios(config)?;
    let mut reports = Vec::new();
    for spec in &specs {
        reports.push(simlab::run_scenario_with(spec, &config.mars)?);
    }
    let type_i = simlab::error_summary(&reports, ErrorKind::TypeI)?;
    let type_ii = simlab::error_summary(&reports, ErrorKind::TypeII)?;
    to_json(&SimulateReport {
        scenarios: reports,
        type_i,
        type_ii,
    })
}

/// Executes one resolved invocation and returns the JSON report text.
pub fn run(config: &RunConfig) -> Result<String> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0,1), got {}",
            config.alpha
        )));
    }
    config.mars.validate()?;
    match config.command {
        CommandKind::Detect => run_detect(config),
        CommandKind::Simulate => run_simulate(config),
        CommandKind::FitDist => run_fit_dist(config),
        CommandKind::TestScale => run_test_scale(config),
    }
}

// ---------------------------------------------------------------------------
// argument parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
struct CommonArgs {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of spline terms in the forward pass.
    #[arg(long, default_value_t = 21)]
    max_terms: usize,
    /// Candidate-knot thinning stride (raised automatically for long series).
    #[arg(long, default_value_t = 1)]
    knot_stride: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl CommonArgs {
    fn to_config(&self, command: CommandKind) -> RunConfig {
        RunConfig {
            command,
            input_path: None,
            alpha: self.alpha,
            seed: self.seed,
            mars: MarsConfig {
                max_terms: self.max_terms,
                knot_stride: self.knot_stride,
                ..MarsConfig::default()
            },
            bootstrap_b: 1000,
            output_path: self.output.clone(),
            plot_data_path: None,
            scenario: None,
            split: None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "scalebreak",
    about = "Scale change-point detection for one-dimensional signals",
    version
)]
struct CliArgs {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Locate a scale break and test both segmentations.
    Detect {
        /// Single-column text file, one value per line.
        #[arg(long)]
        input: PathBuf,
        /// Also write a CSV of (j, V_j, C_j, fitted V line).
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a Monte Carlo scenario campaign.
    Simulate {
        /// Preset name, preset group (null-set, small-shift-set,
        /// large-shift-set) or path to a JSON scenario file.
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit stable and Gaussian laws to both segments with bootstrap p-values.
    FitDist {
        #[arg(long)]
        input: PathBuf,
        /// Split index; estimated from the data when omitted.
        #[arg(long)]
        split: Option<usize>,
        /// Parametric bootstrap replicates.
        #[arg(long, default_value_t = 1000)]
        bootstrap_b: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Ansari-Bradley scale test at a user-supplied split.
    TestScale {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        split: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl CliArgs {
    fn into_config(self) -> RunConfig {
        match self.command {
            CliCommand::Detect {
                input,
                plot_data,
                common,
            } => RunConfig {
                input_path: Some(input),
                plot_data_path: plot_data,
                ..common.to_config(CommandKind::Detect)
            },
            CliCommand::Simulate { scenario, common } => RunConfig {
                scenario: Some(scenario),
                ..common.to_config(CommandKind::Simulate)
            },
            CliCommand::FitDist {
                input,
                split,
                bootstrap_b,
                common,
            } => RunConfig {
                input_path: Some(input),
                split,
                bootstrap_b,
                ..common.to_config(CommandKind::FitDist)
            },
            CliCommand::TestScale {
                input,
                split,
                common,
            } => RunConfig {
                input_path: Some(input),
                split: Some(split),
                ..common.to_config(CommandKind::TestScale)
            },
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Parse { .. } | Error::InvalidInput(_) | Error::InsufficientData(_) => {
            2
        }
        Error::DegenerateModel(_) | Error::Numerical(_) => 3,
    }
}

/// Binary entry point; maps errors to the documented exit statuses
/// (1 usage, 2 data, 3 numerical).
pub fn main() -> ExitCode {
    let args = match CliArgs::try_parse() {
        Ok(args) => args,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = args.into_config();
    match run(&config) {
        Ok(text) => match emit(&text, config.output_path.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
