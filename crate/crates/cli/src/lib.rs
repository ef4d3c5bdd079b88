//! The `fawna` command-line front end.
//!
//! [`run`] parses arguments and returns what the binary should print and its
//! exit status, so the commands can be exercised in-process.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use fawna_core::export::sig9;
use fawna_core::optimizer::{Spacing, SweepTable};
use fawna_core::{
    capacity_lower_bound, capacity_report_at_rate, optimal_bandwidth, optimal_interfaces,
    simulate_link, sweep, Argmax, CapacityReport, Complex64, Error, LinkConfig, OptimumResult,
    QuantizerModel, SimReport, SimRun, SweepVariable,
};
use serde_json::json;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INADMISSIBLE: u8 = 3;
pub const EXIT_NUMERICS: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fawna",
    version,
    about = "Capacity bounds, optimization and Monte Carlo checks for quantize-and-forward fiber-aided SIMO links"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Upper bound, quantization penalty and lower bound for one link
    Capacity(CapacityArgs),
    /// Bounds across a range of one parameter
    Sweep(SweepArgs),
    /// Best interface count or bandwidth for a fixed fiber rate
    Optimize(OptimizeArgs),
    /// Monte Carlo run with trained scalar quantizers (JSON only)
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// W = 1 MHz, r = 5, mb = 1, P/N0 = 25e6; sweeps the fiber rate
    Fig2,
    /// W = 5 MHz, Cf = 100 Mbps, mb = 1, P/N0 = 20e6; sweeps the interface count
    Fig3,
    /// Cf = 200 Mbps, r = 2, mb = 1, P/N0 = 100e6; sweeps the bandwidth
    Fig4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantizerKind {
    /// Scalar quantization of a Gaussian source, mb = π√3/2
    Scalar,
    /// Infinite-dimensional limit, mb = 1
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Interfaces,
    Bandwidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpacingArg {
    Linear,
    Log,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LinkArgs {
    /// Pin the parameters of one of the reference figures; explicit flags override
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Transmit power over noise density P/N0, 1/s
    #[arg(long, value_name = "PER_SEC", conflicts_with_all = ["power", "noise_density"])]
    pub power_over_n0: Option<f64>,

    /// Transmit power P, W
    #[arg(long, value_name = "WATTS", requires = "noise_density")]
    pub power: Option<f64>,

    /// Noise power spectral density N0, W/Hz
    #[arg(long, value_name = "W_PER_HZ", requires = "power")]
    pub noise_density: Option<f64>,

    /// Wireless bandwidth W, Hz
    #[arg(long, value_name = "HZ")]
    pub bandwidth_hz: Option<f64>,

    /// Number of receive interfaces r, all with unit gain
    #[arg(long, value_name = "R", conflicts_with = "gains")]
    pub interfaces: Option<usize>,

    /// Fiber capacity Cf, bits/s
    #[arg(long, value_name = "BPS")]
    pub fiber_bps: Option<f64>,

    /// File of complex gains, one `re im` (or `re,im`) pair per line
    #[arg(long, value_name = "PATH")]
    pub gains: Option<PathBuf>,

    /// Worker threads for sweeps and simulation (default: all cores)
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,

    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct QuantizerArgs {
    /// Zador-Gersho product M_m β_m, within [1, π√3/2]
    #[arg(long, value_name = "MB", conflicts_with = "quantizer")]
    pub mb_product: Option<f64>,

    /// Named quantizer family instead of an explicit product
    #[arg(long, value_enum)]
    pub quantizer: Option<QuantizerKind>,
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub quantizer: QuantizerArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub quantizer: QuantizerArgs,

    /// fiber_rate, interfaces, bandwidth or power
    #[arg(long, value_name = "NAME")]
    pub variable: Option<String>,

    /// First value of the swept variable
    #[arg(long, value_name = "VALUE", allow_negative_numbers = true)]
    pub from: Option<f64>,

    /// Last value of the swept variable
    #[arg(long, value_name = "VALUE", allow_negative_numbers = true)]
    pub to: Option<f64>,

    #[arg(long, value_name = "N")]
    pub points: Option<usize>,

    #[arg(long, value_enum)]
    pub spacing: Option<SpacingArg>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub quantizer: QuantizerArgs,

    /// Quantity to optimize; fig3 and fig4 imply one
    #[arg(long, value_enum)]
    pub target: Option<Target>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub link: LinkArgs,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
}

/// What the process should print and how it should exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// A failed command: exit status plus diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Inadmissible { .. } => EXIT_INADMISSIBLE,
            Error::Numerics(_) => EXIT_NUMERICS,
            Error::Parameter { .. }
            | Error::Precondition(_)
            | Error::UnknownVariable(_)
            | Error::Parse(_) => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (program name first) and runs the selected subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok(stdout) => Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(e) => {
            let mut stderr = format!("error: {}\n", e.message);
            if e.code == EXIT_USAGE {
                let mut top = Cli::command();
                top.build();
                if let Some(sub) = top.find_subcommand_mut(subcommand_name(&cli.command)) {
                    let _ = write!(stderr, "\n{}\n", sub.render_usage());
                }
            }
            Outcome {
                code: e.code,
                stdout: String::new(),
                stderr,
            }
        }
    }
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Capacity(_) => "capacity",
        Command::Sweep(_) => "sweep",
        Command::Optimize(_) => "optimize",
        Command::Simulate(_) => "simulate",
    }
}

fn link_args(cmd: &Command) -> &LinkArgs {
    match cmd {
        Command::Capacity(a) => &a.link,
        Command::Sweep(a) => &a.link,
        Command::Optimize(a) => &a.link,
        Command::Simulate(a) => &a.link,
    }
}

/// Runs one subcommand and returns its standard output.
pub fn execute(cmd: &Command) -> CliResult<String> {
    let run = || match cmd {
        Command::Capacity(a) => cmd_capacity(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match link_args(cmd).threads {
        None => run(),
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?
            .install(run),
    }
}

/// Parameters a preset pins, plus what it sweeps and optimizes by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetValues {
    pub power_over_n0: f64,
    pub bandwidth_hz: Option<f64>,
    pub interfaces: Option<usize>,
    pub fiber_bps: Option<f64>,
    pub mb_product: f64,
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub target: Option<Target>,
}

impl Preset {
    pub fn values(self) -> PresetValues {
        match self {
            Preset::Fig2 => PresetValues {
                power_over_n0: 25e6,
                bandwidth_hz: Some(1e6),
                interfaces: Some(5),
                fiber_bps: None,
                mb_product: 1.0,
                variable: SweepVariable::FiberRate,
                from: 5e6,
                to: 1e9,
                points: 200,
                target: None,
            },
            Preset::Fig3 => PresetValues {
                power_over_n0: 20e6,
                bandwidth_hz: Some(5e6),
                interfaces: None,
                fiber_bps: Some(100e6),
                mb_product: 1.0,
                variable: SweepVariable::Interfaces,
                from: 1.0,
                to: 20.0,
                points: 20,
                target: Some(Target::Interfaces),
            },
            Preset::Fig4 => PresetValues {
                power_over_n0: 100e6,
                bandwidth_hz: None,
                interfaces: Some(2),
                fiber_bps: Some(200e6),
                mb_product: 1.0,
                variable: SweepVariable::Bandwidth,
                from: 0.5e6,
                to: 100e6,
                points: 200,
                target: Some(Target::Bandwidth),
            },
        }
    }
}

/// Reads a gain vector: one complex number per line as `re im` or `re,im`
/// (a lone number is real). Blank lines and `#` comments are skipped.
pub fn parse_gains(text: &str) -> Result<Vec<Complex64>, Error> {
    let mut gains = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let number = |f: &str| {
            f64::from_str(f).map_err(|e| Error::Parse(format!("gains line {}: `{f}`: {e}", n + 1)))
        };
        let g = match fields.as_slice() {
            [re] => Complex64::new(number(re)?, 0.0),
            [re, im] => Complex64::new(number(re)?, number(im)?),
            _ => {
                return Err(Error::Parse(format!(
                    "gains line {}: expected `re im`, got `{line}`",
                    n + 1
                )))
            }
        };
        gains.push(g);
    }
    if gains.is_empty() {
        return Err(Error::Parse("gains file holds no entries".into()));
    }
    Ok(gains)
}

fn read_gains(path: &Path) -> CliResult<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_gains(&text)?)
}

/// Link parameters after merging flags over a preset; `None` means still unset.
#[derive(Debug, Clone, PartialEq)]
struct Partial {
    power: f64,
    noise_density: f64,
    bandwidth: Option<f64>,
    gains: Option<Vec<Complex64>>,
    fiber_rate: Option<f64>,
}

impl Partial {
    fn from_args(args: &LinkArgs) -> CliResult<Self> {
        let preset = args.preset.map(Preset::values);
        let (power, noise_density) = match (args.power_over_n0, args.power, args.noise_density) {
            (Some(ratio), _, _) => (ratio, 1.0),
            (None, Some(p), Some(n0)) => (p, n0),
            _ => match preset {
                Some(p) => (p.power_over_n0, 1.0),
                None => {
                    return Err(CliError::usage(
                        "missing --power-over-n0 (or --power with --noise-density)",
                    ))
                }
            },
        };
        let gains = match (&args.gains, args.interfaces) {
            (Some(path), _) => Some(read_gains(path)?),
            (None, Some(0)) => return Err(CliError::usage("--interfaces must be at least 1")),
            (None, Some(r)) => Some(unit(r)),
            (None, None) => preset.and_then(|p| p.interfaces).map(unit),
        };
        Ok(Self {
            power,
            noise_density,
            bandwidth: args.bandwidth_hz.or(preset.and_then(|p| p.bandwidth_hz)),
            gains,
            fiber_rate: args.fiber_bps.or(preset.and_then(|p| p.fiber_bps)),
        })
    }

    fn build(self) -> CliResult<LinkConfig> {
        let bandwidth = self
            .bandwidth
            .ok_or_else(|| CliError::usage("missing --bandwidth-hz"))?;
        let gains = self
            .gains
            .ok_or_else(|| CliError::usage("missing --interfaces (or --gains)"))?;
        let fiber = self
            .fiber_rate
            .ok_or_else(|| CliError::usage("missing --fiber-bps"))?;
        Ok(LinkConfig::new(
            self.power,
            self.noise_density,
            bandwidth,
            gains,
            fiber,
        )?)
    }
}

fn unit(r: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); r]
}

fn quantizer_model(args: &QuantizerArgs, preset: Option<Preset>) -> CliResult<QuantizerModel> {
    Ok(match (args.mb_product, args.quantizer) {
        (Some(mb), _) => QuantizerModel::from_mb_product(mb)?,
        (None, Some(QuantizerKind::Scalar)) => QuantizerModel::scalar(),
        (None, Some(QuantizerKind::Asymptotic)) => QuantizerModel::asymptotic(),
        (None, None) => match preset {
            Some(p) => QuantizerModel::from_mb_product(p.values().mb_product)?,
            None => QuantizerModel::asymptotic(),
        },
    })
}

fn format_or(args: &LinkArgs, default: Format) -> Format {
    args.format.unwrap_or(default)
}

fn to_json(value: &impl serde::Serialize) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError {
            code: EXIT_NUMERICS,
            message: format!("cannot serialize output: {e}"),
        })
}

pub const CAPACITY_CSV_HEADER: &str =
    "interface,snr_linear,snr_db,upper_bound_bps,phi_bps,lower_bound_bps,quantizer_rate_bits,clamped";

fn capacity_csv(report: &CapacityReport) -> String {
    let mut out = String::from(CAPACITY_CSV_HEADER);
    out.push('\n');
    for (i, (snr, db)) in report
        .per_interface_snr
        .iter()
        .zip(report.per_interface_snr_db())
        .enumerate()
    {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            sig9(*snr),
            sig9(db),
            sig9(report.upper_bound),
            sig9(report.phi),
            sig9(report.lower_bound),
            sig9(report.quantizer_rate),
            report.clamped
        );
    }
    out
}

fn capacity_json(
    cfg: &LinkConfig,
    q: &QuantizerModel,
    report: &CapacityReport,
) -> serde_json::Value {
    json!({
        "config": cfg,
        "quantizer": q,
        "upper_bound_bps": report.upper_bound,
        "phi_bps": report.phi,
        "lower_bound_bps": report.lower_bound,
        "quantizer_rate_bits": report.quantizer_rate,
        "clamped": report.clamped,
        "per_interface_snr": report.per_interface_snr,
        "per_interface_snr_db": report.per_interface_snr_db(),
    })
}

pub fn cmd_capacity(args: &CapacityArgs) -> CliResult<String> {
    let cfg = Partial::from_args(&args.link)?.build()?;
    let q = quantizer_model(&args.quantizer, args.link.preset)?;
    let report = capacity_lower_bound(&cfg, &q)?;
    match format_or(&args.link, Format::Csv) {
        Format::Csv => Ok(capacity_csv(&report)),
        Format::Json => to_json(&capacity_json(&cfg, &q, &report)),
    }
}

/// The table `cmd_sweep` would print.
pub fn sweep_table(args: &SweepArgs) -> CliResult<SweepTable> {
    let preset = args.link.preset.map(Preset::values);
    let variable = match (&args.variable, preset) {
        (Some(name), _) => SweepVariable::from_str(name)?,
        (None, Some(p)) => p.variable,
        (None, None) => return Err(CliError::usage("missing --variable (or --preset)")),
    };
    let from_preset = preset.filter(|p| p.variable == variable);
    let from = args
        .from
        .or(from_preset.map(|p| p.from))
        .ok_or_else(|| CliError::usage("missing --from"))?;
    let to = args
        .to
        .or(from_preset.map(|p| p.to))
        .ok_or_else(|| CliError::usage("missing --to"))?;
    let points = args
        .points
        .or(from_preset.map(|p| p.points))
        .ok_or_else(|| CliError::usage("missing --points"))?;
    let spacing = match args.spacing.unwrap_or(SpacingArg::Linear) {
        SpacingArg::Linear => Spacing::Linear,
        SpacingArg::Log => Spacing::Log,
    };

    // The swept quantity needs no flag of its own; seed it with the first value.
    let mut partial = Partial::from_args(&args.link)?;
    match variable {
        SweepVariable::FiberRate => partial.fiber_rate = Some(from),
        SweepVariable::Bandwidth => partial.bandwidth = Some(from),
        SweepVariable::Interfaces => {
            if args.link.gains.is_some() {
                return Err(CliError::usage(
                    "an interface sweep uses unit gains; drop --gains",
                ));
            }
            partial.gains = Some(unit(1));
        }
        SweepVariable::Power => {}
    }
    let cfg = partial.build()?;
    let q = quantizer_model(&args.quantizer, args.link.preset)?;
    Ok(sweep(variable, from, to, points, spacing, &cfg, &q)?)
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<String> {
    let table = sweep_table(args)?;
    match format_or(&args.link, Format::Csv) {
        Format::Csv => Ok(table.to_csv()),
        Format::Json => to_json(&table),
    }
}

pub const OPTIMIZE_CSV_HEADER: &str =
    "target,argmax,upper_bound_bps,phi_bps,lower_bound_bps,quantizer_rate_bits";

/// The optimum `cmd_optimize` would report, with the bounds evaluated there.
pub fn optimum(args: &OptimizeArgs) -> CliResult<(OptimumResult, CapacityReport)> {
    let preset = args.link.preset.map(Preset::values);
    let target = args
        .target
        .or(preset.and_then(|p| p.target))
        .ok_or_else(|| CliError::usage("missing --target"))?;
    let mut partial = Partial::from_args(&args.link)?;
    let q = quantizer_model(&args.quantizer, args.link.preset)?;
    match target {
        Target::Interfaces => {
            if args.link.gains.is_some() {
                return Err(CliError::usage(
                    "interface optimization uses unit gains; drop --gains",
                ));
            }
            partial.gains = Some(unit(1));
            let cfg = partial.build()?;
            let result = optimal_interfaces(&cfg, &q)?;
            let Argmax::Interfaces(r) = result.argmax else {
                unreachable!("interface search returns an interface count")
            };
            let at = cfg.with_unit_gains(r as usize)?;
            let report = capacity_report_at_rate(&at, &q, at.quantizer_rate())?;
            Ok((result, report))
        }
        Target::Bandwidth => {
            if partial.bandwidth.is_none() {
                let (Some(fiber), Some(gains)) = (partial.fiber_rate, partial.gains.as_ref())
                else {
                    return Err(CliError::usage("missing --fiber-bps or --interfaces"));
                };
                partial.bandwidth = Some(fiber / gains.len() as f64);
            }
            let cfg = partial.build()?;
            let result = optimal_bandwidth(&cfg, &q)?;
            let Argmax::Bandwidth(w) = result.argmax else {
                unreachable!("bandwidth search returns a bandwidth")
            };
            let at = cfg.with_bandwidth(w)?;
            let report = capacity_report_at_rate(&at, &q, at.quantizer_rate())?;
            Ok((result, report))
        }
    }
}

pub fn cmd_optimize(args: &OptimizeArgs) -> CliResult<String> {
    let (result, report) = optimum(args)?;
    match format_or(&args.link, Format::Csv) {
        Format::Csv => {
            let (target, argmax) = match result.argmax {
                Argmax::Interfaces(r) => ("interfaces", r.to_string()),
                Argmax::Bandwidth(w) => ("bandwidth", sig9(w)),
            };
            Ok(format!(
                "{OPTIMIZE_CSV_HEADER}\n{target},{argmax},{},{},{},{}\n",
                sig9(report.upper_bound),
                sig9(report.phi),
                sig9(result.value),
                sig9(report.quantizer_rate)
            ))
        }
        Format::Json => to_json(&json!({
            "argmax": result.argmax,
            "value": result.value,
            "upper_bound_bps": report.upper_bound,
            "phi_bps": report.phi,
            "quantizer_rate_bits": report.quantizer_rate,
            "profile": result.profile,
        })),
    }
}

/// The report `cmd_simulate` would print.
pub fn simulation(args: &SimulateArgs) -> CliResult<SimReport> {
    if args.link.format == Some(Format::Csv) {
        return Err(CliError::usage("simulate writes JSON only"));
    }
    let cfg = Partial::from_args(&args.link)?.build()?;
    let run = SimRun::new(cfg, args.trials, args.seed)?;
    Ok(simulate_link(&run)?)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    to_json(&simulation(args)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gains_file_formats() {
        let g = parse_gains("# two interfaces\n1 0\n0.5,-0.25\n\n2\n").unwrap();
        assert_eq!(
            g,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, -0.25),
                Complex64::new(2.0, 0.0)
            ]
        );
        assert!(parse_gains("1 2 3\n").is_err());
        assert!(parse_gains("# nothing\n").is_err());
        assert!(parse_gains("x 1\n").is_err());
    }

    #[test]
    fn error_codes() {
        let inadmissible = Error::Inadmissible {
            quantizer_rate: 0.5,
            floor: 1.0,
            r_max: 1,
            w_max_hz: 1.0,
        };
        assert_eq!(CliError::from(inadmissible).code, EXIT_INADMISSIBLE);
        assert_eq!(
            CliError::from(Error::Numerics("x".into())).code,
            EXIT_NUMERICS
        );
        assert_eq!(
            CliError::from(Error::UnknownVariable("x".into())).code,
            EXIT_USAGE
        );
    }

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
