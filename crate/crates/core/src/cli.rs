//! Command-line front end.
//!
//! Exit status: 0 when the command succeeds (and its criterion holds), 2 when
//! a checked criterion or bound fails, 1 on any error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::convergence::{
    auto_tune_a, decay_check, gamma_estimate, kp_check, verify_b1, BoundCheck, CriterionReport, GammaEstimate, TuneMode,
    DEFAULT_TOLERANCE, GAMMA_MAX_PROBE, TUNE_MAX_ITER,
};
use crate::error::{invalid, Error, Result};
use crate::expansion::{correlation_ratio, log_partition_series, DEFAULT_DISCRETE_ORDER, SCHEMA_VERSION};
use crate::models::classical_gas::{
    check_condconv, check_decay_condition, pressure_series, ClassicalGasParams, CondconvReport, DecayConditionReport,
};
use crate::models::lattice_polymer::{golden_ratio_criterion, LatticePolymerParams};
use crate::models::quantum_gas::{check_condconvquant, QuantumGasParams};
use crate::number::Number;
use crate::polymer_space::{DiscreteKernel, DiscretePolymerSpace, Polymer, WeightFunctions};
use crate::expansion::SeriesReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CRITERION_FAILED: i32 = 2;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "CLUSTERKIT_THREADS";

const DEFAULT_SAMPLES: u64 = 100_000;
const DEFAULT_GAS_ORDER: usize = 3;

#[derive(Parser, Debug)]
#[command(name = "clusterkit", version, about = "Cluster expansions for polymer systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the convergence criterion (tilted when b or c are given).
    CheckKp(CommonArgs),
    /// Truncated cluster series for log Z.
    Logz(CommonArgs),
    /// Z(A_1..A_m)/Z for the system's fixed tuple.
    Correlate(CommonArgs),
    /// Decay bound for the fixed tuple.
    Decay(CommonArgs),
    /// Bundled models.
    Model {
        #[command(subcommand)]
        model: ModelCommand,
    },
}

#[derive(Subcommand, Debug)]
enum ModelCommand {
    /// Continuum gas: convergence condition and pressure series
    ClassicalGas(GasArgs),
    /// Nearest-neighbour lattice polymers with golden-ratio weights
    LatticePolymer(CommonArgs),
    /// Fugacity condition for the quantum gas
    QuantumCriterion(CommonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    input: PathBuf,
    /// Report destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Truncation order.
    #[arg(long)]
    order: Option<usize>,
    /// Monte Carlo samples per term.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Slack tolerance for criterion checks.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Debug)]
struct GasArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also check the tilted condition with c(x) = rate·|x|.
    #[arg(long)]
    decay_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    /// `ζ = -1` on the listed pairs (and on the diagonal when
    /// `self_overlap`), 0 elsewhere.
    HardCore {
        #[serde(default)]
        overlaps: Vec<(String, String)>,
        #[serde(default = "yes")]
        self_overlap: bool,
    },
    /// Explicit symmetric entries; unlisted pairs are 0.
    Table { entries: Vec<KernelEntry> },
    None,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub a: String,
    pub b: String,
    pub zeta: Number,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PairValue {
    pub a: String,
    pub b: String,
    pub value: f64,
}

/// A discrete polymer system as read from JSON.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub label: String,
    pub polymers: Vec<Polymer>,
    pub kernel: KernelConfig,
    /// Weight function `a`; tuned automatically when absent.
    #[serde(default)]
    pub a: Option<BTreeMap<String, f64>>,
    /// Measure tilt `b`; 0 for unlisted polymers.
    #[serde(default)]
    pub b: BTreeMap<String, f64>,
    /// Kernel tilt `c`; 0 for unlisted pairs.
    #[serde(default)]
    pub c: Vec<PairValue>,
    /// Fixed tuple for `correlate` and `decay`.
    #[serde(default)]
    pub fixed: Vec<String>,
    /// User-supplied `γ` for `decay`.
    #[serde(default)]
    pub gamma: Option<f64>,
}

/// Validated system ready for the engine.
#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub space: DiscretePolymerSpace,
    pub kernel: DiscreteKernel,
    /// `b` and `c` with `a ≡ 0` when `a` was not given.
    pub weights: WeightFunctions,
    pub a_given: bool,
    pub fixed: Vec<usize>,
    pub gamma: Option<f64>,
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(&self) -> Result<LoadedSystem> {
        let space = DiscretePolymerSpace::new(self.label.clone(), self.polymers.clone())?;
        let n = space.len();
        let idx = |id: &str| space.index_of(id).ok_or_else(|| invalid(format!("unknown polymer id `{id}`")));
        let kernel = match &self.kernel {
            KernelConfig::None => DiscreteKernel::zero(n),
            KernelConfig::HardCore { overlaps, self_overlap } => {
                let mut hit = vec![false; n * n];
                for (x, y) in overlaps {
                    let (i, j) = (idx(x)?, idx(y)?);
                    hit[i * n + j] = true;
                    hit[j * n + i] = true;
                }
                if *self_overlap {
                    for i in 0..n {
                        hit[i * n + i] = true;
                    }
                }
                DiscreteKernel::hard_core(n, |i, j| hit[i * n + j])
            }
            KernelConfig::Table { entries } => {
                let mut z = vec![num_complex::Complex64::new(0.0, 0.0); n * n];
                for e in entries {
                    let (i, j) = (idx(&e.a)?, idx(&e.b)?);
                    if !(e.zeta.re().is_finite() && e.zeta.im().is_finite()) {
                        return Err(invalid(format!("non-finite kernel entry for ({}, {})", e.a, e.b)));
                    }
                    z[i * n + j] = e.zeta.0;
                    z[j * n + i] = e.zeta.0;
                }
                DiscreteKernel::from_fn(n, |i, j| z[i * n + j])
            }
        };
        let a = match &self.a {
            Some(map) => {
                for k in map.keys() {
                    idx(k)?;
                }
                (0..n)
                    .map(|i| map.get(space.id(i)).copied().ok_or_else(|| invalid(format!("a is missing for `{}`", space.id(i)))))
                    .collect::<Result<Vec<f64>>>()?
            }
            None => vec![0.0; n],
        };
        let mut b = vec![0.0; n];
        for (k, v) in &self.b {
            b[idx(k)?] = *v;
        }
        let mut c = vec![0.0; n * n];
        for p in &self.c {
            let (i, j) = (idx(&p.a)?, idx(&p.b)?);
            c[i * n + j] = p.value;
            c[j * n + i] = p.value;
        }
        let weights = WeightFunctions::tilted(a, b, c)?;
        let fixed = self.fixed.iter().map(|id| idx(id)).collect::<Result<Vec<_>>>()?;
        Ok(LoadedSystem { space, kernel, weights, a_given: self.a.is_some(), fixed, gamma: self.gamma })
    }
}

impl LoadedSystem {
    /// The given `a`, or the tuned one.
    fn resolve_weights(&self) -> Result<WeightFunctions> {
        if self.a_given {
            Ok(self.weights.clone())
        } else {
            auto_tune_a(&self.space, &self.kernel, &self.weights, TUNE_MAX_ITER, &TuneMode::PerPolymer)
        }
    }
}

#[derive(Serialize)]
struct TuningFailure {
    schema: u32,
    passed: bool,
    tuning_failed: TuningDetail,
}

#[derive(Serialize)]
struct TuningDetail {
    iterations: usize,
    max_a: f64,
}

#[derive(Serialize)]
struct DecayOutput {
    schema: u32,
    gamma: GammaEstimate,
    criterion: CriterionReport,
    decay: BoundCheck,
    /// Single-polymer bound for each fixed polymer.
    b1: Vec<BoundCheck>,
    passed: bool,
}

#[derive(Serialize)]
struct GasOutput {
    schema: u32,
    condconv: CondconvReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay_condition: Option<DecayConditionReport>,
    pressure: SeriesReport,
    pressure_order1_closed_form: f64,
}

struct Outcome {
    body: Vec<u8>,
    passed: bool,
}

fn json<T: Serialize>(value: &T, passed: bool) -> Result<Outcome> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    Ok(Outcome { body, passed })
}

fn read_input(args: &CommonArgs) -> Result<String> {
    fs::read_to_string(&args.input)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", args.input.display()))))
}

fn require_json(args: &CommonArgs, what: &str) -> Result<()> {
    if args.format == Format::Csv {
        return Err(invalid(format!("csv output is not available for {what}")));
    }
    Ok(())
}

fn criterion_csv(r: &CriterionReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "lhs", "a", "slack"]).map_err(csv_err)?;
    for p in &r.per_polymer {
        w.write_record([p.id.clone(), p.lhs.to_string(), p.a.to_string(), p.slack.to_string()]).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

fn check_kp_cmd(args: &CommonArgs) -> Result<Outcome> {
    let sys = SystemConfig::from_json(&read_input(args)?)?.load()?;
    let tol = args.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let weights = match sys.resolve_weights() {
        Ok(w) => w,
        Err(Error::TuningFailed { iterations, max_a }) => {
            require_json(args, "a failed tuning run")?;
            let out = TuningFailure {
                schema: SCHEMA_VERSION,
                passed: false,
                tuning_failed: TuningDetail { iterations, max_a },
            };
            return json(&out, false);
        }
        Err(e) => return Err(e),
    };
    let report = kp_check(&sys.space, &sys.kernel, &weights, tol)?;
    match args.format {
        Format::Json => json(&report, report.passed),
        Format::Csv => Ok(Outcome { body: criterion_csv(&report)?, passed: report.passed }),
    }
}

fn logz_cmd(args: &CommonArgs) -> Result<Outcome> {
    let sys = SystemConfig::from_json(&read_input(args)?)?.load()?;
    let order = args.order.unwrap_or(DEFAULT_DISCRETE_ORDER);
    let certificate = if sys.a_given { Some(&sys.weights) } else { None };
    let report = log_partition_series(&sys.space, &sys.kernel, order, certificate)?;
    series_output(args, &report)
}

fn series_output(args: &CommonArgs, report: &SeriesReport) -> Result<Outcome> {
    match args.format {
        Format::Json => json(report, true),
        Format::Csv => {
            let mut body = Vec::new();
            report.write_csv(&mut body)?;
            Ok(Outcome { body, passed: true })
        }
    }
}

fn correlate_cmd(args: &CommonArgs) -> Result<Outcome> {
    require_json(args, "correlate")?;
    let sys = SystemConfig::from_json(&read_input(args)?)?.load()?;
    if sys.fixed.is_empty() {
        return Err(invalid("correlate needs a nonempty `fixed` tuple"));
    }
    let report = correlation_ratio(&sys.fixed, &sys.space, &sys.kernel, args.order.unwrap_or(DEFAULT_DISCRETE_ORDER))?;
    json(&report, true)
}

fn decay_cmd(args: &CommonArgs) -> Result<Outcome> {
    require_json(args, "decay")?;
    let sys = SystemConfig::from_json(&read_input(args)?)?.load()?;
    if sys.fixed.is_empty() {
        return Err(invalid("decay needs a nonempty `fixed` tuple"));
    }
    let weights = sys.resolve_weights()?;
    let order = args.order.unwrap_or(DEFAULT_DISCRETE_ORDER);
    let tol = args.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let gamma = match sys.gamma {
        Some(g) => GammaEstimate::user_supplied(g)?,
        None => gamma_estimate(&sys.kernel, &sys.space, GAMMA_MAX_PROBE, args.seed),
    };
    let criterion = kp_check(&sys.space, &sys.kernel, &weights, tol)?;
    let decay = decay_check(&sys.fixed, &sys.space, &sys.kernel, &weights, order, &gamma)?;
    let mut distinct = sys.fixed.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let b1 = distinct
        .iter()
        .map(|&i| verify_b1(&sys.space, &sys.kernel, &weights, order, i))
        .collect::<Result<Vec<_>>>()?;
    let passed = criterion.passed && decay.holds && b1.iter().all(|b| b.holds);
    json(&DecayOutput { schema: SCHEMA_VERSION, gamma, criterion, decay, b1, passed }, passed)
}

fn gas_cmd(args: &GasArgs) -> Result<Outcome> {
    let common = &args.common;
    let params: ClassicalGasParams = serde_json::from_str(&read_input(common)?)?;
    params.validate()?;
    let condconv = check_condconv(&params)?;
    if !condconv.passed {
        eprintln!("warning: z·∫(1 - e^(-βU)) = {} exceeds e^-1; the pressure series may diverge", condconv.lhs);
    }
    let decay_condition = args.decay_rate.map(|c| check_decay_condition(&params, c)).transpose()?;
    let order = common.order.unwrap_or(DEFAULT_GAS_ORDER);
    let pressure = pressure_series(&params, order, common.samples.unwrap_or(DEFAULT_SAMPLES), common.seed)?;
    let passed = condconv.passed && decay_condition.as_ref().is_none_or(|d| d.passed);
    if common.format == Format::Csv {
        let mut out = series_output(common, &pressure)?;
        out.passed = passed;
        return Ok(out);
    }
    let pressure_order1_closed_form = crate::models::classical_gas::pressure_order1_closed_form(&params)?;
    json(&GasOutput { schema: SCHEMA_VERSION, condconv, decay_condition, pressure, pressure_order1_closed_form }, passed)
}

fn lattice_cmd(args: &CommonArgs) -> Result<Outcome> {
    let params: LatticePolymerParams = serde_json::from_str(&read_input(args)?)?;
    let report = golden_ratio_criterion(&params)?;
    let passed = report.identity_holds && report.criterion.passed;
    match args.format {
        Format::Json => json(&report, passed),
        Format::Csv => Ok(Outcome { body: criterion_csv(&report.criterion)?, passed }),
    }
}

fn quantum_cmd(args: &CommonArgs) -> Result<Outcome> {
    require_json(args, "quantum-criterion")?;
    let params: QuantumGasParams = serde_json::from_str(&read_input(args)?)?;
    let report = check_condconvquant(&params)?;
    json(&report, report.passed)
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    // a pool may already exist when called from tests; keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn output_of(command: &Command) -> Option<&PathBuf> {
    let common = match command {
        Command::CheckKp(a) | Command::Logz(a) | Command::Correlate(a) | Command::Decay(a) => a,
        Command::Model { model } => match model {
            ModelCommand::ClassicalGas(g) => &g.common,
            ModelCommand::LatticePolymer(a) | ModelCommand::QuantumCriterion(a) => a,
        },
    };
    common.output.as_ref()
}

fn run(cli: &Cli) -> Result<Outcome> {
    configure_threads()?;
    match &cli.command {
        Command::CheckKp(a) => check_kp_cmd(a),
        Command::Logz(a) => logz_cmd(a),
        Command::Correlate(a) => correlate_cmd(a),
        Command::Decay(a) => decay_cmd(a),
        Command::Model { model } => match model {
            ModelCommand::ClassicalGas(g) => gas_cmd(g),
            ModelCommand::LatticePolymer(a) => lattice_cmd(a),
            ModelCommand::QuantumCriterion(a) => quantum_cmd(a),
        },
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let written = match output_of(&cli.command) {
        Some(path) => fs::write(path, &outcome.body),
        None => io::stdout().lock().write_all(&outcome.body),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return EXIT_ERROR;
    }
    if outcome.passed {
        EXIT_OK
    } else {
        EXIT_CRITERION_FAILED
    }
}
