//! Command-line front end.
//!
//! Data goes to stdout (or the file named by `--out`); progress messages go
//! to stderr. Exit status is 0 on success, 1 on I/O failure and 2 on a bad
//! configuration.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::activations::{
    evaluate_protected, relu_baseline, relu_protected, sigmoid_protected_under,
    tanh_protected_under, ActivationKind, BaselineAttack, ProtectedResult,
};
use crate::campaign::{
    run_campaigns, run_consistency_sweep, run_detection_campaign_with_workers, CampaignConfig,
    CampaignError, CampaignStats, ConsistencyCell, SweepConfig, DEFAULT_RUNS, DEFAULT_SEED,
};
use crate::fault_engine::{
    apply_fault, plan_faults, FaultError, FaultModel, FaultSpec, InjectionType,
};
use crate::series::{SeriesError, SeriesSettings, CLIP_HI, CLIP_LO};
use crate::softfloat::{f32_addsub, f32_div_nr, f32_mul, ulp_distance, Float32Word};
use crate::tables::TableKind;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid value for {flag}: {message}")]
    Config { flag: &'static str, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Io { .. } => 1,
        }
    }

    fn config(flag: &'static str, message: impl ToString) -> Self {
        Self::Config {
            flag,
            message: message.to_string(),
        }
    }
}

fn flag_for(err: &CampaignError) -> &'static str {
    match err {
        CampaignError::NoRuns => "--runs",
        CampaignError::InputRange(..) => "--input-lo/--input-hi",
        CampaignError::NotSeriesBased(_) => "--function",
        CampaignError::MissingFault => "--model",
        CampaignError::TermRange(..) => "--terms",
        CampaignError::NoEpsilons => "--epsilons",
        CampaignError::BenignThreshold(_) => "--benign-threshold",
        CampaignError::NoWorkers | CampaignError::Pool(_) => "--workers",
        CampaignError::Series(e) => series_flag(e),
        CampaignError::Fault(e) => fault_flag(e),
    }
}

fn series_flag(err: &SeriesError) -> &'static str {
    match err {
        SeriesError::NoTerms | SeriesError::TermIndex { .. } => "--terms",
        SeriesError::InvalidEpsilon(_) => "--epsilon",
        SeriesError::NonFiniteInput(_) => "--x",
        SeriesError::InvalidClip(..) => "--input-lo/--input-hi",
    }
}

fn fault_flag(err: &FaultError) -> &'static str {
    match err {
        FaultError::NoFaultyTerms | FaultError::TooManyFaultyTerms { .. } => "--n",
        FaultError::BitCount(_) => "--m",
    }
}

impl From<CampaignError> for CliError {
    fn from(err: CampaignError) -> Self {
        Self::config(flag_for(&err), &err)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "actguard",
    version,
    about = "Self-checking activation functions and fault-injection campaigns"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one fault-injection campaign.
    Campaign(CampaignArgs),
    /// Sweep term counts and thresholds without faults.
    Consistency(ConsistencyArgs),
    /// Evaluate one protected function at one input.
    Eval(EvalArgs),
    /// Run the full random, burst and skip/total-random grids.
    ReproduceTables(ReproduceArgs),
    /// Evaluate one single-precision datapath operation.
    Fp32(Fp32Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

fn parse_kind(s: &str) -> Result<ActivationKind, String> {
    ActivationKind::from_str(s)
}

fn parse_model(s: &str) -> Result<FaultModel, String> {
    FaultModel::from_str(s)
}

fn parse_type(s: &str) -> Result<InjectionType, String> {
    InjectionType::from_str(s)
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write records to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long, value_parser = parse_kind)]
    pub function: ActivationKind,
    #[arg(long, value_parser = parse_model)]
    pub model: FaultModel,
    #[arg(long = "type", value_parser = parse_type, default_value = "random")]
    pub injection_type: InjectionType,
    /// Number of faulty terms.
    #[arg(long)]
    pub n: usize,
    /// Corrupted bits per faulty term.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Series term count; defaults to the function's standard setting.
    #[arg(long)]
    pub terms: Option<usize>,
    /// Detection threshold; defaults to the function's standard setting.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = CLIP_LO, allow_hyphen_values = true)]
    pub input_lo: f64,
    #[arg(long, default_value_t = CLIP_HI, allow_hyphen_values = true)]
    pub input_hi: f64,
    /// Largest undetected output deviation counted as benign; defaults to epsilon.
    #[arg(long)]
    pub benign_threshold: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Inclusive `a:b` range; a single integer `a` means `a:a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermRange {
    pub start: usize,
    pub end: usize,
}

impl FromStr for TermRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{v}` is not a non-negative integer"))
        };
        let (start, end) = match s.split_once(':') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let a = parse(s)?;
                (a, a)
            }
        };
        Ok(Self { start, end })
    }
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    #[arg(long, value_parser = parse_kind)]
    pub function: ActivationKind,
    /// Inclusive term range `a:b`.
    #[arg(long)]
    pub terms: TermRange,
    /// Comma-separated thresholds, e.g. `1e-10,1e-14`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = CLIP_LO, allow_hyphen_values = true)]
    pub input_lo: f64,
    #[arg(long, default_value_t = CLIP_HI, allow_hyphen_values = true)]
    pub input_hi: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    /// Drop the sign change in the exponent (sigmoid and tanh).
    NegationSkip,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_parser = parse_kind)]
    pub function: ActivationKind,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long)]
    pub terms: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// ReLU only: claimed output to validate instead of the computed one.
    #[arg(long, allow_hyphen_values = true)]
    pub force_output: Option<f64>,
    #[arg(long, value_enum)]
    pub attack: Option<AttackArg>,
    /// Inject one fault of this model into the cached terms.
    #[arg(long, value_parser = parse_model)]
    pub inject: Option<FaultModel>,
    #[arg(long = "type", value_parser = parse_type, default_value = "random")]
    pub injection_type: InjectionType,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, default_value = "tables")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fp32Op {
    Mul,
    Add,
    Sub,
    Div,
}

#[derive(Debug, Args)]
pub struct Fp32Args {
    #[arg(long, value_enum)]
    pub op: Fp32Op,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f32,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f32,
}

fn serialize_float<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

fn serialize_ratio<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let printed: f64 = format_ratio(*v).parse().expect("formatted ratio parses");
    s.serialize_f64(printed)
}

fn format_ratio(v: f64) -> String {
    format!("{v:.4}")
}

fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// One scenario and its counts.
///
/// For consistency sweeps `detected` counts false positives, `benign` counts
/// passes and `ratio` is the consistency ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRecord {
    pub function: String,
    pub model: String,
    #[serde(rename = "type")]
    pub injection_type: String,
    pub n: usize,
    pub m: u32,
    pub terms: usize,
    #[serde(serialize_with = "serialize_float")]
    pub epsilon: f64,
    pub runs: usize,
    pub seed: u64,
    pub detected: usize,
    pub benign: usize,
    pub silent: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub ratio: f64,
}

pub const CSV_HEADER: &str =
    "function,model,type,n,m,terms,epsilon,runs,seed,detected,benign,silent,ratio";

impl OutputRecord {
    pub fn from_campaign(cfg: &CampaignConfig, stats: &CampaignStats) -> Self {
        let fault = cfg.fault.expect("detection campaigns carry a fault");
        Self {
            function: cfg.function.to_string(),
            model: fault.model.to_string(),
            injection_type: fault.injection_type.to_string(),
            n: fault.n,
            m: fault.m,
            terms: cfg.settings.term_count,
            epsilon: cfg.settings.epsilon,
            runs: stats.runs,
            seed: cfg.seed,
            detected: stats.detected_count,
            benign: stats.benign_count,
            silent: stats.silent_count,
            ratio: stats.detection_ratio(),
        }
    }

    pub fn from_consistency(function: ActivationKind, seed: u64, cell: &ConsistencyCell) -> Self {
        Self {
            function: function.to_string(),
            model: "none".into(),
            injection_type: "none".into(),
            n: 0,
            m: 0,
            terms: cell.terms,
            epsilon: cell.epsilon,
            runs: cell.runs,
            seed,
            detected: cell.false_positives(),
            benign: cell.passes,
            silent: 0,
            ratio: cell.consistency_ratio(),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.function,
            self.model,
            self.injection_type,
            self.n,
            self.m,
            self.terms,
            format_float(self.epsilon),
            self.runs,
            self.seed,
            self.detected,
            self.benign,
            self.silent,
            format_ratio(self.ratio),
        )
    }
}

pub fn render_records(records: &[OutputRecord], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in records {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let mut out = serde_json::to_string_pretty(records).expect("records serialise");
            out.push('\n');
            out
        }
    }
}

fn write_output(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .and_then(|()| stdout.flush())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn settings_for(
    function: ActivationKind,
    terms: Option<usize>,
    epsilon: Option<f64>,
) -> Result<SeriesSettings, CliError> {
    let defaults = function
        .default_settings()
        .ok_or_else(|| CliError::config("--function", format!("{function} has no series")))?;
    SeriesSettings::new(
        terms.unwrap_or(defaults.term_count),
        epsilon.unwrap_or(defaults.epsilon),
    )
    .map_err(|e| CliError::config(series_flag(&e), &e))
}

fn cmd_campaign(args: &CampaignArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let settings = settings_for(args.function, args.terms, args.epsilon)?;
    let fault = FaultSpec::new(args.model, args.injection_type, args.n, args.m)
        .map_err(|e| CliError::config(fault_flag(&e), &e))?;
    let cfg = CampaignConfig {
        function: args.function,
        settings,
        fault: Some(fault),
        runs: args.runs,
        input_lo: args.input_lo,
        input_hi: args.input_hi,
        seed: args.seed,
        benign_threshold: args.benign_threshold,
    };
    cfg.validate()?;
    eprintln!(
        "campaign: {} {} {} n={} m={} ({} runs)",
        cfg.function, fault.model, fault.injection_type, fault.n, fault.m, cfg.runs
    );
    let stats = run_detection_campaign_with_workers(&cfg, args.workers)?;
    let records = [OutputRecord::from_campaign(&cfg, &stats)];
    write_output(
        &render_records(&records, args.output.format),
        args.output.out.as_deref(),
        stdout,
    )
}

fn cmd_consistency(args: &ConsistencyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = SweepConfig {
        function: args.function,
        terms: args.terms.start..=args.terms.end,
        epsilons: args.epsilons.clone(),
        runs: args.runs,
        seed: args.seed,
        input_lo: args.input_lo,
        input_hi: args.input_hi,
    };
    let cells = run_consistency_sweep(&cfg, args.workers)?;
    eprintln!("consistency: {} cells", cells.len());
    let records: Vec<_> = cells
        .iter()
        .map(|c| OutputRecord::from_consistency(args.function, args.seed, c))
        .collect();
    write_output(
        &render_records(&records, args.output.format),
        args.output.out.as_deref(),
        stdout,
    )
}

#[derive(Debug, Serialize)]
struct EvalRecord {
    function: String,
    #[serde(serialize_with = "serialize_float")]
    x: f64,
    #[serde(serialize_with = "serialize_float")]
    value: f64,
    #[serde(serialize_with = "serialize_float")]
    checker_value: f64,
    #[serde(serialize_with = "serialize_float")]
    residual: f64,
    #[serde(serialize_with = "serialize_float")]
    epsilon: f64,
    verdict: String,
}

fn evaluate(args: &EvalArgs) -> Result<ProtectedResult, CliError> {
    if !args.x.is_finite() {
        return Err(CliError::config("--x", "input must be finite"));
    }
    if args.function == ActivationKind::Relu {
        if args.attack.is_some() || args.inject.is_some() {
            return Err(CliError::config(
                "--function",
                "relu supports --force-output only",
            ));
        }
        let forward = args.force_output.unwrap_or_else(|| relu_baseline(args.x));
        return Ok(relu_protected(args.x, forward));
    }
    if args.force_output.is_some() {
        return Err(CliError::config("--force-output", "only applies to relu"));
    }
    let settings = settings_for(args.function, args.terms, args.epsilon)?;
    let mut ctx = args
        .function
        .context(args.x, &settings)
        .map_err(|e| CliError::config(series_flag(&e), &e))?;
    if let Some(model) = args.inject {
        let spec = FaultSpec::new(model, args.injection_type, args.n, args.m)
            .map_err(|e| CliError::config(fault_flag(&e), &e))?;
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let plan = plan_faults(&spec, ctx.term_count(), &mut rng)
            .map_err(|e| CliError::config(fault_flag(&e), &e))?;
        for t in &plan.targets {
            eprintln!("inject: {model} on term {} bits {:?}", t.term, t.bits);
        }
        ctx = apply_fault(&ctx, &plan, model, &mut rng);
    }
    let eps = settings.epsilon;
    Ok(match (args.attack, args.function) {
        (None, kind) => evaluate_protected(kind, &ctx, eps),
        (Some(AttackArg::NegationSkip), ActivationKind::Sigmoid) => {
            sigmoid_protected_under(&ctx, eps, BaselineAttack::NegationSkipped)
        }
        (Some(AttackArg::NegationSkip), ActivationKind::Tanh) => {
            tanh_protected_under(&ctx, eps, BaselineAttack::NegationSkipped)
        }
        (Some(AttackArg::NegationSkip), _) => {
            return Err(CliError::config(
                "--attack",
                "negation-skip applies to sigmoid and tanh",
            ))
        }
    })
}

fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let r = evaluate(args)?;
    let record = EvalRecord {
        function: args.function.to_string(),
        x: args.x,
        value: r.value,
        checker_value: r.checker_value,
        residual: r.residual,
        epsilon: r.epsilon_used,
        verdict: r.verdict.to_string(),
    };
    let text = match args.output.format {
        Format::Csv => format!(
            "function,x,value,checker_value,residual,epsilon,verdict\n{},{},{},{},{},{},{}\n",
            record.function,
            format_float(record.x),
            format_float(record.value),
            format_float(record.checker_value),
            format_float(record.residual),
            format_float(record.epsilon),
            record.verdict,
        ),
        Format::Json => serde_json::to_string_pretty(&record).expect("record serialises") + "\n",
    };
    write_output(&text, args.output.out.as_deref(), stdout)
}

/// Campaign configurations behind one table, in output order.
pub fn table_configs(table: TableKind, runs: usize, seed: u64) -> Vec<CampaignConfig> {
    table
        .scenarios()
        .into_iter()
        .flat_map(|fault| {
            ActivationKind::SERIES_KINDS
                .into_iter()
                .map(move |function| {
                    let mut cfg =
                        CampaignConfig::new(function, fault, seed).expect("series functions");
                    cfg.runs = runs;
                    cfg
                })
        })
        .collect()
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<(), CliError> {
    fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Io {
        path: args.out_dir.display().to_string(),
        source,
    })?;
    for table in TableKind::ALL {
        let cfgs = table_configs(table, args.runs, args.seed);
        eprintln!("{}: {} campaigns", table.file_stem(), cfgs.len());
        let stats = run_campaigns(&cfgs, args.workers)?;
        let records: Vec<_> = cfgs
            .iter()
            .zip(&stats)
            .map(|(c, s)| OutputRecord::from_campaign(c, s))
            .collect();
        let path = args
            .out_dir
            .join(format!("{}.{}", table.file_stem(), args.format.extension()));
        write_output(
            &render_records(&records, args.format),
            Some(&path),
            &mut io::sink(),
        )?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_fp32(args: &Fp32Args, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (a, b) = (Float32Word::from_f32(args.a), Float32Word::from_f32(args.b));
    let (soft, native) = match args.op {
        Fp32Op::Mul => (f32_mul(a, b), args.a * args.b),
        Fp32Op::Add => (f32_addsub(a, b, false), args.a + args.b),
        Fp32Op::Sub => (f32_addsub(a, b, true), args.a - args.b),
        Fp32Op::Div => (f32_div_nr(a, b), args.a / args.b),
    };
    let ulps = if soft.value().is_nan() && native.is_nan() {
        0
    } else {
        ulp_distance(soft.value(), native)
    };
    let text = format!(
        "soft,soft_bits,native,native_bits,ulps\n{:e},{},{:e},{:08x},{}\n",
        soft.value(),
        soft,
        native,
        native.to_bits(),
        ulps
    );
    write_output(&text, None, stdout)
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Campaign(a) => cmd_campaign(a, stdout),
        Command::Consistency(a) => cmd_consistency(a, stdout),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::ReproduceTables(a) => cmd_reproduce(a),
        Command::Fp32(a) => cmd_fp32(a, stdout),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &mut io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<String, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("actguard").chain(args.iter().copied()))
            .expect("arguments parse");
        let mut out = Vec::new();
        execute(&cli, &mut out)?;
        Ok(String::from_utf8(out).unwrap())
    }

    #[test]
    fn term_range_parsing() {
        assert_eq!("5:50".parse(), Ok(TermRange { start: 5, end: 50 }));
        assert_eq!("7".parse(), Ok(TermRange { start: 7, end: 7 }));
        assert!("a:3".parse::<TermRange>().is_err());
    }

    #[test]
    fn zero_faulty_terms_names_the_flag() {
        let err = run(&[
            "campaign",
            "--function",
            "sigmoid",
            "--model",
            "bitflip",
            "--n",
            "0",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(err.to_string(), "invalid value for --n: n must be ≥ 1");
    }

    #[test]
    fn inverted_range_is_a_config_error() {
        let err = run(&[
            "consistency",
            "--function",
            "expo",
            "--terms",
            "50:5",
            "--epsilons",
            "1e-14",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("--terms"));
    }

    #[test]
    fn csv_and_json_agree() {
        let base = [
            "campaign",
            "--function",
            "tanh",
            "--model",
            "skip",
            "--n",
            "2",
            "--runs",
            "50",
        ];
        let csv = run(&base).unwrap();
        let mut with_json = base.to_vec();
        with_json.extend(["--format", "json"]);
        let json: serde_json::Value = serde_json::from_str(&run(&with_json).unwrap()).unwrap();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let obj = &json[0];
        for (i, key) in CSV_HEADER.split(',').enumerate() {
            let v = &obj[key];
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            match key {
                "epsilon" | "ratio" => {
                    assert_eq!(row[i].parse::<f64>().unwrap(), v.as_f64().unwrap(), "{key}")
                }
                _ => assert_eq!(row[i], text, "{key}"),
            }
        }
    }

    #[test]
    fn eval_examples() {
        let out = run(&[
            "eval",
            "--function",
            "sigmoid",
            "--x",
            "0",
            "--terms",
            "30",
            "--epsilon",
            "1e-14",
        ])
        .unwrap();
        assert_eq!(
            out.lines().nth(1).unwrap(),
            "sigmoid,0e0,5e-1,1e0,0e0,1e-14,Pass"
        );
        let out = run(&[
            "eval",
            "--function",
            "relu",
            "--x",
            "2",
            "--force-output",
            "0",
        ])
        .unwrap();
        assert!(out.trim_end().ends_with(",1e0,5e-1,FaultDetected"));
        let out = run(&[
            "eval",
            "--function",
            "tanh",
            "--x",
            "0",
            "--terms",
            "40",
            "--epsilon",
            "1e-15",
        ])
        .unwrap();
        assert!(out.trim_end().ends_with(",Pass"));
    }
}
