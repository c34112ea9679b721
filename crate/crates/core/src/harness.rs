//! Command-line front end: argument parsing, seeded experiment orchestration
//! and CSV / JSON emission.
//!
//! Every output starts with the tool version and the full configuration, and
//! depends on nothing but that configuration, so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::diagnostics::{order_uniformity_test, verify_lemma2};
use crate::disjointness::{gen_instance, DisjInstance, Kind};
use crate::error::{LabError, Result};
use crate::estimator::EstimatorKind;
use crate::intervals::verify_lemma1;
use crate::params::Params;
use crate::protocol::{assemble_from_seed, count_messages, run_protocol, write_stream_binary, ProtocolOutcome, Provenance};
use crate::seed::{derive_seed, SeedTag};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses counts such as `1000000` or `1e6`.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(53) {
        return Err(format!("not a nonnegative integer: {s}"));
    }
    Ok(v as u64)
}

/// Parses `0.5`, `5e-1` or `1/2`.
pub fn parse_ratio(s: &str) -> std::result::Result<f64, String> {
    if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num.trim().parse().map_err(|_| format!("bad numerator in {s}"))?;
        let den: f64 = den.trim().parse().map_err(|_| format!("bad denominator in {s}"))?;
        if den == 0.0 {
            return Err(format!("zero denominator in {s}"));
        }
        return Ok(num / den);
    }
    s.parse().map_err(|_| format!("not a number: {s}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Yes,
    No,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Exact,
    Ams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Lemma1,
    Lemma2,
    Protocol,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct CommonArgs {
    /// Stream length; comma-separated values form a sweep grid.
    #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1e6")]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    /// Disjointness density, e.g. `1/2`.
    #[arg(long, value_parser = parse_ratio, default_value = "1/2")]
    pub c: f64,
    #[arg(long, value_parser = parse_ratio, value_delimiter = ',', default_value = "0.002")]
    pub c1: Vec<f64>,
    #[arg(long, value_parser = parse_ratio, value_delimiter = ',', default_value = "0.005")]
    pub c2: Vec<f64>,
    #[arg(long = "t-factor", value_delimiter = ',', default_value = "15")]
    pub t_factor: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_count, default_value = "1000")]
    pub trials: u64,
    #[arg(long, value_parser = parse_count, default_value = "1000")]
    pub batches: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Subcommand, Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a promise set-disjointness instance.
    GenInstance {
        #[arg(long, value_enum, default_value_t = KindArg::Yes)]
        kind: KindArg,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Assemble one stream and list every position.
    BuildStream {
        #[arg(long, value_enum, default_value_t = KindArg::Yes)]
        kind: KindArg,
        #[arg(long = "export-stream")]
        export_stream: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte-Carlo check of the interval-overlap lemma.
    Lemma1 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte-Carlo check of the birthday-spacing lemma.
    Lemma2 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the reduction end to end.
    Protocol {
        #[arg(long, value_enum, default_value_t = KindArg::Both)]
        kind: KindArg,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Exact)]
        estimator: EstimatorArg,
        #[arg(long, default_value_t = 4096)]
        samples: u32,
        /// Binary export of the first non-aborted assembled stream.
        #[arg(long = "export-stream")]
        export_stream: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Order-uniformity diagnostics on YES assemblies.
    Diagnose {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// One summary row per grid point of `--n`, `--c1`, `--c2`, `--t-factor`.
    Sweep {
        #[arg(long, value_enum, default_value_t = Experiment::Protocol)]
        experiment: Experiment,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Exact)]
        estimator: EstimatorArg,
        #[arg(long, default_value_t = 4096)]
        samples: u32,
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenInstance { .. } => "gen-instance",
            Command::BuildStream { .. } => "build-stream",
            Command::Lemma1 { .. } => "lemma1",
            Command::Lemma2 { .. } => "lemma2",
            Command::Protocol { .. } => "protocol",
            Command::Diagnose { .. } => "diagnose",
            Command::Sweep { .. } => "sweep",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::GenInstance { common, .. }
            | Command::BuildStream { common, .. }
            | Command::Lemma1 { common }
            | Command::Lemma2 { common }
            | Command::Protocol { common, .. }
            | Command::Diagnose { common }
            | Command::Sweep { common, .. } => common,
        }
    }
}

#[derive(Parser, Clone, Debug)]
#[command(name = "roml", version, about = "Random-order streaming lab for frequency moments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// What a command produced; the caller decides where it goes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub binary: Vec<(PathBuf, Vec<u8>)>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for usage or infeasible parameters, 3 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Lab(e) => match e {
                LabError::InvalidParams(_) | LabError::InvalidScale(_) | LabError::InfeasiblePromise(_) => 2,
                _ => 3,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn single<T: Copy>(values: &[T], flag: &str) -> CliResult<T> {
    match values {
        [v] => Ok(*v),
        _ => Err(CliError::Usage(format!("--{flag} takes one value for this command (use sweep for grids)"))),
    }
}

fn params_from(common: &CommonArgs) -> CliResult<Params> {
    Ok(Params::derive(
        single(&common.n, "n")?,
        common.k,
        common.c,
        single(&common.c1, "c1")?,
        single(&common.c2, "c2")?,
        single(&common.t_factor, "t-factor")?,
    )?)
}

fn header(cmd: &Command) -> String {
    let config = serde_json::to_string(cmd).expect("config serializes");
    format!("# roml {VERSION}\n# config: {config}\n")
}

fn json_envelope(cmd: &Command, body: serde_json::Value) -> String {
    let doc = json!({ "roml_version": VERSION, "config": cmd, "data": body });
    let mut text = serde_json::to_string_pretty(&doc).expect("json");
    text.push('\n');
    text
}

fn kinds(kind: KindArg) -> Vec<Kind> {
    match kind {
        KindArg::Yes => vec![Kind::Yes],
        KindArg::No => vec![Kind::No],
        KindArg::Both => vec![Kind::Yes, Kind::No],
    }
}

fn single_kind(kind: KindArg) -> CliResult<Kind> {
    match kind {
        KindArg::Yes => Ok(Kind::Yes),
        KindArg::No => Ok(Kind::No),
        KindArg::Both => Err(CliError::Usage("--kind must be yes or no here".into())),
    }
}

fn estimator_kind(arg: EstimatorArg, samples: u32) -> CliResult<EstimatorKind> {
    match arg {
        EstimatorArg::Exact => Ok(EstimatorKind::Exact),
        EstimatorArg::Ams if samples == 0 => Err(CliError::Usage("--samples must be positive".into())),
        EstimatorArg::Ams => Ok(EstimatorKind::Ams { samples }),
    }
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let cmd = &cli.command;
    match cmd {
        Command::GenInstance { kind, common } => cmd_gen_instance(cmd, *kind, common),
        Command::BuildStream { kind, export_stream, common } => cmd_build_stream(cmd, *kind, export_stream, common),
        Command::Lemma1 { common } => cmd_lemma1(cmd, common),
        Command::Lemma2 { common } => cmd_lemma2(cmd, common),
        Command::Protocol { kind, estimator, samples, export_stream, common } => {
            cmd_protocol(cmd, *kind, estimator_kind(*estimator, *samples)?, export_stream, common)
        }
        Command::Diagnose { common } => cmd_diagnose(cmd, common),
        Command::Sweep { experiment, estimator, samples, common } => {
            cmd_sweep(cmd, *experiment, estimator_kind(*estimator, *samples)?, common)
        }
    }
}

fn cmd_gen_instance(cmd: &Command, kind: KindArg, common: &CommonArgs) -> CliResult<Output> {
    let params = params_from(common)?;
    let instance = gen_instance(&params, single_kind(kind)?, common.seed)?;
    let text = match common.format {
        Format::Json => {
            // canonical instance fields first, provenance appended as a trailing key
            let mut s = crate::disjointness::to_json(&instance);
            let generator = json!({ "roml_version": VERSION, "config": cmd });
            s.pop();
            s.push_str(",\"generator\":");
            s.push_str(&generator.to_string());
            s.push_str("}\n");
            s
        }
        Format::Csv => {
            let mut s = header(cmd);
            let witness = instance.witness.map(|w| w.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "# instance: N={},t={},w={},kind={},witness={}",
                instance.universe, instance.t, instance.w, instance.kind, witness
            );
            s.push_str("set,element\n");
            write_instance_rows(&mut s, &instance);
            s
        }
    };
    Ok(Output { text, binary: vec![] })
}

fn write_instance_rows(s: &mut String, instance: &DisjInstance) {
    for (i, set) in instance.sets.iter().enumerate() {
        for e in set {
            let _ = writeln!(s, "{},{}", i + 1, e);
        }
    }
}

fn cmd_build_stream(cmd: &Command, kind: KindArg, export: &Option<PathBuf>, common: &CommonArgs) -> CliResult<Output> {
    let params = params_from(common)?;
    let built = assemble_from_seed(&params, single_kind(kind)?, common.seed)?;
    let mut out = Output::default();
    let body = match built {
        Err(reason) => match common.format {
            Format::Csv => format!("{}# aborted: {reason}\nposition,element,writer,source,player,rank\n", header(cmd)),
            Format::Json => json_envelope(cmd, json!({ "aborted": reason.to_string() })),
        },
        Ok(s) => {
            let a = &s.assembly;
            if let Some(path) = export {
                let mut bytes = Vec::new();
                write_stream_binary(a, params.k, &mut bytes)?;
                out.binary.push((path.clone(), bytes));
            }
            let messages = count_messages(&a.writer);
            match common.format {
                Format::Csv => {
                    let mut text = header(cmd);
                    let _ = writeln!(text, "# messages: {messages}");
                    text.push_str("position,element,writer,source,player,rank\n");
                    for j in 0..a.elements.len() {
                        let (source, player, rank) = match a.provenance[j] {
                            Provenance::Filler => ("filler", String::new(), String::new()),
                            Provenance::SetElement { player, rank } => ("set", player.to_string(), rank.to_string()),
                        };
                        let _ = writeln!(text, "{},{},{},{source},{player},{rank}", j + 1, a.elements[j], a.writer[j]);
                    }
                    text
                }
                Format::Json => json_envelope(
                    cmd,
                    json!({ "messages": messages, "elements": a.elements, "writer": a.writer }),
                ),
            }
        }
    };
    out.text = body;
    Ok(out)
}

fn grid(common: &CommonArgs) -> Vec<(u64, f64, f64, u32)> {
    let mut points = Vec::new();
    for &n in &common.n {
        for &c1 in &common.c1 {
            for &c2 in &common.c2 {
                for &tf in &common.t_factor {
                    points.push((n, c1, c2, tf));
                }
            }
        }
    }
    points
}

fn check_trials(trials: u64) -> CliResult<()> {
    if trials < 100 {
        return Err(CliError::Usage(format!("--trials {trials}: at least 100 required")));
    }
    Ok(())
}

fn cmd_lemma1(cmd: &Command, common: &CommonArgs) -> CliResult<Output> {
    check_trials(common.trials)?;
    let mut reports = Vec::new();
    for &n in &common.n {
        for &c1 in &common.c1 {
            reports.push(verify_lemma1(n, common.k, c1, common.trials, common.seed)?);
        }
    }
    let text = match common.format {
        Format::Csv => {
            let mut s = header(cmd);
            s.push_str(crate::intervals::Lemma1Report::CSV_HEADER);
            s.push('\n');
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
        Format::Json => json_envelope(cmd, json!(reports)),
    };
    Ok(Output { text, binary: vec![] })
}

fn cmd_lemma2(cmd: &Command, common: &CommonArgs) -> CliResult<Output> {
    check_trials(common.trials)?;
    let mut reports = Vec::new();
    for &n in &common.n {
        for &c2 in &common.c2 {
            reports.push(verify_lemma2(n, common.k, c2, common.trials, common.seed)?);
        }
    }
    let text = match common.format {
        Format::Csv => {
            let mut s = header(cmd);
            s.push_str(crate::diagnostics::GapReport::CSV_HEADER);
            s.push('\n');
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
        Format::Json => json_envelope(cmd, json!(reports)),
    };
    Ok(Output { text, binary: vec![] })
}

/// Aggregate of protocol runs. Accuracy counts aborted runs as failures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolSummary {
    pub kind: String,
    pub runs: u64,
    pub accuracy: f64,
    pub abort_rate: f64,
    pub mean_messages: f64,
    pub mean_total_bits: f64,
    pub mean_max_state_bits: f64,
    /// Mean messages divided by `n^{1/k}`.
    pub messages_per_root: f64,
    pub reference_budget: f64,
}

impl ProtocolSummary {
    pub const CSV_HEADER: &'static str = "kind,runs,accuracy,abort_rate,mean_messages,mean_total_bits,mean_max_state_bits,messages_per_root,reference_budget";

    pub fn from_outcomes(label: &str, params: &Params, outcomes: &[&ProtocolOutcome]) -> Self {
        let runs = outcomes.len() as u64;
        let done: Vec<&&ProtocolOutcome> = outcomes.iter().filter(|o| o.aborted.is_none()).collect();
        let mean = |f: &dyn Fn(&ProtocolOutcome) -> f64| {
            if done.is_empty() {
                0.0
            } else {
                done.iter().map(|o| f(o)).sum::<f64>() / done.len() as f64
            }
        };
        let mean_messages = mean(&|o| o.messages as f64);
        Self {
            kind: label.to_string(),
            runs,
            accuracy: outcomes.iter().filter(|o| o.correct()).count() as f64 / runs.max(1) as f64,
            abort_rate: (runs - done.len() as u64) as f64 / runs.max(1) as f64,
            mean_messages,
            mean_total_bits: mean(&|o| o.total_bits as f64),
            mean_max_state_bits: mean(&|o| o.max_state_bits as f64),
            messages_per_root: mean_messages / params.root(),
            reference_budget: crate::protocol::reference_budget(params),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.kind,
            self.runs,
            self.accuracy,
            self.abort_rate,
            self.mean_messages,
            self.mean_total_bits,
            self.mean_max_state_bits,
            self.messages_per_root,
            self.reference_budget
        )
    }
}

/// Seed of run `index` for `kind`: `mix(root, Protocol, index)` for YES and
/// `mix(root, Protocol, 2^32 + index)` for NO.
pub fn protocol_seed(root: u64, kind: Kind, index: u64) -> u64 {
    let offset = match kind {
        Kind::Yes => 0,
        Kind::No => 1 << 32,
    };
    derive_seed(root, SeedTag::Protocol, offset + index)
}

/// Runs `trials` seeded protocol executions for each kind, in seed order.
pub fn protocol_trials(
    params: &Params,
    kinds: &[Kind],
    estimator: EstimatorKind,
    trials: u64,
    root: u64,
) -> Result<Vec<ProtocolOutcome>> {
    let jobs: Vec<(Kind, u64)> = kinds
        .iter()
        .flat_map(|&k| (0..trials).map(move |i| (k, i)))
        .collect();
    jobs.into_par_iter()
        .map(|(kind, i)| {
            let seed = protocol_seed(root, kind, i);
            let instance = gen_instance(params, kind, seed)?;
            run_protocol(&instance, params, estimator, seed)
        })
        .collect()
}

fn summaries(params: &Params, kinds: &[Kind], outcomes: &[ProtocolOutcome]) -> Vec<ProtocolSummary> {
    let mut out = Vec::new();
    for &kind in kinds {
        let subset: Vec<&ProtocolOutcome> = outcomes.iter().filter(|o| o.kind == kind).collect();
        out.push(ProtocolSummary::from_outcomes(&kind.to_string(), params, &subset));
    }
    if kinds.len() > 1 {
        let all: Vec<&ProtocolOutcome> = outcomes.iter().collect();
        out.push(ProtocolSummary::from_outcomes("all", params, &all));
    }
    out
}

fn cmd_protocol(
    cmd: &Command,
    kind: KindArg,
    estimator: EstimatorKind,
    export: &Option<PathBuf>,
    common: &CommonArgs,
) -> CliResult<Output> {
    let params = params_from(common)?;
    let kinds = kinds(kind);
    let outcomes = protocol_trials(&params, &kinds, estimator, common.trials, common.seed)?;
    let sums = summaries(&params, &kinds, &outcomes);

    let mut out = Output::default();
    if let Some(path) = export {
        if let Some(first) = outcomes.iter().find(|o| o.aborted.is_none()) {
            let built = assemble_from_seed(&params, first.kind, first.seed)?
                .map_err(|r| LabError::AssemblyIncomplete(format!("seed {} aborted on replay: {r}", first.seed)))?;
            let mut bytes = Vec::new();
            write_stream_binary(&built.assembly, params.k, &mut bytes)?;
            out.binary.push((path.clone(), bytes));
        }
    }
    out.text = match common.format {
        Format::Csv => {
            let mut s = header(cmd);
            s.push_str(ProtocolOutcome::CSV_HEADER);
            s.push('\n');
            for o in &outcomes {
                s.push_str(&o.csv_row());
                s.push('\n');
            }
            let _ = writeln!(s, "# summary_columns: {}", ProtocolSummary::CSV_HEADER);
            for sum in &sums {
                let _ = writeln!(s, "# summary: {}", sum.csv_row());
            }
            s
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = outcomes
                .iter()
                .map(|o| {
                    json!({
                        "seed": o.seed,
                        "kind": o.kind,
                        "decision": o.decision,
                        "correct": o.correct(),
                        "aborted": o.aborted.is_some(),
                        "abort_reason": o.aborted.map(|a| a.to_string()),
                        "exact_fk": o.exact_fk.map(|f| f.to_string()),
                        "estimate": o.estimate.map(|e| e.as_f64()),
                        "messages": o.messages,
                        "max_state_bits": o.max_state_bits,
                        "total_bits": o.total_bits,
                        "reference_budget": o.reference_budget,
                    })
                })
                .collect();
            json_envelope(cmd, json!({ "rows": rows, "summary": sums }))
        }
    };
    Ok(out)
}

fn cmd_diagnose(cmd: &Command, common: &CommonArgs) -> CliResult<Output> {
    if common.batches < 30 {
        return Err(CliError::Usage(format!("--batches {}: at least 30 required", common.batches)));
    }
    let params = params_from(common)?;
    let report = order_uniformity_test(&params, common.batches, common.seed)?;
    let text = match common.format {
        Format::Csv => format!(
            "{}{}\n{}\n",
            header(cmd),
            crate::diagnostics::UniformityReport::CSV_HEADER,
            report.csv_row()
        ),
        Format::Json => json_envelope(cmd, json!(report)),
    };
    Ok(Output { text, binary: vec![] })
}

fn cmd_sweep(cmd: &Command, experiment: Experiment, estimator: EstimatorKind, common: &CommonArgs) -> CliResult<Output> {
    let mut rows: Vec<(String, serde_json::Value)> = Vec::new();
    let header_line = match experiment {
        Experiment::Lemma1 => crate::intervals::Lemma1Report::CSV_HEADER.to_string(),
        Experiment::Lemma2 => crate::diagnostics::GapReport::CSV_HEADER.to_string(),
        Experiment::Protocol => format!("n,k,c1,c2,t_factor,t,w,{}", ProtocolSummary::CSV_HEADER),
    };
    match experiment {
        Experiment::Lemma1 => {
            check_trials(common.trials)?;
            for &n in &common.n {
                for &c1 in &common.c1 {
                    let r = verify_lemma1(n, common.k, c1, common.trials, common.seed)?;
                    rows.push((r.csv_row(), json!(r)));
                }
            }
        }
        Experiment::Lemma2 => {
            check_trials(common.trials)?;
            for &n in &common.n {
                for &c2 in &common.c2 {
                    let r = verify_lemma2(n, common.k, c2, common.trials, common.seed)?;
                    rows.push((r.csv_row(), json!(r)));
                }
            }
        }
        Experiment::Protocol => {
            for (n, c1, c2, tf) in grid(common) {
                let params = Params::derive(n, common.k, common.c, c1, c2, tf)?;
                let kinds = [Kind::Yes, Kind::No];
                let outcomes = protocol_trials(&params, &kinds, estimator, common.trials, common.seed)?;
                let all: Vec<&ProtocolOutcome> = outcomes.iter().collect();
                let sum = ProtocolSummary::from_outcomes("all", &params, &all);
                let row = format!(
                    "{n},{},{c1},{c2},{tf},{},{},{}",
                    params.k,
                    params.t,
                    params.w,
                    sum.csv_row()
                );
                rows.push((row, json!({ "params": params, "summary": sum })));
            }
        }
    }
    let text = match common.format {
        Format::Csv => {
            let mut s = header(cmd);
            s.push_str(&header_line);
            s.push('\n');
            for (row, _) in &rows {
                s.push_str(row);
                s.push('\n');
            }
            s
        }
        Format::Json => json_envelope(cmd, json!(rows.into_iter().map(|(_, v)| v).collect::<Vec<_>>())),
    };
    Ok(Output { text, binary: vec![] })
}

/// Writes `output` to `--out` (or standard output) and any binary side files.
pub fn emit(cli: &Cli, output: &Output) -> CliResult<()> {
    for (path, bytes) in &output.binary {
        std::fs::write(path, bytes)?;
    }
    match &cli.command.common().out {
        Some(path) => std::fs::write(path, &output.text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(output.text.as_bytes())?;
        }
    }
    Ok(())
}
