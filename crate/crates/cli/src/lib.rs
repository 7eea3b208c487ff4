//! Command-line front end: `run`, `verify`, `classify` and `resources`.
//!
//! Every randomized input takes an explicit seed, so equal arguments give
//! byte-identical reports. Exit codes: 0 success, 1 verification failure,
//! 2 bad configuration or input.

pub mod args;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde::Serialize;

use remoteop_core::io::{parse_gate, parse_op, parse_state, DecompositionJson, MatrixJson, ResourcePrediction, RunReport};
use remoteop_core::random::{random_hpv, random_hybrid, random_state, random_wang, seeded};
use remoteop_core::restricted::{classify, Variant};
use remoteop_core::verify::{appendix_trace, TraceCheckReport};
use remoteop_core::{run_protocol, run_sampled, Outcomes, Permutation, Protocol, RestrictedOp, StateVector};

use crate::args::{Cli, ClassifyArgs, Command, OpArgs, ResourcesArgs, RunArgs, StateArgs, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable files or malformed JSON.
    Config(String),
    /// The run completed but a check failed.
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Verification(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

impl From<remoteop_core::Error> for CliError {
    fn from(e: remoteop_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpSource {
    Inline(String),
    File(PathBuf),
    Random { seed: u64 },
    Explicit { perm: Vec<usize>, blocks_file: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSource {
    File(PathBuf),
    Basis(usize),
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Enumerate,
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub d: Option<u8>,
    pub op: OpSource,
    pub state: StateSource,
    pub mode: Mode,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub tol: f64,
}

/// Seeds after resolving every `--seed` against its source flag.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct Seeds {
    op: Option<u64>,
    state: Option<u64>,
    sample: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Op,
    State,
    Sample,
}

fn cli_index(matches: &ArgMatches, id: &str) -> Option<usize> {
    if matches.value_source(id) != Some(ValueSource::CommandLine) {
        return None;
    }
    matches.indices_of(id).and_then(|mut it| it.next())
}

/// Binds each `--seed` to the closest preceding random-source flag, or to
/// the next one when none precedes it.
fn bind_seeds(matches: &ArgMatches, seeds: &[u64]) -> Result<Seeds, CliError> {
    let mut anchors: Vec<(usize, Slot)> = [("random_op", Slot::Op), ("random_state", Slot::State), ("sample", Slot::Sample)]
        .into_iter()
        .filter(|(id, _)| matches.try_get_raw(id).is_ok())
        .filter_map(|(id, slot)| cli_index(matches, id).map(|i| (i, slot)))
        .collect();
    anchors.sort_unstable_by_key(|&(i, _)| i);
    let positions: Vec<usize> = matches.indices_of("seed").map(|it| it.collect()).unwrap_or_default();

    let mut out = Seeds::default();
    for (&pos, &seed) in positions.iter().zip(seeds) {
        let slot = anchors
            .iter()
            .rev()
            .find(|(i, _)| *i < pos)
            .or_else(|| anchors.iter().find(|(i, _)| *i > pos))
            .map(|&(_, slot)| slot)
            .ok_or_else(|| config("--seed given without --random-op, --random-state or --sample"))?;
        let target = match slot {
            Slot::Op => &mut out.op,
            Slot::State => &mut out.state,
            Slot::Sample => &mut out.sample,
        };
        if target.replace(seed).is_some() {
            return Err(config("two seeds bound to the same source"));
        }
    }
    Ok(out)
}

fn merge_seed(bound: Option<u64>, explicit: Option<u64>, flag: &str) -> Result<Option<u64>, CliError> {
    match (bound, explicit) {
        (Some(a), Some(b)) if a != b => Err(config(format!("conflicting --seed and {flag}"))),
        (a, b) => Ok(b.or(a)),
    }
}

fn op_source(op: &OpArgs, seed: Option<u64>) -> Result<OpSource, CliError> {
    let mut sources = Vec::new();
    if let Some(json) = &op.op_json {
        sources.push(OpSource::Inline(json.clone()));
    }
    if let Some(path) = &op.op_file {
        sources.push(OpSource::File(path.clone()));
    }
    if op.random_op {
        let seed = seed.ok_or_else(|| config("--random-op needs a seed (--seed or --op-seed)"))?;
        sources.push(OpSource::Random { seed });
    }
    match (&op.perm, &op.blocks_file) {
        (Some(perm), Some(path)) => sources.push(OpSource::Explicit {
            perm: perm.clone(),
            blocks_file: path.clone(),
        }),
        (None, None) => {}
        _ => return Err(config("--perm and --blocks-file go together")),
    }
    if sources.len() != 1 {
        return Err(config(format!("need exactly one operator source, got {}", sources.len())));
    }
    Ok(sources.remove(0))
}

fn state_source(state: &StateArgs, seed: Option<u64>) -> Result<StateSource, CliError> {
    let mut sources = Vec::new();
    if let Some(path) = &state.state_file {
        sources.push(StateSource::File(path.clone()));
    }
    if let Some(index) = state.basis {
        sources.push(StateSource::Basis(index));
    }
    if state.random_state {
        let seed = seed.ok_or_else(|| config("--random-state needs a seed (--seed or --state-seed)"))?;
        sources.push(StateSource::Random { seed });
    }
    if sources.len() != 1 {
        return Err(config(format!("need exactly one state source, got {}", sources.len())));
    }
    Ok(sources.remove(0))
}

impl RunConfig {
    fn from_args(args: &RunArgs, matches: &ArgMatches) -> Result<Self, CliError> {
        let seeds = bind_seeds(matches, &args.state.seed)?;
        let op_seed = merge_seed(seeds.op, args.op.op_seed, "--op-seed")?;
        let state_seed = merge_seed(seeds.state, args.state.state_seed, "--state-seed")?;
        let sample_seed = merge_seed(seeds.sample, args.sample_seed, "--sample-seed")?;
        let mode = match args.sample {
            Some(count) => Mode::Sample {
                count,
                seed: sample_seed.ok_or_else(|| config("--sample needs a seed (--seed or --sample-seed)"))?,
            },
            None => Mode::Enumerate,
        };
        if !(args.tol.is_finite() && args.tol >= 0.0) {
            return Err(config(format!("tolerance must be a nonnegative number, got {}", args.tol)));
        }
        Ok(Self {
            protocol: args.protocol.into(),
            n: args.op.n,
            m: args.op.m,
            d: args.op.d,
            op: op_source(&args.op, op_seed)?,
            state: state_source(&args.state, state_seed)?,
            mode,
            out: args.out.clone(),
            csv: args.csv.clone(),
            tol: args.tol,
        })
    }
}

fn random_op(protocol: Protocol, n: Option<usize>, m: Option<usize>, d: Option<u8>, seed: u64) -> Result<RestrictedOp, CliError> {
    let mut rng = seeded(seed);
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| config(format!("--random-op for {protocol} needs {flag}")));
    Ok(match protocol {
        Protocol::Hpv => random_hpv(d.ok_or_else(|| config("--random-op for hpv needs --d"))?, &mut rng),
        Protocol::Wang => random_wang(need(n, "--n")?, &mut rng),
        Protocol::Hybrid => random_hybrid(need(n, "--n")?, need(m, "--m")?, &mut rng),
        Protocol::Bqst => random_hybrid(n.unwrap_or(0), need(m, "--m")?, &mut rng),
    })
}

fn load_op(cfg: &RunConfig) -> Result<RestrictedOp, CliError> {
    let op = match &cfg.op {
        OpSource::Inline(json) => parse_op(json)?,
        OpSource::File(path) => parse_op(&read(path)?)?,
        OpSource::Random { seed } => random_op(cfg.protocol, cfg.n, cfg.m, cfg.d, *seed)?,
        OpSource::Explicit { perm, blocks_file } => {
            let mats: Vec<MatrixJson> =
                serde_json::from_str(&read(blocks_file)?).map_err(|e| config(format!("blocks file: {e}")))?;
            let blocks = mats.iter().map(TryInto::try_into).collect::<Result<Vec<_>, _>>()?;
            RestrictedOp::hybrid(Permutation::new(perm.clone())?, blocks)?
        }
    };
    fit_to_protocol(op, cfg.protocol)
}

/// Re-expresses `op` in the variant the protocol runs on, when it fits.
fn fit_to_protocol(op: RestrictedOp, protocol: Protocol) -> Result<RestrictedOp, CliError> {
    let (n, m) = op.dims();
    let scalars = || op.blocks().iter().map(|b| b[(0, 0)]).collect::<Vec<_>>();
    Ok(match (protocol, op.variant()) {
        (Protocol::Hybrid, _) => op.to_hybrid(),
        (Protocol::Wang, Variant::Hybrid { perm, .. }) if m == 0 => RestrictedOp::wang(perm.clone(), scalars())?,
        (Protocol::Hpv, Variant::Hybrid { perm, .. } | Variant::Wang { perm, .. }) if (n, m) == (1, 0) => {
            let t = scalars();
            if perm.is_identity() {
                RestrictedOp::hpv(0, [t[0], t[1]])?
            } else {
                RestrictedOp::hpv(1, [t[1], t[0]])?
            }
        }
        _ => op,
    })
}

fn load_state(source: &StateSource, num_qubits: usize) -> Result<StateVector, CliError> {
    let state = match source {
        StateSource::File(path) => parse_state(&read(path)?)?,
        StateSource::Basis(index) => StateVector::basis(num_qubits, *index)?,
        StateSource::Random { seed } => random_state(num_qubits, &mut seeded(*seed)),
    };
    if state.num_qubits() != num_qubits {
        return Err(config(format!(
            "state has {} qubits, operator acts on {num_qubits}",
            state.num_qubits()
        )));
    }
    Ok(state)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports are plain data");
    text.push('\n');
    text
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| config(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| config(e.to_string())),
    }
}

fn bits(v: &[u8]) -> String {
    v.iter().map(|b| char::from(b'0' + b)).collect()
}

#[derive(Serialize)]
struct CsvRow {
    branch_id: usize,
    b: String,
    a: String,
    teleports: String,
    probability: f64,
    fidelity: f64,
}

pub fn write_csv(report: &RunReport, path: &Path) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    for b in &report.branches {
        let teleports: Vec<String> = b.teleports.iter().map(|t| bits(&t.bell_outcome)).collect();
        writer
            .serialize(CsvRow {
                branch_id: b.branch_id,
                b: bits(&b.b),
                a: bits(&b.a),
                teleports: teleports.join(" "),
                probability: b.probability,
                fidelity: b.fidelity,
            })
            .map_err(|e| config(e.to_string()))?;
    }
    writer.flush().map_err(|e| config(e.to_string()))
}

/// Runs the configured protocol and builds its report.
pub fn build_report(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let op = load_op(cfg)?;
    let xi = load_state(&cfg.state, op.num_qubits())?;
    let runs = match cfg.mode {
        Mode::Enumerate => run_protocol(cfg.protocol, &op, &xi)?,
        Mode::Sample { count, seed } => {
            let mut rng = seeded(seed);
            (0..count)
                .map(|_| run_sampled(cfg.protocol, &op, &xi, &mut rng))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(RunReport::new(cfg.protocol, &op, &xi, &runs)?)
}

pub fn cmd_run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<RunReport, CliError> {
    let report = build_report(cfg)?;
    emit(&to_json(&report), cfg.out.as_deref(), stdout)?;
    if let Some(path) = &cfg.csv {
        write_csv(&report, path)?;
    }
    let floor = 1.0 - cfg.tol;
    if report.min_fidelity() < floor {
        return Err(CliError::Verification(format!(
            "min branch fidelity {} below {floor}",
            report.min_fidelity()
        )));
    }
    Ok(report)
}

pub fn cmd_verify(args: &VerifyArgs, matches: &ArgMatches, stdout: &mut dyn Write) -> Result<Vec<TraceCheckReport>, CliError> {
    let seeds = bind_seeds(matches, &args.state.seed)?;
    let cfg = RunConfig {
        protocol: Protocol::Hybrid,
        n: args.op.n,
        m: args.op.m,
        d: args.op.d,
        op: op_source(&args.op, merge_seed(seeds.op, args.op.op_seed, "--op-seed")?)?,
        state: state_source(&args.state, merge_seed(seeds.state, args.state.state_seed, "--state-seed")?)?,
        mode: Mode::Enumerate,
        out: args.out.clone(),
        csv: None,
        tol: remoteop_core::FIDELITY_TOL,
    };
    let op = load_op(&cfg)?;
    let xi = load_state(&cfg.state, op.num_qubits())?;
    let (n, m) = op.dims();
    let count = Outcomes::count(n, m);
    let ids: Vec<usize> = match args.branch {
        Some(id) if id >= count => return Err(config(format!("branch {id} out of range 0..{count}"))),
        Some(id) => vec![id],
        None => (0..count).collect(),
    };
    let reports = ids
        .into_iter()
        .map(|id| appendix_trace(&op, &xi, &Outcomes::from_branch_id(n, m, id)))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match args.branch {
        Some(_) => to_json(&reports[0]),
        None => to_json(&reports),
    };
    emit(&text, cfg.out.as_deref(), stdout)?;
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} branch traces deviate")));
    }
    Ok(reports)
}

pub fn cmd_classify(args: &ClassifyArgs, stdout: &mut dyn Write) -> Result<Vec<DecompositionJson>, CliError> {
    let gate = parse_gate(&read(&args.matrix_file)?)?;
    let splits: Vec<DecompositionJson> = classify(&gate)?.iter().map(DecompositionJson::from).collect();
    emit(&to_json(&splits), args.out.as_deref(), stdout)?;
    Ok(splits)
}

pub fn cmd_resources(args: &ResourcesArgs, stdout: &mut dyn Write) -> Result<ResourcePrediction, CliError> {
    let prediction = ResourcePrediction::new(args.protocol.into(), args.n, args.m);
    emit(&to_json(&prediction), None, stdout)?;
    Ok(prediction)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return 2;
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m).expect("subcommand is required");
    let result = match &cli.command {
        Command::Run(args) => RunConfig::from_args(args, sub).and_then(|cfg| cmd_run(&cfg, stdout)).map(drop),
        Command::Verify(args) => cmd_verify(args, sub, stdout).map(drop),
        Command::Classify(args) => cmd_classify(args, stdout).map(drop),
        Command::Resources(args) => cmd_resources(args, stdout).map(drop),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "remoteop: {e}");
            e.exit_code()
        }
    }
}
