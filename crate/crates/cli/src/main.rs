//! `tracecount`: count and sample the traces of a regular language slice.
//!
//! Every subcommand prints JSON on stdout; diagnostics go to stderr. Exit
//! codes: 0 ok, 1 I/O, 2 usage, 3 parse, 4 validation, 5 estimate overflow,
//! 6 budget exceeded, 7 empty language.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use tracecount::automaton::{unroll, Name, Nfa};
use tracecount::dnf::{dnf_to_dfa, Dnf};
use tracecount::exact::{count_exact_enum_with_budget, count_exact_nf_with_budget, DEFAULT_BUDGET};
use tracecount::fpras::{trace_mc_observed, trace_mc_unrolled, Engine, FprasConfig, FprasOutcome, Overrides};
use tracecount::membership::{member, member_accepting};
use tracecount::prefix_validator::build_prefix_validator;
use tracecount::rational::{format_rational, parse_rational};
use tracecount::rng::derive;
use tracecount::sampler::{Counter, ExactCounter, FprasCounter, Sampler, SamplerParams};
use tracecount::trace::normal_form;
use tracecount::{ConcurrentAlphabet, Error};

/// Tag of sample `i` below the user seed.
const TAG_SAMPLE: u64 = 0x53414d50;

#[derive(Parser)]
#[command(name = "tracecount", version, about = "Count and sample Mazurkiewicz traces of regular languages")]
struct Cli {
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, global = true, env = "TRACECOUNT_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate the number of traces of length n.
    Count(CountArgs),
    /// Count the traces of length n exactly.
    CountExact(CountExactArgs),
    /// Draw traces of length n almost uniformly, one JSON line each.
    Sample(SampleArgs),
    /// Decide whether some word equivalent to a word reaches a state.
    Member(MemberArgs),
    /// Print the lexicographic normal form of a word.
    Nf(NfArgs),
    /// Write the prefix-validator DFA of a normal form.
    PrefixAutomaton(PrefixArgs),
    /// Write the DFA encoding a DNF formula.
    ReduceDnf(ReduceDnfArgs),
}

#[derive(Args)]
struct Tuning {
    /// Override β, the batch size of the median of means.
    #[arg(long)]
    beta: Option<u64>,
    /// Override γ, the number of batches.
    #[arg(long)]
    gamma: Option<u64>,
    /// Override ξ, the number of outer runs.
    #[arg(long)]
    xi: Option<u64>,
    /// Override θ, the sample threshold ("p/q").
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Replica,
    Population,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Auto => Engine::Auto,
            EngineArg::Replica => Engine::Replica,
            EngineArg::Population => Engine::Population,
        }
    }
}

impl Tuning {
    fn overrides(&self) -> Result<Overrides, Error> {
        Ok(Overrides {
            beta: self.beta,
            gamma: self.gamma,
            xi: self.xi,
            theta: self.theta.as_deref().map(parse_rational).transpose()?,
        })
    }
}

#[derive(Args)]
struct CountArgs {
    /// JSON automaton file.
    automaton: PathBuf,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value = "1/2")]
    epsilon: String,
    #[arg(long, default_value = "1/4")]
    delta: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tuning: Tuning,
    /// Write every S^r(q) of every outer run as JSON lines to this file.
    #[arg(long)]
    trace_instrument: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    NfEnum,
    WordEnum,
}

#[derive(Args)]
struct CountExactArgs {
    automaton: PathBuf,
    #[arg(short, long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Method::NfEnum)]
    method: Method,
    /// Largest number of candidate words or prefixes visited.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
}

#[derive(Clone, Copy, ValueEnum)]
enum CounterArg {
    Fpras,
    Exact,
}

#[derive(Args)]
struct SampleArgs {
    automaton: PathBuf,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value = "1/4")]
    delta: String,
    /// Number of samples to draw.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CounterArg::Fpras)]
    counter: CounterArg,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct MemberArgs {
    automaton: PathBuf,
    #[arg(long)]
    word: String,
    /// Target state; by default any final state.
    #[arg(long)]
    state: Option<String>,
}

#[derive(Args)]
struct AlphabetSource {
    /// JSON file with `alphabet` and `independence`; an automaton file works.
    #[arg(long)]
    alphabet: PathBuf,
}

#[derive(Args)]
struct NfArgs {
    #[command(flatten)]
    source: AlphabetSource,
    word: String,
}

#[derive(Args)]
struct PrefixArgs {
    #[command(flatten)]
    source: AlphabetSource,
    /// A word in normal form.
    word: String,
    /// Output file; stdout by default.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceDnfArgs {
    /// DNF file: one term per line, literals `x3` or `!x3`.
    dnf: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failures with their exit codes.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Lib(e) => match e {
                Error::Parse(_) | Error::UnknownSymbol(_) => 3,
                Error::Invalid(_) | Error::Precondition(_) => 4,
                Error::Overflow(_) => 5,
                Error::Budget { .. } => 6,
                Error::EmptyLanguage(_) => 7,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// File contents with their SHA-256.
struct Input {
    text: String,
    sha256: String,
}

fn read_input(path: &Path) -> CliResult<Input> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(Input { text, sha256 })
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_automaton(path: &Path) -> CliResult<(Nfa, Input)> {
    let input = read_input(path)?;
    let nfa = Nfa::from_json(&input.text)?;
    Ok((nfa, input))
}

/// `alphabet` and `independence` keys of any JSON object.
#[derive(Deserialize)]
struct AlphabetFile {
    alphabet: Vec<Name>,
    #[serde(default)]
    independence: Vec<[Name; 2]>,
}

fn load_alphabet(path: &Path) -> CliResult<(Arc<ConcurrentAlphabet>, Input)> {
    let input = read_input(path)?;
    let file: AlphabetFile = serde_json::from_str(&input.text).map_err(|e| Error::Parse(e.to_string()))?;
    let name = |n: Name| match n {
        Name::Str(s) => s,
        Name::Int(i) => i.to_string(),
    };
    let symbols: Vec<String> = file.alphabet.into_iter().map(name).collect();
    let pairs: Vec<(String, String)> = file.independence.into_iter().map(|[a, b]| (name(a), name(b))).collect();
    Ok((Arc::new(ConcurrentAlphabet::new(&symbols, &pairs)?), input))
}

fn report(command: &str, input: &Input, seed: Option<u64>, params: Value, result: Value, start: Instant) -> Value {
    json!({
        "command": command,
        "input_sha256": input.sha256,
        "seed": seed,
        "params": params,
        "result": result,
        "wall_time_ms": start.elapsed().as_millis() as u64,
    })
}

fn fpras_result(out: &FprasOutcome) -> Value {
    json!({
        "estimate": format_rational(&out.estimate),
        "runs": out.runs.iter().map(format_rational).collect::<Vec<_>>(),
        "interrupted_runs": out.interrupted_runs,
    })
}

fn cmd_count(args: &CountArgs) -> CliResult<Value> {
    let start = Instant::now();
    let (nfa, input) = load_automaton(&args.automaton)?;
    let mut config = FprasConfig::new(parse_rational(&args.epsilon)?, parse_rational(&args.delta)?);
    config.overrides = args.tuning.overrides()?;
    config.engine = args.tuning.engine.into();
    let u = unroll(&nfa, args.n);
    let out = match &args.trace_instrument {
        None => trace_mc_unrolled(&u, &config, args.seed)?,
        Some(path) => {
            let file = fs::File::create(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let mut sink = BufWriter::new(file);
            let mut failure = None;
            let alpha = nfa.alphabet();
            let out = trace_mc_observed(&u, &config, args.seed, &mut |run, rep| {
                let line = json!({
                    "run": run,
                    "state": u.state_name(rep.state, &nfa),
                    "level": rep.level,
                    "n": format_rational(rep.n),
                    "samples": rep.samples.iter()
                        .map(|s| s.iter().map(|w| alpha.format_word(w)).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                });
                if let Err(e) = writeln!(sink, "{line}") {
                    failure.get_or_insert(e);
                }
            })?;
            if let Some(source) = failure.or_else(|| sink.flush().err()) {
                return Err(CliError::Io {
                    path: path.display().to_string(),
                    source,
                });
            }
            out
        }
    };
    let params = out.params.as_ref().map(|p| p.to_json()).unwrap_or(Value::Null);
    Ok(report("count", &input, Some(args.seed), params, fpras_result(&out), start))
}

fn cmd_count_exact(args: &CountExactArgs) -> CliResult<Value> {
    let start = Instant::now();
    let (nfa, input) = load_automaton(&args.automaton)?;
    let (count, method) = match args.method {
        Method::NfEnum => (count_exact_nf_with_budget(&nfa, args.n, args.budget)?, "nf-enum"),
        Method::WordEnum => (count_exact_enum_with_budget(&nfa, args.n, args.budget)?, "word-enum"),
    };
    let params = json!({ "n": args.n, "method": method, "budget": args.budget.to_string() });
    Ok(report("count-exact", &input, None, params, json!({ "count": count }), start))
}

fn sample_lines<C: Counter>(nfa: &Nfa, args: &SampleArgs, counter: C, params: &SamplerParams) -> CliResult<()> {
    let sampler = Sampler::new(nfa, args.n, counter, params.outer_runs);
    if unroll(nfa, args.n).is_empty() {
        return Err(Error::EmptyLanguage(args.n).into());
    }
    let outcomes = (0..args.count)
        .into_par_iter()
        .map(|i| sampler.sample(derive(args.seed, &[TAG_SAMPLE, i])))
        .collect::<Result<Vec<_>, Error>>()?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (i, o) in outcomes.into_iter().enumerate() {
        let line = match o.word {
            Some(w) => json!({ "index": i, "sample": nfa.alphabet().format_word(&w), "core_runs": o.core_runs }),
            None => json!({ "index": i, "bottom": true, "core_runs": o.core_runs }),
        };
        writeln!(out, "{line}").map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })?;
    }
    out.flush().map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn cmd_sample(args: &SampleArgs) -> CliResult<()> {
    let (nfa, _) = load_automaton(&args.automaton)?;
    let params = SamplerParams::defaults(parse_rational(&args.delta)?, args.n)?;
    match args.counter {
        CounterArg::Exact => sample_lines(&nfa, args, ExactCounter::default(), &params),
        CounterArg::Fpras => {
            let counter = FprasCounter::new(&params, args.tuning.engine.into(), args.tuning.overrides()?);
            sample_lines(&nfa, args, counter, &params)
        }
    }
}

fn cmd_member(args: &MemberArgs) -> CliResult<Value> {
    let start = Instant::now();
    let (nfa, input) = load_automaton(&args.automaton)?;
    let w = nfa.alphabet().parse_word(&args.word)?;
    let answer = match &args.state {
        Some(name) => member(&nfa, nfa.state(name)?, &w),
        None => member_accepting(&nfa, &w),
    };
    let params = json!({ "word": args.word, "state": args.state });
    Ok(report("member", &input, None, params, json!({ "member": answer }), start))
}

fn cmd_nf(args: &NfArgs) -> CliResult<Value> {
    let start = Instant::now();
    let (alpha, input) = load_alphabet(&args.source.alphabet)?;
    let w = alpha.parse_word(&args.word)?;
    let nf = alpha.format_word(&normal_form(&alpha, &w));
    Ok(report("nf", &input, None, json!({ "word": args.word }), json!({ "normal_form": nf }), start))
}

fn cmd_prefix_automaton(args: &PrefixArgs) -> CliResult<()> {
    let (alpha, _) = load_alphabet(&args.source.alphabet)?;
    let u = alpha.parse_word(&args.word)?;
    let pv = build_prefix_validator(&alpha, &u)?;
    write_output(args.output.as_deref(), &pv.dfa.to_json())
}

fn cmd_reduce_dnf(args: &ReduceDnfArgs) -> CliResult<()> {
    let input = read_input(&args.dnf)?;
    let phi = Dnf::parse(&input.text)?;
    write_output(args.output.as_deref(), &dnf_to_dfa(&phi).to_json())
}

fn run(cli: &Cli) -> CliResult<()> {
    let value = match &cli.command {
        Command::Count(a) => cmd_count(a)?,
        Command::CountExact(a) => cmd_count_exact(a)?,
        Command::Member(a) => cmd_member(a)?,
        Command::Nf(a) => cmd_nf(a)?,
        Command::Sample(a) => return cmd_sample(a),
        Command::PrefixAutomaton(a) => return cmd_prefix_automaton(a),
        Command::ReduceDnf(a) => return cmd_reduce_dnf(a),
    };
    println!("{value}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("tracecount: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tracecount: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
