//! `hhh`: hierarchical heavy hitters from the command line.
//!
//! Every subcommand writes its result to `--out` (or stdout). Failures are
//! reported on stderr as a single JSON object and exit with status 2 for
//! bad input or 1 for a failed check.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hhh_core::gen::{gen_few_heavy, gen_uniform, gen_zipf, unit_stream, SEED_ENV};
use hhh_core::merge::{merge_states, MergePlan};
use hhh_core::oracle::{check_report, exact_hhh};
use hhh_core::state_io::{read_state, write_state};
use hhh_core::tcam::{tcam_run, tcam_single_instance_run, TcamCostModel, TcamOpCounts};
use hhh_core::trace::{parse_trace, to_stream, write_trace, TraceFormat, TraceRecord};
use hhh_core::{Fraction, HhhReport, HhhState, HierarchySpec, Prefix, UpdateMode};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "hhh", version, about = "Hierarchical heavy hitters over IPv4 prefix lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a stream and report its approximate HHHs.
    Run(RunArgs),
    /// Compute the exact HHH set, and optionally judge a report against it.
    Oracle(OracleArgs),
    /// Compare a report with the exact answer: sizes, errors, verdict.
    Compare(CompareArgs),
    /// Merge saved summary states.
    Merge(MergeArgs),
    /// Count TCAM operations for a stream.
    Tcam(TcamArgs),
    /// Write a synthetic trace.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Granularity {
    Byte,
    Bit,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Csv,
    Csv2d,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Zipf,
    Uniform,
    FewHeavy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Weighted,
    Unitary,
}

#[derive(Args, Clone)]
struct HierarchyArgs {
    /// Number of dimensions.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Generalize one byte or one bit at a time.
    #[arg(long, value_enum, default_value = "byte")]
    granularity: Granularity,
}

impl HierarchyArgs {
    fn spec(&self) -> Result<HierarchySpec> {
        Ok(match self.granularity {
            Granularity::Byte => HierarchySpec::ipv4_bytes(self.dim)?,
            Granularity::Bit => HierarchySpec::ipv4_bits(self.dim)?,
        })
    }
}

#[derive(Args, Clone)]
struct GeneratorArgs {
    /// Stream length in packets.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Distinct elements the Zipf ranks map onto.
    #[arg(long, default_value_t = 1 << 16)]
    universe: u64,
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.1)]
    alpha: f64,
    /// Heavy elements for `few-heavy`.
    #[arg(long, default_value_t = 8)]
    heavy: usize,
    /// Occurrences of each heavy element for `few-heavy`.
    #[arg(long, default_value_t = 1000)]
    per_heavy: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    seed: u64,
}

impl GeneratorArgs {
    fn elements(&self, family: Family, spec: &HierarchySpec) -> Result<Vec<Prefix>> {
        Ok(match family {
            Family::Zipf => gen_zipf(spec, self.universe, self.n, self.alpha, self.seed)?,
            Family::Uniform => gen_uniform(spec, self.n, self.seed),
            Family::FewHeavy => gen_few_heavy(spec, self.n, self.heavy, self.per_heavy, self.seed),
        })
    }
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Trace file; `-` reads stdin.
    #[arg(long, short, required_unless_present = "generate", conflicts_with = "generate")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: InputFormat,
    /// Use a synthetic stream instead of a trace.
    #[arg(long, value_enum)]
    generate: Option<Family>,
    #[command(flatten)]
    gen: GeneratorArgs,
}

impl InputArgs {
    fn stream(&self, spec: &HierarchySpec) -> Result<Vec<(Prefix, u64)>> {
        if let Some(family) = self.generate {
            return Ok(unit_stream(self.gen.elements(family, spec)?));
        }
        let path = self.input.as_ref().expect("clap requires an input");
        let format = match self.format {
            InputFormat::Csv => TraceFormat::Csv,
            InputFormat::Csv2d => TraceFormat::Csv2d,
        };
        let records = parse_trace(open(path)?, format, spec)
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(to_stream(&records, spec)?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    hierarchy: HierarchyArgs,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, short)]
    epsilon: Fraction,
    #[arg(long, short)]
    phi: Fraction,
    #[arg(long, value_enum, default_value = "weighted")]
    mode: Mode,
    /// Insert in batches, updating lattice nodes in parallel.
    #[arg(long)]
    parallel: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    output_format: OutputFormat,
    /// Also write the summary state here, for a later merge.
    #[arg(long)]
    save_state: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    hierarchy: HierarchyArgs,
    #[command(flatten)]
    input: InputArgs,
    /// Threshold; defaults to the report's.
    #[arg(long, short)]
    phi: Option<Fraction>,
    /// A JSON report to judge. Its hierarchy replaces `--dim`/`--granularity`.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    /// JSON report to compare. Hierarchy and parameters come from it.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MergeArgs {
    /// Saved states sharing one configuration.
    #[arg(required = true)]
    states: Vec<PathBuf>,
    /// Where to write the merged state.
    #[arg(long, short)]
    out: PathBuf,
    /// Also report HHHs of the merged state at this threshold.
    #[arg(long, short, requires = "report")]
    phi: Option<Fraction>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TcamArgs {
    #[command(flatten)]
    hierarchy: HierarchyArgs,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, short)]
    epsilon: Fraction,
    /// JSON cost model; missing fields keep their defaults.
    #[arg(long)]
    cost_model: Option<PathBuf>,
    /// Keep the root summary outside the table.
    #[arg(long)]
    exclude_root: bool,
    /// One shared instance keyed by tagged prefixes.
    #[arg(long)]
    single_instance: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    hierarchy: HierarchyArgs,
    #[arg(long, value_enum, default_value = "zipf")]
    family: Family,
    #[command(flatten)]
    gen: GeneratorArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// A check that ran to completion and did not pass.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn open(path: &Path) -> Result<Box<dyn Read>> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdin().lock()));
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn load_report(path: &Path) -> Result<HhhReport> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text)?;
    HhhReport::from_json(&text).with_context(|| format!("reading report {}", path.display()))
}

fn load_state(path: &Path) -> Result<HhhState> {
    read_state(open(path)?).with_context(|| format!("reading state {}", path.display()))
}

fn save_state(state: &HhhState, path: &Path) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_state(state, BufWriter::new(f))?;
    Ok(())
}

fn write_report(report: &HhhReport, path: Option<&Path>, format: OutputFormat) -> Result<()> {
    let mut out = sink(path)?;
    match format {
        OutputFormat::Json => out.write_all(report.to_json()?.as_bytes())?,
        OutputFormat::Csv => report.write_csv(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// A count of `c` becomes `c` single-packet updates.
fn unit_packets(stream: Vec<(Prefix, u64)>) -> Vec<(Prefix, u64)> {
    stream
        .into_iter()
        .flat_map(|(e, c)| std::iter::repeat_n((e, 1), c as usize))
        .collect()
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let spec = a.hierarchy.spec()?;
    let mode = match a.mode {
        Mode::Weighted => UpdateMode::Weighted,
        Mode::Unitary => UpdateMode::Unitary,
    };
    let mut stream = a.input.stream(&spec)?;
    if mode == UpdateMode::Unitary {
        stream = unit_packets(stream);
    }
    let mut state = HhhState::new(spec, a.epsilon, mode)?;
    if a.parallel {
        for batch in stream.chunks(4096) {
            state.par_insert_batch(batch)?;
        }
    } else {
        for (e, c) in &stream {
            state.insert(e, *c)?;
        }
    }
    let report = state.output(a.phi)?;
    for w in &report.warnings {
        eprintln!("{}", json!({ "warning": w }));
    }
    write_report(&report, a.out.as_deref(), a.output_format)?;
    if let Some(path) = &a.save_state {
        save_state(&state, path)?;
    }
    Ok(())
}

fn exact_entries(spec: &HierarchySpec, stream: &[(Prefix, u64)], phi: Fraction) -> serde_json::Value {
    let exact = exact_hhh(stream, spec, phi);
    let entries: Vec<_> = exact
        .entries
        .iter()
        .map(|e| json!({ "prefix": spec.format_prefix(&e.prefix), "conditioned": e.conditioned }))
        .collect();
    serde_json::Value::Array(entries)
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let report = a.report.as_deref().map(load_report).transpose()?;
    let spec = match &report {
        Some(r) => r.spec.clone(),
        None => a.hierarchy.spec()?,
    };
    let phi = a
        .phi
        .or(report.as_ref().map(|r| r.phi))
        .context("--phi is required without --report")?;
    let stream = a.input.stream(&spec)?;
    let n: u64 = stream.iter().map(|(_, c)| c).sum();
    let mut doc = json!({
        "n": n,
        "phi": phi,
        "threshold": phi.ceil_mul(n),
        "exact": exact_entries(&spec, &stream, phi),
    });
    let mut failed = None;
    if let Some(report) = &report {
        let verdict = check_report(&stream, &spec, phi, report.epsilon, report);
        if !verdict.pass {
            failed = Some(CheckFailed("report fails the oracle check".into()));
        }
        doc["verdict"] = serde_json::to_value(verdict)?;
    }
    emit_json(a.out.as_deref(), &doc)?;
    failed.map_or(Ok(()), |e| Err(e.into()))
}

#[derive(Serialize)]
struct Comparison {
    n: u64,
    epsilon: Fraction,
    phi: Fraction,
    output_size: usize,
    exact_size: usize,
    /// Reported prefixes that are not exact HHHs.
    extra: usize,
    /// Exact HHHs the report leaves out.
    missed: usize,
    /// Widest reported interval over `epsilon N`; at most 1 on a valid report.
    relative_error: f64,
    pass: bool,
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let report = load_report(&a.report)?;
    let spec = report.spec.clone();
    let stream = a.input.stream(&spec)?;
    let n: u64 = stream.iter().map(|(_, c)| c).sum();
    if n != report.total {
        return Err(hhh_core::Error::Incompatible(format!(
            "report covers {} packets, stream has {n}",
            report.total
        ))
        .into());
    }
    let exact = exact_hhh(&stream, &spec, report.phi).prefixes();
    let got = report.prefixes();
    let verdict = check_report(&stream, &spec, report.phi, report.epsilon, &report);
    let cmp = Comparison {
        n,
        epsilon: report.epsilon,
        phi: report.phi,
        output_size: got.len(),
        exact_size: exact.len(),
        extra: got.difference(&exact).count(),
        missed: exact.difference(&got).count(),
        relative_error: report.relative_error(),
        pass: verdict.pass,
    };
    emit_json(a.out.as_deref(), &cmp)?;
    if cmp.pass {
        Ok(())
    } else {
        Err(CheckFailed("report fails the oracle check".into()).into())
    }
}

/// Widest interval the merged state can give any prefix, over `N`.
fn max_width_over_n(state: &HhhState) -> f64 {
    if state.total() == 0 {
        return 0.0;
    }
    let widest = state
        .nodes()
        .iter()
        .map(|node| {
            let tracked = node.counters().iter().map(|c| c.error).max().unwrap_or(0);
            tracked.max(node.untracked_upper())
        })
        .max()
        .unwrap_or(0);
    widest as f64 / state.total() as f64
}

fn cmd_merge(a: MergeArgs) -> Result<()> {
    let states = a.states.iter().map(|p| load_state(p)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&HhhState> = states.iter().collect();
    let plan = MergePlan::for_states(&refs)?;
    let merged = merge_states(&refs)?;
    save_state(&merged, &a.out)?;
    if let (Some(phi), Some(path)) = (a.phi, &a.report) {
        let mut report = merged.output(phi)?;
        if let Some(eff) = plan.epsilon_effective {
            report.epsilon = eff;
        }
        write_report(&report, Some(path), OutputFormat::Json)?;
    }
    let doc = json!({
        "inputs": plan.inputs,
        "n": merged.total(),
        "capacity": plan.capacity,
        "epsilon": merged.epsilon(),
        "epsilon_effective": plan.epsilon_effective,
        "max_width_over_n": max_width_over_n(&merged),
    });
    emit_json(None, &doc)
}

#[derive(Serialize)]
struct TcamDoc {
    #[serde(flatten)]
    counts: TcamOpCounts,
    total_ops: u64,
    ops_per_packet: f64,
    ops_per_packet_instance: f64,
    model: TcamCostModel,
}

fn cmd_tcam(a: TcamArgs) -> Result<()> {
    let spec = a.hierarchy.spec()?;
    let mut model = match &a.cost_model {
        Some(p) => {
            let mut text = String::new();
            open(p)?.read_to_string(&mut text)?;
            TcamCostModel::from_json(&text).with_context(|| format!("reading cost model {}", p.display()))?
        }
        None => TcamCostModel::default(),
    };
    if a.exclude_root {
        model.include_root = false;
    }
    let stream = unit_packets(a.input.stream(&spec)?);
    let counts = if a.single_instance {
        tcam_single_instance_run(&stream, &spec, a.epsilon, &model)?.ops
    } else {
        tcam_run(&stream, &spec, a.epsilon, &model)?.ops
    };
    let doc = TcamDoc {
        total_ops: counts.total_ops(),
        ops_per_packet: counts.ops_per_packet(),
        ops_per_packet_instance: counts.ops_per_packet_instance(),
        counts,
        model,
    };
    emit_json(a.out.as_deref(), &doc)
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let spec = a.hierarchy.spec()?;
    let records: Vec<TraceRecord> = a
        .gen
        .elements(a.family, &spec)?
        .into_iter()
        .map(|e| TraceRecord { values: e.values().to_vec(), count: 1 })
        .collect();
    let mut out = sink(a.out.as_deref())?;
    write_trace(&records, &spec, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Merge(a) => cmd_merge(a),
        Command::Tcam(a) => cmd_tcam(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = if err.downcast_ref::<CheckFailed>().is_some() {
                ("check_failed", 1)
            } else if let Some(e) = err.chain().find_map(|c| c.downcast_ref::<hhh_core::Error>()) {
                (e.kind(), 2)
            } else {
                ("io", 2)
            };
            let doc = json!({ "error": { "kind": kind, "message": format!("{err:#}") } });
            eprintln!("{doc}");
            ExitCode::from(code)
        }
    }
}
