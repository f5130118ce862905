//! Command-line frontend. `run` parses arguments, executes one command and
//! returns the exit code together with what should go to stdout.

mod report;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::abstraction::{abstract_fixpoint, concretize_check, parametric_report, to_dot, AbstractionFactory, Identity, LocalAbstraction, Predicates};
use crate::network::{generate, Family, NetworkGraph};
use crate::procdsl::{gen_dining, gen_mutex, parse_guard, parse_model, print_model, ModelFile};
use crate::refine::{format_path, refine_loop, Strategy, Verdict};
use crate::semantics::{reach, Program, ReachOutcome, DEFAULT_STATE_CAP, STATE_CAP_ENV};
use crate::splitfix::{check_property, strongest_split_invariant, Mode, SplitInvariant};
use crate::symmetry::{groupoid, largest_balance, reduced_fixpoint, OrbitPartition};

pub use report::{AbstractSummary, AuditSummary, ModelSummary, OrbitSummary, ReachSummary, RunReport, Timing};

/// Exit code for usage, I/O and model errors.
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "splitinv", version, about = "Strongest split invariants for process networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a model file for a network family and protocol.
    Gen(GenArgs),
    /// Compute the split invariant and check the exclusion property.
    Check(CheckArgs),
    /// Groupoid, balance relation and orbits of a model.
    Symmetry(SymmetryArgs),
    /// Abstract split fixpoint and clustering over one or more models.
    Abstract(AbstractArgs),
    /// Explicit-state reachability.
    Reach(ReachArgs),
    /// Time the fixpoint over a range of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Ring,
    Star,
    Torus,
    Line,
    Degrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Dining,
    Mutex,
    MutexLast,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,
    /// Ring/line size or number of star leaves.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// Comma separated degree sequence for `--family degrees`.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Vec<usize>,
    /// Extra isolated nodes.
    #[arg(long, default_value_t = 0)]
    pub isolated: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_enum)]
    pub protocol: Protocol,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefineArg {
    None,
    Expose,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ag,
    SplitForm,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ag => Mode::Ag,
            ModeArg::SplitForm => Mode::SplitForm,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "ag")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "none")]
    pub refine: RefineArg,
    /// Maximum number of refinement steps.
    #[arg(long, default_value_t = 16)]
    pub budget: usize,
    #[arg(long)]
    pub symmetry_reduce: bool,
    /// Run the reachability oracle with this cap and check soundness.
    #[arg(long)]
    pub oracle_audit: Option<usize>,
    /// Write the per-node invariant listing here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    pub model: PathBuf,
    /// Network drawing with nodes colored by orbit.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct AbstractArgs {
    #[arg(required = true)]
    pub models: Vec<PathBuf>,
    /// Named local predicate, `name=guard`; repeatable. Without any, the
    /// identity abstraction is used.
    #[arg(long = "pred")]
    pub preds: Vec<String>,
    /// Abstract graphs of every class, one digraph per class.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct ReachArgs {
    pub model: PathBuf,
    /// Defaults to the value of SPLITINV_STATE_CAP, or 10^7.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Write the sorted reachable states here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub protocol: Protocol,
    #[arg(long, value_enum, default_value = "ring")]
    pub family: FamilyKind,
    /// `start..end:step` (inclusive) or a comma separated list.
    #[arg(long)]
    pub sizes: String,
    #[arg(long, value_enum, default_value = "ag")]
    pub mode: ModeArg,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Self {
        Self { code, stdout, stderr: String::new() }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() { Outcome { code: EXIT_ERROR, stdout: String::new(), stderr: text } } else { Outcome::ok(0, text) };
        }
    };
    let echo: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, echo) {
        Ok(o) => o,
        Err(e) => Outcome { code: EXIT_ERROR, stdout: String::new(), stderr: format!("error: {e:#}\n") },
    }
}

fn execute(cmd: Command, echo: Vec<String>) -> Result<Outcome> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a),
        Command::Check(a) => cmd_check(&a, echo),
        Command::Symmetry(a) => cmd_symmetry(&a, echo),
        Command::Abstract(a) => cmd_abstract(&a, echo),
        Command::Reach(a) => cmd_reach(&a, echo),
        Command::Bench(a) => cmd_bench(&a),
    }
}

pub fn family_of(a: &FamilyArgs) -> Result<Family> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| anyhow!("--{flag} is required for this family"));
    Ok(match a.family {
        FamilyKind::Ring => Family::Ring { size: need(a.size, "size")? },
        FamilyKind::Star => Family::Star { leaves: need(a.size, "size")? },
        FamilyKind::Line => Family::Line { size: need(a.size, "size")? },
        FamilyKind::Torus => Family::Torus { rows: need(a.rows, "rows")?, cols: need(a.cols, "cols")? },
        FamilyKind::Degrees => Family::DegreeSequence { degrees: a.degrees.clone() },
    })
}

pub fn build_model(net: &NetworkGraph, protocol: Protocol) -> Result<ModelFile> {
    Ok(match protocol {
        Protocol::Dining => gen_dining(net),
        Protocol::Mutex => gen_mutex(net.node_count(), false)?,
        Protocol::MutexLast => gen_mutex(net.node_count(), true)?,
    })
}

fn network_of(a: &FamilyArgs) -> Result<NetworkGraph> {
    let net = generate(&family_of(a)?)?;
    Ok(if a.isolated > 0 { net.with_isolated_nodes(a.isolated)? } else { net })
}

fn cmd_gen(a: &GenArgs) -> Result<Outcome> {
    let model = build_model(&network_of(&a.family)?, a.protocol)?;
    let text = print_model(&model);
    Ok(match &a.out {
        Some(p) => {
            write_file(p, &text)?;
            Outcome::ok(0, String::new())
        }
        None => Outcome::ok(0, text),
    })
}

fn load(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(report: &RunReport, args: &ReportArgs, code: i32) -> Result<Outcome> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    match &args.report {
        Some(p) => {
            write_file(p, &json)?;
            Ok(Outcome::ok(code, String::new()))
        }
        None => Ok(Outcome::ok(code, json)),
    }
}

/// The cap from the environment, or the default.
pub fn default_cap() -> Result<usize> {
    match std::env::var(STATE_CAP_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{STATE_CAP_ENV}={v} is not a number")),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

struct Clock {
    phases: BTreeMap<String, f64>,
}

impl Clock {
    fn new() -> Self {
        Self { phases: BTreeMap::new() }
    }

    fn time<R>(&mut self, phase: &str, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = f();
        *self.phases.entry(phase.to_string()).or_default() += t.elapsed().as_secs_f64();
        r
    }
}

fn orbit_summary(program: &Program, clock: &mut Clock) -> (OrbitPartition, OrbitSummary) {
    let g = clock.time("groupoid", || groupoid(program));
    let b = clock.time("balance", || largest_balance(program, &g));
    let orbits = OrbitPartition::new(program, &b);
    let summary = OrbitSummary::new(program, g.len(), b.len(), &orbits);
    (orbits, summary)
}

fn cmd_check(a: &CheckArgs, echo: Vec<String>) -> Result<Outcome> {
    let mut clock = Clock::new();
    let model = clock.time("load", || load(&a.model))?;
    let mode = Mode::from(a.mode);
    let strategy = match a.refine {
        RefineArg::None => None,
        RefineArg::Expose => Some(Strategy::Expose),
        RefineArg::Last => Some(Strategy::Last),
    };
    let cap = match a.oracle_audit {
        Some(c) => c,
        None => default_cap()?,
    };

    let (mut verdict, trace, program, full) = match strategy {
        None => {
            let program = clock.time("compile", || Program::compile(&model))?;
            (None, None, program, None)
        }
        Some(s) => {
            let out = clock.time("refine", || refine_loop(&model, a.budget, s, mode, cap))?;
            (Some(out.verdict), Some(out.trace), out.program, Some(out.theta))
        }
    };

    let mut orbits = None;
    let theta: SplitInvariant = if a.symmetry_reduce {
        let (partition, summary) = orbit_summary(&program, &mut clock);
        orbits = Some(summary);
        clock.time("solve", || reduced_fixpoint(&program, &partition, mode).0)
    } else {
        match full {
            Some(t) => t,
            None => clock.time("solve", || strongest_split_invariant(&program, mode)),
        }
    };
    let mut verdict = match verdict.take() {
        Some(Verdict::Violated { path }) => Verdict::Violated { path },
        _ => clock.time("property", || Verdict::from(check_property(&program, &theta))),
    };

    let mut audit = None;
    if let Some(audit_cap) = a.oracle_audit {
        let r = clock.time("oracle", || reach(&program, audit_cap));
        let complete = r.is_complete();
        let mut violations = Vec::new();
        for n in 0..program.node_count() {
            let missing = r.project(&program, n).difference(theta.component(n)).count();
            if complete && missing > 0 {
                violations.push(format!("{}: {missing} reachable local states outside the invariant", program.node(n).name));
            }
        }
        if let Some((idx, _)) = r.find_violation(&program) {
            verdict = Verdict::Violated { path: format_path(&program, &r.path_to(idx)) };
        }
        audit = Some(AuditSummary { cap: audit_cap, complete, states: r.len(), sound: complete.then_some(violations.is_empty()), problems: violations });
    }

    if let Some(p) = &a.dump {
        write_file(p, &theta.dump(&program))?;
    }
    let code = verdict.exit_code();
    let report = RunReport {
        command: echo,
        model: Some(ModelSummary::new(&program)),
        outcome: Some(verdict),
        theta_sizes: Some(theta.sizes()),
        theta_total: Some(theta.total_states()),
        refinement: trace,
        orbits,
        abstraction: None,
        reach: None,
        audit,
        timing: Timing(clock.phases),
    };
    emit(&report, &a.report, code)
}

fn cmd_symmetry(a: &SymmetryArgs, echo: Vec<String>) -> Result<Outcome> {
    let mut clock = Clock::new();
    let model = clock.time("load", || load(&a.model))?;
    let program = clock.time("compile", || Program::compile(&model))?;
    let (partition, summary) = orbit_summary(&program, &mut clock);
    if let Some(p) = &a.dot {
        write_file(p, &orbit_dot(&program, &partition))?;
    }
    let report = RunReport { orbits: Some(summary), ..RunReport::new(echo, &program, clock.phases) };
    emit(&report, &a.report, 0)
}

const PALETTE: [&str; 8] =
    ["lightblue", "palegreen", "lightsalmon", "khaki", "plum", "lightgray", "aquamarine", "pink"];

/// Nodes as circles colored by orbit, edges as boxes; arrows follow the
/// connection direction.
pub fn orbit_dot(program: &Program, orbits: &OrbitPartition) -> String {
    let net = &program.model().network;
    let mut out = String::from("digraph network {\n");
    for (i, name) in net.nodes().iter().enumerate() {
        let class = orbits.class_of[i];
        let _ = writeln!(
            out,
            "  \"{name}\" [shape=circle, style=filled, fillcolor={}, tooltip=\"orbit {class}\"];",
            PALETTE[class % PALETTE.len()]
        );
    }
    for e in net.edges() {
        let _ = writeln!(out, "  \"{e}\" [shape=box];");
    }
    for (from, to) in net.to_doc().connections {
        let _ = writeln!(out, "  \"{from}\" -> \"{to}\";");
    }
    out.push_str("}\n");
    out
}

fn parse_preds(preds: &[String]) -> Result<Vec<(String, crate::procdsl::GuardExpr)>> {
    preds
        .iter()
        .map(|p| {
            let (name, guard) = p.split_once('=').ok_or_else(|| anyhow!("--pred `{p}` is not of the form name=guard"))?;
            let name = name.trim();
            if name.is_empty() {
                bail!("--pred `{p}` has an empty name");
            }
            let g = parse_guard(guard).map_err(|e| anyhow!("--pred {name}: {e}"))?;
            Ok((name.to_string(), g))
        })
        .collect()
}

fn cmd_abstract(a: &AbstractArgs, echo: Vec<String>) -> Result<Outcome> {
    let mut clock = Clock::new();
    let preds = parse_preds(&a.preds)?;
    let mut instances = Vec::new();
    for path in &a.models {
        let model = clock.time("load", || load(path))?;
        let program = clock.time("compile", || Program::compile(&model))?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        instances.push((label, program));
    }
    let make: Box<AbstractionFactory> = if preds.is_empty() {
        Box::new(|_: &Program| Ok(Box::new(Identity) as Box<dyn LocalAbstraction>))
    } else {
        Box::new(move |p: &Program| Ok(Box::new(Predicates::new(p, &preds)?) as Box<dyn LocalAbstraction>))
    };

    let mut sound = true;
    for (_, program) in &instances {
        let abs = make(program)?;
        let inv = clock.time("abstract", || abstract_fixpoint(program, abs.as_ref()));
        let theta = clock.time("solve", || strongest_split_invariant(program, Mode::Ag));
        sound &= concretize_check(program, abs.as_ref(), &inv, &theta);
    }
    let report_data = clock.time("cluster", || parametric_report(&instances, make.as_ref()))?;

    if let Some(p) = &a.dot {
        let mut dot = String::new();
        for class in &report_data.classes {
            let (label, node) = &class.members[0];
            let (_, program) = instances.iter().find(|(l, _)| l == label).expect("member instance");
            let n = program.node_index(node).expect("member node");
            let abs = make(program)?;
            let inv = abstract_fixpoint(program, abs.as_ref());
            dot.push_str(&to_dot(&format!("class {}", class.id), &inv.components[n]));
        }
        write_file(p, &dot)?;
    }

    let summary = AbstractSummary::new(&report_data, sound);
    let first = &instances[0].1;
    let report = RunReport { abstraction: Some(summary), ..RunReport::new(echo, first, clock.phases) };
    emit(&report, &a.report, if sound { 0 } else { 1 })
}

fn cmd_reach(a: &ReachArgs, echo: Vec<String>) -> Result<Outcome> {
    let mut clock = Clock::new();
    let model = clock.time("load", || load(&a.model))?;
    let program = clock.time("compile", || Program::compile(&model))?;
    let cap = match a.cap {
        Some(c) => c,
        None => default_cap()?,
    };
    let r = clock.time("reach", || reach(&program, cap));
    let violation = r.find_violation(&program).map(|(idx, _)| format_path(&program, &r.path_to(idx)));
    if let Some(p) = &a.dump {
        write_file(p, &r.dump(&program))?;
    }
    let (outcome, code) = match (&violation, r.outcome) {
        (Some(path), _) => (Verdict::Violated { path: path.clone() }, 2),
        (None, ReachOutcome::Complete) => (Verdict::Proved, 0),
        (None, ReachOutcome::CapacityExceeded) => (Verdict::Unknown { witnesses: Vec::new() }, 1),
    };
    let summary = ReachSummary {
        cap,
        complete: r.is_complete(),
        states: r.len(),
        projected: (0..program.node_count()).map(|n| r.project(&program, n).len()).collect(),
    };
    let report = RunReport {
        outcome: Some(outcome),
        reach: Some(summary),
        ..RunReport::new(echo, &program, clock.phases)
    };
    emit(&report, &a.report, code)
}

/// `100..3000:100` or `3,4,5`.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    if let Some((range, step)) = s.split_once(':') {
        let (lo, hi) = range.split_once("..").ok_or_else(|| anyhow!("bad size range `{s}`"))?;
        let (lo, hi, step): (usize, usize, usize) = (lo.trim().parse()?, hi.trim().parse()?, step.trim().parse()?);
        if step == 0 || lo > hi {
            bail!("bad size range `{s}`");
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    s.split(',').map(|x| x.trim().parse::<usize>().with_context(|| format!("bad size `{x}`"))).collect()
}

#[derive(Debug, serde::Serialize)]
struct BenchRow {
    n: usize,
    seconds: f64,
    theta_states: usize,
    verdict: String,
}

fn cmd_bench(a: &BenchArgs) -> Result<Outcome> {
    let sizes = parse_sizes(&a.sizes)?;
    let mut rows = Vec::new();
    for n in sizes {
        let fam = FamilyArgs { family: a.family, size: Some(n), rows: Some(n), cols: Some(n), degrees: Vec::new(), isolated: 0 };
        let net = network_of(&fam)?;
        let model = build_model(&net, a.protocol)?;
        let t = Instant::now();
        let program = Program::compile(&model)?;
        let theta = strongest_split_invariant(&program, a.mode.into());
        let verdict = check_property(&program, &theta);
        let seconds = t.elapsed().as_secs_f64();
        rows.push(BenchRow {
            n,
            seconds,
            theta_states: theta.total_states(),
            verdict: if verdict.is_proved() { "proved".into() } else { "unknown".into() },
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?;
    Ok(match &a.csv {
        Some(p) => {
            write_file(p, &text)?;
            Outcome::ok(0, String::new())
        }
        None => Outcome::ok(0, text),
    })
}
