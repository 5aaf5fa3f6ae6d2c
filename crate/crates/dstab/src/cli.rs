//! Command line: `decide`, `check-stability`, `lyap`, `hybrid` and `deepen`.
//!
//! Exit codes: 0 for stable, success or delta-true; 1 for delta-unstable,
//! delta-fail or false; 2 for usage, parse and parameter errors; 3 when the
//! solver itself fails.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dstab_core::formula::{classify, name, parse_term, Registry};
use dstab_core::hybrid::{check_hybrid_stability_with, HybridCheck, DEFAULT_PATH_CAP};
use dstab_core::solver::{decide_with, Answer, SolverConfig, TraceRecord};
use dstab_core::stability::{
    check_stability_with, deepen_asymptotic, deepen_lyapunov, lyapunov_test_with, Deepening,
    Lyapunov, LyapunovCandidate, Stability, StabilityKind, StabilityParams,
};
use dstab_core::{Error, Rational, Term};

use crate::dsl::{parse_document, parse_sentence_file, Document, DslError};
use crate::exec::{default_workers, Threads};
use crate::report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "dstab", version, about = "delta-complete stability analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// δ-decide one bounded sentence.
    Decide(DecideArgs),
    /// δ-decide a stability property of an ODE system.
    CheckStability(StabilityArgs),
    /// Search a parametric Lyapunov function template.
    Lyap(LyapArgs),
    /// δ-decide a stability property of a hybrid automaton.
    Hybrid(HybridArgs),
    /// Bounded checks for growing horizons until one is δ-unstable.
    Deepen(DeepenArgs),
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    #[arg(long, default_value = "1/100", value_parser = rational)]
    pub delta: Rational,
    /// Base `b` of the split floor `δ / b^(k+2)` at quantifier depth k.
    #[arg(long, default_value_t = 2)]
    pub precision: u32,
    /// Solver threads; defaults to $DSTAB_WORKERS or the core count.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Reproducible reports. Solving is always deterministic, so this only
    /// gets echoed.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Write one line per outermost-block box to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Lyapunov,
    Asymptotic,
    AsymptoticInLarge,
}

impl From<Kind> for StabilityKind {
    fn from(k: Kind) -> StabilityKind {
        match k {
            Kind::Lyapunov => StabilityKind::Lyapunov,
            Kind::Asymptotic => StabilityKind::Asymptotic,
            Kind::AsymptoticInLarge => StabilityKind::AsymptoticInLarge,
        }
    }
}

#[derive(Debug, Args)]
pub struct ParamFlags {
    #[arg(long, default_value = "1/20", value_parser = rational)]
    pub eps_min: Rational,
    /// Upper end `e` of the ε range.
    #[arg(long, default_value = "1", value_parser = rational)]
    pub eps_max: Rational,
    #[arg(long, default_value = "1/50", value_parser = rational)]
    pub delta_floor: Rational,
    /// Horizon T.
    #[arg(long, default_value = "5", value_parser = rational)]
    pub time_bound: Rational,
    /// Horizon T' of the convergence part; T when absent.
    #[arg(long, value_parser = rational)]
    pub conv_time: Option<Rational>,
    /// Upper end `d` of the convergence radius.
    #[arg(long, default_value = "1", value_parser = rational)]
    pub conv_radius: Rational,
    #[arg(long, default_value = "1/10", value_parser = rational)]
    pub conv_floor: Rational,
    #[arg(long, default_value = "1/20", value_parser = rational)]
    pub conv_eps_min: Rational,
    #[arg(long, default_value = "1", value_parser = rational)]
    pub conv_eps_max: Rational,
    #[arg(long, default_value = "1/10", value_parser = rational)]
    pub conv_window: Rational,
}

impl ParamFlags {
    fn params(&self, delta: &Rational) -> StabilityParams {
        StabilityParams {
            delta: *delta,
            eps_min: self.eps_min,
            eps_max: self.eps_max,
            delta_floor: self.delta_floor,
            time_bound: self.time_bound,
            region: None,
            conv_time: self.conv_time,
            conv_radius: self.conv_radius,
            conv_floor: self.conv_floor,
            conv_eps_min: self.conv_eps_min,
            conv_eps_max: self.conv_eps_max,
            conv_window: self.conv_window,
        }
    }
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "lyapunov")]
    pub kind: Kind,
    /// Which system of the file to check.
    #[arg(long)]
    pub system: Option<String>,
    #[command(flatten)]
    pub params: ParamFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct LyapArgs {
    pub file: PathBuf,
    /// Template V(p, x), e.g. `p*x^2`.
    #[arg(long)]
    pub template: String,
    /// Parameter range `p=[lo,hi]`; repeat for several parameters.
    #[arg(long = "param", value_parser = param_range)]
    pub params: Vec<(String, Rational, Rational)>,
    /// Conditions are imposed only where ||x|| >= r.
    #[arg(long, default_value = "1/10", value_parser = rational)]
    pub exclusion: Rational,
    /// Require strict decrease.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub system: Option<String>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct HybridArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "lyapunov")]
    pub kind: Kind,
    /// Jumps along each run.
    #[arg(long, default_value_t = 1)]
    pub k_steps: usize,
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    pub path_cap: usize,
    #[arg(long)]
    pub automaton: Option<String>,
    #[command(flatten)]
    pub params: ParamFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DeepenKind {
    Lyapunov,
    Asymptotic,
}

#[derive(Debug, Args)]
pub struct DeepenArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "lyapunov")]
    pub kind: DeepenKind,
    /// Increasing horizons, comma separated.
    #[arg(long, default_value = "1,2,4,8", value_delimiter = ',', value_parser = rational)]
    pub schedule: Vec<Rational>,
    /// Convergence radii for the asymptotic search.
    #[arg(long, default_value = "1", value_delimiter = ',', value_parser = rational)]
    pub radii: Vec<Rational>,
    /// Stop after this many checks.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub system: Option<String>,
    #[command(flatten)]
    pub params: ParamFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
}

fn rational(s: &str) -> Result<Rational, String> {
    match parse_term(s, &Registry::new()) {
        Ok(Term::Const(q)) => Ok(q),
        _ => Err(format!("`{}` is not a rational constant", s)),
    }
}

fn param_range(s: &str) -> Result<(String, Rational, Rational), String> {
    let bad = || format!("expected `name=[lo,hi]`, got `{}`", s);
    let (p, range) = s.split_once('=').ok_or_else(bad)?;
    let inner = range
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(bad)?;
    let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
    let (lo, hi) = (rational(lo.trim())?, rational(hi.trim())?);
    if lo > hi {
        return Err(format!("empty range in `{}`", s));
    }
    Ok((p.trim().to_string(), lo, hi))
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

enum Failure {
    Usage(String),
    Solver(String),
}

impl From<DslError> for Failure {
    fn from(e: DslError) -> Failure {
        match e {
            DslError::Parse(p) => Failure::Usage(format!("parse error at {}", p)),
            DslError::Build(b) => Failure::from(b),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::NegativeDelta
            | Error::InvalidParams(_)
            | Error::InvalidSystem(_)
            | Error::UnboundVariable(_)
            | Error::UnknownMode(_)
            | Error::UndeclaredJump(..)
            | Error::PathCap { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.exit_code() {
                0 => Outcome {
                    stdout: text,
                    stderr: String::new(),
                    code: 0,
                },
                _ => Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code: 2,
                },
            };
        }
    };
    let start = Instant::now();
    let result = match &cli.command {
        Command::Decide(a) => decide(a),
        Command::CheckStability(a) => check(a),
        Command::Lyap(a) => lyap(a),
        Command::Hybrid(a) => hybrid(a),
        Command::Deepen(a) => deepen(a),
    };
    match result {
        Ok((mut report, code)) => {
            report.wall_time_ms = start.elapsed().as_millis();
            Outcome {
                stdout: report.to_string(),
                stderr: String::new(),
                code,
            }
        }
        Err(Failure::Usage(m)) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {}\n", m),
            code: 2,
        },
        Err(Failure::Solver(m)) => Outcome {
            stdout: String::new(),
            stderr: format!("solver error: {}\n", m),
            code: 3,
        },
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))
}

fn load(path: &PathBuf) -> Result<Document, Failure> {
    let src = read(path)?;
    parse_document(&src).map_err(|e| match e {
        DslError::Parse(p) => Failure::Usage(format!("{}:{}", path.display(), p)),
        other => other.into(),
    })
}

fn setup(f: &SolverFlags) -> Result<(SolverConfig, Threads), Failure> {
    let workers = f.workers.unwrap_or_else(default_workers);
    let cfg = SolverConfig {
        precision_base: f.precision,
        workers,
        deterministic: f.deterministic,
        ..SolverConfig::new(f.delta)
    };
    cfg.validate()?;
    Ok((cfg, Threads::new(workers)))
}

fn echo_solver(r: &mut RunReport, cfg: &SolverConfig) {
    r.param("delta", cfg.delta);
    r.param("precision", cfg.precision_base);
    r.param("deterministic", cfg.deterministic);
    r.workers = cfg.workers;
}

fn echo_stability(r: &mut RunReport, kind: StabilityKind, p: &StabilityParams) {
    r.param("kind", kind);
    r.param("eps_min", p.eps_min);
    r.param("eps_max", p.eps_max);
    r.param("delta_floor", p.delta_floor);
    r.param("time_bound", p.time_bound);
    if kind != StabilityKind::Lyapunov {
        r.param("conv_time", p.conv_horizon());
        r.param("conv_radius", p.conv_radius);
        r.param("conv_floor", p.conv_floor);
        r.param("conv_eps_min", p.conv_eps_min);
        r.param("conv_eps_max", p.conv_eps_max);
        r.param("conv_window", p.conv_window);
    }
}

fn stability_code(s: Stability) -> i32 {
    match s {
        Stability::Stable => 0,
        Stability::DeltaUnstable => 1,
    }
}

fn decide(a: &DecideArgs) -> Result<(RunReport, i32), Failure> {
    let src = read(&a.file)?;
    let f = parse_sentence_file(&src).map_err(|e| match e {
        DslError::Parse(p) => Failure::Usage(format!("{}:{}", a.file.display(), p)),
        other => other.into(),
    })?;
    let (cfg, exec) = setup(&a.solver)?;
    let mut trace_file = match &a.trace {
        Some(p) => Some(
            fs::File::create(p)
                .map(std::io::BufWriter::new)
                .map_err(|e| Failure::Usage(format!("{}: {}", p.display(), e)))?,
        ),
        None => None,
    };
    let mut write_err = None;
    let mut sink = |rec: &TraceRecord| {
        if let Some(w) = trace_file.as_mut() {
            if let Err(e) = writeln!(w, "{}", rec) {
                write_err.get_or_insert(e);
            }
        }
    };
    let v = decide_with(&f, &cfg, &exec, a.trace.as_ref().map(|_| &mut sink as _))?;
    if let Some(mut w) = trace_file {
        if let Some(e) = write_err.or_else(|| w.flush().err()) {
            return Err(Failure::Usage(format!("trace: {}", e)));
        }
    }
    let mut r = RunReport::new("decide", v.answer.to_string());
    echo_solver(&mut r, &cfg);
    r.class = Some(classify(&f).class);
    r.witness = v.witness;
    r.stats = v.stats;
    Ok((r, if v.answer == Answer::DeltaTrue { 0 } else { 1 }))
}

fn check(a: &StabilityArgs) -> Result<(RunReport, i32), Failure> {
    let doc = load(&a.file)?;
    let sys = doc.system(a.system.as_deref()).map_err(Failure::Usage)?;
    let (cfg, exec) = setup(&a.solver)?;
    let kind = StabilityKind::from(a.kind);
    let p = a.params.params(&cfg.delta);
    let v = check_stability_with(&sys, kind, &p, &cfg, &exec)?;
    let mut r = RunReport::new("check-stability", v.verdict.to_string());
    r.param("system", &sys.name);
    echo_solver(&mut r, &cfg);
    echo_stability(&mut r, kind, &p);
    r.class = Some(v.class);
    r.witness = v.witness;
    r.stats = v.stats;
    Ok((r, stability_code(v.verdict)))
}

fn lyap(a: &LyapArgs) -> Result<(RunReport, i32), Failure> {
    let doc = load(&a.file)?;
    let sys = doc.system(a.system.as_deref()).map_err(Failure::Usage)?;
    let (cfg, exec) = setup(&a.solver)?;
    let template = parse_term(&a.template, &Registry::new())
        .map_err(|e| Failure::Usage(format!("template: {}", e)))?;
    if a.params.is_empty() {
        return Err(Failure::Usage(String::from(
            "give at least one --param name=[lo,hi]",
        )));
    }
    let c = LyapunovCandidate {
        template,
        gradient: None,
        params: a
            .params
            .iter()
            .map(|(p, lo, hi)| (name(p), *lo, *hi))
            .collect(),
        region: None,
        exclusion: a.exclusion,
        strict: a.strict,
    };
    let v = lyapunov_test_with(&sys, &c, &cfg, &exec)?;
    let mut r = RunReport::new("lyap", v.verdict.to_string());
    r.param("system", &sys.name);
    echo_solver(&mut r, &cfg);
    r.param("template", &c.template);
    for (p, lo, hi) in &c.params {
        r.param(&format!("param.{}", p), format!("[{}, {}]", lo, hi));
    }
    r.param("exclusion", c.exclusion);
    r.param("strict", c.strict);
    r.class = Some(v.class);
    r.witness = v.witness;
    r.stats = v.stats;
    Ok((r, if v.verdict == Lyapunov::Success { 0 } else { 1 }))
}

fn hybrid(a: &HybridArgs) -> Result<(RunReport, i32), Failure> {
    let doc = load(&a.file)?;
    let h = doc
        .automaton(a.automaton.as_deref())
        .map_err(Failure::Usage)?;
    let (cfg, exec) = setup(&a.solver)?;
    let kind = StabilityKind::from(a.kind);
    let p = a.params.params(&cfg.delta);
    let chk = HybridCheck {
        kind,
        k: a.k_steps,
        path_cap: a.path_cap,
    };
    let v = check_hybrid_stability_with(&h, &chk, &p, &cfg, &exec)?;
    let mut r = RunReport::new("hybrid", v.verdict.to_string());
    r.param("automaton", &h.name);
    echo_solver(&mut r, &cfg);
    echo_stability(&mut r, kind, &p);
    r.param("k", chk.k);
    r.param("path_cap", chk.path_cap);
    r.class = Some(v.class);
    r.witness = v.witness;
    r.stats = v.stats;
    Ok((r, stability_code(v.verdict)))
}

fn deepen(a: &DeepenArgs) -> Result<(RunReport, i32), Failure> {
    let doc = load(&a.file)?;
    let sys = doc.system(a.system.as_deref()).map_err(Failure::Usage)?;
    let (cfg, exec) = setup(&a.solver)?;
    let p = a.params.params(&cfg.delta);
    let budget = a.budget.unwrap_or(usize::MAX);
    let mut proceed = |done: &[_]| done.len() < budget;
    let (result, steps) = match a.kind {
        DeepenKind::Lyapunov => deepen_lyapunov(&sys, &p, &a.schedule, &cfg, &exec, &mut proceed)?,
        DeepenKind::Asymptotic => {
            deepen_asymptotic(&sys, &p, &a.radii, &a.schedule, &cfg, &exec, &mut proceed)?
        }
    };
    let verdict = match &result {
        Deepening::DeltaUnstableAt {
            radius: None, time, ..
        } => {
            format!("delta-unstable-at T={}", time)
        }
        Deepening::DeltaUnstableAt {
            radius: Some(d),
            time,
            ..
        } => {
            format!("delta-unstable-at d={} T={}", d, time)
        }
        Deepening::Exhausted => String::from("exhausted"),
    };
    let mut r = RunReport::new("deepen", verdict);
    for s in &steps {
        r.steps.push(match &s.radius {
            None => format!("T={} {}", s.time, s.verdict),
            Some(d) => format!("d={} T={} {}", d, s.time, s.verdict),
        });
        r.stats.merge(&s.stats);
    }
    r.param("system", &sys.name);
    echo_solver(&mut r, &cfg);
    let kind = match a.kind {
        DeepenKind::Lyapunov => StabilityKind::Lyapunov,
        DeepenKind::Asymptotic => StabilityKind::Asymptotic,
    };
    echo_stability(&mut r, kind, &p);
    // the schedule and radii replace these
    r.params
        .retain(|(k, _)| !matches!(k.as_str(), "time_bound" | "conv_time" | "conv_radius"));
    let list = |xs: &[Rational]| {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    r.param("schedule", list(&a.schedule));
    if a.kind == DeepenKind::Asymptotic {
        r.param("radii", list(&a.radii));
    }
    if let Some(b) = a.budget {
        r.param("budget", b);
    }
    r.param("checks", steps.len());
    let code = match result {
        Deepening::DeltaUnstableAt { verdict, .. } => {
            r.class = Some(verdict.class);
            r.witness = verdict.witness;
            1
        }
        Deepening::Exhausted => 0,
    };
    Ok((r, code))
}
