//! Command-line front end: verification, pullback, factorization,
//! classification, structure checks, prolongation, fixture suites and a
//! numerical cross-check.

pub mod checks;
pub mod crosscheck;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use jetfactor::blocks::BlockMatrix;
use jetfactor::classify::{classify_static, dynamic_class, ClassifyError};
use jetfactor::coframes::Coframe;
use jetfactor::equivalence::{pullback_matrix, verify_forward, verify_pair, EquivMap, VerificationReport};
use jetfactor::factorize::{factor_jk0, GnicePattern};
use jetfactor::fixtures::{self, FixturePair};
use jetfactor::jetcontrol::{prolong_partial, prolong_total, ControlSystem};
use jetfactor::sysio::{
    map_section, matrix_section, parse_document, parse_map_with, serialize_document, serialize_section,
    system_from_section, system_section, Document, Key, ParseOptions, Section, SysioError, Value,
};
use jetfactor::RatFn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::checks::{Budget, Criterion};
use crate::crosscheck::{numeric_crosscheck, CrosscheckError, CrosscheckOptions};

/// Outcome of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandResult {
    /// 0 success, 1 failed check, 2 input error, 3 internal invariant violation.
    pub code: i32,
    pub report: String,
    /// Keyed-section report, present with `--format machine`.
    pub machine: Option<String>,
    /// Lines for standard error.
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Input { path: String, source: SysioError },
    #[error("{0}")]
    Failed(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } | CliError::Input { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FrameChoice {
    Auto,
    Contact,
    Adapted,
    /// Contact, and adapted when the system is a normal form.
    All,
}

#[derive(Debug, Parser)]
#[command(name = "jetfactor", version, about = "Dynamic equivalence of control systems on truncated jet bundles")]
struct Cli {
    /// Truncation order.
    #[arg(short = 'N', long = "order", global = true, default_value_t = 4)]
    order: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Unknown keys in input files are errors.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct MapInput {
    /// Source system file.
    #[arg(long, requires_all = ["tgt", "map"], conflicts_with = "fixture")]
    src: Option<PathBuf>,
    /// Target system file.
    #[arg(long, requires = "src")]
    tgt: Option<PathBuf>,
    /// Map file from source to target.
    #[arg(long = "map", requires = "src")]
    map: Option<PathBuf>,
    /// Built-in fixture; a `-inv` suffix selects the inverse direction.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check a map, and optionally its inverse, exactly.
    Verify {
        #[command(flatten)]
        input: MapInput,
        /// Inverse map file from target to source.
        #[arg(long, requires = "src")]
        inv: Option<PathBuf>,
    },
    /// Pullback matrix of a map on block coframes.
    Pullback {
        #[command(flatten)]
        input: MapInput,
        #[arg(long, value_enum, default_value_t = FrameChoice::Auto)]
        frame: FrameChoice,
    },
    /// Factor a pullback matrix as g*S*G.
    Factor {
        #[command(flatten)]
        input: MapInput,
    },
    /// Static and dynamic class of every system in a file.
    Classify {
        #[arg(long)]
        sys: PathBuf,
    },
    /// Check the structure equations of the block coframes.
    StructureCheck {
        #[arg(long)]
        sys: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameChoice::All)]
        frame: FrameChoice,
    },
    /// Promote controls to states.
    Prolong {
        #[arg(long)]
        sys: PathBuf,
        /// Controls to promote, as `u2` or `2`; all by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_control)]
        controls: Vec<usize>,
    },
    /// List, run or export the built-in fixtures.
    Fixtures {
        /// Fixture to verify.
        name: Option<String>,
        /// Run every fixture and property suite.
        #[arg(long, conflicts_with = "name")]
        all: bool,
        /// Smaller randomized budgets.
        #[arg(long, requires = "all")]
        quick: bool,
        /// Write each fixture as system and map files into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Integrate both systems numerically and compare trajectories.
    Crosscheck {
        #[command(flatten)]
        input: MapInput,
        /// Horizon.
        #[arg(long = "time", default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Controls forced through zero mid-horizon, as `u2` or `2`.
        #[arg(long, value_delimiter = ',', value_parser = parse_control)]
        pin: Vec<usize>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Verify { .. } => "verify",
            Cmd::Pullback { .. } => "pullback",
            Cmd::Factor { .. } => "factor",
            Cmd::Classify { .. } => "classify",
            Cmd::StructureCheck { .. } => "structure-check",
            Cmd::Prolong { .. } => "prolong",
            Cmd::Fixtures { .. } => "fixtures",
            Cmd::Crosscheck { .. } => "crosscheck",
        }
    }
}

fn parse_control(s: &str) -> Result<usize, String> {
    let digits = s.strip_prefix('u').unwrap_or(s);
    match digits.parse::<usize>() {
        Ok(j) if j >= 1 => Ok(j),
        _ => Err(format!("'{s}' is not a control such as u2")),
    }
}

struct Ctx {
    order: usize,
    seed: u64,
    opts: ParseOptions,
    diagnostics: Vec<String>,
}

/// Text and sections of a finished command.
struct Outcome {
    passed: bool,
    text: String,
    sections: Vec<Section>,
}

impl Outcome {
    fn new(passed: bool, text: String) -> Self {
        Outcome { passed, text, sections: Vec::new() }
    }

    fn with(mut self, sec: Section) -> Self {
        self.sections.push(sec);
        self
    }
}

fn named(mut sec: Section, name: &str) -> Section {
    sec.name = Some(name.to_string());
    sec
}

fn header(command: &str, code: i32, error: Option<&str>) -> Section {
    let mut sec = Section::new("report", Some(command.to_string()));
    sec.push(Key::plain("passed"), Value::Bool(code == 0));
    sec.push(Key::plain("exit"), Value::Expr(RatFn::from_int(code as i64)));
    if let Some(e) = error {
        sec.push(Key::plain("error"), Value::Str(e.to_string()));
    }
    sec
}

fn str_entry(sec: &mut Section, key: &str, value: impl Into<String>) {
    sec.push(Key::plain(key), Value::Str(value.into()));
}

/// Parse `argv` (program name first) and execute it.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    CommandResult { code: 0, report: text, machine: None, diagnostics: Vec::new() }
                }
                _ => CommandResult { code: 2, report: String::new(), machine: None, diagnostics: vec![text] },
            };
        }
    };
    let mut ctx =
        Ctx { order: cli.order, seed: cli.seed, opts: ParseOptions { strict: cli.strict }, diagnostics: Vec::new() };
    let name = cli.cmd.name();
    let result = dispatch(cli.cmd, &mut ctx);
    let machine_wanted = cli.format == Format::Machine;
    match result {
        Ok(out) => {
            let code = if out.passed { 0 } else { 1 };
            let machine = machine_wanted.then(|| {
                let mut sections = vec![header(name, code, None)];
                sections.extend(out.sections);
                serialize_document(&Document { sections })
            });
            CommandResult { code, report: out.text, machine, diagnostics: ctx.diagnostics }
        }
        Err(err) => {
            let code = err.exit_code();
            let msg = err.to_string();
            let machine = machine_wanted.then(|| serialize_section(&header(name, code, Some(&msg))));
            ctx.diagnostics.push(format!("error: {msg}"));
            CommandResult { code, report: String::new(), machine, diagnostics: ctx.diagnostics }
        }
    }
}

fn dispatch(cmd: Cmd, ctx: &mut Ctx) -> Result<Outcome, CliError> {
    match cmd {
        Cmd::Verify { input, inv } => verify(ctx, &input, inv.as_deref()),
        Cmd::Pullback { input, frame } => pullback(ctx, &input, frame),
        Cmd::Factor { input } => factor(ctx, &input),
        Cmd::Classify { sys } => classify(ctx, &sys),
        Cmd::StructureCheck { sys, frame } => structure_check(ctx, &sys, frame),
        Cmd::Prolong { sys, controls } => prolong(ctx, &sys, &controls),
        Cmd::Fixtures { name, all, quick, export } => fixtures_cmd(ctx, name.as_deref(), all, quick, export.as_deref()),
        Cmd::Crosscheck { input, time, tol, pin } => crosscheck_cmd(ctx, &input, time, tol, pin),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn input_err(path: &Path) -> impl Fn(SysioError) -> CliError + '_ {
    move |source| CliError::Input { path: path.display().to_string(), source }
}

fn warn(ctx: &mut Ctx, path: &Path, warnings: Vec<String>) {
    for w in warnings {
        ctx.diagnostics.push(format!("warning: {}: {w}", path.display()));
    }
}

/// Every system section of a file, with section names.
fn load_systems(ctx: &mut Ctx, path: &Path) -> Result<Vec<(Option<String>, ControlSystem)>, CliError> {
    let text = read(path)?;
    let doc = parse_document(&text).map_err(input_err(path))?;
    let mut out = Vec::new();
    for sec in doc.sections.iter().filter(|s| s.kind == "system") {
        let parsed = system_from_section(sec, ctx.opts).map_err(input_err(path))?;
        warn(ctx, path, parsed.warnings);
        out.push((sec.name.clone(), parsed.value));
    }
    if out.is_empty() {
        return Err(input_err(path)(SysioError::MissingSection("system".into())));
    }
    Ok(out)
}

fn load_system(ctx: &mut Ctx, path: &Path) -> Result<ControlSystem, CliError> {
    let mut all = load_systems(ctx, path)?;
    if all.len() > 1 {
        ctx.diagnostics.push(format!("warning: {}: using the first of {} systems", path.display(), all.len()));
    }
    Ok(all.swap_remove(0).1)
}

fn load_map(ctx: &mut Ctx, path: &Path, src: &ControlSystem, tgt: &ControlSystem) -> Result<EquivMap, CliError> {
    let text = read(path)?;
    let parsed = parse_map_with(&text, src, tgt, ctx.opts).map_err(input_err(path))?;
    warn(ctx, path, parsed.warnings);
    let mut m = parsed.value;
    if m.name.is_empty() {
        m.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(m)
}

fn all_fixtures() -> Vec<FixturePair> {
    let mut all = fixtures::builtin_fixtures();
    all.extend(fixtures::scalar_fixtures());
    all.push(fixtures::scalar_negative());
    all
}

fn find_fixture(name: &str) -> Result<(FixturePair, bool), CliError> {
    let (base, inverse) = match name.strip_suffix("-inv") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let fx = all_fixtures().into_iter().find(|f| f.name == base).ok_or_else(|| {
        let names: Vec<&str> = all_fixtures().iter().map(|f| f.name).collect();
        CliError::Usage(format!("unknown fixture '{name}'; known: {}", names.join(", ")))
    })?;
    Ok((fx, inverse))
}

fn load_input(ctx: &mut Ctx, input: &MapInput) -> Result<EquivMap, CliError> {
    if let Some(name) = &input.fixture {
        let (fx, inverse) = find_fixture(name)?;
        return Ok(if inverse { fx.inverse } else { fx.forward });
    }
    match (&input.src, &input.tgt, &input.map) {
        (Some(s), Some(t), Some(m)) => {
            let src = load_system(ctx, s)?;
            let tgt = load_system(ctx, t)?;
            load_map(ctx, m, &src, &tgt)
        }
        _ => Err(CliError::Usage("give --src, --tgt and --map, or --fixture".into())),
    }
}

fn fail<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Failed(e.to_string())
}

fn orders_text(rep: &VerificationReport) -> String {
    match rep.detected_k {
        Some(k) if k == rep.detected_j => format!("J=K={k}"),
        Some(k) => format!("J={}, K={k}", rep.detected_j),
        None => format!("J={}", rep.detected_j),
    }
}

fn joined(xs: &[RatFn]) -> String {
    xs.iter().map(|a| format!("{a} != 0")).collect::<Vec<_>>().join(", ")
}

fn verify(ctx: &mut Ctx, input: &MapInput, inv: Option<&Path>) -> Result<Outcome, CliError> {
    let m = load_input(ctx, input)?;
    let minv = match (inv, &input.fixture) {
        (Some(path), _) => Some(load_map(ctx, path, &m.tgt, &m.src)?),
        (None, Some(name)) => {
            let (fx, inverse) = find_fixture(name)?;
            Some(if inverse { fx.forward } else { fx.inverse })
        }
        (None, None) => None,
    };
    let rep = match &minv {
        Some(minv) => verify_pair(&m, minv, ctx.order),
        None => verify_forward(&m),
    }
    .map_err(fail)?;
    let mut text = format!("forward: {} residuals", rep.residuals.iter().filter(|(k, _)| is_forward(k)).count());
    if let Some(ok) = rep.inverse_ok {
        if ok {
            let _ = write!(text, "; inverse: identity to order {}", ctx.order);
        } else {
            let _ = write!(text, "; inverse: not the identity to order {}", ctx.order);
        }
    }
    let _ = writeln!(text, "; {}", orders_text(&rep));
    for (k, r) in &rep.residuals {
        let _ = writeln!(text, "residual {k}: {r}");
    }
    if !rep.assumptions.is_empty() {
        let _ = writeln!(text, "assumptions: {}", joined(&rep.assumptions));
    }
    let mut sec = Section::new("verification", Some(m.name.clone()));
    sec.push(Key::plain("forward"), Value::Bool(rep.forward_ok));
    if let Some(ok) = rep.inverse_ok {
        sec.push(Key::plain("inverse"), Value::Bool(ok));
        sec.push(Key::plain("order"), Value::Expr(RatFn::from_int(ctx.order as i64)));
    }
    sec.push(Key::plain("j"), Value::Expr(RatFn::from_int(rep.detected_j as i64)));
    if let Some(k) = rep.detected_k {
        sec.push(Key::plain("k"), Value::Expr(RatFn::from_int(k as i64)));
    }
    for (i, (k, r)) in rep.residuals.iter().enumerate() {
        sec.push(Key { name: "residual".into(), indices: vec![i as i64 + 1] }, Value::Expr(r.clone()));
        str_entry(&mut sec, &format!("residual_of{}", i + 1), k.clone());
    }
    for (i, a) in rep.assumptions.iter().enumerate() {
        sec.push(Key { name: "nonzero".into(), indices: vec![i as i64 + 1] }, Value::Expr(a.clone()));
    }
    let mut out = Outcome::new(rep.passed(), text).with(sec).with(map_section(&m));
    if let Some(minv) = &minv {
        out = out.with(named(map_section(minv), "inverse"));
    }
    Ok(out)
}

/// Residual labels of the forward check of the map itself.
fn is_forward(label: &str) -> bool {
    !label.starts_with("inverse ") && !label.starts_with("composed ") && !label.starts_with("reverse ")
}

fn frame(sys: &ControlSystem, levels: usize, choice: FrameChoice) -> Result<Coframe, CliError> {
    match choice {
        FrameChoice::Auto | FrameChoice::All => Ok(Coframe::auto(sys, levels)),
        FrameChoice::Contact => Ok(Coframe::contact(sys, levels)),
        FrameChoice::Adapted => Coframe::adapted_3x2(sys, levels).map_err(fail),
    }
}

fn matrix_for(ctx: &Ctx, m: &EquivMap, choice: FrameChoice) -> Result<BlockMatrix, CliError> {
    let n = ctx.order;
    let src = frame(&m.src, n + m.detect_order().max(0) as usize + 1, choice)?;
    let tgt = frame(&m.tgt, n, choice)?;
    pullback_matrix(m, &src, &tgt, n).map_err(fail)
}

fn pullback(ctx: &mut Ctx, input: &MapInput, choice: FrameChoice) -> Result<Outcome, CliError> {
    let m = load_input(ctx, input)?;
    let a = matrix_for(ctx, &m, choice)?;
    let band = a.band.map(|b| b.to_string()).unwrap_or_else(|| "none".into());
    let sec = named(matrix_section(&a), "A");
    let text = format!("pullback {} to order {}: band J = {band}\n{}", m.name, ctx.order, serialize_section(&sec));
    Ok(Outcome::new(true, text).with(sec))
}

fn pattern_section(p: &GnicePattern) -> Section {
    let mut sec = Section::new("pattern", Some("G".into()));
    sec.push(Key::plain("p0"), Value::Expr(p.p0.clone()));
    sec.push(Key::plain("p1"), Value::Expr(p.p1.clone()));
    sec.push(Key::plain("q"), Value::Expr(p.q.clone()));
    sec
}

fn factor(ctx: &mut Ctx, input: &MapInput) -> Result<Outcome, CliError> {
    let m = load_input(ctx, input)?;
    let a = matrix_for(ctx, &m, FrameChoice::Auto)?;
    let f = factor_jk0(&a).map_err(fail)?;
    if f.product() != a.truncate_cols(ctx.order + 1).with_band(None) {
        return Err(CliError::Internal("g*S*G does not reproduce the pullback matrix".into()));
    }
    let identity = f.pattern == GnicePattern::identity();
    let mut text = format!("factor {} to order {}: A = g*S*G\n", m.name, ctx.order);
    if identity {
        text.push_str("G = identity\n");
    } else {
        let _ = writeln!(text, "G pattern: {}", checks::describe_pattern(&f.pattern));
    }
    if !f.assumptions.is_empty() {
        let _ = writeln!(text, "assumptions: {}", joined(&f.assumptions));
    }
    let secs = [
        named(matrix_section(&f.g.matrix), "g"),
        named(matrix_section(&f.s), "S"),
        named(matrix_section(&f.big_g.matrix), "G"),
    ];
    for s in &secs {
        text.push('\n');
        text.push_str(&serialize_section(s));
    }
    let mut out = Outcome::new(true, text).with(pattern_section(&f.pattern));
    for s in secs {
        out = out.with(s);
    }
    Ok(out)
}

fn classify(ctx: &mut Ctx, path: &Path) -> Result<Outcome, CliError> {
    let systems = load_systems(ctx, path)?;
    let many = systems.len() > 1;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut text = String::new();
    let mut passed = true;
    let mut sections = Vec::new();
    for (k, (name, sys)) in systems.iter().enumerate() {
        let label = name.clone().unwrap_or_else(|| format!("system{}", k + 1));
        let prefix = if many { format!("{label}: ") } else { String::new() };
        let mut sec = Section::new("classification", Some(label.clone()));
        match classify_static(sys, &mut rng) {
            Ok(c) => {
                let dynamic = match dynamic_class(&c) {
                    Ok(d) => d.to_string(),
                    Err(ClassifyError::OutOfTable(_)) => "out of table".into(),
                    Err(e) => return Err(CliError::Internal(e.to_string())),
                };
                let _ = writeln!(text, "{prefix}static: {} ; dynamic: {dynamic}", c.tag);
                str_entry(&mut sec, "static", c.tag.to_string());
                str_entry(&mut sec, "dynamic", dynamic);
                str_entry(&mut sec, "invariants", c.record.to_string());
            }
            Err(e) => {
                passed = false;
                let _ = writeln!(text, "{prefix}unclassified: {e}");
                str_entry(&mut sec, "error", e.to_string());
            }
        }
        sections.push(sec);
    }
    let mut out = Outcome::new(passed, text);
    out.sections = sections;
    Ok(out)
}

fn structure_check(ctx: &mut Ctx, path: &Path, choice: FrameChoice) -> Result<Outcome, CliError> {
    let sys = load_system(ctx, path)?;
    let n = ctx.order;
    let frames: Vec<(&str, Result<Coframe, CliError>)> = match choice {
        FrameChoice::Contact => vec![("contact", Ok(Coframe::contact(&sys, n)))],
        FrameChoice::Adapted => vec![("adapted", frame(&sys, n, FrameChoice::Adapted))],
        FrameChoice::Auto => vec![("auto", Ok(Coframe::auto(&sys, n)))],
        FrameChoice::All => {
            let mut v = vec![("contact", Ok(Coframe::contact(&sys, n)))];
            if let Ok(c) = Coframe::adapted_3x2(&sys, n) {
                v.push(("adapted", Ok(c)));
            }
            v
        }
    };
    let mut text = String::new();
    let mut passed = true;
    let mut sec = Section::new("structure", None);
    for (label, fr) in frames {
        let r = fr.and_then(|c| c.check_structure().map_err(fail));
        match r {
            Ok(rep) => {
                let _ = writeln!(text, "{label} frame: structure equations hold on {} slots to order {n}", rep.checked.len());
                sec.push(Key::plain(label), Value::Bool(true));
            }
            Err(e) => {
                passed = false;
                let _ = writeln!(text, "{label} frame: {e}");
                sec.push(Key::plain(label), Value::Bool(false));
                str_entry(&mut sec, &format!("{label}_error"), e.to_string());
            }
        }
    }
    Ok(Outcome::new(passed, text).with(sec))
}

fn prolong(ctx: &mut Ctx, path: &Path, controls: &[usize]) -> Result<Outcome, CliError> {
    let sys = load_system(ctx, path)?;
    let p = if controls.is_empty() {
        prolong_total(&sys)
    } else {
        prolong_partial(&sys, controls).map_err(|e| CliError::Usage(e.to_string()))?
    };
    let sec = system_section(&p);
    Ok(Outcome::new(true, serialize_section(&sec)).with(sec))
}

fn export(dir: &Path) -> Result<String, CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut text = String::new();
    for fx in all_fixtures() {
        let files = [
            (format!("{}.src.sys", fx.name), jetfactor::sysio::serialize_system(&fx.forward.src)),
            (format!("{}.tgt.sys", fx.name), jetfactor::sysio::serialize_system(&fx.forward.tgt)),
            (format!("{}.fwd.eqv", fx.name), jetfactor::sysio::serialize_map(&fx.forward)),
            (format!("{}.inv.eqv", fx.name), jetfactor::sysio::serialize_map(&fx.inverse)),
        ];
        for (file, body) in files {
            let path = dir.join(&file);
            fs::write(&path, body).map_err(io(&path))?;
            let _ = writeln!(text, "wrote {file}");
        }
    }
    Ok(text)
}

/// An identifier made of the alphanumeric runs of `name`.
fn key_of(name: &str) -> String {
    name.split(|c: char| !c.is_ascii_alphanumeric()).filter(|w| !w.is_empty()).collect::<Vec<_>>().join("_")
}

fn criteria_report(criteria: &[Criterion]) -> (bool, String, Vec<Section>) {
    let mut text = String::new();
    let mut sections = Vec::new();
    let mut passed = true;
    for c in criteria {
        let mut sec = Section::new("suite", Some(key_of(c.title)));
        for ch in &c.checks {
            passed &= ch.passed;
            let tag = if ch.passed { "ok" } else { "FAILED" };
            let _ = writeln!(text, "{tag:6} {}: {} ({})", c.title, ch.name, ch.detail);
            sec.push(Key::plain(key_of(&ch.name)), Value::Bool(ch.passed));
        }
        sections.push(sec);
    }
    (passed, text, sections)
}

fn fixtures_cmd(
    ctx: &mut Ctx,
    name: Option<&str>,
    all: bool,
    quick: bool,
    export_dir: Option<&Path>,
) -> Result<Outcome, CliError> {
    let mut text = String::new();
    if let Some(dir) = export_dir {
        text.push_str(&export(dir)?);
    }
    if all {
        let budget = if quick { Budget::quick() } else { Budget::full() };
        let criteria = checks::all(ctx.order, ctx.seed, &budget, false);
        let (passed, body, sections) = criteria_report(&criteria);
        text.push_str(&body);
        let mut out = Outcome::new(passed, text);
        out.sections = sections;
        return Ok(out);
    }
    if let Some(name) = name {
        let (fx, inverse) = find_fixture(name)?;
        let (m, minv) = if inverse { (fx.inverse, fx.forward) } else { (fx.forward, fx.inverse) };
        let rep = verify_pair(&m, &minv, ctx.order).map_err(fail)?;
        let _ = writeln!(
            text,
            "{}: {} residuals; inverse {} to order {}; {}",
            m.name,
            rep.residuals.len(),
            if rep.inverse_ok == Some(true) { "verified" } else { "fails" },
            ctx.order,
            orders_text(&rep)
        );
        return Ok(Outcome::new(rep.passed(), text).with(map_section(&m)).with(named(map_section(&minv), "inverse")));
    }
    if export_dir.is_none() {
        for fx in all_fixtures() {
            let _ = writeln!(text, "{:16} {} -> {}", fx.name, fx.forward.src, fx.forward.tgt);
        }
    }
    Ok(Outcome::new(true, text))
}

fn crosscheck_cmd(ctx: &mut Ctx, input: &MapInput, time: f64, tol: f64, pin: Vec<usize>) -> Result<Outcome, CliError> {
    let m = load_input(ctx, input)?;
    if let Some(&bad) = pin.iter().find(|&&j| j > m.src.s()) {
        return Err(CliError::Usage(format!("u{bad} is not a control of the source system")));
    }
    let opts = CrosscheckOptions { horizon: time, tol, pinned: pin };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut sec = Section::new("crosscheck", Some(m.name.clone()));
    str_entry(&mut sec, "horizon", format!("{time}"));
    str_entry(&mut sec, "tolerance", format!("{tol:e}"));
    match numeric_crosscheck(&m, &opts, &mut rng) {
        Ok(rep) => {
            let verdict = if rep.passed { "pass" } else { "FAIL" };
            let text = format!(
                "crosscheck {}: max residual {:.3e} at t = {:.4} over T = {time} ({} sample{}); {verdict}\n",
                m.name,
                rep.max_residual,
                rep.worst_time,
                rep.attempts,
                if rep.attempts == 1 { "" } else { "s" }
            );
            str_entry(&mut sec, "max_residual", format!("{:.6e}", rep.max_residual));
            str_entry(&mut sec, "worst_time", format!("{:.6}", rep.worst_time));
            sec.push(Key::plain("samples"), Value::Expr(RatFn::from_int(rep.attempts as i64)));
            sec.push(Key::plain("passed"), Value::Bool(rep.passed));
            Ok(Outcome::new(rep.passed, text).with(sec))
        }
        Err(e @ CrosscheckError::SingularTrajectory { .. }) | Err(e @ CrosscheckError::Diverged { .. }) => {
            str_entry(&mut sec, "diagnosis", e.to_string());
            sec.push(Key::plain("passed"), Value::Bool(false));
            Ok(Outcome::new(false, format!("crosscheck {}: {e}\n", m.name)).with(sec))
        }
        Err(e @ CrosscheckError::BadHorizon(_)) => Err(CliError::Usage(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controls_parse_with_or_without_prefix() {
        assert_eq!(parse_control("u2"), Ok(2));
        assert_eq!(parse_control("1"), Ok(1));
        assert!(parse_control("u0").is_err());
        assert!(parse_control("x1").is_err());
    }

    #[test]
    fn keys_are_identifiers() {
        assert_eq!(key_of("crosscheck phi^-1"), "crosscheck_phi_1");
        assert_eq!(key_of("adapted x3' = 1+x2*u1"), "adapted_x3_1_x2_u1");
    }
}
