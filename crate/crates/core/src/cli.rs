//! The `restflake` command line.
//!
//! Exit codes: 0 clean, 1 findings exist (detect only), 2 transport or
//! environment failure, 3 missing or conflicting inputs, 4 malformed
//! auxiliary input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::classifier::{classify_all, parse_labels, summarize_with_labels, Category, DECISION_ORDER};
use crate::detector::{detect_against_literals, detect_flaky, union_findings, CompareRules};
use crate::executor::{Captured, ExecConfig, ExecError, Executor, FailureKind, TestOutcome};
use crate::inference::{evaluate_corpus, infer_findings, CorpusEntry, PatternCatalog};
use crate::metrics::{compare_groups, compute_stats, render_comparison_table, render_table, summarize, FlakinessStats};
use crate::mocksut::{MockConfig, MockServer, FIXTURE_SUITE};
use crate::model::{parse_suite, TestSuite};
use crate::rundir::{
    Archive, FindingsDoc, MatrixDoc, RunDir, RunDirError, RunMeta, ANNOTATIONS_FILE, CATEGORIES_FILE,
    FINDINGS_FILE, MATRIX_FILE, STABILIZATION_FILE, STABILIZED_FILE, SUITE_FILE,
};
use crate::stabilizer::{render_annotations, stabilize};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_TRANSPORT: i32 = 2;
pub const EXIT_MISSING: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Transport(String),
    #[error("{0}")]
    Missing(String),
    #[error("{0}")]
    Malformed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Transport(_) => EXIT_TRANSPORT,
            CliError::Missing(_) => EXIT_MISSING,
            CliError::Malformed(_) => EXIT_MALFORMED,
        }
    }
}

impl From<RunDirError> for CliError {
    fn from(e: RunDirError) -> Self {
        match e {
            RunDirError::Missing(_) | RunDirError::Io { .. } => CliError::Missing(e.to_string()),
            RunDirError::Json { .. } | RunDirError::Suite { .. } => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::Config(_) => CliError::Missing(e.to_string()),
            ExecError::Transport(_) | ExecError::Environment(_) => CliError::Transport(e.to_string()),
        }
    }
}

type CliResult = Result<i32, CliError>;

#[derive(Debug, Parser)]
#[command(name = "restflake", version, about = "Detect and mitigate flaky assertions in REST API test suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a suite once and archive the responses as the baseline.
    Record(RecordArgs),
    /// Execute a suite N times and store the pass/fail matrix.
    Run(RunArgs),
    /// Re-execute a recorded suite and report unstable targets.
    Detect(DetectArgs),
    /// Disable assertions at actionable findings and write annotations.
    Stabilize(DirArg),
    /// Attach taxonomy categories to findings.
    Classify(ClassifyArgs),
    /// Summarize failure rates over one or more run directories.
    Report(ReportArgs),
    /// Serve the mock SUT until interrupted.
    ServeMock(ServeArgs),
    /// Print the suite that targets the mock SUT.
    Fixture(FixtureArgs),
    /// Score the pattern catalog against a labelled corpus.
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
struct ExecFlags {
    /// SUT base URL, e.g. http://127.0.0.1:8080
    #[arg(long, env = "RESTFLAKE_BASE_URL")]
    base_url: Option<String>,
    /// Per-call timeout in milliseconds.
    #[arg(long, env = "RESTFLAKE_TIMEOUT_MS")]
    timeout_ms: Option<u64>,
    /// Wall-clock budget per test in milliseconds.
    #[arg(long, env = "RESTFLAKE_TEST_BUDGET_MS")]
    test_budget_ms: Option<u64>,
}

#[derive(Debug, Args)]
struct RecordArgs {
    suite: PathBuf,
    #[command(flatten)]
    exec: ExecFlags,
    #[arg(long)]
    out: PathBuf,
    /// Replace an existing baseline.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    suite: PathBuf,
    #[command(flatten)]
    exec: ExecFlags,
    #[arg(long)]
    out: PathBuf,
    #[arg(short = 'n', long, default_value_t = 1)]
    repetitions: usize,
    /// Shell command run between repetitions to reset SUT state.
    #[arg(long)]
    reset_hook: Option<String>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
struct DetectArgs {
    dir: PathBuf,
    #[command(flatten)]
    exec: ExecFlags,
    /// Number of re-executions whose findings are unioned.
    #[arg(long, default_value_t = 1)]
    repeat_detect: usize,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    infer: Switch,
    /// Use assertion literals as baseline values instead of a recording.
    #[arg(long)]
    from_literals: bool,
    /// Pattern catalog replacing the built-in one.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Additional header to ignore; repeatable.
    #[arg(long = "ignore-header")]
    ignore_headers: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    numeric_tolerance: f64,
    #[arg(long)]
    header_presence_only: bool,
}

#[derive(Debug, Args)]
struct DirArg {
    dir: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    dir: PathBuf,
    /// JSON list of {"test", "category"} manual labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Doc,
}

#[derive(Debug, Args)]
struct ReportArgs {
    dirs: Vec<PathBuf>,
    #[arg(long, num_args = 1.., requires = "treated")]
    baseline: Vec<PathBuf>,
    #[arg(long, num_args = 1.., requires = "baseline")]
    treated: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Debug, Args)]
struct FixtureArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    file: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_MISSING } else { EXIT_CLEAN };
        }
    };
    let result = match cli.command {
        Command::Record(a) => cmd_record(a),
        Command::Run(a) => cmd_run(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Stabilize(a) => cmd_stabilize(&a.dir),
        Command::Classify(a) => cmd_classify(a),
        Command::Report(a) => cmd_report(a),
        Command::ServeMock(a) => cmd_serve_mock(a),
        Command::Fixture(a) => cmd_fixture(a),
        Command::Corpus(a) => cmd_corpus(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn read_suite_file(path: &Path) -> Result<TestSuite, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Missing(format!("{}: {e}", path.display())))?;
    parse_suite(&bytes).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))
}

fn load_catalog(path: Option<&Path>) -> Result<PatternCatalog, CliError> {
    match path {
        None => Ok(PatternCatalog::default()),
        Some(p) => PatternCatalog::load(p).map_err(|e| match e {
            crate::inference::CatalogError::Io(_) => CliError::Missing(format!("{}: {e}", p.display())),
            _ => CliError::Malformed(format!("{}: {e}", p.display())),
        }),
    }
}

fn exec_config(flags: &ExecFlags, meta: Option<&RunMeta>) -> ExecConfig {
    let mut cfg = ExecConfig::default();
    if let Some(m) = meta {
        cfg.call_timeout = Duration::from_millis(m.call_timeout_ms);
        cfg.test_budget = Duration::from_millis(m.test_budget_ms);
    }
    if let Some(ms) = flags.timeout_ms {
        cfg.call_timeout = Duration::from_millis(ms);
    }
    if let Some(ms) = flags.test_budget_ms {
        cfg.test_budget = Duration::from_millis(ms);
    }
    cfg
}

fn fresh_meta(base_url: &str, cfg: &ExecConfig) -> RunMeta {
    let t = now();
    RunMeta {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_at: t.clone(),
        updated_at: t,
        base_url: Some(base_url.to_string()),
        call_timeout_ms: cfg.call_timeout.as_millis() as u64,
        test_budget_ms: cfg.test_budget.as_millis() as u64,
        ..RunMeta::default()
    }
}

fn require_base_url(flags: &ExecFlags, meta: Option<&RunMeta>) -> Result<String, CliError> {
    flags
        .base_url
        .clone()
        .or_else(|| meta.and_then(|m| m.base_url.clone()))
        .ok_or_else(|| CliError::Missing("no base URL: pass --base-url or set RESTFLAKE_BASE_URL".into()))
}

fn transport_failures(outcomes: &[TestOutcome]) -> Vec<String> {
    outcomes
        .iter()
        .flat_map(|o| {
            o.failed_assertions
                .iter()
                .filter(|f| f.kind == FailureKind::Transport)
                .map(move |f| format!("{} (call {}): {}", o.test_name, f.call_index, f.observed))
        })
        .collect()
}

fn captured_of(outcomes: &[TestOutcome]) -> Captured {
    outcomes
        .iter()
        .map(|o| (o.test_name.clone(), o.responses.clone()))
        .collect()
}

/// Copies the suite into the run directory, refusing to replace a different
/// suite unless forced.
fn install_suite(rd: &RunDir, suite: &TestSuite, force: bool) -> Result<(), CliError> {
    if !force && rd.exists(SUITE_FILE) {
        let existing = rd.read_suite(SUITE_FILE)?;
        if existing != *suite {
            return Err(CliError::Missing(format!(
                "{} holds a different suite; pass --force to replace it",
                rd.path(SUITE_FILE).display()
            )));
        }
    }
    Ok(rd.write_suite(SUITE_FILE, suite)?)
}

fn cmd_record(a: RecordArgs) -> CliResult {
    let existing = RunDir::open(&a.out);
    let prior = if existing.exists(crate::rundir::META_FILE) {
        Some(existing.read_meta()?)
    } else {
        None
    };
    if !a.force && prior.as_ref().is_some_and(|m| m.baseline.is_some()) {
        return Err(CliError::Missing(format!(
            "baseline exists in {}; pass --force to overwrite it",
            a.out.display()
        )));
    }
    let suite = read_suite_file(&a.suite)?;
    let base_url = require_base_url(&a.exec, None)?;
    let cfg = exec_config(&a.exec, None);
    let exec = Executor::new(&base_url, cfg.clone())?;

    let rd = RunDir::create(&a.out)?;
    install_suite(&rd, &suite, a.force)?;
    let outcomes = exec.run_suite(&suite);
    let archive = Archive::new(&suite, "baseline", 0, &captured_of(&outcomes));
    let hash = rd.write_archive(&archive)?;

    let mut meta = fresh_meta(&base_url, &cfg);
    if let Some(p) = prior {
        meta.created_at = p.created_at;
        meta.repetition_archives = p.repetition_archives;
        meta.stages = p.stages;
    }
    meta.baseline = Some(hash.clone());
    rd.write_meta(&meta)?;

    let failures = transport_failures(&outcomes);
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("transport failure: {f}");
        }
        return Err(CliError::Transport(format!(
            "{} call(s) failed; partial baseline kept as archives/{hash}.json",
            failures.len()
        )));
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("recorded baseline {hash} ({passed}/{} tests passed)", outcomes.len());
    Ok(EXIT_CLEAN)
}

fn cmd_run(a: RunArgs) -> CliResult {
    let rd_probe = RunDir::open(&a.out);
    if !a.force && rd_probe.exists(MATRIX_FILE) {
        return Err(CliError::Missing(format!(
            "{} already exists; pass --force to overwrite it",
            rd_probe.path(MATRIX_FILE).display()
        )));
    }
    if a.repetitions == 0 {
        return Err(CliError::Missing("--repetitions must be at least 1".into()));
    }
    let suite = read_suite_file(&a.suite)?;
    let prior = if rd_probe.exists(crate::rundir::META_FILE) {
        Some(rd_probe.read_meta()?)
    } else {
        None
    };
    let base_url = require_base_url(&a.exec, None)?;
    let cfg = exec_config(&a.exec, None);
    let exec = Executor::new(&base_url, cfg.clone())?;
    let rd = RunDir::create(&a.out)?;
    install_suite(&rd, &suite, a.force)?;

    let mut hashes = Vec::new();
    let mut write_err = None;
    let mut failures = Vec::new();
    let matrix = exec.repeat_execute_with(&suite, a.repetitions, a.reset_hook.as_deref(), |rep, outcomes| {
        failures.extend(transport_failures(outcomes));
        let archive = Archive::new(&suite, "repetition", rep, &captured_of(outcomes));
        match rd.write_archive(&archive) {
            Ok(h) => hashes.push(h),
            Err(e) => {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    let doc = MatrixDoc {
        suite_name: matrix.suite_name.clone(),
        repetitions: matrix.repetitions,
        reset_hook: a.reset_hook.clone(),
        outcomes: matrix.outcomes.clone(),
        archives: hashes.clone(),
    };
    rd.write_json(MATRIX_FILE, &doc)?;

    let mut meta = prior.unwrap_or_else(|| fresh_meta(&base_url, &cfg));
    meta.updated_at = now();
    meta.base_url = Some(base_url);
    meta.reset_hook = a.reset_hook.clone();
    meta.state_reset_between_repetitions = a.reset_hook.is_some();
    meta.repetition_archives = hashes;
    rd.write_meta(&meta)?;

    let stats = compute_stats(&matrix).map_err(|e| CliError::Missing(e.to_string()))?;
    print!("{}", render_table(&[summarize(&a.out.display().to_string(), &[stats])]));
    if !failures.is_empty() {
        for f in failures.iter().take(20) {
            eprintln!("transport failure: {f}");
        }
        return Err(CliError::Transport(format!("{} call(s) failed during the run", failures.len())));
    }
    Ok(EXIT_CLEAN)
}

fn cmd_detect(a: DetectArgs) -> CliResult {
    let rd = RunDir::open(&a.dir);
    let suite = rd.read_suite(SUITE_FILE)?;
    let mut meta = rd.read_meta()?;
    let baseline: Option<Captured> = match &meta.baseline {
        Some(h) => Some(rd.read_archive(h)?.captured()),
        None => None,
    };
    if baseline.is_none() && !a.from_literals {
        return Err(CliError::Missing(format!(
            "no baseline in {}; run `restflake record` first or pass --from-literals",
            a.dir.display()
        )));
    }
    if a.repeat_detect == 0 {
        return Err(CliError::Missing("--repeat-detect must be at least 1".into()));
    }
    let catalog = load_catalog(a.catalog.as_deref())?;
    let base_url = require_base_url(&a.exec, Some(&meta))?;
    let exec = Executor::new(&base_url, exec_config(&a.exec, Some(&meta)))?;
    let mut rules = CompareRules {
        numeric_tolerance: a.numeric_tolerance,
        header_presence_only: a.header_presence_only,
        ..CompareRules::default()
    };
    rules.ignored_headers.extend(a.ignore_headers.iter().map(|h| h.to_ascii_lowercase()));

    let mut runs = Vec::new();
    let mut hashes = Vec::new();
    for rep in 0..a.repeat_detect {
        let outcomes = exec.run_suite(&suite);
        let captured = captured_of(&outcomes);
        hashes.push(rd.write_archive(&Archive::new(&suite, "reexecution", rep, &captured))?);
        let failures = transport_failures(&outcomes);
        if !failures.is_empty() {
            meta.detect_archives = hashes;
            meta.updated_at = now();
            rd.write_meta(&meta)?;
            for f in &failures {
                eprintln!("transport failure: {f}");
            }
            return Err(CliError::Transport(format!("re-execution {rep} hit {} transport failure(s)", failures.len())));
        }
        let found = match (&baseline, a.from_literals) {
            (Some(b), false) => detect_flaky(&suite, b, &captured, &rules),
            _ => detect_against_literals(&suite, &captured),
        }
        .map_err(|e| CliError::Missing(e.to_string()))?;
        runs.push(found);
    }
    let mut findings = union_findings(runs);
    if a.infer == Switch::On {
        let inferred = infer_findings(&suite, baseline.as_ref(), &catalog, &findings);
        findings.extend(inferred);
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("repeat_detect".into(), json!(a.repeat_detect));
    metadata.insert("infer".into(), json!(a.infer == Switch::On));
    metadata.insert("from_literals".into(), json!(a.from_literals || baseline.is_none()));
    metadata.insert("rules".into(), serde_json::to_value(&rules).expect("rules serialize"));
    metadata.insert(
        "catalog".into(),
        json!(a.catalog.as_ref().map_or("builtin".to_string(), |p| p.display().to_string())),
    );
    rd.write_json(
        FINDINGS_FILE,
        &FindingsDoc {
            findings: findings.clone(),
            metadata: metadata.clone(),
        },
    )?;
    meta.detect_archives = hashes;
    meta.updated_at = now();
    meta.stages.insert("detect".into(), Value::Object(metadata.into_iter().collect()));
    rd.write_meta(&meta)?;

    for f in &findings {
        println!(
            "{}\tcall {}\t{}\t{:?}\t{}\t{}",
            f.test_name,
            f.call_index,
            f.target,
            f.kind,
            if f.actionable { "actionable" } else { "informational" },
            f.v_r.replace('\n', "\\n").replace('\t', "\\t")
        );
    }
    println!("{} finding(s)", findings.len());
    Ok(if findings.is_empty() { EXIT_CLEAN } else { EXIT_FINDINGS })
}

fn read_findings(rd: &RunDir) -> Result<FindingsDoc, CliError> {
    Ok(rd.read_json(FINDINGS_FILE)?)
}

fn cmd_stabilize(dir: &Path) -> CliResult {
    let rd = RunDir::open(dir);
    let suite = rd.read_suite(SUITE_FILE)?;
    let doc = read_findings(&rd)?;
    let result = stabilize(&suite, &doc.findings).map_err(|e| CliError::Missing(e.to_string()))?;
    rd.write_suite(STABILIZED_FILE, &result.suite)?;
    rd.write_bytes(ANNOTATIONS_FILE, render_annotations(&result).as_bytes())?;
    rd.write_json(
        STABILIZATION_FILE,
        &json!({
            "resolved_flaky": result.disabled_count,
            "retained_assertions": result.retained_assertions(),
            "per_test": result.per_test,
        }),
    )?;
    if let Ok(mut meta) = rd.read_meta() {
        meta.updated_at = now();
        meta.stages.insert("stabilize".into(), json!({"resolved_flaky": result.disabled_count}));
        rd.write_meta(&meta)?;
    }
    println!("#RF {}", result.disabled_count);
    Ok(EXIT_CLEAN)
}

fn cmd_classify(a: ClassifyArgs) -> CliResult {
    let rd = RunDir::open(&a.dir);
    let mut doc = read_findings(&rd)?;
    let labels = match &a.labels {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::Missing(format!("{}: {e}", p.display())))?;
            parse_labels(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", p.display())))?
        }
        None => Vec::new(),
    };
    let catalog = load_catalog(a.catalog.as_deref())?;
    classify_all(&mut doc.findings, &catalog);
    rd.write_json(FINDINGS_FILE, &doc)?;

    let counts = summarize_with_labels(&doc.findings, &labels);
    let mut per_test: BTreeMap<&str, Vec<Category>> = BTreeMap::new();
    for f in &doc.findings {
        let cats = per_test.entry(f.test_name.as_str()).or_default();
        if let Some(c) = f.category {
            if !cats.contains(&c) {
                cats.push(c);
            }
        }
    }
    rd.write_json(
        CATEGORIES_FILE,
        &json!({
            "counting": "distinct tests per category",
            "decision_order": DECISION_ORDER,
            "counts": counts.iter().map(|(c, n)| (c.to_string(), *n)).collect::<BTreeMap<_, _>>(),
            "heuristic": per_test,
            "manual": labels,
        }),
    )?;
    let mut out = String::from("category  tests\n");
    for (c, n) in &counts {
        let _ = writeln!(out, "{:<8}  {n:>5}", c.to_string());
    }
    print!("{out}");
    Ok(EXIT_CLEAN)
}

fn load_stats(dir: &Path) -> Result<FlakinessStats, CliError> {
    let doc: MatrixDoc = RunDir::open(dir).read_json(MATRIX_FILE)?;
    compute_stats(&doc.to_matrix()).map_err(|e| CliError::Malformed(format!("{}: {e}", dir.display())))
}

fn load_all(dirs: &[PathBuf]) -> Result<Vec<(String, FlakinessStats)>, CliError> {
    dirs.iter()
        .map(|d| Ok((d.display().to_string(), load_stats(d)?)))
        .collect()
}

fn cmd_report(a: ReportArgs) -> CliResult {
    let comparing = !a.baseline.is_empty();
    if !comparing && a.dirs.is_empty() {
        return Err(CliError::Missing("no run directories given".into()));
    }
    if comparing && !a.dirs.is_empty() {
        return Err(CliError::Missing(
            "positional run directories cannot be combined with --baseline/--treated".into(),
        ));
    }
    let (text, doc) = if comparing {
        let base = load_all(&a.baseline)?;
        let treated = load_all(&a.treated)?;
        let bs: Vec<_> = base.iter().map(|(_, s)| s.clone()).collect();
        let ts: Vec<_> = treated.iter().map(|(_, s)| s.clone()).collect();
        let groups = vec![summarize("baseline", &bs), summarize("treated", &ts)];
        let cmp = compare_groups(&bs, &ts).map_err(|e| CliError::Missing(e.to_string()))?;
        let text = format!("{}\n{}", render_table(&groups), render_comparison_table(&cmp));
        let doc = json!({
            "groups": groups,
            "baseline_runs": run_docs(&base),
            "treated_runs": run_docs(&treated),
            "comparison": cmp,
        });
        (text, doc)
    } else {
        let runs = load_all(&a.dirs)?;
        let mut groups: Vec<_> = runs.iter().map(|(l, s)| summarize(l, std::slice::from_ref(s))).collect();
        if runs.len() > 1 {
            let all: Vec<_> = runs.iter().map(|(_, s)| s.clone()).collect();
            groups.push(summarize("all", &all));
        }
        let text = render_table(&groups);
        let doc = json!({"groups": groups, "runs": run_docs(&runs)});
        (text, doc)
    };
    let rendered = match a.format {
        Format::Table => text,
        Format::Doc => {
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
    };
    if let Some(out) = &a.out {
        std::fs::write(out, &rendered).map_err(|e| CliError::Missing(format!("{}: {e}", out.display())))?;
    }
    print!("{rendered}");
    Ok(EXIT_CLEAN)
}

fn run_docs(runs: &[(String, FlakinessStats)]) -> Value {
    Value::Array(
        runs.iter()
            .map(|(dir, s)| json!({"dir": dir, "stats": s}))
            .collect(),
    )
}

fn cmd_serve_mock(a: ServeArgs) -> CliResult {
    let server = MockServer::start(MockConfig {
        port: a.port,
        seed: a.seed,
        deterministic_mode: a.deterministic,
    })
    .map_err(|e| CliError::Transport(e.to_string()))?;
    println!("mock SUT listening on {}", server.base_url());
    server.join();
    Ok(EXIT_CLEAN)
}

fn cmd_fixture(a: FixtureArgs) -> CliResult {
    match &a.out {
        Some(p) => std::fs::write(p, FIXTURE_SUITE).map_err(|e| CliError::Missing(format!("{}: {e}", p.display())))?,
        None => print!("{FIXTURE_SUITE}"),
    }
    Ok(EXIT_CLEAN)
}

fn cmd_corpus(a: CorpusArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.file).map_err(|e| CliError::Missing(format!("{}: {e}", a.file.display())))?;
    let entries: Vec<CorpusEntry> =
        serde_json::from_str(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", a.file.display())))?;
    let catalog = load_catalog(a.catalog.as_deref())?;
    let scores = evaluate_corpus(&entries, &catalog);
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    println!("{:<18} {:>4} {:>4} {:>4} {:>9} {:>6}", "kind", "tp", "fp", "fn", "precision", "recall");
    for (kind, s) in &scores {
        println!(
            "{:<18} {:>4} {:>4} {:>4} {:>9} {:>6}",
            kind.name(),
            s.true_positives,
            s.false_positives,
            s.false_negatives,
            fmt(s.precision),
            fmt(s.recall)
        );
    }
    Ok(EXIT_CLEAN)
}
