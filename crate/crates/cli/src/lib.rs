//! `sqlgrade` command line: batch grading, inspection commands and the
//! learning-mode HTTP service.
//!
//! Exit codes: 0 success, 1 usage error (or "not equivalent" from `equiv`),
//! 2 input error, 3 some search in a batch ran out of budget.

pub mod server;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use sqlgrade_core::canon::{build_flat_tree, canonicalize_full, canonicalize_syntactic};
use sqlgrade_core::distance::{canonicalized_edit_distance, marks_from_distance, total_marks, ComponentWeights};
use sqlgrade_core::flat::FlatTree;
use sqlgrade_core::grader::{grade_batch, load_assignments, load_submissions, PreparedAssignment};
use sqlgrade_core::rational::{self, Rational};
use sqlgrade_core::schema::Schema;
use sqlgrade_core::search::Mode;
use sqlgrade_core::sql::{parse, resolve};

#[derive(Parser, Debug)]
#[command(name = "sqlgrade", version, about = "Partial-credit grading of SQL queries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Grade a batch of submissions and write a JSON report.
    Grade(GradeArgs),
    /// Print the canonical form of a query.
    Canonicalize(CanonArgs),
    /// Print the component-weighted distance between two queries.
    Diff(PairArgs),
    /// Exit 0 when two queries have the same canonical form, 1 otherwise.
    Equiv(PairArgs),
    /// Serve learning-mode feedback over HTTP.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct GradeArgs {
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub assignment: PathBuf,
    #[arg(long)]
    pub submissions: PathBuf,
    /// Report path; `-` writes to standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Override the search mode of every question.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Override the time budget of every search, in milliseconds.
    #[arg(long)]
    pub budget_ms: Option<u64>,
    /// Override the state budget of every search.
    #[arg(long)]
    pub max_states: Option<usize>,
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CanonArgs {
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    pub query: Option<String>,
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Also list every rule application.
    #[arg(long)]
    pub trace: bool,
    /// Apply only the syntactic rules.
    #[arg(long)]
    pub syntactic_only: bool,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    #[arg(long)]
    pub schema: PathBuf,
    /// Student-side query.
    #[arg(long)]
    pub query_a: String,
    /// Correct-side query.
    #[arg(long)]
    pub query_b: String,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub assignment: Vec<PathBuf>,
    /// Search budget per request, in milliseconds.
    #[arg(long, default_value_t = 2000)]
    pub budget_ms: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Engine(#[from] sqlgrade_core::Error),
    #[error("server failed: {0}")]
    Server(std::io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn load_schema(path: &Path) -> Result<Schema, CliError> {
    Ok(Schema::load(&read(path)?)?)
}

fn tree(sql: &str, schema: &Schema) -> Result<FlatTree, CliError> {
    Ok(build_flat_tree(&resolve(&parse(sql)?, schema)?, schema)?)
}

fn full(sql: &str, schema: &Schema) -> Result<FlatTree, CliError> {
    Ok(canonicalize_full(&tree(sql, schema)?, schema)?.0)
}

/// Parse `args` and run the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cmd: Command) -> Result<i32, CliError> {
    let mut out = std::io::stdout().lock();
    match cmd {
        Command::Grade(a) => grade(a, &mut out),
        Command::Canonicalize(a) => {
            let schema = load_schema(&a.schema)?;
            let sql = match (&a.query, &a.file) {
                (Some(q), _) => q.clone(),
                (None, Some(f)) => read(f)?,
                (None, None) => unreachable!("clap requires one of --query and --file"),
            };
            let t = tree(&sql, &schema)?;
            let (c, trace) = if a.syntactic_only {
                canonicalize_syntactic(&t, &schema)?
            } else {
                canonicalize_full(&t, &schema)?
            };
            if a.trace {
                let _ = write!(out, "{trace}");
            }
            let _ = writeln!(out, "{}", c.serialize());
            Ok(0)
        }
        Command::Diff(a) => {
            let schema = load_schema(&a.schema)?;
            let (sq, cq) = (full(&a.query_a, &schema)?, full(&a.query_b, &schema)?);
            let w = ComponentWeights::default();
            let d = canonicalized_edit_distance(&sq, &cq, &w);
            let t = total_marks(&cq, &w)?;
            let m = marks_from_distance(&sq, &cq, &w, Rational::from_integer(1))?;
            let _ = writeln!(out, "{d}");
            let _ = writeln!(out, "total marks {}, marks from distance {}", rational::to_string(&t), rational::to_string(&m));
            Ok(0)
        }
        Command::Equiv(a) => {
            let schema = load_schema(&a.schema)?;
            let same = full(&a.query_a, &schema)? == full(&a.query_b, &schema)?;
            let _ = writeln!(out, "{}", if same { "equivalent" } else { "not equivalent" });
            Ok(if same { 0 } else { 1 })
        }
        Command::Serve(a) => serve(a),
    }
}

fn grade(a: GradeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let schema = load_schema(&a.schema)?;
    let mut prepared = Vec::new();
    for mut q in load_assignments(&read(&a.assignment)?)? {
        if let Some(m) = a.mode {
            q.mode = m;
        }
        if let Some(ms) = a.budget_ms {
            q.budget.time_ms = Some(ms);
        }
        if let Some(n) = a.max_states {
            q.budget.max_states = Some(n);
        }
        prepared.push(PreparedAssignment::new(q, &schema)?);
    }
    let subs = load_submissions(&read(&a.submissions)?)?;
    let threads = a
        .parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = grade_batch(&subs, &prepared, &schema, threads)?;
    let json = report.to_json();
    if a.out.as_os_str() == "-" {
        let _ = writeln!(out, "{json}");
    } else {
        std::fs::write(&a.out, json + "\n").map_err(|source| CliError::Write {
            path: a.out.clone(),
            source,
        })?;
    }
    let s = &report.stats;
    eprintln!(
        "graded {} submissions: {} matched, {} rejected, {} over budget",
        s.submissions, s.matched, s.rejected, s.budget_exceeded
    );
    Ok(if s.budget_exceeded > 0 { 3 } else { 0 })
}

fn serve(a: ServeArgs) -> Result<i32, CliError> {
    let schema = load_schema(&a.schema)?;
    let mut questions = Vec::new();
    for path in &a.assignment {
        for q in load_assignments(&read(path)?)? {
            questions.push(PreparedAssignment::new(q, &schema)?);
        }
    }
    let mut service = server::Service::new(schema, questions);
    service.budget.time = Duration::from_millis(a.budget_ms);
    let app = server::router(service);
    let rt = tokio::runtime::Runtime::new().map_err(CliError::Server)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.bind.as_str(), a.port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await
    })
    .map_err(CliError::Server)?;
    Ok(0)
}
