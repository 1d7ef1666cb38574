//! The `accord` command line: batch checking and correction, serving, and
//! profile management.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corrector::{
    correct_tree, diagnose, AutoPolicy, CorrectionReport, Diagnosis, Evaluation, StrictPolicy, Verdict,
};
use crate::deptree::{parse_treebank, serialize_treebank, DepTree};
use crate::lexicon::Lexicon;
use crate::profile::{default_profile, Profile, Strategy, DEFAULT_FILE_NAME};
use crate::service;

/// Exit status for usage errors.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for unreadable input and unresolvable sentences.
pub const EXIT_FAILURE: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "accord", version, about = "Agreement checking and correction over dependency treebanks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Diagnose every sentence without modifying anything.
    Check {
        treebank: PathBuf,
        #[arg(long, env = "ACCORD_LEXICON")]
        lexicon: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Correct every sentence and write the corrected treebank.
    Correct {
        treebank: PathBuf,
        #[arg(long, env = "ACCORD_LEXICON")]
        lexicon: PathBuf,
        /// Answer questions with the best-scoring option. Without it, any
        /// question makes the sentence unresolvable.
        #[arg(long)]
        auto: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Start the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "ACCORD_LEXICON")]
        lexicon: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Show or reset a profile file.
    Profile {
        #[command(subcommand)]
        action: ProfileAction,
    },
}

#[derive(Debug, Subcommand)]
enum ProfileAction {
    Show {
        #[arg(long, default_value = DEFAULT_FILE_NAME)]
        file: PathBuf,
    },
    Reset {
        #[arg(long, default_value = DEFAULT_FILE_NAME)]
        file: PathBuf,
    },
}

/// JSON output of `check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub profile: Profile,
    pub sentences: Vec<Diagnosis>,
}

/// JSON summary of `correct`, written to the error stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectSummary {
    pub sentences: Vec<CorrectionReport>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(message: impl Into<String>) -> Self {
        Failure { code: EXIT_FAILURE, message: message.into() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn load_lexicon(path: &Path) -> Result<Lexicon, Failure> {
    Lexicon::parse(&read(path)?).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn load_treebank(path: &Path) -> Result<Vec<DepTree>, Failure> {
    parse_treebank(&read(path)?).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn load_profile(path: Option<&Path>) -> Result<Profile, Failure> {
    let Some(path) = path else { return Ok(default_profile()) };
    let profile = Profile::from_text(&read(path)?).map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
    profile.validate().map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
    Ok(profile)
}

fn verdict_text(verdict: &Verdict) -> String {
    match verdict {
        Verdict::AlreadyConsistent => "consistent".into(),
        Verdict::AutoCorrect(v) => format!("auto-correct to {}", v.label()),
        Verdict::AskUser => "ask the user".into(),
        Verdict::Unresolvable => "unresolvable".into(),
    }
}

fn members_text(tree: &DepTree, members: &[usize]) -> String {
    members.iter().map(|&m| tree.node(m).surface.as_str()).collect::<Vec<_>>().join(" ")
}

fn write_evaluation(out: &mut String, tree: &DepTree, e: &Evaluation) {
    let _ = writeln!(out, "  {} error in [{}]", e.group.variable, members_text(tree, &e.group.members));
    for (sub, vectors) in e.subgroups.iter().zip(&e.subgroup_vectors) {
        let _ = writeln!(out, "    sub-group [{}]", members_text(tree, &sub.members));
        for v in vectors {
            let _ = writeln!(
                out,
                "      {:<10} a={:.2} b={:.2} c={:.2} d={:.2} sum={:.2} ({:.2}%)",
                v.value.label(),
                v.scores.a,
                v.scores.b,
                v.scores.c,
                v.scores.d,
                v.sum,
                v.percentage
            );
        }
    }
    let totals = e
        .aggregate
        .totals
        .iter()
        .map(|(v, t)| format!("{}={t:.2}", v.label()))
        .collect::<Vec<_>>()
        .join(" ");
    let _ = writeln!(out, "    {} totals: {totals}, margin {:.2}", e.aggregate.strategy, e.aggregate.margin);
    let _ = writeln!(out, "    decision: {}", verdict_text(&e.verdict));
    if let Some(q) = &e.question {
        for line in q.prompt().lines() {
            let _ = writeln!(out, "    {line}");
        }
    }
}

fn check_text(trees: &[DepTree], diagnoses: &[Diagnosis]) -> String {
    let mut out = String::new();
    for (tree, d) in trees.iter().zip(diagnoses) {
        let _ = writeln!(out, "# {}: {}", d.sentence_id, d.text);
        for g in &d.groups {
            let status = if g.check.is_consistent() { "ok" } else { "ERROR" };
            let _ = writeln!(out, "  {} [{}] {status}", g.variable, members_text(tree, &g.members));
        }
        for e in &d.evaluations {
            write_evaluation(&mut out, tree, e);
        }
    }
    out
}

fn check(
    treebank: &Path,
    lexicon: &Path,
    profile: Option<&Path>,
    strategy: Option<Strategy>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<u8, Failure> {
    let lexicon = load_lexicon(lexicon)?;
    let mut profile = load_profile(profile)?;
    if let Some(s) = strategy {
        profile.strategy = s;
    }
    let trees = load_treebank(treebank)?;
    let diagnoses = trees
        .iter()
        .map(|t| diagnose(t, &lexicon, &profile).map_err(|e| Failure::new(format!("{}: {e}", t.sentence_id))))
        .collect::<Result<Vec<_>, _>>()?;
    let unresolvable = diagnoses
        .iter()
        .flat_map(|d| &d.evaluations)
        .any(|e| e.verdict == Verdict::Unresolvable);
    let text = match format {
        Format::Json => {
            let report = CheckReport { profile, sentences: diagnoses };
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        Format::Text => check_text(&trees, &diagnoses),
    };
    stdout.write_all(text.as_bytes()).map_err(|e| Failure::new(e.to_string()))?;
    Ok(if unresolvable { EXIT_FAILURE } else { 0 })
}

fn correct(
    treebank: &Path,
    lexicon: &Path,
    auto: bool,
    output: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<u8, Failure> {
    let lexicon = load_lexicon(lexicon)?;
    let trees = load_treebank(treebank)?;
    let mut profile = default_profile();
    let mut corrected = Vec::new();
    let mut failed = false;
    for tree in &trees {
        let report = if auto {
            correct_tree(tree, &lexicon, &mut profile, &mut AutoPolicy)
        } else {
            correct_tree(tree, &lexicon, &mut profile, &mut StrictPolicy)
        }
        .map_err(|e| Failure::new(format!("{}: {e}", tree.sentence_id)))?;
        let status = if report.converged { "converged" } else { "unresolved" };
        let _ = writeln!(
            stderr,
            "{}: {} -> {} ({status}, {} passes)",
            tree.sentence_id,
            tree.text(),
            report.final_tree.text(),
            report.passes
        );
        failed |= !report.converged;
        corrected.push(report.final_tree);
    }
    let text = serialize_treebank(&corrected);
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::new(format!("{}: {e}", path.display())))?,
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure::new(e.to_string()))?,
    }
    Ok(if failed { EXIT_FAILURE } else { 0 })
}

fn serve(port: u16, lexicon: &Path, profile: Option<&Path>) -> Result<u8, Failure> {
    let lexicon = load_lexicon(lexicon)?;
    let initial = match profile {
        Some(path) if path.exists() => load_profile(Some(path))?,
        _ => default_profile(),
    };
    let state = service::AppState::new(lexicon, initial, profile.map(Path::to_path_buf));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(e.to_string()))?;
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    runtime.block_on(service::serve(addr, state)).map_err(|e| Failure::new(e.to_string()))?;
    Ok(0)
}

fn profile_action(action: &ProfileAction, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8, Failure> {
    match action {
        ProfileAction::Show { file } => {
            let profile = if file.exists() {
                load_profile(Some(file))?
            } else {
                let _ = writeln!(stderr, "{} not found, showing defaults", file.display());
                default_profile()
            };
            stdout.write_all(profile.to_text().as_bytes()).map_err(|e| Failure::new(e.to_string()))?;
        }
        ProfileAction::Reset { file } => {
            std::fs::write(file, default_profile().to_text())
                .map_err(|e| Failure::new(format!("{}: {e}", file.display())))?;
            let _ = writeln!(stderr, "reset {}", file.display());
        }
    }
    Ok(0)
}

/// Runs the command line with explicit output streams; returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
                0
            };
        }
    };
    let result = match &cli.command {
        Command::Check { treebank, lexicon, profile, strategy, format } => {
            check(treebank, lexicon, profile.as_deref(), *strategy, *format, stdout)
        }
        Command::Correct { treebank, lexicon, auto, output } => {
            correct(treebank, lexicon, *auto, output.as_deref(), stdout, stderr)
        }
        Command::Serve { port, lexicon, profile } => serve(*port, lexicon, profile.as_deref()),
        Command::Profile { action } => profile_action(action, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> ExitCode {
    let code = run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
