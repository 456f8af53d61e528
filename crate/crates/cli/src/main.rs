use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use enflo_core::{Budget, SpaceSpec};
use serde_json::{json, Map, Value as Json};

mod commands;

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Parser, Debug)]
#[command(name = "enflo", version, about = "Constructions and verifications on modified Enflo spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spec parameters, segment counts and group size.
    Space {
        #[command(subcommand)]
        what: SpaceCommand,
    },
    /// Run one verification and emit a JSON report.
    Verify { target: Target },
    /// Enflo ratio certificate and empirical moduli for one embedding.
    Certify {
        /// circle, coordinate, random, or a CSV table path.
        #[arg(long, default_value = "circle")]
        embedding: String,
    },
    /// Edge lists of the unit-distance graph or its BFS tree.
    Export { what: ExportTarget },
}

#[derive(Subcommand, Debug)]
enum SpaceCommand {
    Info,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Target {
    Prop1,
    Prop2,
    Prop3,
    Chain,
    Orbit,
    Graph,
    Group,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ExportTarget {
    Graph,
    Tree,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Standard family: q = 2^(n+1), d = 2n^n, p = n, L = n-1.
    #[arg(long, global = true, conflicts_with_all = ["q", "d", "p", "levels"])]
    pub n: Option<u64>,
    #[arg(long, global = true, requires_all = ["d", "p", "levels"])]
    pub q: Option<u64>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub p: Option<usize>,
    #[arg(long = "L", global = true)]
    pub levels: Option<u32>,
    /// Segment or simplex level; defaults depend on the command.
    #[arg(long, global = true)]
    pub m: Option<u32>,
    #[arg(long, global = true, value_enum, default_value = "exact")]
    pub mode: Mode,
    /// Shorthand for `--mode exact`.
    #[arg(long, global = true)]
    pub exact: bool,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Samples per estimate in sampled mode.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, global = true, default_value_t = 100)]
    pub maps: usize,
    /// Sampled vertex pairs for the unit-distance graph in `verify group`.
    #[arg(long, global = true, default_value_t = 200)]
    pub pairs: usize,
    #[arg(long, global = true, env = "ENFLO_BUDGET_POINTS", default_value_t = 100_000)]
    pub budget_points: u64,
    /// Word-length search radius for `verify group`; defaults to q/2 + 2.
    #[arg(long, global = true)]
    pub budget_word: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Drop the timestamp and timings so reports are byte-reproducible.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

impl RunArgs {
    /// `--n`, or all of `--q --d --p --L`, or the smallest useful spec (8, 2, 2, 1).
    pub fn spec(&self) -> enflo_core::Result<SpaceSpec> {
        match (self.n, self.q, self.d, self.p, self.levels) {
            (Some(n), ..) => SpaceSpec::standard(n),
            (None, Some(q), Some(d), Some(p), Some(l)) => SpaceSpec::custom(q, d, p, l),
            _ => SpaceSpec::custom(8, 2, 2, 1),
        }
    }

    pub fn mode(&self) -> Mode {
        if self.exact {
            Mode::Exact
        } else {
            self.mode
        }
    }

    pub fn budget(&self) -> Budget {
        Budget::default().with_max_points(self.budget_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Degenerate,
    Illustration,
}

impl Outcome {
    fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Degenerate => "degenerate",
            Outcome::Illustration => "illustration",
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// One named check in a report.
pub fn check(name: impl Into<String>, pass: bool, detail: Json) -> Json {
    json!({ "name": name.into(), "pass": pass, "detail": detail })
}

/// What a command hands back before the envelope is added.
pub struct Report {
    pub outcome: Outcome,
    pub checks: Vec<Json>,
    pub body: Json,
    /// Mean-table rows for `--format csv`.
    pub csv: Option<String>,
}

pub fn parameters(spec: &SpaceSpec, run: &RunArgs) -> Json {
    json!({
        "n": run.n,
        "q": spec.q,
        "d": spec.d,
        "p": spec.p,
        "L": spec.levels,
        "supports": (0..=spec.levels).map(|m| spec.support(m)).collect::<Vec<_>>(),
        "steps": (0..=spec.levels).map(|m| spec.step(m)).collect::<Vec<_>>(),
    })
}

fn command_name(cmd: &Command) -> String {
    match cmd {
        Command::Space { .. } => "space info".into(),
        Command::Verify { target } => format!("verify {}", target.to_possible_value().unwrap().get_name()),
        Command::Certify { .. } => "certify".into(),
        Command::Export { what } => format!("export {}", what.to_possible_value().unwrap().get_name()),
    }
}

fn emit(run: &RunArgs, text: &str) -> std::io::Result<()> {
    match &run.out {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn execute(cli: &Cli) -> anyhow::Result<ExitCode> {
    let run = &cli.run;
    let spec = run.spec()?;
    if let Command::Export { what } = cli.command {
        let text = commands::export(&spec, run, matches!(what, ExportTarget::Tree))?;
        emit(run, &text)?;
        return Ok(ExitCode::SUCCESS);
    }
    let started = Instant::now();
    let report = match &cli.command {
        Command::Space { what: SpaceCommand::Info } => commands::space_info(&spec, run)?,
        Command::Verify { target } => commands::verify(*target, &spec, run)?,
        Command::Certify { embedding } => commands::certify(embedding, &spec, run)?,
        Command::Export { .. } => unreachable!(),
    };
    let elapsed = started.elapsed();

    let text = match run.format {
        Format::Csv => match &report.csv {
            Some(csv) => csv.clone(),
            None => anyhow::bail!(UsageError("--format csv is only available for mean tables (verify chain)".into())),
        },
        Format::Json => {
            let mut envelope = Map::new();
            envelope.insert("schema_version".into(), json!(SCHEMA_VERSION));
            envelope.insert("command".into(), json!(command_name(&cli.command)));
            envelope.insert("mode".into(), json!(if run.mode() == Mode::Exact { "exact" } else { "sampled" }));
            envelope.insert("parameters".into(), parameters(&spec, run));
            envelope.insert("seed".into(), json!(run.seed));
            envelope.insert("outcome".into(), json!(report.outcome.as_str()));
            envelope.insert("checks".into(), Json::Array(report.checks));
            envelope.insert("report".into(), report.body);
            if !run.no_timestamp {
                envelope.insert("timings".into(), json!({ "total_ms": elapsed.as_secs_f64() * 1e3 }));
                let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                envelope.insert("timestamp".into(), json!(now));
            }
            let mut text = serde_json::to_string_pretty(&Json::Object(envelope))?;
            text.push('\n');
            text
        }
    };
    emit(run, &text)?;
    Ok(match report.outcome {
        Outcome::Fail => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

/// Configuration problems that are not library errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
