//! The `cuepath` command line: headless runs, fixture validation, journal
//! replay, reports and the HTTP server. Every command goes through the same
//! engine and store code as the service.

use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use cuepath_core::career::{Session, SessionConfig, UserProfile};
use cuepath_core::driver::{
    parse_script, run_session, DecisionPolicy, RunError, RunOptions, ScriptStep,
};
use cuepath_core::engine::Engine;
use cuepath_core::fixtures::{validate_fixtures, FixtureCheck};
use cuepath_core::ids::SessionId;
use cuepath_core::pipeline::{
    GenerationPolicy, Provider, ProviderKind, RemoteConfig, RemoteProvider, TemplateProvider,
    DEFAULT_API_KEY_ENV,
};
use cuepath_core::report::JourneyReport;
use cuepath_core::resources::ResourceSet;
use cuepath_core::store::{
    parse_journal, replay, Clock, FileStore, LogicalClock, MemoryStore, SessionStore, SystemClock,
};
use serde::Serialize;

const DEFAULT_INTRO: &str = "I am a first-year master's student majoring in HCI.";
const DEFAULT_GOAL: &str = "I hope to become a PhD student in two years.";

#[derive(Debug, Parser)]
#[command(
    name = "cuepath",
    version,
    about = "Career planning played on a pool table"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Event generation backend.
    #[arg(
        long,
        global = true,
        env = "CUEPATH_PROVIDER",
        default_value = "template"
    )]
    pub provider: ProviderKind,
    /// Session seed (rack layout and template generation).
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Directory for journals and snapshots; in-memory when omitted.
    #[arg(long, global = true, env = "CUEPATH_STORE_DIR")]
    pub store_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(flatten)]
    pub remote: RemoteOpts,
}

#[derive(Debug, Clone, Args)]
pub struct RemoteOpts {
    /// Base URL of an OpenAI-compatible chat-completion API.
    #[arg(
        long,
        global = true,
        env = "CUEPATH_REMOTE_URL",
        default_value = "http://127.0.0.1:8000/v1"
    )]
    pub remote_url: String,
    #[arg(
        long,
        global = true,
        env = "CUEPATH_MODEL",
        default_value = "gpt-4o-mini"
    )]
    pub model: String,
    /// Environment variable holding the bearer token.
    #[arg(long, global = true, default_value = DEFAULT_API_KEY_ENV)]
    pub api_key_env: String,
    /// Request timeout in seconds.
    #[arg(long, global = true, default_value_t = 60)]
    pub timeout_secs: u64,
}

impl RemoteOpts {
    pub fn config(&self) -> RemoteConfig {
        RemoteConfig {
            base_url: self.remote_url.clone(),
            model: self.model.clone(),
            api_key_env: self.api_key_env.clone(),
            timeout: Duration::from_secs(self.timeout_secs),
            ..RemoteConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    /// Aim at the most valuable ball through its nearest pocket.
    NearestPocket,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play one session to completion and print its report.
    Run(RunArgs),
    /// Check the shipped fixture and prompt templates.
    ValidateFixtures {
        /// Resource directory to check instead of the compiled-in copies.
        #[arg(long)]
        resources: Option<PathBuf>,
    },
    /// Fold a journal file and print the final snapshot.
    Replay { journal: PathBuf },
    /// Print (generating on first use) the report of a completed stored session.
    Report { session: String },
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// NDJSON script of shots and decisions; the policy continues once it runs out.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Policy::NearestPocket)]
    pub policy: Policy,
    /// How the policy answers direction changes.
    #[arg(long, value_enum, default_value_t = Decisions::Accept)]
    pub decisions: Decisions,
    /// Drag fraction used by the policy.
    #[arg(long, default_value_t = 1.0)]
    pub drag: f64,
    /// Aim noise (radians, standard deviation) for the policy.
    #[arg(long, default_value_t = 0.0)]
    pub aim_noise: f64,
    #[arg(long, default_value = DEFAULT_INTRO)]
    pub intro: String,
    #[arg(long, default_value = DEFAULT_GOAL)]
    pub goal: String,
    /// Start date (YYYY-MM-DD); today when omitted.
    #[arg(long)]
    pub start_date: Option<NaiveDate>,
    /// Session id; `run-<seed>` when omitted.
    #[arg(long)]
    pub session_id: Option<String>,
    /// Also write the journal here.
    #[arg(long)]
    pub journal_out: Option<PathBuf>,
    /// Stamp journal entries with wall-clock time instead of logical time.
    #[arg(long)]
    pub wall_clock: bool,
    #[arg(long)]
    pub no_report: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Decisions {
    Accept,
    Decline,
    Alternate,
}

impl From<Decisions> for DecisionPolicy {
    fn from(d: Decisions) -> Self {
        match d {
            Decisions::Accept => DecisionPolicy::Accept,
            Decisions::Decline => DecisionPolicy::Decline,
            Decisions::Alternate => DecisionPolicy::Alternate,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CUEPATH_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    /// Generate the next round before answering instead of in the background.
    #[arg(long)]
    pub inline_generation: bool,
}

/// Machine-readable outcome of `run`.
#[derive(Debug, Serialize)]
pub struct RunOutput {
    pub session_id: SessionId,
    pub seed: u64,
    pub provider: ProviderKind,
    pub status: String,
    pub completion_reason: Option<String>,
    pub day_elapsed: u32,
    pub milestones_achieved: u32,
    pub shots: u32,
    pub scripted_steps: usize,
    pub journal_entries: u64,
    pub report: Option<JourneyReport>,
}

fn open_store(dir: Option<&Path>) -> Result<Box<dyn SessionStore>> {
    Ok(match dir {
        Some(d) => Box::new(
            FileStore::open(d).with_context(|| format!("opening store at {}", d.display()))?,
        ),
        None => Box::new(MemoryStore::new()),
    })
}

fn provider(global: &GlobalOpts) -> Box<dyn Provider> {
    match global.provider {
        ProviderKind::Template => Box::new(TemplateProvider::new()),
        ProviderKind::Remote => Box::new(RemoteProvider::new(global.remote.config())),
    }
}

fn policy(global: &GlobalOpts) -> GenerationPolicy {
    GenerationPolicy {
        temperature: global.remote.config().temperature,
        ..GenerationPolicy::default()
    }
}

/// Runs a parsed command. Returns the process exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::Run(args) => run(&cli.global, args, out),
        Command::ValidateFixtures { resources } => validate(&cli.global, resources.as_deref(), out),
        Command::Replay { journal } => replay_file(journal, out),
        Command::Report { session } => report(&cli.global, session, out),
        Command::Serve(args) => serve(&cli.global, args),
    }
}

fn run(global: &GlobalOpts, args: &RunArgs, out: &mut dyn Write) -> Result<u8> {
    let script: Vec<ScriptStep> = match &args.script {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_script(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Vec::new(),
    };
    let store = open_store(global.store_dir.as_deref())?;
    let clock: Box<dyn Clock> = if args.wall_clock {
        Box::new(SystemClock)
    } else {
        Box::new(LogicalClock::default())
    };
    let engine = Engine::new(store.as_ref(), clock.as_ref());
    let provider = provider(global);
    let profile = UserProfile {
        intro: args.intro.clone(),
        goal: args.goal.clone(),
        start_date: args
            .start_date
            .unwrap_or_else(|| chrono::Utc::now().date_naive()),
    };
    let id = match &args.session_id {
        Some(s) => SessionId(s.clone()),
        None => SessionId::from_seed(global.seed),
    };
    let config = SessionConfig {
        provider: global.provider,
        ..SessionConfig::default()
    };
    let session = engine
        .create(id.clone(), profile, global.seed, config)
        .context("creating session")?;
    let options = RunOptions {
        generation: policy(global),
        decisions: args.decisions.into(),
        auto_drag: args.drag,
        aim_noise: args.aim_noise,
        noise_seed: global.seed,
        with_report: !args.no_report,
    };
    let result = run_session(&engine, provider.as_ref(), session, &script, &options);
    if let Some(path) = &args.journal_out {
        std::fs::write(path, store.journal_text(&id)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = match result {
        Ok(summary) => summary,
        Err(e) => {
            let seq = match &e {
                RunError::Engine { seq, .. } => format!(" (journal seq {seq})"),
                RunError::Script { .. } => String::new(),
            };
            bail!("run failed{seq}: {e}");
        }
    };
    let s = &summary.session;
    let output = RunOutput {
        session_id: s.id.clone(),
        seed: s.rng_seed,
        provider: s.config.provider,
        status: s.status.to_string(),
        completion_reason: s.completion_reason.map(|r| format!("{r:?}")),
        day_elapsed: s.day_elapsed,
        milestones_achieved: s.milestones_achieved,
        shots: summary.shots,
        scripted_steps: summary.scripted_steps,
        journal_entries: s.journal_len,
        report: summary.report.clone(),
    };
    match global.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&output)?)?,
        Format::Text => {
            writeln!(
                out,
                "session {} ({}): {} after {} shots, day {}/{}, milestones {}/{}",
                output.session_id,
                output.provider,
                output
                    .completion_reason
                    .as_deref()
                    .unwrap_or(&output.status),
                output.shots,
                s.day_elapsed,
                s.config.limits.max_days,
                s.milestones_achieved,
                s.config.limits.max_milestones,
            )?;
            if let Some(report) = &summary.report {
                writeln!(out)?;
                write!(out, "{}", report.to_text())?;
            }
        }
    }
    Ok(0)
}

fn validate(global: &GlobalOpts, dir: Option<&Path>, out: &mut dyn Write) -> Result<u8> {
    let set = match dir {
        Some(d) => ResourceSet::from_dir(d)?,
        None => ResourceSet::embedded(),
    };
    let checks = validate_fixtures(&set);
    let failed = checks.iter().filter(|c| !c.passed).count();
    match global.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&checks)?)?,
        Format::Text => write!(out, "{}", fixture_listing(&checks))?,
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

pub fn fixture_listing(checks: &[FixtureCheck]) -> String {
    let mut text = String::new();
    for c in checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(text, "{mark}  {}", c.name);
        if !c.passed {
            for line in c.detail.lines() {
                let _ = writeln!(text, "      {line}");
            }
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(text, "{} checks, {} failed", checks.len(), failed);
    text
}

/// Folds a journal file into its final session.
pub fn replay_path(path: &Path) -> Result<Session> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let entries =
        parse_journal(&text).map_err(|e| anyhow!("corrupt journal {}: {e}", path.display()))?;
    replay(&entries).map_err(|e| anyhow!("replay of {} failed: {e}", path.display()))
}

fn replay_file(path: &Path, out: &mut dyn Write) -> Result<u8> {
    let session = replay_path(path)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&session)?)?;
    Ok(0)
}

fn report(global: &GlobalOpts, id: &str, out: &mut dyn Write) -> Result<u8> {
    let Some(dir) = &global.store_dir else {
        bail!("report needs --store-dir");
    };
    let store = FileStore::open(dir)?;
    let id = SessionId(id.to_string());
    let (mut session, _) = store.load(&id)?;
    let clock = SystemClock;
    let engine = Engine::new(&store, &clock);
    let provider: Box<dyn Provider> = match session.config.provider {
        ProviderKind::Template => Box::new(TemplateProvider::new()),
        ProviderKind::Remote => Box::new(RemoteProvider::new(global.remote.config())),
    };
    let report = engine.report(&mut session, provider.as_ref(), &policy(global))?;
    match global.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        Format::Text => write!(out, "{}", report.to_text())?,
    }
    Ok(0)
}

fn serve(global: &GlobalOpts, args: &ServeArgs) -> Result<u8> {
    use cuepath_service::{AppState, GenerationMode, ServiceConfig};

    let store: Arc<dyn SessionStore> = match &global.store_dir {
        Some(d) => Arc::new(FileStore::open(d)?),
        None => {
            tracing::warn!("no --store-dir given; sessions are kept in memory only");
            Arc::new(MemoryStore::new())
        }
    };
    let config = ServiceConfig {
        default_provider: global.provider,
        remote: Some(global.remote.config()),
        policy: policy(global),
        mode: if args.inline_generation {
            GenerationMode::Inline
        } else {
            GenerationMode::Background
        },
        ..ServiceConfig::default()
    };
    let state = AppState::new(store, Arc::new(SystemClock), config);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.listen).await?;
        cuepath_service::serve(listener, state).await
    })?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn command_line_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_follow_subcommands() {
        let cli = Cli::try_parse_from([
            "cuepath",
            "run",
            "--seed",
            "9",
            "--format",
            "json",
            "--decisions",
            "alternate",
        ])
        .unwrap();
        assert_eq!(cli.global.seed, 9);
        assert_eq!(cli.global.format, Format::Json);
        assert_eq!(cli.global.provider, ProviderKind::Template);
        let Command::Run(args) = cli.command else {
            panic!("expected run")
        };
        assert_eq!(
            DecisionPolicy::from(args.decisions),
            DecisionPolicy::Alternate
        );
        assert!(Cli::try_parse_from(["cuepath", "run", "--provider", "oracle"]).is_err());
    }

    #[test]
    fn listing_shows_failure_detail() {
        let checks = vec![
            FixtureCheck {
                name: "a".into(),
                passed: true,
                detail: "fine".into(),
            },
            FixtureCheck {
                name: "b".into(),
                passed: false,
                detail: "line one\nline two".into(),
            },
        ];
        let text = fixture_listing(&checks);
        assert_eq!(
            text,
            "PASS  a\nFAIL  b\n      line one\n      line two\n2 checks, 1 failed\n"
        );
    }
}
