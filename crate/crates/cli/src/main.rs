use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::Layer;

/// Rolling-admission chat rooms with a scripted facilitator, plus the
/// attrition analysis that goes with them.
#[derive(Debug, Parser)]
#[command(name = "rollingchat", version, propagate_version = true)]
struct Cli {
    /// TOML settings file; also read from ROLLINGCHAT_CONFIG.
    #[arg(long, global = true, env = "ROLLINGCHAT_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the chat server for one activity until interrupted.
    Serve(ServeArgs),
    /// Generate data: live bots against a server, or a synthetic panel.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Turn event logs into sessions, summary tables and a panel.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Fit the discrete-time attrition model to a panel.
    Fit(FitArgs),
    /// Simulate a course and run the whole analysis on it.
    Demo(DemoArgs),
    /// Inspect resolved settings.
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    host: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    activity: Option<String>,
    /// Facilitation script (TOML); the bundled sample when unset.
    #[arg(long)]
    script: Option<String>,
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Facilitator checks per room second.
    #[arg(long)]
    tick_hz: Option<f64>,
    #[arg(long)]
    handshake_timeout_s: Option<f64>,
    /// 0 for no limit.
    #[arg(long)]
    max_room_size: Option<usize>,
    /// Room seconds per wall second.
    #[arg(long)]
    time_scale: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum SimulateCommand {
    /// Connect simulated students to a running server.
    Bots(BotsArgs),
    /// Draw a person-period panel with known hazard ratios.
    Panel(PanelArgs),
}

#[derive(Debug, Args)]
pub struct BotsArgs {
    /// HOST:PORT of a running server.
    #[arg(long)]
    pub server: String,
    /// Arrivals per minute.
    #[arg(long, default_value_t = 0.5)]
    pub rate: f64,
    /// Room seconds over which arrivals are drawn.
    #[arg(long)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 0.8)]
    pub on_topic_prob: f64,
    /// Mean seconds a bot stays.
    #[arg(long, default_value_t = 600.0)]
    pub session_duration_s: f64,
    /// Mean seconds between a bot's messages.
    #[arg(long, default_value_t = 30.0)]
    pub message_interval_s: f64,
    #[arg(long, default_value_t = 0.0)]
    pub connect_fail_prob: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Must match the server's time scale.
    #[arg(long)]
    time_scale: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    /// TOML panel spec.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// One row per session with its room-size category.
    Sessions(LogArgs),
    /// Time in chat by room size.
    Table2(LogArgs),
    /// Weekly person-period panel.
    Panel(PanelBuildArgs),
    /// One-way ANOVA of time in chat over room sizes.
    Anova(AnovaArgs),
    /// Two-proportion z-test.
    Ztest(ZtestArgs),
}

#[derive(Debug, Args)]
struct LogArgs {
    #[arg(long)]
    log_dir: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PanelBuildArgs {
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// CSV with header ts,student,kind.
    #[arg(long)]
    clicks: PathBuf,
    /// Course start, YYYY-MM-DD or RFC 3339.
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    weeks: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnovaArgs {
    /// sessions.csv from `analyze sessions`.
    #[arg(long)]
    pub sessions: PathBuf,
}

#[derive(Debug, Args)]
pub struct ZtestArgs {
    #[arg(long)]
    pub x1: u64,
    #[arg(long)]
    pub n1: u64,
    #[arg(long)]
    pub x2: u64,
    #[arg(long)]
    pub n2: u64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    panel: PathBuf,
    /// Comma-separated panel columns.
    #[arg(long)]
    predictors: Option<String>,
    /// Adds one indicator per week after the first.
    #[arg(long)]
    week_effects: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "demo-out")]
    out: PathBuf,
    #[arg(long)]
    script: Option<String>,
}

#[derive(Debug, Subcommand)]
enum ConfigCommand {
    /// Print every setting with the layer it came from.
    Show,
}

impl Command {
    /// Settings given as flags, the top layer.
    fn flags(&self) -> Layer {
        match self {
            Command::Serve(a) => Layer {
                host: a.host.clone(),
                port: a.port,
                activity: a.activity.clone(),
                script: a.script.clone(),
                log_dir: a.log_dir.clone(),
                tick_hz: a.tick_hz,
                handshake_timeout_s: a.handshake_timeout_s,
                max_room_size: a.max_room_size,
                time_scale: a.time_scale,
                ..Layer::default()
            },
            Command::Simulate(SimulateCommand::Bots(a)) => {
                Layer { seed: a.seed, time_scale: a.time_scale, ..Layer::default() }
            }
            Command::Analyze(AnalyzeCommand::Sessions(a) | AnalyzeCommand::Table2(a)) => {
                Layer { log_dir: a.log_dir.clone(), ..Layer::default() }
            }
            Command::Analyze(AnalyzeCommand::Panel(a)) => {
                Layer { log_dir: a.log_dir.clone(), start: a.start.clone(), weeks: a.weeks, ..Layer::default() }
            }
            Command::Fit(a) => Layer {
                predictors: a.predictors.clone(),
                week_effects: a.week_effects.then_some(true),
                ..Layer::default()
            },
            Command::Demo(a) => Layer { seed: a.seed, script: a.script.clone(), ..Layer::default() },
            _ => Layer::default(),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (cfg, sources) = config::load(cli.config.as_deref(), &cli.command.flags())?;
    match cli.command {
        Command::Serve(_) => commands::serve(&cfg),
        Command::Simulate(SimulateCommand::Bots(a)) => commands::simulate_bots(&cfg, &a),
        Command::Simulate(SimulateCommand::Panel(a)) => commands::simulate_panel(&a),
        Command::Analyze(AnalyzeCommand::Sessions(a)) => commands::analyze_sessions(&cfg, &a.out),
        Command::Analyze(AnalyzeCommand::Table2(a)) => commands::analyze_table2(&cfg, &a.out),
        Command::Analyze(AnalyzeCommand::Panel(a)) => commands::analyze_panel(&cfg, &a.clicks, &a.out),
        Command::Analyze(AnalyzeCommand::Anova(a)) => commands::analyze_anova(&a),
        Command::Analyze(AnalyzeCommand::Ztest(a)) => commands::analyze_ztest(&a),
        Command::Fit(a) => commands::fit(&cfg, &a.panel, &a.out, a.report.as_deref()),
        Command::Demo(a) => commands::demo(&cfg, &a.out),
        Command::Config(ConfigCommand::Show) => {
            print!("{}", config::render(&cfg, &sources));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "rollingchat=info,rollingchat_server=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
