use std::net::{SocketAddr, ToSocketAddrs};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rollingchat_core::analytics::{
    build_panel, classify_sessions, group_time_stats, load_room_logs, parse_start, read_clicks, read_sessions,
    two_proportion_ztest, write_panel, write_sessions, write_table2,
};
use rollingchat_core::chatcore::FacilitationScript;
use rollingchat_core::pipeline::{run_demo, time_anova_text};
use rollingchat_core::simharness::{gen_panel, BotProfile, SyntheticPanelSpec};
use rollingchat_core::survival::{self, report_table, write_fit_csv, FitOptions};
use rollingchat_server::bots::{run_bots, write_receipts, LiveBotConfig};
use rollingchat_server::{Clock, ScaledClock, ServerConfig, SystemClock};

use crate::config::Config;
use crate::{AnovaArgs, BotsArgs, PanelArgs, ZtestArgs};

fn load_script(cfg: &Config) -> Result<FacilitationScript> {
    if cfg.script.is_empty() {
        return Ok(FacilitationScript::sample());
    }
    FacilitationScript::load(&cfg.script).with_context(|| format!("loading script {}", cfg.script))
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().context("starting async runtime")
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive, got {v}");
    }
    Ok(v)
}

pub fn serve(cfg: &Config) -> Result<()> {
    let bind: SocketAddr = (cfg.host.as_str(), cfg.port)
        .to_socket_addrs()
        .with_context(|| format!("resolving {}:{}", cfg.host, cfg.port))?
        .next()
        .with_context(|| format!("no address for {}", cfg.host))?;
    let mut server = ServerConfig::new(bind, &cfg.activity, load_script(cfg)?, cfg.log_dir.clone());
    server.tick_hz = cfg.tick_hz;
    server.handshake_timeout = Duration::from_secs_f64(positive("handshake_timeout_s", cfg.handshake_timeout_s)?);
    server.max_room_size = (cfg.max_room_size > 0).then_some(cfg.max_room_size);
    let scale = positive("time_scale", cfg.time_scale)?;
    let clock: Arc<dyn Clock> =
        if scale == 1.0 { Arc::new(SystemClock::default()) } else { Arc::new(ScaledClock::new(scale)) };

    runtime()?.block_on(async move {
        let handle = rollingchat_server::start(server, clock).await?;
        println!("listening on {}", handle.url());
        tokio::signal::ctrl_c().await.context("waiting for interrupt")?;
        tracing::info!("shutting down");
        handle.shutdown().await?;
        Ok(())
    })
}

pub fn simulate_bots(cfg: &Config, a: &BotsArgs) -> Result<()> {
    let profile = BotProfile {
        arrival_rate: a.rate,
        session_duration: a.session_duration_s,
        on_topic_prob: a.on_topic_prob,
        message_interval: a.message_interval_s,
        connect_fail_prob: a.connect_fail_prob,
        seed: cfg.seed,
    };
    let duration_ms = (positive("duration_s", a.duration_s)? * 1000.0).round() as i64;
    let time_scale = positive("time_scale", cfg.time_scale)?;
    let url = if a.server.contains("://") { a.server.clone() } else { format!("ws://{}", a.server) };
    let bot_cfg = LiveBotConfig {
        profile,
        url,
        duration_ms,
        time_scale,
        silent_wait: Duration::from_secs_f64((cfg.handshake_timeout_s + 5.0).max(1.0)),
    };
    let report = runtime()?.block_on(run_bots(bot_cfg))?;
    write_receipts(&a.out, &report.receipts).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "bots: {}  admitted: {}  never connected: {}  frames received: {}",
        report.bots,
        report.admitted,
        report.connect_failures,
        report.receipts.len()
    );
    if !report.violations.is_empty() {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        bail!("{} protocol violations", report.violations.len());
    }
    Ok(())
}

pub fn simulate_panel(a: &PanelArgs) -> Result<()> {
    let spec = SyntheticPanelSpec::load(&a.spec)?;
    let panel = gen_panel(&spec)?;
    write_panel(&a.out, &panel)?;
    let drops = panel.iter().filter(|r| r.drop == 1).count();
    println!("{} person-periods, {} drops -> {}", panel.len(), drops, a.out.display());
    Ok(())
}

fn sessions_from_logs(cfg: &Config) -> Result<Vec<rollingchat_core::analytics::SessionFeatures>> {
    let logs = load_room_logs(&cfg.log_dir).with_context(|| format!("reading logs under {}", cfg.log_dir.display()))?;
    Ok(classify_sessions(&logs)?)
}

pub fn analyze_sessions(cfg: &Config, out: &Path) -> Result<()> {
    let sessions = sessions_from_logs(cfg)?;
    write_sessions(out, &sessions)?;
    println!("{} sessions -> {}", sessions.len(), out.display());
    Ok(())
}

pub fn analyze_table2(cfg: &Config, out: &Path) -> Result<()> {
    let stats = group_time_stats(&sessions_from_logs(cfg)?)?;
    write_table2(out, &stats)?;
    println!("{} groups -> {}", stats.len(), out.display());
    Ok(())
}

pub fn analyze_panel(cfg: &Config, clicks: &Path, out: &Path) -> Result<()> {
    let sessions = sessions_from_logs(cfg)?;
    let clicks = read_clicks(clicks).with_context(|| format!("reading {}", clicks.display()))?;
    let panel = build_panel(&sessions, &clicks, parse_start(&cfg.start)?, cfg.weeks)?;
    write_panel(out, &panel)?;
    println!("{} person-periods -> {}", panel.len(), out.display());
    Ok(())
}

pub fn analyze_anova(a: &AnovaArgs) -> Result<()> {
    let sessions = read_sessions(&a.sessions).with_context(|| format!("reading {}", a.sessions.display()))?;
    print!("{}", time_anova_text(&sessions));
    Ok(())
}

pub fn analyze_ztest(a: &ZtestArgs) -> Result<()> {
    let t = two_proportion_ztest(a.x1, a.n1, a.x2, a.n2)?;
    println!("z = {:.4}, two-sided p = {:.4}", t.z, t.p_two_sided);
    Ok(())
}

pub fn fit(cfg: &Config, panel: &Path, out: &Path, report: Option<&Path>) -> Result<()> {
    let rows =
        rollingchat_core::analytics::read_panel(panel).with_context(|| format!("reading {}", panel.display()))?;
    let predictors: Vec<&str> = cfg.predictors.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let opts = FitOptions { week_effects: cfg.week_effects, ..FitOptions::default() };
    let fitted = survival::fit(&rows, &predictors, &opts)?;
    write_fit_csv(out, &fitted)?;
    let table = report_table(&fitted);
    if let Some(path) = report {
        std::fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{table}");
    if !fitted.converged {
        eprintln!("warning: did not converge after {} iterations", fitted.iterations);
    }
    if fitted.ridge_penalized {
        eprintln!("warning: separation detected; estimates carry a small ridge penalty");
    }
    Ok(())
}

pub fn demo(cfg: &Config, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let done = run_demo(cfg.seed, out, &load_script(cfg)?)?;
    println!(
        "{} sessions, {} person-periods, {} drops; outputs in {}",
        done.sessions,
        done.panel_rows,
        done.fit.n_events,
        done.dir.display()
    );
    print!("{}", done.table1);
    Ok(())
}
