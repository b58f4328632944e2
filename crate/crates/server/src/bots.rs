//! Live simulated students: each bot is its own WebSocket client that follows
//! a pre-drawn plan and records every frame it receives.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use rollingchat_core::chatcore::Millis;
use rollingchat_core::simharness::{schedule_bots, text_rng, BotPlan, BotProfile, TextGen};
use serde::{Deserialize, Serialize};
use tokio::task::JoinSet;
use tokio::time::Instant;
use tokio_tungstenite::tungstenite::Message;

use crate::protocol::{ClientFrame, PresenceEvent, Role, ServerFrame};
use crate::ServerError;

#[derive(Debug, Clone)]
pub struct LiveBotConfig {
    pub profile: BotProfile,
    /// `ws://host:port/`
    pub url: String,
    /// Arrivals are drawn over this much room time.
    pub duration_ms: Millis,
    /// Room milliseconds per wall millisecond; must match the server's clock.
    pub time_scale: f64,
    /// How long a bot that never says hello waits for the server to drop it.
    pub silent_wait: Duration,
}

/// One frame as a bot saw it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receipt {
    pub bot: String,
    /// Wall milliseconds since the run started.
    pub received_ms: u64,
    pub frame: ServerFrame,
}

#[derive(Debug, Clone, Default)]
pub struct BotRunReport {
    pub bots: usize,
    pub admitted: usize,
    /// Bots that never completed a hello, on purpose or not.
    pub connect_failures: usize,
    pub receipts: Vec<Receipt>,
    pub violations: Vec<String>,
}

fn client_json(frame: &ClientFrame) -> Message {
    Message::text(serde_json::to_string(frame).expect("frames always serialize"))
}

struct BotOutcome {
    admitted: bool,
    receipts: Vec<Receipt>,
}

async fn run_one(plan: BotPlan, cfg: Arc<LiveBotConfig>, start: Instant) -> BotOutcome {
    let at = |ms: Millis| start + Duration::from_secs_f64(ms.max(0) as f64 / 1000.0 / cfg.time_scale);
    let failed = BotOutcome { admitted: false, receipts: Vec::new() };
    tokio::time::sleep_until(at(plan.arrive_at)).await;
    let url = format!("{}/?student={}", cfg.url.trim_end_matches('/'), plan.name);
    let Ok((ws, _)) = tokio_tungstenite::connect_async(url.as_str()).await else {
        tracing::debug!(bot = %plan.name, "could not connect");
        return failed;
    };
    let (mut sink, mut stream) = ws.split();
    if plan.connect_fail {
        let drained = async { while let Some(Ok(_)) = stream.next().await {} };
        let _ = tokio::time::timeout(cfg.silent_wait, drained).await;
        return failed;
    }
    if sink.send(client_json(&ClientFrame::Hello { name: plan.name.clone() })).await.is_err() {
        return failed;
    }

    let prompt: Arc<Mutex<Option<String>>> = Arc::default();
    let reader_prompt = prompt.clone();
    let bot = plan.name.clone();
    let reader = tokio::spawn(async move {
        let mut receipts = Vec::new();
        while let Some(Ok(msg)) = stream.next().await {
            let Message::Text(text) = msg else { continue };
            let Ok(frame) = serde_json::from_str::<ServerFrame>(&text) else {
                tracing::warn!(%bot, "unparseable frame");
                continue;
            };
            if let ServerFrame::Prompt { text, .. } = &frame {
                *reader_prompt.lock().expect("not poisoned") = Some(text.clone());
            }
            let received_ms = start.elapsed().as_millis() as u64;
            receipts.push(Receipt { bot: bot.clone(), received_ms, frame });
        }
        receipts
    });

    let texts = TextGen::default();
    let mut rng = text_rng(&plan);
    for post in &plan.posts {
        tokio::time::sleep_until(at(post.at)).await;
        let current = prompt.lock().expect("not poisoned").clone();
        let text = texts.compose(&mut rng, current.as_deref(), post.on_topic);
        if sink.send(client_json(&ClientFrame::Post { text })).await.is_err() {
            break;
        }
    }
    tokio::time::sleep_until(at(plan.leave_at)).await;
    let _ = sink.send(client_json(&ClientFrame::Bye)).await;
    let receipts = match tokio::time::timeout(Duration::from_secs(10), reader).await {
        Ok(Ok(r)) => r,
        _ => Vec::new(),
    };
    let admitted = receipts.first().is_some_and(|r| matches!(r.frame, ServerFrame::Welcome { .. }));
    BotOutcome { admitted, receipts }
}

/// Drives bots against a running server. Arrivals follow the profile's
/// Poisson process over `duration_ms` of room time.
pub async fn run_bots(cfg: LiveBotConfig) -> Result<BotRunReport, ServerError> {
    let plans = schedule_bots(&cfg.profile, cfg.duration_ms)?;
    run_plans(plans, cfg).await
}

/// Drives explicit bot plans against a running server.
pub async fn run_plans(plans: Vec<BotPlan>, cfg: LiveBotConfig) -> Result<BotRunReport, ServerError> {
    if !(cfg.time_scale > 0.0 && cfg.time_scale.is_finite()) {
        return Err(ServerError::Config(format!("time scale must be positive, got {}", cfg.time_scale)));
    }
    let n = plans.len();
    let cfg = Arc::new(cfg);
    let start = Instant::now();
    let mut set = JoinSet::new();
    for plan in plans {
        set.spawn(run_one(plan, cfg.clone(), start));
    }
    let mut report = BotRunReport { bots: n, ..Default::default() };
    while let Some(done) = set.join_next().await {
        let outcome = done.map_err(|e| ServerError::Task(e.to_string()))?;
        if outcome.admitted {
            report.admitted += 1;
        } else {
            report.connect_failures += 1;
        }
        report.receipts.extend(outcome.receipts);
    }
    report.receipts.sort_by(|a, b| (a.received_ms, &a.bot).cmp(&(b.received_ms, &b.bot)));
    report.violations = check_receipts(&report.receipts);
    Ok(report)
}

/// Protocol invariants over each bot's receipts: a welcome first, server
/// timestamps never decreasing, presence changes that match up, messages
/// only from present senders, and agent frames marked as such.
pub fn check_receipts(receipts: &[Receipt]) -> Vec<String> {
    let mut by_bot: BTreeMap<&str, Vec<&ServerFrame>> = BTreeMap::new();
    for r in receipts {
        by_bot.entry(&r.bot).or_default().push(&r.frame);
    }
    let mut bad = Vec::new();
    for (bot, frames) in by_bot {
        let mut v = |m: String| bad.push(format!("{bot}: {m}"));
        let Some(ServerFrame::Welcome { participants, .. }) = frames.first() else {
            v("first frame is not a welcome".into());
            continue;
        };
        let mut present: BTreeSet<&str> = participants.iter().map(String::as_str).collect();
        let mut last_ts = Millis::MIN;
        for (i, f) in frames.iter().enumerate() {
            if f.ts() < last_ts {
                v(format!("frame {i}: ts {} after {last_ts}", f.ts()));
            }
            last_ts = last_ts.max(f.ts());
            match f {
                ServerFrame::Welcome { .. } if i > 0 => v(format!("frame {i}: second welcome")),
                ServerFrame::Presence { event, name, count, .. } => {
                    let ok = match event {
                        PresenceEvent::Join => present.insert(name),
                        PresenceEvent::Leave => present.remove(name.as_str()),
                    };
                    if !ok {
                        v(format!("frame {i}: unmatched {event:?} for {name}"));
                    }
                    if *count != present.len() {
                        v(format!("frame {i}: count {count} but {} present", present.len()));
                    }
                }
                ServerFrame::Message { sender, role, .. } => {
                    if *role != Role::Student || !present.contains(sender.as_str()) {
                        v(format!("frame {i}: message from {sender} ({role:?}) who is not present"));
                    }
                }
                ServerFrame::Prompt { role, .. }
                | ServerFrame::Poke { role, .. }
                | ServerFrame::SummaryRequest { role, .. }
                | ServerFrame::Summary { role, .. }
                    if *role != Role::Agent =>
                {
                    v(format!("frame {i}: agent frame with role {role:?}"));
                }
                _ => {}
            }
        }
    }
    bad
}

pub fn write_receipts(path: impl AsRef<Path>, receipts: &[Receipt]) -> std::io::Result<()> {
    let mut out = String::new();
    for r in receipts {
        out.push_str(&serde_json::to_string(r).expect("receipts always serialize"));
        out.push('\n');
    }
    if let Some(dir) = path.as_ref().parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(bot: &str, frame: ServerFrame) -> Receipt {
        Receipt { bot: bot.into(), received_ms: 0, frame }
    }

    #[test]
    fn receipt_checks() {
        let welcome =
            ServerFrame::Welcome { ts: 1, room: "main".into(), name: "a".into(), participants: vec!["a".into()] };
        let good = vec![
            r("a", welcome.clone()),
            r("a", ServerFrame::Presence { ts: 2, event: PresenceEvent::Join, name: "b".into(), count: 2 }),
            r("a", ServerFrame::Message { ts: 3, sender: "b".into(), role: Role::Student, text: "hi".into() }),
        ];
        assert!(check_receipts(&good).is_empty());
        let bad = vec![
            r("a", welcome),
            r("a", ServerFrame::Presence { ts: 2, event: PresenceEvent::Leave, name: "b".into(), count: 1 }),
            r("a", ServerFrame::Message { ts: 1, sender: "c".into(), role: Role::Student, text: "hi".into() }),
        ];
        assert_eq!(check_receipts(&bad).len(), 3);
    }
}
