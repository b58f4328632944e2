use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::AnalyticsError;
use crate::chatcore::{EventKind, Millis, RoomEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Malfunction,
    Alone,
    Pair,
    Group,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Malfunction, Category::Alone, Category::Pair, Category::Group];

    pub fn from_peers(peers: PeerCount) -> Self {
        match peers {
            PeerCount::Malfunction => Category::Malfunction,
            PeerCount::Peers(0) => Category::Alone,
            PeerCount::Peers(1) => Category::Pair,
            PeerCount::Peers(_) => Category::Group,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Result of the peer count for one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerCount {
    /// The click never produced a connection.
    Malfunction,
    Peers(u32),
}

/// Location of one session inside a room log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSpan {
    pub student: String,
    /// Position of the join (or connect_fail) event.
    pub start: usize,
    /// Position of the matching leave; `None` if the log ends first.
    pub end: Option<usize>,
    pub connect_fail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    pub student: String,
    pub room_id: String,
    pub entered_at: Millis,
    pub left_at: Millis,
    pub max_peers: u32,
    pub category: Category,
    /// Seconds; zero for Malfunction.
    pub time_spent: f64,
}

fn malformed(pos: usize, what: impl fmt::Display) -> AnalyticsError {
    AnalyticsError::MalformedSession(format!("event {pos}: {what}"))
}

/// Splits a room log into sessions: one per contiguous presence interval and
/// one per failed connection.
pub fn session_spans(log: &[RoomEvent]) -> Result<Vec<SessionSpan>, AnalyticsError> {
    let mut open: BTreeMap<&str, usize> = BTreeMap::new();
    let mut spans = Vec::new();
    for (pos, ev) in log.iter().enumerate() {
        match ev.kind {
            EventKind::Join => {
                if open.insert(ev.actor.as_str(), spans.len()).is_some() {
                    return Err(malformed(pos, format_args!("{} joined twice", ev.actor)));
                }
                spans.push(SessionSpan { student: ev.actor.clone(), start: pos, end: None, connect_fail: false });
            }
            EventKind::Leave => {
                let idx = open
                    .remove(ev.actor.as_str())
                    .ok_or_else(|| malformed(pos, format_args!("{} left without joining", ev.actor)))?;
                spans[idx].end = Some(pos);
            }
            EventKind::Message if !open.contains_key(ev.actor.as_str()) => {
                return Err(malformed(pos, format_args!("{} posted while absent", ev.actor)));
            }
            EventKind::ConnectFail => {
                let student =
                    ev.payload.student.clone().ok_or_else(|| malformed(pos, "connect_fail without student"))?;
                spans.push(SessionSpan { student, start: pos, end: Some(pos), connect_fail: true });
            }
            _ => {}
        }
    }
    Ok(spans)
}

/// Largest number of other students present at any of the student's own
/// join, leave, or message events during the session.
pub fn max_peers(log: &[RoomEvent], span: &SessionSpan) -> Result<PeerCount, AnalyticsError> {
    if span.connect_fail {
        return match log.get(span.start) {
            Some(ev) if ev.kind == EventKind::ConnectFail => Ok(PeerCount::Malfunction),
            _ => Err(malformed(span.start, "span does not point at a connect_fail")),
        };
    }
    match log.get(span.start) {
        Some(ev) if ev.kind == EventKind::Join && ev.actor == span.student => {}
        _ => return Err(malformed(span.start, "span does not start with the student's join")),
    }
    let last = span.end.unwrap_or(log.len().saturating_sub(1));
    let mut present: BTreeSet<&str> = BTreeSet::new();
    let mut best = 0u32;
    for (pos, ev) in log.iter().enumerate().take(last + 1) {
        let own = ev.actor == span.student && pos >= span.start;
        let counts_here = own && matches!(ev.kind, EventKind::Join | EventKind::Leave | EventKind::Message);
        match ev.kind {
            EventKind::Join => {
                present.insert(ev.actor.as_str());
            }
            EventKind::Leave if !own => {
                present.remove(ev.actor.as_str());
            }
            _ => {}
        }
        if counts_here {
            let others = present.iter().filter(|&&p| p != span.student).count() as u32;
            best = best.max(others);
        }
        if ev.kind == EventKind::Leave && own {
            present.remove(ev.actor.as_str());
        }
    }
    Ok(PeerCount::Peers(best))
}

/// Sessions of one room log, in log order.
pub fn classify_room(log: &[RoomEvent]) -> Result<Vec<SessionFeatures>, AnalyticsError> {
    let spans = session_spans(log)?;
    let room_id = log.first().map(|e| e.room.clone()).unwrap_or_default();
    let log_end = log.last().map_or(0, |e| e.ts);

    // Single sweep: running max per open session.
    let mut peak = vec![0u32; spans.len()];
    let mut open: BTreeMap<&str, usize> = BTreeMap::new();
    let mut next_span = 0usize;
    let mut present: BTreeSet<&str> = BTreeSet::new();
    for (pos, ev) in log.iter().enumerate() {
        while next_span < spans.len() && spans[next_span].start == pos {
            if !spans[next_span].connect_fail {
                open.insert(spans[next_span].student.as_str(), next_span);
            }
            next_span += 1;
        }
        if ev.kind == EventKind::Join {
            present.insert(ev.actor.as_str());
        }
        if matches!(ev.kind, EventKind::Join | EventKind::Leave | EventKind::Message) {
            if let Some(&idx) = open.get(ev.actor.as_str()) {
                let others = present.len() as u32 - u32::from(present.contains(ev.actor.as_str()));
                peak[idx] = peak[idx].max(others);
            }
        }
        if ev.kind == EventKind::Leave {
            present.remove(ev.actor.as_str());
            open.remove(ev.actor.as_str());
        }
    }

    Ok(spans
        .iter()
        .zip(peak)
        .map(|(span, peers)| {
            let entered_at = log[span.start].ts;
            if span.connect_fail {
                return SessionFeatures {
                    student: span.student.clone(),
                    room_id: room_id.clone(),
                    entered_at,
                    left_at: entered_at,
                    max_peers: 0,
                    category: Category::Malfunction,
                    time_spent: 0.0,
                };
            }
            let left_at = span.end.map_or(log_end, |e| log[e].ts);
            SessionFeatures {
                student: span.student.clone(),
                room_id: room_id.clone(),
                entered_at,
                left_at,
                max_peers: peers,
                category: Category::from_peers(PeerCount::Peers(peers)),
                time_spent: (left_at - entered_at) as f64 / 1000.0,
            }
        })
        .collect())
}

/// Sessions over many room logs, ordered by entry time, then room, then student.
pub fn classify_sessions<L: AsRef<[RoomEvent]>>(logs: &[L]) -> Result<Vec<SessionFeatures>, AnalyticsError> {
    let mut all = Vec::new();
    for log in logs {
        all.extend(classify_room(log.as_ref())?);
    }
    all.sort_by(|a, b| (a.entered_at, &a.room_id, &a.student).cmp(&(b.entered_at, &b.room_id, &b.student)));
    Ok(all)
}
