use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

use super::event::{EventKind, Millis, RoomEvent};

pub const LOG_SUFFIX: &str = ".events.jsonl";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("timestamp went backwards: {got} after {previous}")]
    OrderingViolation { previous: Millis, got: Millis },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("corrupt record at line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
    #[error("log i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl LogError {
    pub(crate) fn protocol(msg: String) -> Self {
        LogError::ProtocolViolation(msg)
    }
}

/// `<dir>/<activity>/<room>.events.jsonl`
pub fn log_path(log_dir: &Path, activity: &str, room: &str) -> PathBuf {
    log_dir.join(activity).join(format!("{room}{LOG_SUFFIX}"))
}

/// Append-only room log. Validates ordering and join/leave pairing before
/// writing, so a log on disk is always well-formed.
#[derive(Debug)]
pub struct EventLog {
    last_ts: Option<Millis>,
    present: BTreeSet<String>,
    len: u64,
    sink: Option<BufWriter<File>>,
}

impl Default for EventLog {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl EventLog {
    pub fn in_memory() -> Self {
        EventLog { last_ts: None, present: BTreeSet::new(), len: 0, sink: None }
    }

    /// Opens (or creates) a log file. Existing records are validated and the
    /// handle continues after them.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<RoomEvent>), LogError> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let existing = if path.exists() { read_log(path)? } else { Vec::new() };
        let mut log = Self::in_memory();
        for ev in &existing {
            log.check(ev)?;
            log.commit(ev);
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        log.sink = Some(BufWriter::new(file));
        Ok((log, existing))
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn present(&self) -> &BTreeSet<String> {
        &self.present
    }

    pub fn last_ts(&self) -> Option<Millis> {
        self.last_ts
    }

    fn check(&self, ev: &RoomEvent) -> Result<(), LogError> {
        if let Some(prev) = self.last_ts {
            if ev.ts < prev {
                return Err(LogError::OrderingViolation { previous: prev, got: ev.ts });
            }
        }
        match ev.kind {
            EventKind::Join if self.present.contains(&ev.actor) => {
                Err(LogError::protocol(format!("{} joined twice", ev.actor)))
            }
            EventKind::Leave if !self.present.contains(&ev.actor) => {
                Err(LogError::protocol(format!("{} left without joining", ev.actor)))
            }
            EventKind::Reset if !self.present.is_empty() => {
                Err(LogError::protocol("reset while participants are present".into()))
            }
            _ => Ok(()),
        }
    }

    fn commit(&mut self, ev: &RoomEvent) {
        match ev.kind {
            EventKind::Join => {
                self.present.insert(ev.actor.clone());
            }
            EventKind::Leave => {
                self.present.remove(&ev.actor);
            }
            _ => {}
        }
        self.last_ts = Some(ev.ts);
        self.len += 1;
    }

    /// Appends one event, returning its zero-based position.
    pub fn append(&mut self, ev: &RoomEvent) -> Result<u64, LogError> {
        self.check(ev)?;
        if let Some(sink) = self.sink.as_mut() {
            sink.write_all(ev.to_line().as_bytes())?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
        let position = self.len;
        self.commit(ev);
        Ok(position)
    }
}

/// Parses a log file; blank lines are skipped, anything else unparseable is
/// reported with its 1-based line number.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<RoomEvent>, LogError> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev =
            RoomEvent::from_line(&line).map_err(|e| LogError::CorruptRecord { line: i + 1, reason: e.to_string() })?;
        events.push(ev);
    }
    Ok(events)
}

pub fn write_log(path: impl AsRef<Path>, events: &[RoomEvent]) -> Result<(), LogError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    for ev in events {
        out.write_all(ev.to_line().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// All `*.events.jsonl` files below `dir`, sorted by path.
pub fn find_logs(dir: impl AsRef<Path>) -> std::io::Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(LOG_SUFFIX)) {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir.as_ref(), &mut out)?;
    out.sort();
    Ok(out)
}
