//! JSON Lines trial logs, one record per line, schema version 1.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crossrays_core::geom::Vec3;
use crossrays_core::tasks::{TaskKind, TrialEvent, TrialRecord, TrialSpec};
use crossrays_core::techniques::TechniqueKind;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported schema version {version}")]
    Version { line: usize, version: u32 },
}

/// Wire form of a [`TrialRecord`]. `selection` and `error_distance_m` are
/// required keys that hold `null` for timed-out trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub v: u32,
    pub participant: u32,
    pub task: TaskKind,
    pub technique: TechniqueKind,
    pub distance_m: f64,
    pub yaw_side: i8,
    pub target: [f64; 3],
    #[serde(deserialize_with = "Option::deserialize")]
    pub selection: Option<[f64; 3]>,
    pub selection_time_s: f64,
    #[serde(deserialize_with = "Option::deserialize")]
    pub error_distance_m: Option<f64>,
    pub clicks: u32,
    pub timeout: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<TrialEvent>>,
    /// Repeat index within the cell; not required by readers.
    #[serde(default)]
    pub repeat: u8,
}

impl From<&TrialRecord> for LogLine {
    fn from(r: &TrialRecord) -> Self {
        Self {
            v: SCHEMA_VERSION,
            participant: r.participant,
            task: r.spec.task,
            technique: r.spec.technique,
            distance_m: r.spec.distance,
            yaw_side: r.spec.yaw_side,
            target: r.spec.target.to_array(),
            selection: r.selection.map(Vec3::to_array),
            selection_time_s: r.selection_time,
            error_distance_m: r.error_distance,
            clicks: r.clicks,
            timeout: r.timeout,
            seed: r.seed,
            events: Some(r.events.clone()),
            repeat: r.spec.repeat_index,
        }
    }
}

impl From<LogLine> for TrialRecord {
    fn from(l: LogLine) -> Self {
        TrialRecord {
            spec: TrialSpec {
                task: l.task,
                technique: l.technique,
                distance: l.distance_m,
                yaw_side: l.yaw_side,
                target: l.target.into(),
                repeat_index: l.repeat,
            },
            participant: l.participant,
            selection: l.selection.map(Into::into),
            selection_time: l.selection_time_s,
            error_distance: l.error_distance_m,
            clicks: l.clicks,
            timeout: l.timeout,
            seed: l.seed,
            events: l.events.unwrap_or_default(),
        }
    }
}

pub fn to_line(record: &TrialRecord) -> String {
    serde_json::to_string(&LogLine::from(record)).expect("log lines always serialize")
}

pub fn parse_line(text: &str, line: usize) -> Result<TrialRecord, LogError> {
    let l: LogLine =
        serde_json::from_str(text).map_err(|e| LogError::Parse { line, message: strip_position(&e.to_string()) })?;
    if l.v != SCHEMA_VERSION {
        return Err(LogError::Version { line, version: l.v });
    }
    Ok(l.into())
}

/// serde_json appends "at line 1 column N" relative to the single line;
/// the file line is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Buffered appender. Each record is written as one complete line.
pub struct LogWriter<W: Write> {
    out: W,
}

impl LogWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }

    pub fn append_to(path: &Path) -> io::Result<Self> {
        let f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::new(BufWriter::new(f)))
    }
}

impl<W: Write> LogWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, record: &TrialRecord) -> io::Result<()> {
        let mut s = to_line(record);
        s.push('\n');
        self.out.write_all(s.as_bytes())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn write_log(path: &Path, records: &[TrialRecord]) -> io::Result<()> {
    let mut w = LogWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.flush()
}

/// Reads every record; blank lines are skipped. Line numbers are 1-based.
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<TrialRecord>, LogError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, i + 1)?);
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<Vec<TrialRecord>, LogError> {
    read_records(BufReader::new(File::open(path)?))
}
