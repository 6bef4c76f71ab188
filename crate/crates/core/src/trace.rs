//! Line-delimited JSON episode traces.
//!
//! Every line is one [`TraceRecord`]. Records carry simulation time only, so
//! a re-run with the same seed and configuration writes identical bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assigner::{LateralGoal, TaskCommand};
use crate::error::{Error, Result};
use crate::ocp::ControlInput;
use crate::planner::{PlanOutput, PlannerFeedback};
use crate::sim::{EgoState, Road, Vehicle, VehicleGeometry};
use crate::switcher::SwitchMode;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub schema_version: u32,
    pub step: usize,
    /// Simulation time [s].
    pub time: f64,
    #[serde(flatten)]
    pub payload: Payload,
}

impl TraceRecord {
    pub fn new(step: usize, time: f64, payload: Payload) -> Self {
        Self { schema_version: SCHEMA_VERSION, step, time, payload }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    World(WorldRecord),
    Switch(SwitchRecord),
    Plan(PlanRecord),
    Solve(SolveRecord),
    Event(EventRecord),
}

/// World state after the step's input was applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldRecord {
    pub ego: EgoState,
    pub vehicles: Vec<Vehicle>,
    /// Lateral goal of the controller that produced the step's input, when
    /// that controller pursues it directly (not through an intermediate OCP).
    pub executing: Option<LateralGoal>,
    pub input: ControlInput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub mode: SwitchMode,
    pub is_rejected: bool,
    /// Feasibility of the target OCP at switch time.
    pub feasible: bool,
    pub violated: Vec<String>,
    pub target: String,
    pub solved: String,
    pub n_iocp: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub command: TaskCommand,
    /// Goal the command resolved to; `None` if it could not be applied.
    pub goal: Option<LateralGoal>,
    pub feedback: Option<PlannerFeedback>,
    pub output: PlanOutput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub ocp: String,
    pub provenance: Vec<String>,
    pub is_iocp: bool,
    pub input: ControlInput,
    pub cost: f64,
    pub warm_start_cost: f64,
    /// Largest value of each hard inequality over the planned trajectory.
    pub margins: Vec<Margin>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub label: String,
    pub max_g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventRecord {
    EpisodeStart(EpisodeHeader),
    Collision { vehicle: usize },
    EpisodeEnd { success: bool, travel: f64 },
    Error { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub pipeline: String,
    pub seed: u64,
    pub road: Road,
    pub geometry: VehicleGeometry,
    pub d_safe_acc: f64,
    pub lane_tolerance: f64,
    pub ego: EgoState,
    pub vehicles: Vec<Vehicle>,
}

/// Appends records to a trace file.
pub struct TraceWriter<W: Write> {
    out: W,
    last_step: Option<usize>,
}

impl TraceWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, last_step: None }
    }

    pub fn write(&mut self, rec: &TraceRecord) -> Result<()> {
        if self.last_step.is_some_and(|s| rec.step < s) {
            return Err(Error::MalformedTrace(format!("step {} after step {:?}", rec.step, self.last_step)));
        }
        self.last_step = Some(rec.step);
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Serializes records to the exact bytes a [`TraceWriter`] produces.
pub fn to_bytes(records: &[TraceRecord]) -> Result<Vec<u8>> {
    let mut w = TraceWriter::new(Vec::new());
    for r in records {
        w.write(r)?;
    }
    Ok(w.into_inner())
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let mut w = TraceWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.flush()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceRead {
    pub records: Vec<TraceRecord>,
    pub warnings: Vec<String>,
}

fn parse_line(line: &str, lineno: usize) -> Result<TraceRecord> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| Error::TraceSchema { line: lineno, reason: e.to_string() })?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(Error::TraceSchema { line: lineno, reason: format!("unknown schema version {v}") }),
        None => return Err(Error::TraceSchema { line: lineno, reason: "missing schema_version".into() }),
    }
    serde_json::from_value(value).map_err(|e| Error::TraceSchema { line: lineno, reason: e.to_string() })
}

type Numbered = (Vec<(usize, TraceRecord)>, Vec<String>);

fn read_numbered(reader: impl BufRead) -> Result<Numbered> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut lines = Vec::new();
    let mut reader = reader;
    loop {
        let mut buf = String::new();
        if reader.read_line(&mut buf)? == 0 {
            break;
        }
        lines.push(buf);
    }
    let n = lines.len();
    for (i, raw) in lines.iter().enumerate() {
        let lineno = i + 1;
        let complete = raw.ends_with('\n');
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, lineno) {
            Ok(r) => records.push((lineno, r)),
            Err(_) if !complete && i + 1 == n => {
                let msg = format!("line {lineno}: truncated final record dropped");
                log::warn!("{msg}");
                warnings.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((records, warnings))
}

/// Reads records from any buffered source. A final line without a newline
/// that does not parse is treated as a crash-truncated record: it is dropped
/// with a warning.
pub fn read_from(reader: impl BufRead) -> Result<TraceRead> {
    let (records, warnings) = read_numbered(reader)?;
    Ok(TraceRead { records: records.into_iter().map(|(_, r)| r).collect(), warnings })
}

pub fn read_trace(path: &Path) -> Result<TraceRead> {
    read_from(BufReader::new(File::open(path)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub records: usize,
    pub warnings: Vec<String>,
}

/// Checks schema versions and that step indices never decrease.
pub fn validate_from(reader: impl BufRead) -> Result<ValidationReport> {
    let (records, warnings) = read_numbered(reader)?;
    let mut prev: Option<usize> = None;
    for (line, r) in &records {
        if let Some(p) = prev.filter(|p| r.step < *p) {
            return Err(Error::TraceSchema { line: *line, reason: format!("step {} follows step {p}", r.step) });
        }
        prev = Some(r.step);
    }
    Ok(ValidationReport { records: records.len(), warnings })
}

pub fn validate(path: &Path) -> Result<ValidationReport> {
    validate_from(BufReader::new(File::open(path)?))
}
