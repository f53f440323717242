use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::engine::{EpochOutput, SessionOutcome, UserSummary};
use super::handover::HandoverEvent;
use super::kpi::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use super::traffic::TrafficRecord;
use super::{Instance, SimError};
use crate::scenario::{CellId, ConfigClass};

pub const EVENT_LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEvent {
    Session(TrafficRecord),
    SessionBlocked(SessionOutcome),
    SessionDropped(SessionOutcome),
    Handover(HandoverEvent),
    User(UserSummary),
    CellKpi(Instance),
}

/// One line of the JSONL event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub schema_version: u32,
    pub epoch: u64,
    pub event: LogEvent,
}

impl EpochOutput {
    /// Flattens the epoch into log records, grouped by kind in a fixed order.
    pub fn log_records(&self) -> Vec<LogRecord> {
        let wrap = |event| LogRecord {
            schema_version: EVENT_LOG_SCHEMA_VERSION,
            epoch: self.epoch,
            event,
        };
        let mut out = Vec::new();
        out.extend(self.traffic.iter().cloned().map(LogEvent::Session).map(wrap));
        out.extend(self.blocked.iter().cloned().map(LogEvent::SessionBlocked).map(wrap));
        out.extend(self.dropped.iter().cloned().map(LogEvent::SessionDropped).map(wrap));
        out.extend(self.handovers.iter().cloned().map(LogEvent::Handover).map(wrap));
        out.extend(self.users.iter().cloned().map(LogEvent::User).map(wrap));
        out.extend(self.instances.iter().cloned().map(LogEvent::CellKpi).map(wrap));
        out
    }
}

pub fn write_event_log<W: Write>(records: &[LogRecord], mut w: W) -> Result<(), SimError> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| SimError::Export(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| SimError::Export(e.to_string()))?;
    }
    Ok(())
}

/// Reads a JSONL log, rejecting records from a different schema version.
pub fn read_event_log<R: BufRead>(r: R) -> Result<Vec<LogRecord>, SimError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| SimError::Export(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord =
            serde_json::from_str(&line).map_err(|e| SimError::Export(format!("line {}: {e}", i + 1)))?;
        if rec.schema_version != EVENT_LOG_SCHEMA_VERSION {
            return Err(SimError::Export(format!(
                "line {}: schema version {} (expected {EVENT_LOG_SCHEMA_VERSION})",
                i + 1,
                rec.schema_version
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

fn instance_header() -> Vec<&'static str> {
    let mut h = vec!["cell_id", "epoch_id"];
    h.extend(FEATURE_NAMES);
    h.push("label");
    h
}

pub fn write_instances_csv<W: Write>(instances: &[Instance], w: W) -> Result<(), SimError> {
    let err = |e: csv::Error| SimError::Export(e.to_string());
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(instance_header()).map_err(err)?;
    for inst in instances {
        let mut row = vec![inst.cell.0.to_string(), inst.epoch.to_string()];
        row.extend(inst.features.0.iter().map(|v| v.to_string()));
        row.push(inst.label.as_str().to_string());
        wr.write_record(&row).map_err(err)?;
    }
    wr.flush().map_err(|e| SimError::Export(e.to_string()))
}

pub fn read_instances_csv<R: std::io::Read>(r: R) -> Result<Vec<Instance>, SimError> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(|e| SimError::Export(e.to_string()))?.clone();
    if header.iter().ne(instance_header()) {
        return Err(SimError::Export("unexpected instance CSV header".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| SimError::Export(e.to_string()))?;
        let bad = |what: &str| SimError::Export(format!("row {}: bad {what}", i + 1));
        let cell: u32 = rec[0].parse().map_err(|_| bad("cell_id"))?;
        let epoch: u64 = rec[1].parse().map_err(|_| bad("epoch_id"))?;
        let mut f = [0.0; FEATURE_COUNT];
        for (k, v) in f.iter_mut().enumerate() {
            *v = rec[2 + k].parse().map_err(|_| bad(FEATURE_NAMES[k]))?;
        }
        let label: ConfigClass = rec[2 + FEATURE_COUNT].parse().map_err(|_| bad("label"))?;
        out.push(Instance {
            cell: CellId(cell),
            epoch,
            features: FeatureVector(f),
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(cell: u32, x: f64) -> Instance {
        let mut f = [0.0; FEATURE_COUNT];
        f[0] = x;
        f[12] = -0.1 + x / 3.0;
        Instance {
            cell: CellId(cell),
            epoch: 3,
            features: FeatureVector(f),
            label: ConfigClass::HoMarginTooSmall,
        }
    }

    #[test]
    fn instances_round_trip_exactly() {
        let v = vec![inst(1, 0.1), inst(2, 1.0 / 3.0), inst(7, -71.25)];
        let mut buf = Vec::new();
        write_instances_csv(&v, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cell_id,epoch_id,"));
        assert!(text.lines().next().unwrap().ends_with(",label"));
        assert_eq!(read_instances_csv(&buf[..]).unwrap(), v);
    }

    #[test]
    fn event_log_round_trip_and_version_check() {
        let recs = vec![
            LogRecord {
                schema_version: EVENT_LOG_SCHEMA_VERSION,
                epoch: 2,
                event: LogEvent::SessionBlocked(SessionOutcome {
                    user: 4,
                    cell: CellId(3),
                    time_ms: 120_100,
                }),
            },
            LogRecord {
                schema_version: EVENT_LOG_SCHEMA_VERSION,
                epoch: 2,
                event: LogEvent::CellKpi(inst(3, 0.5)),
            },
        ];
        let mut buf = Vec::new();
        write_event_log(&recs, &mut buf).unwrap();
        let first = std::str::from_utf8(&buf).unwrap().lines().next().unwrap().to_string();
        assert!(first.contains("\"event\":{\"type\":\"session_blocked\""));
        assert_eq!(read_event_log(&buf[..]).unwrap(), recs);

        let bad = first.replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(read_event_log(bad.as_bytes()).is_err());
    }
}
