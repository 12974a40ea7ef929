//! Output artifacts: long-format series CSVs and the event log.
//!
//! Every daily series group (`prices.csv`, `volumes.csv`, `wealth.csv`,
//! `nav.csv`, ...) uses the same three-column layout,
//!
//! ```csv
//! day,entity_id,value
//! 0,AAPL,136.54
//! 0,MSFT,213.09
//! 1,AAPL,137.02
//! ```
//!
//! rows ordered by day and, within a day, by the fixed entity order of the
//! run. Values are written in shortest round-trip form, so a file read back
//! in reproduces the exact bit pattern — byte-identical outputs across runs
//! are part of the determinism contract.
//!
//! Events (`events.csv`) are sparse and carry their own schema:
//! `day,participant_id,event_type,amount`.

use std::path::Path;

use crate::error::{Error, Result};

pub const SERIES_HEADER: [&str; 3] = ["day", "entity_id", "value"];
pub const EVENTS_HEADER: [&str; 4] = ["day", "participant_id", "event_type", "amount"];

/// A rectangular day-by-entity series: one value per entity per day.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    entities: Vec<String>,
    /// `rows[day][entity_index]`.
    rows: Vec<Vec<f64>>,
}

impl SeriesFrame {
    pub fn new(entities: Vec<String>) -> Self {
        SeriesFrame { entities, rows: Vec::new() }
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn n_days(&self) -> usize {
        self.rows.len()
    }

    /// Appends one day of values, in entity order.
    pub fn push_day(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.entities.len(), "one value per entity");
        self.rows.push(values.to_vec());
    }

    pub fn day(&self, day: usize) -> &[f64] {
        &self.rows[day]
    }

    /// Full history of one entity by name.
    pub fn column(&self, entity: &str) -> Option<Vec<f64>> {
        let idx = self.entities.iter().position(|e| e == entity)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn column_by_index(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Csv { path: path.display().to_string(), source: e })?;
        let wrap = |e| Error::Csv { path: path.display().to_string(), source: e };
        w.write_record(SERIES_HEADER).map_err(wrap)?;
        for (day, row) in self.rows.iter().enumerate() {
            for (entity, value) in self.entities.iter().zip(row) {
                w.write_record([day.to_string(), entity.clone(), value.to_string()])
                    .map_err(wrap)?;
            }
        }
        w.flush().map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        Ok(())
    }

    /// Reads a long-format series CSV back into a frame. Requires the exact
    /// header, contiguous days starting at 0, and the same entity order
    /// within every day.
    pub fn read_csv(path: &Path) -> Result<SeriesFrame> {
        let wrap_csv = |e| Error::Csv { path: path.display().to_string(), source: e };
        let mut r = csv::Reader::from_path(path)
            .map_err(|e| Error::Csv { path: path.display().to_string(), source: e })?;
        let header: Vec<String> =
            r.headers().map_err(wrap_csv)?.iter().map(str::to_string).collect();
        if header != SERIES_HEADER {
            return Err(Error::SchemaHeader {
                expected: SERIES_HEADER.iter().map(|s| s.to_string()).collect(),
                found: header,
            });
        }

        let mut frame = SeriesFrame::new(Vec::new());
        let mut current: Vec<f64> = Vec::new();
        let mut first_day = true;
        let mut entity_cursor = 0usize;
        for (i, record) in r.records().enumerate() {
            let row = i + 2; // 1-based, after the header
            let record = record.map_err(wrap_csv)?;
            if record.len() != 3 {
                return Err(Error::BadValue {
                    row,
                    column: "<record>".into(),
                    reason: format!("expected 3 fields, found {}", record.len()),
                });
            }
            let day: usize = record[0].parse().map_err(|_| Error::BadValue {
                row,
                column: "day".into(),
                reason: format!("not an integer: {:?}", &record[0]),
            })?;
            let entity = record[1].to_string();
            let value: f64 = record[2].parse().map_err(|_| Error::BadValue {
                row,
                column: "value".into(),
                reason: format!("not a number: {:?}", &record[2]),
            })?;

            if day == frame.rows.len() + 1 {
                // Day rolled over: seal the previous block.
                if first_day {
                    first_day = false;
                } else if current.len() != frame.entities.len() {
                    return Err(Error::BadValue {
                        row,
                        column: "day".into(),
                        reason: format!(
                            "day {} has {} rows, expected {}",
                            frame.rows.len(),
                            current.len(),
                            frame.entities.len()
                        ),
                    });
                }
                frame.rows.push(std::mem::take(&mut current));
                entity_cursor = 0;
            } else if day != frame.rows.len() {
                return Err(Error::BadValue {
                    row,
                    column: "day".into(),
                    reason: format!("days must be contiguous from 0, found {day}"),
                });
            }

            if first_day {
                frame.entities.push(entity);
            } else {
                match frame.entities.get(entity_cursor) {
                    Some(expected) if *expected == entity => {}
                    _ => {
                        return Err(Error::BadValue {
                            row,
                            column: "entity_id".into(),
                            reason: format!("unexpected entity {entity:?} at this position"),
                        })
                    }
                }
            }
            entity_cursor += 1;
            current.push(value);
        }
        if current.is_empty() && frame.entities.is_empty() {
            return Err(Error::EmptyTable);
        }
        if !current.is_empty() {
            if !first_day && current.len() != frame.entities.len() {
                return Err(Error::BadValue {
                    row: 0,
                    column: "day".into(),
                    reason: "final day is incomplete".into(),
                });
            }
            frame.rows.push(current);
        }
        Ok(frame)
    }
}

/// Things worth flagging in the event log, beyond the regular series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Performance-chasing cash moved in or out of a fund.
    Flow,
    /// A flow day arrived before the trailing window had enough history.
    FlowSkipped,
    /// A participant's wealth hit zero; it was liquidated and deactivated.
    Insolvency,
    /// A strategy signal was clamped or rescaled into legality.
    SignalCoerced,
    /// A strategy signal was unusable; the fund sat in cash that day.
    SignalInvalid,
    /// No participant bid on a stock; its price carried over.
    NoTrade,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Flow => "flow",
            EventKind::FlowSkipped => "flow_skipped",
            EventKind::Insolvency => "insolvency",
            EventKind::SignalCoerced => "signal_coerced",
            EventKind::SignalInvalid => "signal_invalid",
            EventKind::NoTrade => "no_trade",
        }
    }
}

/// One row of the event log. `entity` is a participant id for fund events
/// and a stock id for market events such as `no_trade`.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub day: usize,
    pub entity: String,
    pub kind: EventKind,
    pub amount: f64,
}

pub fn write_events(path: &Path, events: &[Event]) -> Result<()> {
    let wrap = |e| Error::Csv { path: path.display().to_string(), source: e };
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Csv { path: path.display().to_string(), source: e })?;
    w.write_record(EVENTS_HEADER).map_err(wrap)?;
    for ev in events {
        w.write_record([
            ev.day.to_string(),
            ev.entity.clone(),
            ev.kind.as_str().to_string(),
            ev.amount.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    Ok(())
}
