//! Line-delimited JSON trace format.
//!
//! One JSON object per line, discriminated by `"record"`:
//!
//! - `header`: `{"record":"header","format":"gathering-trace/1", algorithm,
//!   engine, compass, static_deviations, initial, seed, adversary}`; first line.
//! - `config`: `{"record":"config","tick":t,"r0":[x,y],"r1":[x,y]}`; C(t).
//! - `event`: `{"record":"event","tick":t,"robot":i,"kind":K, ...}` where K is
//!   `Activate` (`deviation`, `scale`), `Look` (`observed` in the robot's
//!   local frame, `state`, global `target`), `Progress` (`displacement`
//!   requested this tick, resulting `position`), `CycleEnd` (`displaced`,
//!   `deviation`, `scale`) or `Terminate`.
//! - `end`: `{"record":"end","stop":{"reason":"gathered","tick":f}}` or
//!   `{"reason":"horizon"}`; last line.
//!
//! Each tick's `config` line precedes that tick's events. Floats are written
//! in shortest round-trip form, so import reproduces every bit.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Configuration, Execution, RunHeader, StopReason, TraceEvent};
use crate::geometry::Point;

pub const FORMAT: &str = "gathering-trace/1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace ends without {0}")]
    Truncated(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct HeaderRecord {
    format: String,
    #[serde(flatten)]
    header: RunHeader,
}

#[derive(Serialize, Deserialize)]
struct ConfigRecord {
    tick: u64,
    r0: Point,
    r1: Point,
}

#[derive(Serialize, Deserialize)]
struct EndRecord {
    stop: StopReason,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Header(HeaderRecord),
    Config(ConfigRecord),
    Event(TraceEvent),
    End(EndRecord),
}

pub fn write_trace<W: Write>(execution: &Execution, mut out: W) -> std::io::Result<()> {
    let mut line = |r: &Record| -> std::io::Result<()> {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
    };
    line(&Record::Header(HeaderRecord { format: FORMAT.to_string(), header: execution.header.clone() }))?;
    let mut events = execution.events.iter().peekable();
    for (t, c) in execution.configs.iter().enumerate() {
        line(&Record::Config(ConfigRecord { tick: t as u64, r0: c.r0, r1: c.r1 }))?;
        while let Some(e) = events.next_if(|e| e.tick == t as u64) {
            line(&Record::Event(*e))?;
        }
    }
    for e in events {
        line(&Record::Event(*e))?;
    }
    line(&Record::End(EndRecord { stop: execution.stop }))
}

pub fn trace_to_string(execution: &Execution) -> String {
    let mut buf = Vec::new();
    write_trace(execution, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Execution, TraceError> {
    let mut header: Option<RunHeader> = None;
    let mut configs: Vec<Configuration> = Vec::new();
    let mut events: Vec<TraceEvent> = Vec::new();
    let mut stop: Option<StopReason> = None;
    for (i, text) in input.lines().enumerate() {
        let line = i + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let fail = |message: String| TraceError::Parse { line, message };
        if stop.is_some() {
            return Err(fail("content after end record".into()));
        }
        let record: Record = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        match record {
            Record::Header(h) => {
                if header.is_some() {
                    return Err(fail("duplicate header".into()));
                }
                if h.format != FORMAT {
                    return Err(fail(format!("unsupported format {:?}", h.format)));
                }
                header = Some(h.header);
            }
            _ if header.is_none() => return Err(fail("first record must be the header".into())),
            Record::Config(c) => {
                if c.tick != configs.len() as u64 {
                    return Err(fail(format!(
                        "configuration for tick {} where tick {} was expected",
                        c.tick,
                        configs.len()
                    )));
                }
                configs.push(Configuration::new(c.r0, c.r1));
            }
            Record::Event(e) => {
                if e.robot > 1 {
                    return Err(fail(format!("robot index {} out of range", e.robot)));
                }
                if events.last().is_some_and(|p| p.tick > e.tick) {
                    return Err(fail("events out of tick order".into()));
                }
                events.push(e);
            }
            Record::End(e) => stop = Some(e.stop),
        }
    }
    let header = header.ok_or(TraceError::Truncated("a header"))?;
    let stop = stop.ok_or(TraceError::Truncated("an end record"))?;
    if configs.is_empty() {
        return Err(TraceError::Truncated("configurations"));
    }
    Ok(Execution { header, configs, events, stop })
}

pub fn trace_from_str(text: &str) -> Result<Execution, TraceError> {
    read_trace(text.as_bytes())
}
