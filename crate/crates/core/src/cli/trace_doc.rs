//! Line-delimited JSON traces: one header line, then one line per moment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::notation::{output_text, parse_output};
use crate::collective::{Choice, Configuration, Trace, TraceRecord};
use crate::lattice::Vertex;
use crate::machine::{observe, MemberId, StateId};
use crate::program::Strategy;

pub const TRACE_FORMAT: &str = "pebblewalk-trace/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub strategy: String,
    pub strategy_hash: String,
    pub adversary: String,
    pub seed: Option<u64>,
    pub horizon: usize,
    pub members: Vec<String>,
    pub state_names: Vec<Vec<String>>,
}

impl TraceHeader {
    pub fn for_strategy(
        strategy: &Strategy,
        hash: String,
        adversary: String,
        seed: Option<u64>,
        horizon: usize,
    ) -> Self {
        let members = strategy.def.members();
        TraceHeader {
            format: TRACE_FORMAT.into(),
            strategy: strategy.name.clone(),
            strategy_hash: hash,
            adversary,
            seed,
            horizon,
            members: members.iter().map(|m| m.name.clone()).collect(),
            state_names: members
                .iter()
                .map(|m| m.machine.states().to_vec())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDocument {
    pub header: TraceHeader,
    pub trace: Trace,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    t: u64,
    states: Vec<String>,
    outputs: Vec<String>,
    positions: Vec<(i64, i64)>,
    choice: Option<Choice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

impl TraceDocument {
    pub fn to_jsonl(&self) -> String {
        let h = &self.header;
        let mut out = serde_json::to_string(h).expect("header serializes");
        out.push('\n');
        for r in &self.trace.records {
            let line = RecordLine {
                t: r.step,
                states: r
                    .states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| h.state_names[i][s.0 as usize].clone())
                    .collect(),
                outputs: r
                    .outputs
                    .iter()
                    .map(|y| output_text(&h.members, *y))
                    .collect(),
                positions: r
                    .config
                    .positions()
                    .iter()
                    .map(|v| (v.x(), v.y()))
                    .collect(),
                choice: r.choice,
            };
            out += &serde_json::to_string(&line).expect("record serializes");
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TraceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(TraceError {
            line: 1,
            message: "empty trace".into(),
        })?;
        let header: TraceHeader = serde_json::from_str(first).map_err(|e| TraceError {
            line: 1,
            message: e.to_string(),
        })?;
        if header.format != TRACE_FORMAT {
            return Err(TraceError {
                line: 1,
                message: format!("unsupported format '{}'", header.format),
            });
        }
        let n = header.members.len();
        if n == 0 || header.state_names.len() != n {
            return Err(TraceError {
                line: 1,
                message: "members and state_names disagree".into(),
            });
        }
        let mut records = Vec::new();
        for (i, l) in lines {
            let line = i + 1;
            let err = |message: String| TraceError { line, message };
            let raw: RecordLine = serde_json::from_str(l).map_err(|e| err(e.to_string()))?;
            if raw.states.len() != n || raw.outputs.len() != n || raw.positions.len() != n {
                return Err(err(format!("expected {n} entries per field")));
            }
            let mut states = Vec::new();
            for (m, s) in raw.states.iter().enumerate() {
                let id = header.state_names[m]
                    .iter()
                    .position(|x| x == s)
                    .ok_or_else(|| err(format!("unknown state '{s}' for {}", header.members[m])))?;
                states.push(StateId(id as u16));
            }
            let outputs = raw
                .outputs
                .iter()
                .map(|o| parse_output(&header.members, o).map_err(&err))
                .collect::<Result<_, _>>()?;
            let positions = raw
                .positions
                .iter()
                .map(|&(x, y)| Vertex::try_new(x, y).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let config = Configuration::new(positions);
            let observations = (0..n)
                .map(|s| observe(&config, MemberId::from_slot(s)))
                .collect();
            records.push(TraceRecord {
                step: raw.t,
                config,
                states,
                observations,
                outputs,
                choice: raw.choice,
            });
        }
        if records.is_empty() {
            return Err(TraceError {
                line: 2,
                message: "trace has no records".into(),
            });
        }
        Ok(TraceDocument {
            header,
            trace: Trace { records },
        })
    }
}
