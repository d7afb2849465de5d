//! Two-row text panels of a trace.
//!
//! Each cell lists the pebble names on that vertex in member order, with
//! `*` appended where the automaton is; empty vertices print as `.`. Row 1
//! is printed above row 0.

use super::trace_doc::TraceDocument;
use crate::collective::TraceRecord;
use crate::lattice::Vertex;
use crate::machine::MemberId;

fn cell(names: &[String], record: &TraceRecord, v: Vertex) -> String {
    let occ = record.config.occupants(v);
    let mut s: String = occ
        .iter()
        .filter(|m| !m.is_automaton())
        .map(|m| names[m.slot()].as_str())
        .collect();
    if occ.contains(MemberId::AUTOMATON) {
        s.push('*');
    }
    if s.is_empty() {
        s.push('.');
    }
    s
}

/// Leftmost column of a `window`-wide view centred on the midpoint of the
/// collective's x-extent.
fn left_edge(record: &TraceRecord, window: usize) -> i64 {
    let xs = record.config.positions().iter().map(|v| v.x());
    let (lo, hi) = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0));
    (lo + hi).div_euclid(2) - (window as i64 - 1) / 2
}

pub fn render_record(
    names: &[String],
    record: &TraceRecord,
    window: usize,
    width: usize,
) -> String {
    let left = left_edge(record, window);
    let row = |y: i64| -> String {
        let cells: Vec<String> = (0..window as i64)
            .map(|i| format!("{:<width$}", cell(names, record, Vertex::new(left + i, y))))
            .collect();
        cells.join(" ").trim_end().to_string()
    };
    format!(
        "t={} x={}..{}\n{}\n{}\n",
        record.step,
        left,
        left + window as i64 - 1,
        row(1),
        row(0)
    )
}

/// Every record as a panel, panels separated by a blank line. The cell
/// width is fixed across the whole trace.
pub fn render_trace(doc: &TraceDocument, window: usize) -> String {
    let names = &doc.header.members;
    let width = doc
        .trace
        .records
        .iter()
        .flat_map(|r| {
            r.config
                .positions()
                .iter()
                .map(move |v| cell(names, r, *v).len())
        })
        .max()
        .unwrap_or(1);
    doc.trace
        .records
        .iter()
        .map(|r| render_record(names, r, window, width))
        .collect::<Vec<_>>()
        .join("\n")
}
