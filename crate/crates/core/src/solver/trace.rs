use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 7] = [
    "iter",
    "norm_iter",
    "objective",
    "rel_change",
    "dist_ref",
    "ms",
    "active_blocks",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// `iter × α`.
    pub norm_iter: f64,
    pub objective: f64,
    pub rel_change: f64,
    pub dist_ref: Option<f64>,
    /// Wall clock since the run started; not part of the determinism contract.
    pub ms: f64,
    pub active_blocks: usize,
}

/// Per-iteration convergence records of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; iteration indices must strictly increase.
    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last() {
            assert!(record.iter > last.iter, "trace iterations must increase");
        }
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The trace with the `ms` column zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunTrace {
        RunTrace {
            records: self
                .records
                .iter()
                .map(|r| TraceRecord { ms: 0.0, ..r.clone() })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                format_real(r.norm_iter),
                format_real(r.objective),
                format_real(r.rel_change),
                r.dist_ref.map(format_real).unwrap_or_default(),
                format!("{:.3}", r.ms),
                r.active_blocks.to_string(),
            ])?;
        }
        w.flush().map_err(Error::from)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iter: usize) -> TraceRecord {
        TraceRecord {
            iter,
            norm_iter: iter as f64 * 0.5,
            objective: 1.25,
            rel_change: 1e-3,
            dist_ref: None,
            ms: 0.5,
            active_blocks: 3,
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = RunTrace::new();
        t.push(record(1));
        t.push(TraceRecord {
            dist_ref: Some(0.1),
            ..record(2)
        });
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "iter,norm_iter,objective,rel_change,dist_ref,ms,active_blocks"
        );
        assert_eq!(lines[1], "1,0.5,1.25,0.001,,0.500,3");
        assert_eq!(lines[2], "2,1.0,1.25,0.001,0.1,0.500,3");
    }

    #[test]
    #[should_panic]
    fn rejects_non_increasing() {
        let mut t = RunTrace::new();
        t.push(record(2));
        t.push(record(2));
    }

    #[test]
    fn real_format_round_trips() {
        for x in [0.1, 1e-300, -3.5e10, 1.0 / 3.0] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
    }
}
