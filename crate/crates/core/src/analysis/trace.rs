use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Column order of the trace CSV.
pub const TRACE_HEADER: [&str; 7] = ["k", "alpha", "beta", "r", "omega", "dist_rel", "loss"];

/// One iterate measured against the ground truth. Lengths are in units of ‖x‖.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub omega: f64,
    pub dist_rel: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterateTrace {
    rows: Vec<TraceRow>,
}

impl IterateTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: Vec<TraceRow>) -> Self {
        Self { rows }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn dists(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.dist_rel)
    }

    /// First iteration whose relative distance is at most `tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.dist_rel <= tol).map(|r| r.k)
    }

    /// Writes `k,alpha,beta,r,omega,dist_rel,loss`. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wtr.write_record(TRACE_HEADER)?;
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<TraceRow>, _>>()?;
        Ok(Self { rows })
    }
}
