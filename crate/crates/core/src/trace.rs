//! Per-iteration records of an AR2 run and their CSV/JSON forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::function::EvalCounts;

pub const TRACE_CSV_HEADER: [&str; 11] = [
    "k", "x", "f", "g", "h", "sigma", "step", "rho", "phi1", "phi2", "accepted",
];

/// One pass through Steps 2-4 at iterate `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub x: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub sigma: f64,
    pub step: f64,
    pub rho: f64,
    pub phi1: f64,
    pub phi2: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Criticality,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    pub termination_index: usize,
    pub terminated_by: Termination,
    pub counters: EvalCounts,
    pub final_x: f64,
    pub final_f: f64,
    pub final_phi1: f64,
    pub final_phi2: Option<f64>,
}

/// Summary written next to a trace CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub termination_index: usize,
    pub terminated_by: Termination,
    pub counters: EvalCounts,
    pub final_x: f64,
    pub final_f: f64,
    pub final_phi1: f64,
    pub final_phi2: Option<f64>,
    pub accepted_iterations: usize,
}

impl RunTrace {
    pub fn accepted_iterations(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    /// Iterates `x_0, ..., x_K` visited by the run (rejected trials excluded).
    pub fn iterates(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.records.iter().map(|r| r.x).collect();
        xs.push(self.final_x);
        xs.dedup_by(|a, b| a.to_bits() == b.to_bits());
        xs
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.k.to_string(),
                r.x.to_string(),
                r.f.to_string(),
                r.g.to_string(),
                r.h.to_string(),
                r.sigma.to_string(),
                r.step.to_string(),
                r.rho.to_string(),
                r.phi1.to_string(),
                r.phi2.map(|v| v.to_string()).unwrap_or_default(),
                r.accepted.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            termination_index: self.termination_index,
            terminated_by: self.terminated_by,
            counters: self.counters,
            final_x: self.final_x,
            final_f: self.final_f,
            final_phi1: self.final_phi1,
            final_phi2: self.final_phi2,
            accepted_iterations: self.accepted_iterations(),
        }
    }
}
