//! The JSON document holding a generated example: schedule, sequences and
//! interpolant, plus a small metadata block.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config::Order;
use crate::error::{Error, Result};
use crate::example::{
    build_sequences, default_schedule, random_schedule, ExampleSequences, PerturbationSchedule,
    ScheduleKind,
};
use crate::hermite::{build_interpolant, PiecewiseQuintic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleMetadata {
    pub q: Order,
    pub eps: f64,
    pub k_eps: usize,
    pub kind: ScheduleKind,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleDocument {
    pub metadata: ExampleMetadata,
    pub schedule: PerturbationSchedule,
    pub sequences: ExampleSequences,
    pub interpolant: PiecewiseQuintic,
}

/// What to draw when generating an example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    pub q: Order,
    pub eps: f64,
    pub eta1: f64,
    pub kind: ScheduleKind,
    /// Required for [`ScheduleKind::Random`].
    pub seed: Option<u64>,
    pub beta_q_max: f64,
    pub beta0: bool,
}

impl ExampleDocument {
    pub fn generate(opts: &GenerateOptions) -> Result<Self> {
        let schedule = match opts.kind {
            ScheduleKind::Random => {
                let seed = opts
                    .seed
                    .ok_or_else(|| Error::InvalidInput("a random schedule needs a seed".into()))?;
                random_schedule(
                    opts.q,
                    opts.eps,
                    opts.eta1,
                    seed,
                    opts.beta_q_max,
                    opts.beta0,
                )?
            }
            kind => default_schedule(opts.q, opts.eps, opts.eta1, kind)?,
        };
        let seed = if opts.kind == ScheduleKind::Random {
            opts.seed
        } else {
            None
        };
        Self::from_schedule(schedule, opts.kind, seed)
    }

    pub fn from_schedule(
        schedule: PerturbationSchedule,
        kind: ScheduleKind,
        seed: Option<u64>,
    ) -> Result<Self> {
        let sequences = build_sequences(&schedule)?;
        let interpolant = build_interpolant(&sequences)?;
        Ok(Self {
            metadata: ExampleMetadata {
                q: schedule.q,
                eps: schedule.eps,
                k_eps: schedule.k_eps,
                kind,
                seed,
            },
            schedule,
            sequences,
            interpolant,
        })
    }

    /// Internal consistency of a loaded document (not admissibility).
    pub fn validate(&self) -> Result<()> {
        let m = &self.metadata;
        let k = self.schedule.k_eps;
        let consistent = m.q == self.schedule.q
            && m.q == self.sequences.q
            && m.eps == self.schedule.eps
            && m.k_eps == k
            && self.sequences.k_eps == k
            && self.sequences.x.len() == k + 1
            && self.interpolant.knots.len() == k + 1;
        if consistent {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "example document parts disagree on q, eps or k_eps".into(),
            ))
        }
    }

    pub fn to_writer<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn from_reader<R: Read>(input: R) -> Result<Self> {
        let doc: Self = serde_json::from_reader(input)?;
        doc.validate()?;
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(kind: ScheduleKind, seed: Option<u64>) -> GenerateOptions {
        GenerateOptions {
            q: Order::One,
            eps: 0.25,
            eta1: 0.1,
            kind,
            seed,
            beta_q_max: 0.5,
            beta0: true,
        }
    }

    #[test]
    fn json_roundtrip() {
        let doc = ExampleDocument::generate(&opts(ScheduleKind::Random, Some(3))).unwrap();
        let mut buf = Vec::new();
        doc.to_writer(&mut buf).unwrap();
        let back = ExampleDocument::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back, doc);
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["metadata"]["k_eps"], 8);
        assert_eq!(v["metadata"]["kind"], "random");
        assert_eq!(v["metadata"]["q"], 1);
    }

    #[test]
    fn random_needs_seed() {
        assert!(ExampleDocument::generate(&opts(ScheduleKind::Random, None)).is_err());
        let doc = ExampleDocument::generate(&opts(ScheduleKind::Book, Some(3))).unwrap();
        assert_eq!(doc.metadata.seed, None);
    }

    #[test]
    fn inconsistent_document_rejected() {
        let mut doc = ExampleDocument::generate(&opts(ScheduleKind::Unperturbed, None)).unwrap();
        doc.metadata.k_eps = 9;
        let mut buf = Vec::new();
        doc.to_writer(&mut buf).unwrap();
        assert!(ExampleDocument::from_reader(buf.as_slice()).is_err());
    }
}
