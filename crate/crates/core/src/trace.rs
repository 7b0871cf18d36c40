//! Activation traces: the time-ordered record of node activations produced by
//! one simulation, with the contributing edges of each event.
//!
//! Binary form (little-endian): u64 event count, then per event a u32 node
//! id, u64 time in ticks, u16 contributor count and that many u32 edge ids.
//! A JSON debug form mirrors the same data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::ticks_to_ms;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationEvent {
    pub node: u32,
    pub tick: u64,
    /// Edge ids whose buffered impulses summed to threshold, in arrival
    /// order. Empty for stimulus-driven input events.
    pub contributors: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationTrace {
    pub stimulus_id: String,
    pub horizon_ticks: u64,
    /// Sorted by (tick, node); one node never appears twice within its
    /// refractory period.
    pub events: Vec<ActivationEvent>,
}

impl ActivationTrace {
    /// Time of the last event in ticks, or 0 for an empty trace.
    pub fn quiescence_ticks(&self) -> u64 {
        self.events.last().map_or(0, |e| e.tick)
    }

    pub fn quiescence_ms(&self) -> f64 {
        ticks_to_ms(self.quiescence_ticks())
    }

    pub fn events_of(&self, node: u32) -> impl Iterator<Item = &ActivationEvent> {
        self.events.iter().filter(move |e| e.node == node)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.events.len() * 24);
        out.extend_from_slice(&(self.events.len() as u64).to_le_bytes());
        for e in &self.events {
            out.extend_from_slice(&e.node.to_le_bytes());
            out.extend_from_slice(&e.tick.to_le_bytes());
            out.extend_from_slice(&(e.contributors.len() as u16).to_le_bytes());
            for c in &e.contributors {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out
    }

    pub fn from_binary(bytes: &[u8], stimulus_id: &str, horizon_ticks: u64) -> Result<Self> {
        let trunc = |found: usize| Error::Malformed {
            what: "trace binary",
            detail: format!("truncated at byte {found}"),
        };
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if bytes.len() < *pos + n {
                return Err(trunc(bytes.len()));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let mut events = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let node = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
            let tick = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let n_contrib = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
            let mut contributors = Vec::with_capacity(n_contrib);
            for _ in 0..n_contrib {
                contributors.push(u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()));
            }
            events.push(ActivationEvent { node, tick, contributors });
        }
        if pos != bytes.len() {
            return Err(Error::Malformed {
                what: "trace binary",
                detail: format!("{} trailing bytes", bytes.len() - pos),
            });
        }
        Ok(Self { stimulus_id: stimulus_id.to_string(), horizon_ticks, events })
    }
}
