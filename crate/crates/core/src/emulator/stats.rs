use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::MessageKind;

/// Measured outcome of one emulated slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulationStats {
    pub slot_index: usize,
    pub gamma: f64,
    pub seed: u64,
    pub duration_s: f64,
    pub requests: usize,
    pub drops: usize,
    pub drop_rate: f64,
    pub mean_resp_s: f64,
    pub median_resp_s: f64,
    pub p95_resp_s: f64,
    pub sync_delay_s: f64,
    pub msgs_flow_request: usize,
    pub msgs_flow_update: usize,
    pub msgs_edge_sync: usize,
    pub msgs_handover: usize,
    pub bytes_flow_request: usize,
    pub bytes_flow_update: usize,
    pub bytes_sync: usize,
    pub bytes_ho: usize,
    pub intra_edges: usize,
    /// Request transit time per second of slot, the measured counterpart of
    /// the analytic flow overhead.
    pub measured_w_flow: f64,
    pub trace_hash: String,
    #[serde(skip)]
    pub response_delays: Vec<f64>,
}

impl EmulationStats {
    pub fn new(slot_index: usize, gamma: f64, seed: u64, duration_s: f64) -> Self {
        Self {
            slot_index,
            gamma,
            seed,
            duration_s,
            requests: 0,
            drops: 0,
            drop_rate: 0.0,
            mean_resp_s: 0.0,
            median_resp_s: 0.0,
            p95_resp_s: 0.0,
            sync_delay_s: 0.0,
            msgs_flow_request: 0,
            msgs_flow_update: 0,
            msgs_edge_sync: 0,
            msgs_handover: 0,
            bytes_flow_request: 0,
            bytes_flow_update: 0,
            bytes_sync: 0,
            bytes_ho: 0,
            intra_edges: 0,
            measured_w_flow: 0.0,
            trace_hash: String::new(),
            response_delays: Vec::new(),
        }
    }

    pub(crate) fn count(&mut self, kind: MessageKind, bytes: usize) {
        match kind {
            MessageKind::FlowRequest => {
                self.msgs_flow_request += 1;
                self.bytes_flow_request += bytes;
            }
            MessageKind::FlowUpdate => {
                self.msgs_flow_update += 1;
                self.bytes_flow_update += bytes;
            }
            MessageKind::EdgeSync => {
                self.msgs_edge_sync += 1;
                self.bytes_sync += bytes;
            }
            MessageKind::Handover => {
                self.msgs_handover += 1;
                self.bytes_ho += bytes;
            }
        }
    }

    pub(crate) fn finish(&mut self, trace_hash: String) {
        self.drop_rate = if self.requests > 0 { self.drops as f64 / self.requests as f64 } else { 0.0 };
        let mut d = self.response_delays.clone();
        d.sort_by(f64::total_cmp);
        if !d.is_empty() {
            self.mean_resp_s = d.iter().sum::<f64>() / d.len() as f64;
            self.median_resp_s = percentile(&d, 0.5);
            self.p95_resp_s = percentile(&d, 0.95);
        }
        self.trace_hash = trace_hash;
    }

    pub fn bytes_flow(&self) -> usize {
        self.bytes_flow_request + self.bytes_flow_update
    }

    pub fn completed(&self) -> usize {
        self.requests - self.drops
    }
}

/// Nearest-rank percentile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// One row of the per-slot statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub slot: usize,
    pub strategy: String,
    pub gamma: f64,
    pub seed: u64,
    pub requests: usize,
    pub drops: usize,
    pub drop_rate: f64,
    pub mean_resp_s: f64,
    pub p95_resp_s: f64,
    pub sync_delay_s: f64,
    pub bytes_flow: usize,
    pub bytes_sync: usize,
    pub bytes_ho: usize,
}

impl StatsRow {
    pub fn from_stats(strategy: &str, s: &EmulationStats) -> Self {
        Self {
            slot: s.slot_index,
            strategy: strategy.to_string(),
            gamma: s.gamma,
            seed: s.seed,
            requests: s.requests,
            drops: s.drops,
            drop_rate: s.drop_rate,
            mean_resp_s: s.mean_resp_s,
            p95_resp_s: s.p95_resp_s,
            sync_delay_s: s.sync_delay_s,
            bytes_flow: s.bytes_flow(),
            bytes_sync: s.bytes_sync,
            bytes_ho: s.bytes_ho,
        }
    }

    pub const HEADER: [&'static str; 13] = [
        "slot",
        "strategy",
        "gamma",
        "seed",
        "requests",
        "drops",
        "drop_rate",
        "mean_resp_s",
        "p95_resp_s",
        "sync_delay_s",
        "bytes_flow",
        "bytes_sync",
        "bytes_ho",
    ];

    /// Writes rows with a header. Lines starting with `#` before the header
    /// are taken as comments when reading back.
    pub fn write_csv<W: Write>(rows: &[StatsRow], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in rows {
            w.serialize(r)?;
        }
        if rows.is_empty() {
            w.write_record(Self::HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Vec<StatsRow>> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().ne(Self::HEADER.iter().copied()) {
            return Err(crate::error::Error::Config(format!(
                "unexpected stats columns: {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        r.deserialize().map(|row| row.map_err(Into::into)).collect()
    }
}
