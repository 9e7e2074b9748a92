use serde::{Deserialize, Serialize};

/// Per-epoch snapshot emitted after the finish phase.
///
/// Serialized as one JSON object per line; the field order below is the
/// wire order and is kept stable for golden-file comparison. The record
/// deliberately carries only counts, ranges, and stack contents — never
/// per-slot task identities — so traces are identical across backends and
/// worker counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch_index: u64,
    pub cen: u64,
    pub ndrange_lo: u64,
    pub ndrange_hi: u64,
    pub launched: u64,
    pub valid_executed: u64,
    pub forked: u64,
    pub join_scheduled: bool,
    pub map_scheduled: bool,
    pub join_stack: Vec<u64>,
    pub ndrange_stack: Vec<(u64, u64)>,
    pub next_free_core: u64,
}

impl EpochTrace {
    /// Compact single-line JSON encoding, as written to trace files.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serialization cannot fail")
    }
}
