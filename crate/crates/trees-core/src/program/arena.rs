use std::sync::atomic::{AtomicU64, Ordering};

/// Declares the shared-memory buffers a program needs: a fixed set of named,
/// fixed-length word arrays plus their initial contents. Plays the role of
/// device global memory; tasks and map work-items read and write it under
/// the epoch race contract (disjoint locations or atomic min/add).
#[derive(Default, Clone)]
pub struct ArenaSpec {
    bufs: Vec<(String, Vec<u64>)>,
}

/// Index of a declared arena buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufId(usize);

impl ArenaSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a buffer with initial word contents.
    pub fn declare(&mut self, name: &str, init: Vec<u64>) -> BufId {
        let id = BufId(self.bufs.len());
        self.bufs.push((name.to_string(), init));
        id
    }

    /// Declares a zero-initialized buffer of `len` words.
    pub fn declare_zeroed(&mut self, name: &str, len: usize) -> BufId {
        self.declare(name, vec![0; len])
    }

    /// Declares a buffer of f64 values stored as their bit patterns.
    pub fn declare_f64(&mut self, name: &str, init: &[f64]) -> BufId {
        self.declare(name, init.iter().map(|v| v.to_bits()).collect())
    }
}

/// Instantiated shared memory. Every cell is an atomic word accessed with
/// relaxed ordering; the epoch barrier publishes writes between epochs, and
/// within an epoch programs only race through `fetch_min`/`fetch_add`.
pub struct Arena {
    bufs: Vec<(String, Box<[AtomicU64]>)>,
}

impl Arena {
    pub(crate) fn instantiate(spec: &ArenaSpec) -> Self {
        Arena {
            bufs: spec
                .bufs
                .iter()
                .map(|(name, init)| {
                    let cells: Box<[AtomicU64]> =
                        init.iter().map(|&w| AtomicU64::new(w)).collect();
                    (name.clone(), cells)
                })
                .collect(),
        }
    }

    pub fn buf(&self, id: BufId) -> ArenaBuf<'_> {
        ArenaBuf {
            cells: &self.bufs[id.0].1,
        }
    }

    pub fn by_name(&self, name: &str) -> Option<ArenaBuf<'_>> {
        self.bufs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, cells)| ArenaBuf { cells })
    }
}

/// View of one arena buffer.
#[derive(Clone, Copy)]
pub struct ArenaBuf<'a> {
    cells: &'a [AtomicU64],
}

impl ArenaBuf<'_> {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, index: usize) -> u64 {
        self.cells[index].load(Ordering::Relaxed)
    }

    pub fn set(&self, index: usize, value: u64) {
        self.cells[index].store(value, Ordering::Relaxed);
    }

    /// Atomically lowers the cell to `min(cell, value)`; returns the prior
    /// value. Idempotent under re-delivery, which is what relaxation-style
    /// programs rely on.
    pub fn fetch_min(&self, index: usize, value: u64) -> u64 {
        self.cells[index].fetch_min(value, Ordering::Relaxed)
    }

    /// Atomic post-increment, used for sequence tickets.
    pub fn fetch_add(&self, index: usize, value: u64) -> u64 {
        self.cells[index].fetch_add(value, Ordering::Relaxed)
    }

    pub fn get_f64(&self, index: usize) -> f64 {
        f64::from_bits(self.get(index))
    }

    pub fn set_f64(&self, index: usize, value: f64) {
        self.set(index, value.to_bits());
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.cells
            .iter()
            .map(|c| c.load(Ordering::Relaxed))
            .collect()
    }
}
