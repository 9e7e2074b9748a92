use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};

use crossbeam::queue::SegQueue;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, FatalSignal};
use crate::program::MapFnId;
use crate::tvm::code::{encode_task, TaskCode, TaskTypeId};
use crate::tvm::trace::EpochTrace;
use crate::tvm::{ArgWords, TASK_ARG_WORDS};

/// Inclusive, contiguous range of task-vector slots launched as one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NDRange {
    pub lo: usize,
    pub hi: usize,
}

impl NDRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        assert!(lo <= hi, "range lo {lo} must not exceed hi {hi}");
        NDRange { lo, hi }
    }

    pub fn size(&self) -> usize {
        self.hi - self.lo + 1
    }
}

/// Deferred data-parallel kernel request, queued during an epoch and drained
/// after its finish phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapRequest {
    pub fn_id: MapFnId,
    pub args: ArgWords,
    pub range: u64,
}

/// One stack push performed by the finish phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackPush {
    pub epoch: u64,
    pub range: NDRange,
}

/// One task-vector slot. The fields are atomics so the vector can be shared
/// with executor threads; the protocol guarantees each slot is written only
/// by its owning task or by the task that freshly allocated it, so all
/// accesses use relaxed ordering and the epoch barrier publishes them.
pub(crate) struct TaskSlot {
    code: AtomicU64,
    args: [AtomicU64; TASK_ARG_WORDS],
    result: AtomicU64,
}

impl TaskSlot {
    fn new() -> Self {
        TaskSlot {
            code: AtomicU64::new(0),
            args: Default::default(),
            result: AtomicU64::new(0),
        }
    }

    pub(crate) fn code(&self) -> TaskCode {
        TaskCode::from_raw(self.code.load(Ordering::Relaxed))
    }

    pub(crate) fn args(&self) -> ArgWords {
        let mut out = [0u64; TASK_ARG_WORDS];
        for (dst, src) in out.iter_mut().zip(&self.args) {
            *dst = src.load(Ordering::Relaxed);
        }
        out
    }

    pub(crate) fn result(&self) -> u64 {
        self.result.load(Ordering::Relaxed)
    }

    pub(crate) fn write_task(&self, code: TaskCode, args: &ArgWords) {
        self.code.store(code.raw(), Ordering::Relaxed);
        for (dst, src) in self.args.iter().zip(args) {
            dst.store(*src, Ordering::Relaxed);
        }
    }

    pub(crate) fn write_result(&self, value: u64) {
        self.result.store(value, Ordering::Relaxed);
        self.code.store(TaskCode::INVALID.raw(), Ordering::Relaxed);
    }

    pub(crate) fn invalidate(&self) {
        self.code.store(TaskCode::INVALID.raw(), Ordering::Relaxed);
    }
}

/// Per-run instrumentation shared with executor threads.
///
/// `alloc_rmw_ops` counts read-modify-write operations on the slot
/// allocation counter (the only RMW the execution path performs).
/// `lock_ops` counts lock acquisitions on the execution path; nothing in
/// the engine takes a lock, so it stays zero and the metrics suite asserts
/// that.
#[derive(Default)]
pub(crate) struct Instrumentation {
    pub alloc_rmw_ops: AtomicU64,
    pub lock_ops: AtomicU64,
}

/// The slice of machine state visible to executor threads during the
/// parallel phase: the task vector, the allocation counter, the two
/// scheduling flags, and the map queue. Everything else stays host-side.
pub(crate) struct SharedState {
    tv: Box<[TaskSlot]>,
    next_free_core: AtomicUsize,
    join_scheduled: AtomicBool,
    map_scheduled: AtomicBool,
    map_queue: SegQueue<MapRequest>,
    num_task_types: u32,
    pub(crate) instr: Instrumentation,
}

impl SharedState {
    pub(crate) fn capacity(&self) -> usize {
        self.tv.len()
    }

    pub(crate) fn num_task_types(&self) -> u32 {
        self.num_task_types
    }

    pub(crate) fn slot(&self, index: usize) -> &TaskSlot {
        &self.tv[index]
    }

    pub(crate) fn next_free_core(&self) -> usize {
        self.next_free_core.load(Ordering::Relaxed)
    }

    /// Reserves `count` fresh contiguous slots with a single atomic
    /// fetch-add and returns the base index. Fails if the block would cross
    /// the end of the vector; `slot`/`task_type` identify the forking task
    /// for the error report.
    pub(crate) fn allocate(
        &self,
        count: usize,
        slot: usize,
        task_type: TaskTypeId,
    ) -> Result<usize, FatalSignal> {
        self.instr.alloc_rmw_ops.fetch_add(1, Ordering::Relaxed);
        let base = self.next_free_core.fetch_add(count, Ordering::Relaxed);
        if base + count > self.tv.len() {
            return Err(FatalSignal::Capacity {
                capacity: self.tv.len(),
                slot,
                task_type: task_type.get(),
                requested: base + count - self.tv.len(),
            });
        }
        Ok(base)
    }

    pub(crate) fn set_join_scheduled(&self) {
        self.join_scheduled.store(true, Ordering::Relaxed);
    }

    pub(crate) fn map_scheduled(&self) -> bool {
        self.map_scheduled.load(Ordering::Relaxed)
    }

    pub(crate) fn set_map_scheduled(&self) {
        self.map_scheduled.store(true, Ordering::Relaxed);
    }

    pub(crate) fn push_map(&self, request: MapRequest) {
        self.map_queue.push(request);
    }

    pub(crate) fn pop_map(&self) -> Option<MapRequest> {
        self.map_queue.pop()
    }
}

/// Full machine state: the shared surfaces above plus the host-only epoch
/// bookkeeping (paired stacks, current epoch number, allocation watermark).
pub struct RuntimeState {
    shared: SharedState,
    join_stack: Vec<u64>,
    ndrange_stack: Vec<NDRange>,
    cen: u64,
    current_range: NDRange,
    old_next_free_core: usize,
}

impl RuntimeState {
    /// Sets up the machine for a fresh run: the root task in slot 0
    /// scheduled for epoch 0, the stacks seeded with that epoch, and the
    /// allocation counter just past the root.
    pub fn init(
        capacity: usize,
        num_task_types: u32,
        root_type: TaskTypeId,
        root_args: &ArgWords,
    ) -> Result<Self, ConfigError> {
        if capacity == 0 {
            return Err(ConfigError::ZeroCapacity);
        }
        if root_type.get() > num_task_types {
            return Err(ConfigError::UnknownTaskType {
                id: root_type.get(),
                num_task_types,
            });
        }
        let tv: Box<[TaskSlot]> = (0..capacity).map(|_| TaskSlot::new()).collect();
        tv[0].write_task(encode_task(0, root_type, num_task_types), root_args);
        Ok(RuntimeState {
            shared: SharedState {
                tv,
                next_free_core: AtomicUsize::new(1),
                join_scheduled: AtomicBool::new(false),
                map_scheduled: AtomicBool::new(false),
                map_queue: SegQueue::new(),
                num_task_types,
                instr: Instrumentation::default(),
            },
            join_stack: vec![0],
            ndrange_stack: vec![NDRange::new(0, 0)],
            cen: 0,
            current_range: NDRange::new(0, 0),
            old_next_free_core: 1,
        })
    }

    /// Epoch setup (serial): pops the next epoch number and slot range,
    /// clears both scheduling flags, and reclaims dead slots.
    ///
    /// Reclamation resets the allocation counter to just past the popped
    /// range: stacked ranges are disjoint and strictly ascending, so every
    /// slot above the popped range belongs to a completed subtree and can be
    /// reused. The post-reclamation counter value becomes the watermark that
    /// the finish phase compares against to detect forks.
    ///
    /// Panics if the machine already halted; callers must check [`halted`]
    /// first.
    ///
    /// [`halted`]: RuntimeState::halted
    pub fn epoch_setup(&mut self) -> (u64, NDRange) {
        let cen = self
            .join_stack
            .pop()
            .expect("epoch_setup on a halted machine");
        let range = self
            .ndrange_stack
            .pop()
            .expect("join stack and range stack out of step");
        self.cen = cen;
        self.current_range = range;
        // Stacked ranges are disjoint and ascending, so everything above the
        // popped range is dead and the counter may drop to just past it.
        debug_assert!(self.ndrange_stack.iter().all(|r| r.hi < range.lo));
        self.shared
            .next_free_core
            .store(range.hi + 1, Ordering::Relaxed);
        self.old_next_free_core = range.hi + 1;
        self.shared.join_scheduled.store(false, Ordering::Relaxed);
        self.shared.map_scheduled.store(false, Ordering::Relaxed);
        (cen, range)
    }

    /// Epoch finish (serial): reads the scheduling flags and allocation
    /// counter written during the parallel phase and pushes the resulting
    /// stack entries.
    ///
    /// The join push (the current epoch and its range, re-scheduled for the
    /// continuations) goes first so that the fork push (next epoch, freshly
    /// allocated range) ends up on top and is popped before it: children
    /// complete before the continuations that wait on them.
    pub fn epoch_finish(&mut self) -> Vec<StackPush> {
        let mut pushes = Vec::new();
        let range = self.current_range();
        if self.shared.join_scheduled.load(Ordering::Relaxed) {
            pushes.push(StackPush {
                epoch: self.cen,
                range,
            });
        }
        let next_free = self.shared.next_free_core();
        if next_free > self.old_next_free_core {
            pushes.push(StackPush {
                epoch: self.cen + 1,
                range: NDRange::new(self.old_next_free_core, next_free - 1),
            });
        }
        // Freshly forked slots all carry next-epoch codes (or were already
        // retired), never anything runnable now.
        #[cfg(debug_assertions)]
        for slot in self.old_next_free_core..next_free.min(self.shared.capacity()) {
            let code = self.shared.slot(slot).code();
            debug_assert!(
                code.is_invalid()
                    || code
                        .decode(self.shared.num_task_types())
                        .is_some_and(|(epoch, _)| epoch == self.cen + 1),
                "fork block slot {slot} holds a code outside epoch {}",
                self.cen + 1
            );
        }
        for push in &pushes {
            self.join_stack.push(push.epoch);
            self.ndrange_stack.push(push.range);
        }
        debug_assert_eq!(self.join_stack.len(), self.ndrange_stack.len());
        pushes
    }

    /// True when both stacks have drained and no further epoch can run.
    ///
    /// Panics if the paired stacks disagree; they are pushed and popped
    /// strictly together, so a mismatch is an engine bug.
    pub fn halted(&self) -> bool {
        assert_eq!(
            self.join_stack.len(),
            self.ndrange_stack.len(),
            "join stack and range stack depths diverged"
        );
        self.join_stack.is_empty()
    }

    /// Snapshot of the per-epoch state for tracing; call after
    /// [`epoch_finish`](RuntimeState::epoch_finish).
    pub fn snapshot_trace(&self, epoch_index: u64, launched: u64, valid_executed: u64) -> EpochTrace {
        let range = self.current_range();
        EpochTrace {
            epoch_index,
            cen: self.cen,
            ndrange_lo: range.lo as u64,
            ndrange_hi: range.hi as u64,
            launched,
            valid_executed,
            forked: (self.shared.next_free_core() - self.old_next_free_core) as u64,
            join_scheduled: self.shared.join_scheduled.load(Ordering::Relaxed),
            map_scheduled: self.shared.map_scheduled.load(Ordering::Relaxed),
            join_stack: self.join_stack.clone(),
            ndrange_stack: self
                .ndrange_stack
                .iter()
                .map(|r| (r.lo as u64, r.hi as u64))
                .collect(),
            next_free_core: self.shared.next_free_core() as u64,
        }
    }

    /// Range popped by the most recent setup phase.
    fn current_range(&self) -> NDRange {
        self.current_range
    }

    pub fn cen(&self) -> u64 {
        self.cen
    }

    pub fn num_task_types(&self) -> u32 {
        self.shared.num_task_types
    }

    pub fn capacity(&self) -> usize {
        self.shared.capacity()
    }

    pub fn next_free_core(&self) -> usize {
        self.shared.next_free_core()
    }

    pub fn join_stack(&self) -> &[u64] {
        &self.join_stack
    }

    pub fn ndrange_stack(&self) -> &[NDRange] {
        &self.ndrange_stack
    }

    /// Emitted result word of a slot. Readable until a later fork reuses
    /// the slot.
    pub fn slot_result(&self, slot: usize) -> u64 {
        self.shared.slot(slot).result()
    }

    /// Code word currently stored in a slot.
    pub fn slot_code(&self, slot: usize) -> TaskCode {
        self.shared.slot(slot).code()
    }

    pub(crate) fn shared(&self) -> &SharedState {
        &self.shared
    }

    /// Allocation watermark set by the latest setup phase; forks in the
    /// current epoch fill `[old_next_free_core, next_free_core)`.
    pub fn old_next_free_core(&self) -> usize {
        self.old_next_free_core
    }

    pub fn total_alloc_rmw_ops(&self) -> u64 {
        self.shared.instr.alloc_rmw_ops.load(Ordering::Relaxed)
    }

    pub fn total_lock_ops(&self) -> u64 {
        self.shared.instr.lock_ops.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ConfigError;

    fn ty(id: u32) -> TaskTypeId {
        TaskTypeId::new(id)
    }

    #[test]
    fn init_places_root_and_seeds_stacks() {
        let state = RuntimeState::init(16, 3, ty(2), &[7, 0, 0, 0]).unwrap();
        assert_eq!(state.slot_code(0).raw(), 2);
        assert_eq!(state.shared.slot(0).args()[0], 7);
        assert_eq!(state.next_free_core(), 1);
        assert_eq!(state.join_stack(), &[0]);
        assert_eq!(state.ndrange_stack(), &[NDRange::new(0, 0)]);
        assert!(!state.halted());
        for slot in 1..16 {
            assert!(state.slot_code(slot).is_invalid());
        }
    }

    #[test]
    fn init_with_capacity_one_is_valid() {
        let state = RuntimeState::init(1, 1, ty(1), &[0; 4]).unwrap();
        assert_eq!(state.next_free_core(), 1);
    }

    #[test]
    fn init_rejects_bad_configs() {
        assert_eq!(
            RuntimeState::init(0, 1, ty(1), &[0; 4]).err(),
            Some(ConfigError::ZeroCapacity)
        );
        assert_eq!(
            RuntimeState::init(4, 3, ty(4), &[0; 4]).err(),
            Some(ConfigError::UnknownTaskType {
                id: 4,
                num_task_types: 3
            })
        );
    }

    #[test]
    fn setup_reclaims_slots_above_the_popped_range() {
        let mut state = RuntimeState::init(32, 1, ty(1), &[0; 4]).unwrap();
        state.join_stack = vec![5];
        state.ndrange_stack = vec![NDRange::new(10, 12)];
        state.shared.next_free_core.store(20, Ordering::Relaxed);
        let (cen, range) = state.epoch_setup();
        assert_eq!(cen, 5);
        assert_eq!(range, NDRange::new(10, 12));
        assert_eq!(state.next_free_core(), 13);
        assert_eq!(state.old_next_free_core(), 13);
    }

    #[test]
    fn finish_pushes_join_below_fork() {
        let mut state = RuntimeState::init(32, 1, ty(1), &[0; 4]).unwrap();
        let (cen, _) = state.epoch_setup();
        assert_eq!(cen, 0);
        // One join and two forks during this epoch.
        state.shared.set_join_scheduled();
        let base = state.shared.allocate(2, 0, ty(1)).unwrap();
        assert_eq!(base, 1);
        let pushes = state.epoch_finish();
        assert_eq!(
            pushes,
            vec![
                StackPush {
                    epoch: 0,
                    range: NDRange::new(0, 0)
                },
                StackPush {
                    epoch: 1,
                    range: NDRange::new(1, 2)
                },
            ]
        );
        assert_eq!(state.join_stack(), &[0, 1]);
        // The fork push is on top, so children run before the continuation.
        let (next_cen, next_range) = state.epoch_setup();
        assert_eq!((next_cen, next_range), (1, NDRange::new(1, 2)));
    }

    #[test]
    fn finish_with_no_activity_shrinks_the_stacks() {
        let mut state = RuntimeState::init(8, 1, ty(1), &[0; 4]).unwrap();
        state.epoch_setup();
        let pushes = state.epoch_finish();
        assert!(pushes.is_empty());
        assert!(state.halted());
    }

    #[test]
    fn allocate_reports_the_forking_slot_on_overflow() {
        let state = RuntimeState::init(2, 1, ty(1), &[0; 4]).unwrap();
        state.shared.allocate(1, 0, ty(1)).unwrap();
        let err = state.shared.allocate(1, 0, ty(1)).unwrap_err();
        assert_eq!(
            err.into_runtime_error(),
            crate::error::RuntimeError::CapacityExhausted {
                capacity: 2,
                slot: 0,
                task_type: 1,
                requested: 1
            }
        );
    }

    #[test]
    #[should_panic(expected = "diverged")]
    fn halted_panics_on_unpaired_stacks() {
        let mut state = RuntimeState::init(8, 1, ty(1), &[0; 4]).unwrap();
        state.ndrange_stack.pop();
        state.halted();
    }

    #[test]
    #[should_panic(expected = "halted machine")]
    fn setup_after_halt_panics() {
        let mut state = RuntimeState::init(8, 1, ty(1), &[0; 4]).unwrap();
        state.epoch_setup();
        state.epoch_finish();
        assert!(state.halted());
        state.epoch_setup();
    }
}
