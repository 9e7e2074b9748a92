//! A direct interpreter of the abstract machine, kept deliberately naive:
//! the schedule lives in an explicit stack of per-slot boolean masks rather
//! than packed epoch codes, fork slots come from a plain bump counter with
//! no reclamation, and per-epoch fork/join masks are materialized as full
//! bit vectors.
//!
//! It runs the same [`Program`] values as the engine and serves as the
//! differential-testing oracle: for any program, the sequence of
//! (epoch number, executed task set) pairs must match the engine's.

use std::collections::VecDeque;

use crate::error::{ConfigError, RuntimeError};
use crate::executor::ExecutedTask;
use crate::program::{
    Arena, Arg, ChildHandle, HandleRepr, MapCtx, MapFnId, Program, ResultSummary, TaskCtx,
};
use crate::tvm::{ArgWords, TaskTypeId, TASK_ARG_WORDS};

struct RefSlot {
    task: Option<(TaskTypeId, ArgWords)>,
    result: u64,
}

struct RefMapRequest {
    fn_id: MapFnId,
    args: ArgWords,
    range: u64,
}

/// What one interpreted epoch did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefEpoch {
    /// Epoch number: the height of the popped mask on the stack.
    pub cen: u64,
    /// Tasks executed this epoch, in ascending slot order.
    pub executed: Vec<ExecutedTask>,
    /// Map work-items drained after this epoch.
    pub map_items: u64,
}

/// Interpreter state for one run.
///
/// Each stacked mask carries a numeric epoch label maintained by the host
/// rule (a re-pushed join mask keeps the current label, a fork mask gets
/// the current label plus one). The label is reporting metadata only —
/// scheduling is entirely mask-driven. Labels and stack heights coincide
/// except after fork-only epochs, where the fork mask reoccupies the popped
/// mask's height while its label still increments.
pub struct ReferenceMachine<'p> {
    program: &'p Program,
    arena: Arena,
    tv: Vec<RefSlot>,
    mask_stack: Vec<(u64, Vec<bool>)>,
    next_free: usize,
    map_queue: VecDeque<RefMapRequest>,
}

impl<'p> ReferenceMachine<'p> {
    pub fn new(program: &'p Program, capacity: usize) -> Result<Self, ConfigError> {
        if capacity == 0 {
            return Err(ConfigError::ZeroCapacity);
        }
        let mut tv: Vec<RefSlot> = (0..capacity)
            .map(|_| RefSlot {
                task: None,
                result: 0,
            })
            .collect();
        tv[0].task = Some((program.root_type(), *program.root_args()));
        let mut root_mask = vec![false; capacity];
        root_mask[0] = true;
        Ok(ReferenceMachine {
            program,
            arena: program.new_arena(),
            tv,
            mask_stack: vec![(0, root_mask)],
            next_free: 1,
            map_queue: VecDeque::new(),
        })
    }

    /// Runs to halt (empty mask stack) and returns the per-epoch log.
    pub fn run(&mut self, epoch_limit: u64) -> Result<Vec<RefEpoch>, RuntimeError> {
        let mut log = Vec::new();
        while !self.mask_stack.is_empty() {
            if log.len() as u64 >= epoch_limit {
                return Err(RuntimeError::EpochLimit { limit: epoch_limit });
            }
            log.push(self.step_epoch());
        }
        Ok(log)
    }

    fn step_epoch(&mut self) -> RefEpoch {
        let (cen, task_mask) = self.mask_stack.pop().expect("ran past halt");
        let capacity = self.tv.len();
        let mut fork_mask = vec![false; capacity];
        let mut join_mask = vec![false; capacity];
        let mut executed = Vec::new();

        // True bits never sit at or above the bump allocator's watermark.
        let live = self.next_free;
        for slot in 0..live {
            if !task_mask[slot] {
                continue;
            }
            let (ty, args) = self.tv[slot]
                .task
                .expect("true mask bit over an empty task entry");
            executed.push(ExecutedTask {
                slot,
                task_type: ty,
                args,
            });
            let f = self.program.registry().task_fn(ty).clone();
            let mut ctx = RefCtx {
                machine: self,
                slot,
                cen,
                args,
                fork_mask: &mut fork_mask,
                join_mask: &mut join_mask,
                terminal: false,
            };
            f(&mut ctx);
            let terminal = ctx.terminal;
            if !terminal {
                self.tv[slot].task = None;
            }
        }

        // Joins run after everything forked this epoch, so their mask goes
        // under the fork mask.
        if join_mask.iter().any(|&b| b) {
            self.mask_stack.push((cen, join_mask));
        }
        if fork_mask.iter().any(|&b| b) {
            self.mask_stack.push((cen + 1, fork_mask));
        }

        let mut map_items = 0;
        while let Some(request) = self.map_queue.pop_front() {
            let f = self.program.registry().map_fn(request.fn_id).clone();
            for index in 0..request.range {
                f(&MapCtx {
                    arena: &self.arena,
                    args: request.args,
                    index,
                    range: request.range,
                });
            }
            map_items += request.range;
        }

        RefEpoch {
            cen,
            executed,
            map_items,
        }
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn root_result(&self) -> u64 {
        self.tv[0].result
    }

    /// Result summary through the program's own extractor.
    pub fn summary(&self) -> ResultSummary {
        self.program.extract(&self.arena, self.root_result())
    }
}

struct RefCtx<'m, 'p> {
    machine: &'m mut ReferenceMachine<'p>,
    slot: usize,
    cen: u64,
    args: ArgWords,
    fork_mask: &'m mut Vec<bool>,
    join_mask: &'m mut Vec<bool>,
    terminal: bool,
}

impl RefCtx<'_, '_> {
    fn resolve(args: &[Arg]) -> ArgWords {
        let mut words = [0u64; TASK_ARG_WORDS];
        for (dst, arg) in words.iter_mut().zip(args) {
            *dst = match arg {
                Arg::Word(w) => *w,
                Arg::Child(ChildHandle(HandleRepr::Slot(slot))) => *slot,
                Arg::Child(ChildHandle(HandleRepr::Pending(_))) => {
                    unreachable!("interpreter handles are always resolved")
                }
            };
        }
        words
    }
}

impl TaskCtx for RefCtx<'_, '_> {
    fn slot(&self) -> usize {
        self.slot
    }

    fn cen(&self) -> u64 {
        self.cen
    }

    fn arg(&self, index: usize) -> u64 {
        self.args[index]
    }

    fn arena(&self) -> &Arena {
        &self.machine.arena
    }

    fn fork(&mut self, ty: TaskTypeId, args: &[Arg]) -> ChildHandle {
        assert!(!self.terminal, "contract violation: fork after join/emit");
        let slot = self.machine.next_free;
        assert!(
            slot < self.machine.tv.len(),
            "interpreter task vector exhausted"
        );
        self.machine.next_free += 1;
        self.machine.tv[slot].task = Some((ty, Self::resolve(args)));
        self.fork_mask[slot] = true;
        ChildHandle(HandleRepr::Slot(slot as u64))
    }

    fn join(&mut self, ty: TaskTypeId, args: &[Arg]) {
        assert!(!self.terminal, "contract violation: join after join/emit");
        self.terminal = true;
        self.machine.tv[self.slot].task = Some((ty, Self::resolve(args)));
        self.join_mask[self.slot] = true;
    }

    fn emit(&mut self, value: u64) {
        assert!(!self.terminal, "contract violation: emit after join/emit");
        self.terminal = true;
        self.machine.tv[self.slot].result = value;
        self.machine.tv[self.slot].task = None;
    }

    fn map(&mut self, f: MapFnId, args: &[Arg], range: u64) {
        assert!(!self.terminal, "contract violation: map after join/emit");
        assert!(range >= 1, "contract violation: map range must be at least 1");
        self.machine.map_queue.push_back(RefMapRequest {
            fn_id: f,
            args: Self::resolve(args),
            range,
        });
    }

    fn child_result(&self, child_slot: u64) -> u64 {
        self.machine.tv[child_slot as usize].result
    }
}
