use std::panic::panic_any;

use crate::error::FatalSignal;
use crate::program::{Arena, Arg, ChildHandle, HandleRepr, MapFnId, Registry, TaskCtx};
use crate::tvm::{encode_task, ArgWords, MapRequest, SharedState, TaskTypeId, TASK_ARG_WORDS};

/// Fixed-width argument list as passed by a task body, before child handles
/// are resolved to slot indices.
#[derive(Clone, Copy)]
pub(crate) struct PendingArgs {
    args: [Arg; TASK_ARG_WORDS],
}

impl PendingArgs {
    fn capture(args: &[Arg]) -> Self {
        assert!(
            args.len() <= TASK_ARG_WORDS,
            "contract violation: at most {TASK_ARG_WORDS} arguments per task"
        );
        let mut out = [Arg::Word(0); TASK_ARG_WORDS];
        out[..args.len()].copy_from_slice(args);
        PendingArgs { args: out }
    }

    /// Resolves handle arguments to slot words. `block_base` is the start of
    /// the group's committed fork block; pending ranks offset from it.
    fn resolve(&self, block_base: Option<usize>) -> ArgWords {
        let mut words = [0u64; TASK_ARG_WORDS];
        for (dst, arg) in words.iter_mut().zip(&self.args) {
            *dst = match arg {
                Arg::Word(w) => *w,
                Arg::Child(ChildHandle(HandleRepr::Slot(slot))) => *slot,
                Arg::Child(ChildHandle(HandleRepr::Pending(rank))) => {
                    let base =
                        block_base.expect("pending child handle without a committed fork block");
                    (base + *rank as usize) as u64
                }
            };
        }
        words
    }
}

pub(crate) struct PendingFork {
    pub parent_slot: usize,
    pub ty: TaskTypeId,
    pub args: PendingArgs,
}

struct PendingJoin {
    slot: usize,
    ty: TaskTypeId,
    args: PendingArgs,
}

struct PendingMap {
    fn_id: MapFnId,
    args: PendingArgs,
    range: u64,
}

/// Buffers one work-group's fork, join, and map requests while its tasks
/// run. Committed in one shot at group end so the whole group costs a
/// single allocation fetch-add no matter how many tasks forked.
#[derive(Default)]
pub(crate) struct GroupAccumulator {
    forks: Vec<PendingFork>,
    joins: Vec<PendingJoin>,
    maps: Vec<PendingMap>,
}

impl GroupAccumulator {
    pub(crate) fn has_forks(&self) -> bool {
        !self.forks.is_empty()
    }
}

/// Writes a group's buffered requests into shared state: one block
/// allocation for all forks (slots assigned by in-group rank), then the
/// join replacements and map requests with their handle arguments resolved
/// against the block base.
pub(crate) fn commit_group(
    acc: &GroupAccumulator,
    shared: &SharedState,
    cen: u64,
) -> Result<(), FatalSignal> {
    let num_types = shared.num_task_types();
    let base = if acc.forks.is_empty() {
        None
    } else {
        let first = &acc.forks[0];
        Some(shared.allocate(acc.forks.len(), first.parent_slot, first.ty)?)
    };
    if let Some(base) = base {
        for (rank, fork) in acc.forks.iter().enumerate() {
            shared.slot(base + rank).write_task(
                encode_task(cen + 1, fork.ty, num_types),
                &fork.args.resolve(Some(base)),
            );
        }
    }
    for join in &acc.joins {
        shared.slot(join.slot).write_task(
            encode_task(cen, join.ty, num_types),
            &join.args.resolve(base),
        );
    }
    for map in &acc.maps {
        shared.push_map(MapRequest {
            fn_id: map.fn_id,
            args: map.args.resolve(base),
            range: map.range,
        });
    }
    Ok(())
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum Terminal {
    Joined,
    Emitted,
}

enum Mode<'g> {
    /// Forks allocate immediately, one fetch-add per call; joins and maps
    /// write through directly. Used by the sequential backend.
    Immediate,
    /// Forks, joins, and maps buffer into the group accumulator and are
    /// written at group commit.
    Batched(&'g mut GroupAccumulator),
}

/// Task-side view of the machine during one task's execution.
pub(crate) struct ExecCtx<'a> {
    slot: usize,
    cen: u64,
    args: ArgWords,
    shared: &'a SharedState,
    arena: &'a Arena,
    registry: &'a Registry,
    mode: Mode<'a>,
    terminal: Option<Terminal>,
    forked: bool,
}

impl<'a> ExecCtx<'a> {
    pub(crate) fn immediate(
        slot: usize,
        cen: u64,
        args: ArgWords,
        shared: &'a SharedState,
        arena: &'a Arena,
        registry: &'a Registry,
    ) -> Self {
        ExecCtx {
            slot,
            cen,
            args,
            shared,
            arena,
            registry,
            mode: Mode::Immediate,
            terminal: None,
            forked: false,
        }
    }

    pub(crate) fn batched(
        slot: usize,
        cen: u64,
        args: ArgWords,
        shared: &'a SharedState,
        arena: &'a Arena,
        registry: &'a Registry,
        acc: &'a mut GroupAccumulator,
    ) -> Self {
        ExecCtx {
            slot,
            cen,
            args,
            shared,
            arena,
            registry,
            mode: Mode::Batched(acc),
            terminal: None,
            forked: false,
        }
    }

    pub(crate) fn forked(&self) -> bool {
        self.forked
    }

    /// Called after the task body returns. A task that neither joined nor
    /// emitted is done for good: its slot is marked invalid so later epochs
    /// launching the same range skip it.
    pub(crate) fn retire(self) {
        if self.terminal.is_none() {
            self.shared.slot(self.slot).invalidate();
        }
    }

    fn check_live(&self, primitive: &str) {
        match self.terminal {
            None => {}
            Some(Terminal::Joined) => {
                panic!("contract violation: {primitive} after join (join is terminal)")
            }
            Some(Terminal::Emitted) => {
                panic!("contract violation: {primitive} after emit (emit is terminal)")
            }
        }
    }

    fn check_task_type(&self, ty: TaskTypeId) {
        let n = self.registry.num_task_types();
        if ty.get() > n {
            panic!(
                "contract violation: task type {} not registered ({} task types)",
                ty.get(),
                n
            );
        }
    }
}

impl TaskCtx for ExecCtx<'_> {
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
        self.arena
    }

    fn fork(&mut self, ty: TaskTypeId, args: &[Arg]) -> ChildHandle {
        self.check_live("fork");
        self.check_task_type(ty);
        self.forked = true;
        let pending = PendingArgs::capture(args);
        match &mut self.mode {
            Mode::Immediate => {
                let slot = match self.shared.allocate(1, self.slot, ty) {
                    Ok(slot) => slot,
                    Err(signal) => panic_any(signal),
                };
                self.shared.slot(slot).write_task(
                    encode_task(self.cen + 1, ty, self.shared.num_task_types()),
                    &pending.resolve(None),
                );
                ChildHandle(HandleRepr::Slot(slot as u64))
            }
            Mode::Batched(acc) => {
                let rank = acc.forks.len() as u32;
                acc.forks.push(PendingFork {
                    parent_slot: self.slot,
                    ty,
                    args: pending,
                });
                ChildHandle(HandleRepr::Pending(rank))
            }
        }
    }

    fn join(&mut self, ty: TaskTypeId, args: &[Arg]) {
        self.check_live("join");
        self.check_task_type(ty);
        self.terminal = Some(Terminal::Joined);
        self.shared.set_join_scheduled();
        let pending = PendingArgs::capture(args);
        match &mut self.mode {
            Mode::Immediate => {
                self.shared.slot(self.slot).write_task(
                    encode_task(self.cen, ty, self.shared.num_task_types()),
                    &pending.resolve(None),
                );
            }
            Mode::Batched(acc) => {
                acc.joins.push(PendingJoin {
                    slot: self.slot,
                    ty,
                    args: pending,
                });
            }
        }
    }

    fn emit(&mut self, value: u64) {
        self.check_live("emit");
        self.terminal = Some(Terminal::Emitted);
        self.shared.slot(self.slot).write_result(value);
    }

    fn map(&mut self, f: MapFnId, args: &[Arg], range: u64) {
        self.check_live("map");
        if f.get() > self.registry.num_map_fns() {
            panic!(
                "contract violation: map function {} not registered ({} map functions)",
                f.get(),
                self.registry.num_map_fns()
            );
        }
        if range == 0 {
            panic!("contract violation: map range must be at least 1");
        }
        self.shared.set_map_scheduled();
        let pending = PendingArgs::capture(args);
        match &mut self.mode {
            Mode::Immediate => {
                self.shared.push_map(MapRequest {
                    fn_id: f,
                    args: pending.resolve(None),
                    range,
                });
            }
            Mode::Batched(acc) => {
                acc.maps.push(PendingMap {
                    fn_id: f,
                    args: pending,
                    range,
                });
            }
        }
    }

    fn child_result(&self, child_slot: u64) -> u64 {
        let slot = child_slot as usize;
        if slot >= self.shared.capacity() {
            panic!("contract violation: child slot {child_slot} out of range");
        }
        self.shared.slot(slot).result()
    }
}
