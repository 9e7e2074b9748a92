//! Application-facing surface: task and map-function registration, the
//! shared arena, and program execution.
//!
//! A program is a frozen bundle of task functions (ids assigned in
//! declaration order, starting at 1), optional map kernels, arena buffer
//! declarations, a root task, and a result extractor. Task bodies receive a
//! [`TaskCtx`] exposing the four scheduling primitives; map kernels receive
//! a [`MapCtx`] that deliberately has no scheduling surface at all.

mod arena;

use std::fmt;
use std::sync::Arc;

pub use arena::{Arena, ArenaBuf, ArenaSpec, BufId};
use serde::Serialize;

use crate::error::{ConfigError, RuntimeError};
use crate::executor::{self, EpochStats};
use crate::metrics::Metrics;
use crate::tvm::{ArgWords, EpochTrace, RuntimeState, TaskTypeId, TASK_ARG_WORDS};
pub use crate::executor::BackendConfig;

/// Identifier of a registered map kernel. Map ids live in their own space,
/// separate from task type ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MapFnId(u32);

impl MapFnId {
    pub const fn new(id: u32) -> Self {
        assert!(id >= 1, "map function ids start at 1");
        MapFnId(id)
    }

    pub const fn get(self) -> u32 {
        self.0
    }
}

/// Handle to a forked child, returned by [`TaskCtx::fork`].
///
/// The parent stores it in its continuation's arguments (via
/// [`Arg::Child`]); when the continuation later runs, the argument word
/// holds the child's slot index and can be passed to
/// [`TaskCtx::child_result`] to read what the child emitted. Under the
/// bulk-parallel backend the concrete index is assigned when the
/// work-group's forks are committed, so the handle is opaque during the
/// forking task's own execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChildHandle(pub(crate) HandleRepr);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum HandleRepr {
    /// Final task-vector slot index.
    Slot(u64),
    /// Rank within the current work-group's pending forks; resolved to
    /// `block_base + rank` at group commit.
    Pending(u32),
}

/// One argument passed to `fork`, `join`, or `map`.
#[derive(Debug, Clone, Copy)]
pub enum Arg {
    Word(u64),
    Child(ChildHandle),
}

impl From<u64> for Arg {
    fn from(w: u64) -> Self {
        Arg::Word(w)
    }
}

impl From<ChildHandle> for Arg {
    fn from(h: ChildHandle) -> Self {
        Arg::Child(h)
    }
}

/// Per-task execution handle: the four scheduling primitives plus access to
/// the task's own arguments and the shared arena.
///
/// `join` and `emit` are terminal and mutually exclusive: each may be called
/// at most once, and no primitive may be called after either. `fork` makes
/// the child runnable no earlier than the next epoch; `map` defers the
/// kernel until after the current epoch's finish phase.
pub trait TaskCtx {
    /// This task's slot in the task vector.
    fn slot(&self) -> usize;

    /// Epoch number under which this task is executing.
    fn cen(&self) -> u64;

    /// Reads one of the task's own argument words.
    fn arg(&self, index: usize) -> u64;

    fn arena(&self) -> &Arena;

    /// Spawns `ty(args)` to run in a later epoch; returns a handle the
    /// parent may store for reading the child's emitted result.
    fn fork(&mut self, ty: TaskTypeId, args: &[Arg]) -> ChildHandle;

    /// Schedules `ty(args)` to replace this task after everything it forked
    /// has completed. Terminal.
    fn join(&mut self, ty: TaskTypeId, args: &[Arg]);

    /// Stores a result word in this task's slot and retires it. Terminal.
    fn emit(&mut self, value: u64);

    /// Queues a data-parallel kernel over `range` work-items, executed
    /// after this epoch completes and before the next one starts.
    fn map(&mut self, f: MapFnId, args: &[Arg], range: u64);

    /// Reads the result word emitted by a child, given the argument word
    /// produced from its [`ChildHandle`].
    fn child_result(&self, child_slot: u64) -> u64;
}

/// Execution context for map work-items: the arena, the request arguments,
/// and this item's index. No scheduling primitives — map kernels cannot
/// fork, join, emit, or map.
pub struct MapCtx<'a> {
    pub(crate) arena: &'a Arena,
    pub(crate) args: ArgWords,
    pub(crate) index: u64,
    pub(crate) range: u64,
}

impl MapCtx<'_> {
    pub fn arena(&self) -> &Arena {
        self.arena
    }

    pub fn arg(&self, index: usize) -> u64 {
        self.args[index]
    }

    /// This work-item's index in `[0, range)`.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn range(&self) -> u64 {
        self.range
    }
}

pub type TaskFn = Arc<dyn Fn(&mut dyn TaskCtx) + Send + Sync>;
pub type MapFn = Arc<dyn Fn(&MapCtx<'_>) + Send + Sync>;
pub type ExtractFn = Arc<dyn Fn(&Arena, u64) -> ResultSummary + Send + Sync>;

pub(crate) struct Registry {
    tasks: Vec<(String, TaskFn)>,
    maps: Vec<(String, MapFn)>,
}

impl Registry {
    pub(crate) fn num_task_types(&self) -> u32 {
        self.tasks.len() as u32
    }

    pub(crate) fn task_fn(&self, ty: TaskTypeId) -> &TaskFn {
        &self.tasks[(ty.get() - 1) as usize].1
    }

    pub(crate) fn task_name(&self, ty: TaskTypeId) -> &str {
        &self.tasks[(ty.get() - 1) as usize].0
    }

    pub(crate) fn map_fn(&self, id: MapFnId) -> &MapFn {
        &self.maps[(id.get() - 1) as usize].1
    }

    pub(crate) fn num_map_fns(&self) -> u32 {
        self.maps.len() as u32
    }
}

/// Condensed program output, produced by the result extractor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ResultSummary {
    Unit,
    Word(u64),
    Words(Vec<u64>),
    Complex(Vec<(f64, f64)>),
}

impl fmt::Display for ResultSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResultSummary::Unit => Ok(()),
            ResultSummary::Word(w) => write!(f, "{w}"),
            ResultSummary::Words(ws) => {
                for w in ws {
                    if *w == u64::MAX {
                        writeln!(f, "inf")?;
                    } else {
                        writeln!(f, "{w}")?;
                    }
                }
                Ok(())
            }
            ResultSummary::Complex(cs) => {
                for (re, im) in cs {
                    writeln!(f, "{re} {im}")?;
                }
                Ok(())
            }
        }
    }
}

/// Frozen program: registry, arena declarations, root task, and extractor.
pub struct Program {
    name: String,
    registry: Registry,
    arena_spec: ArenaSpec,
    root_type: TaskTypeId,
    root_args: ArgWords,
    extractor: ExtractFn,
}

impl Program {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_task_types(&self) -> u32 {
        self.registry.num_task_types()
    }

    pub fn root_type(&self) -> TaskTypeId {
        self.root_type
    }

    pub fn root_args(&self) -> &ArgWords {
        &self.root_args
    }

    pub fn task_name(&self, ty: TaskTypeId) -> &str {
        self.registry.task_name(ty)
    }

    pub(crate) fn registry(&self) -> &Registry {
        &self.registry
    }

    pub(crate) fn extract(&self, arena: &Arena, root_result: u64) -> ResultSummary {
        (self.extractor)(arena, root_result)
    }

    /// Instantiates a fresh arena for one run. Runs never share arenas.
    pub fn new_arena(&self) -> Arena {
        Arena::instantiate(&self.arena_spec)
    }
}

/// Builds a [`Program`]. Task and map ids are assigned in declaration
/// order, starting at 1, and are stable: the same declaration order always
/// yields the same ids and therefore the same code stream.
pub struct ProgramBuilder {
    name: String,
    tasks: Vec<(String, TaskFn)>,
    maps: Vec<(String, MapFn)>,
    arena_spec: ArenaSpec,
    root: Option<(TaskTypeId, ArgWords)>,
    extractor: Option<ExtractFn>,
}

impl ProgramBuilder {
    pub fn new(name: &str) -> Self {
        ProgramBuilder {
            name: name.to_string(),
            tasks: Vec::new(),
            maps: Vec::new(),
            arena_spec: ArenaSpec::new(),
            root: None,
            extractor: None,
        }
    }

    pub fn task(
        &mut self,
        name: &str,
        f: impl Fn(&mut dyn TaskCtx) + Send + Sync + 'static,
    ) -> TaskTypeId {
        self.tasks.push((name.to_string(), Arc::new(f)));
        TaskTypeId::new(self.tasks.len() as u32)
    }

    pub fn map_fn(
        &mut self,
        name: &str,
        f: impl Fn(&MapCtx<'_>) + Send + Sync + 'static,
    ) -> MapFnId {
        self.maps.push((name.to_string(), Arc::new(f)));
        MapFnId::new(self.maps.len() as u32)
    }

    pub fn buffer(&mut self, name: &str, init: Vec<u64>) -> BufId {
        self.arena_spec.declare(name, init)
    }

    pub fn buffer_f64(&mut self, name: &str, init: &[f64]) -> BufId {
        self.arena_spec.declare_f64(name, init)
    }

    /// Sets the root task written into slot 0; it runs in epoch 0.
    pub fn root(&mut self, ty: TaskTypeId, args: &[u64]) {
        assert!(args.len() <= TASK_ARG_WORDS, "too many root arguments");
        let mut words = [0u64; TASK_ARG_WORDS];
        words[..args.len()].copy_from_slice(args);
        self.root = Some((ty, words));
    }

    pub fn extractor(&mut self, f: impl Fn(&Arena, u64) -> ResultSummary + Send + Sync + 'static) {
        self.extractor = Some(Arc::new(f));
    }

    /// Validates and freezes the program.
    pub fn build(self) -> Result<Program, ConfigError> {
        if self.tasks.is_empty() {
            return Err(ConfigError::NoTaskFunctions);
        }
        for (i, (name, _)) in self.tasks.iter().enumerate() {
            if self.tasks[..i].iter().any(|(n, _)| n == name) {
                return Err(ConfigError::DuplicateName {
                    kind: "task",
                    name: name.clone(),
                });
            }
        }
        for (i, (name, _)) in self.maps.iter().enumerate() {
            if self.maps[..i].iter().any(|(n, _)| n == name) {
                return Err(ConfigError::DuplicateName {
                    kind: "map",
                    name: name.clone(),
                });
            }
        }
        let (root_type, root_args) = self
            .root
            .ok_or_else(|| ConfigError::Invalid("program has no root task".into()))?;
        if root_type.get() > self.tasks.len() as u32 {
            return Err(ConfigError::UnknownTaskType {
                id: root_type.get(),
                num_task_types: self.tasks.len() as u32,
            });
        }
        Ok(Program {
            name: self.name,
            registry: Registry {
                tasks: self.tasks,
                maps: self.maps,
            },
            arena_spec: self.arena_spec,
            root_type,
            root_args,
            extractor: self
                .extractor
                .unwrap_or_else(|| Arc::new(|_, _| ResultSummary::Unit)),
        })
    }
}

/// Engine-level run options.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendConfig,
    /// Task-vector capacity; exceeding it is a fatal runtime error.
    pub capacity: usize,
    /// Safety valve converting non-terminating programs into an error.
    pub epoch_limit: u64,
    /// Collect the per-epoch trace into the result.
    pub collect_trace: bool,
    /// Record executed (slot, type, args) triples per epoch into the stats
    /// passed to observers. Diagnostic; off by default.
    pub record_executed: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendConfig::Sequential,
            capacity: 1 << 20,
            epoch_limit: 1_000_000,
            collect_trace: false,
            record_executed: false,
        }
    }
}

/// Outcome of one program run.
#[derive(Debug)]
pub struct ProgramResult {
    pub summary: ResultSummary,
    pub metrics: Metrics,
    pub trace: Option<Vec<EpochTrace>>,
}

/// Runs a program to halt under the configured backend.
pub fn run_program(program: &Program, config: &RunConfig) -> Result<ProgramResult, RuntimeError> {
    run_program_observed(program, config, |_, _| {})
}

/// Like [`run_program`] but invokes `observer` after every epoch with the
/// trace record and executor statistics for that epoch.
pub fn run_program_observed(
    program: &Program,
    config: &RunConfig,
    mut observer: impl FnMut(&EpochTrace, &EpochStats),
) -> Result<ProgramResult, RuntimeError> {
    let arena = program.new_arena();
    let mut state = RuntimeState::init(
        config.capacity,
        program.num_task_types(),
        program.root_type(),
        program.root_args(),
    )?;
    let mut traces = if config.collect_trace {
        Some(Vec::new())
    } else {
        None
    };
    let metrics = executor::run_to_completion(&mut state, program, &arena, config, {
        let traces = &mut traces;
        &mut move |trace: &EpochTrace, stats: &EpochStats| {
            if let Some(ts) = traces.as_mut() {
                ts.push(trace.clone());
            }
            observer(trace, stats);
        }
    })?;
    let summary = program.extract(&arena, state.slot_result(0));
    Ok(ProgramResult {
        summary,
        metrics,
        trace: traces,
    })
}
