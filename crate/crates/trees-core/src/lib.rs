//! An epoch-synchronized task-parallel runtime.
//!
//! Programs are expressed as tasks that may `fork` next-epoch children,
//! `join` a continuation that runs after those children complete, `emit` a
//! result word, or `map` a deferred data-parallel kernel. The engine stores
//! tasks in a fixed-capacity task vector and drives execution as a series of
//! bulk-synchronized epochs: a serial setup phase pops the epoch number and
//! slot range to launch, a parallel phase runs every runnable task in that
//! range, and a serial finish phase pushes the ranges scheduled by this
//! epoch's forks and joins. All cross-task coordination inside an epoch is
//! done with atomic increments and set-to-one flags; there are no locks on
//! the execution path.
//!
//! The crate is organized as:
//!
//! - [`tvm`] — machine state (task vector, paired join/range stacks, epoch
//!   counters) and the serial host protocol around each epoch.
//! - [`executor`] — the parallel phase: sequential and bulk-parallel
//!   backends, the task-side primitives, and the epoch driver loop.
//! - [`program`] — the application-facing surface: task registration, the
//!   shared-memory arena, and program execution.
//! - [`metrics`] — work/critical-path accounting and the analytical
//!   execution-time model.
//! - [`apps`] — the bundled application suite with independent oracles.
//! - [`reference`] — a direct mask-stack interpreter of the abstract
//!   machine, used for differential testing of the engine.

#![forbid(unsafe_code)]

pub mod apps;
mod error;
pub mod executor;
pub mod metrics;
pub mod program;
pub mod reference;
pub mod tvm;

pub use error::{ConfigError, RuntimeError};
pub use executor::{BackendConfig, EpochStats, ExecutedTask, DEFAULT_GROUP_SIZE};
pub use metrics::{model_time, space_bounds, Metrics, ModelCase, ModelError, PerfModelParams};
pub use program::{
    run_program, run_program_observed, Arena, ArenaBuf, ArenaSpec, Arg, BufId, ChildHandle,
    MapCtx, MapFnId, Program, ProgramBuilder, ProgramResult, ResultSummary, RunConfig, TaskCtx,
};
pub use tvm::{
    encode_task, EpochTrace, NDRange, RuntimeState, StackPush, TaskCode, TaskTypeId,
    TASK_ARG_WORDS, WORD_NONE,
};
