//! The parallel phase: runs every runnable task of the current slot range
//! under a pluggable backend and provides the scheduling primitives to task
//! bodies.
//!
//! The sequential backend visits the range in ascending slot order and
//! allocates fork slots with one atomic increment per call, which makes it
//! fully deterministic. The bulk-parallel backend splits the range into
//! work-groups, hands groups to worker threads through an atomic cursor,
//! and batches each group's forks: requests accumulate while the group's
//! tasks run, then a single fetch-add reserves the whole block and the
//! buffered entries are written out with slots assigned by in-group rank.
//! Both backends allocate the same set of slots per epoch; only the
//! assignment of tasks to slots differs.
//!
//! Worker threads never take a lock: the only shared-state operations on the
//! execution path are the allocation fetch-add, set-to-one stores on the two
//! scheduling flags, owned-slot writes, and the lock-free map queue. Epoch
//! boundaries are full barriers (worker scopes join before the host resumes),
//! so everything written in an epoch is visible to the next.

mod context;
mod parallel;

use std::panic::{catch_unwind, AssertUnwindSafe};

use context::ExecCtx;

use crate::error::{FatalSignal, RuntimeError};
use crate::metrics::Metrics;
use crate::program::{Arena, MapCtx, Program, RunConfig};
use crate::tvm::{ArgWords, MapRequest, NDRange, RuntimeState, SharedState, TaskTypeId};

/// Backend selection for the parallel phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendConfig {
    /// Single-threaded, ascending slot order, per-call fork allocation.
    Sequential,
    /// Work-groups distributed across `workers` threads, group-batched
    /// fork allocation.
    BulkParallel { workers: usize, group_size: usize },
}

/// Default work-group width for the bulk-parallel backend.
pub const DEFAULT_GROUP_SIZE: usize = 256;

impl BackendConfig {
    pub fn parallel(workers: usize) -> Self {
        BackendConfig::BulkParallel {
            workers,
            group_size: DEFAULT_GROUP_SIZE,
        }
    }
}

/// One executed task, recorded when [`RunConfig::record_executed`] is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutedTask {
    pub slot: usize,
    pub task_type: TaskTypeId,
    pub args: ArgWords,
}

/// Per-epoch executor statistics, passed to run observers alongside the
/// trace record. Counts here are instrumentation, not part of the trace
/// format.
#[derive(Debug, Clone, Default)]
pub struct EpochStats {
    pub cen: u64,
    pub launched: u64,
    pub valid_executed: u64,
    pub forked: u64,
    /// Read-modify-write operations on the slot allocation counter during
    /// this epoch. Under the bulk-parallel backend this is bounded by the
    /// number of work-groups that forked at least once.
    pub alloc_rmw_ops: u64,
    /// Lock acquisitions on the execution path. Always zero; exported so
    /// the property is checkable rather than merely claimed.
    pub lock_ops: u64,
    pub groups_total: u64,
    pub groups_with_forks: u64,
    /// Map requests and total work-items drained after this epoch.
    pub map_requests: u64,
    pub map_items: u64,
    /// Executed tasks, when recording was requested.
    pub executed: Option<Vec<ExecutedTask>>,
}

pub(crate) struct LaunchOutcome {
    pub launched: u64,
    pub valid_executed: u64,
    pub groups_total: u64,
    pub groups_with_forks: u64,
    pub executed: Option<Vec<ExecutedTask>>,
}

/// Runs one epoch's tasks over `range` under the selected backend. Every
/// slot in the range is visited exactly once; slots whose code is not
/// runnable at `cen` are skipped immediately.
pub(crate) fn launch_epoch(
    state: &RuntimeState,
    program: &Program,
    arena: &Arena,
    cen: u64,
    range: NDRange,
    backend: BackendConfig,
    record_executed: bool,
) -> Result<LaunchOutcome, RuntimeError> {
    match backend {
        BackendConfig::Sequential => {
            launch_sequential(state.shared(), program, arena, cen, range, record_executed)
        }
        BackendConfig::BulkParallel {
            workers,
            group_size,
        } => parallel::launch_parallel(
            state.shared(),
            program,
            arena,
            cen,
            range,
            workers.max(1),
            group_size.max(1),
            record_executed,
        ),
    }
}

fn launch_sequential(
    shared: &SharedState,
    program: &Program,
    arena: &Arena,
    cen: u64,
    range: NDRange,
    record_executed: bool,
) -> Result<LaunchOutcome, RuntimeError> {
    let num_types = shared.num_task_types();
    let mut valid = 0u64;
    let mut executed = record_executed.then(Vec::new);
    let mut any_fork = false;
    for slot in range.lo..=range.hi {
        let code = shared.slot(slot).code();
        if !code.is_runnable(cen, num_types) {
            continue;
        }
        valid += 1;
        let (_, ty) = code.decode(num_types).expect("runnable code decodes");
        let args = shared.slot(slot).args();
        if let Some(list) = executed.as_mut() {
            list.push(ExecutedTask {
                slot,
                task_type: ty,
                args,
            });
        }
        let mut ctx = ExecCtx::immediate(slot, cen, args, shared, arena, program.registry());
        run_task_body(program, ty, &mut ctx, slot)?;
        any_fork |= ctx.forked();
        ctx.retire();
    }
    Ok(LaunchOutcome {
        launched: range.size() as u64,
        valid_executed: valid,
        groups_total: 1,
        groups_with_forks: any_fork as u64,
        executed,
    })
}

/// Dispatches one task body, converting panics into runtime errors that
/// identify the slot and task type.
pub(crate) fn run_task_body(
    program: &Program,
    ty: TaskTypeId,
    ctx: &mut ExecCtx<'_>,
    slot: usize,
) -> Result<(), RuntimeError> {
    let f = program.registry().task_fn(ty).clone();
    catch_unwind(AssertUnwindSafe(|| f(ctx)))
        .map_err(|payload| panic_to_error(payload, slot, ty))
}

fn panic_to_error(
    payload: Box<dyn std::any::Any + Send>,
    slot: usize,
    ty: TaskTypeId,
) -> RuntimeError {
    match payload.downcast::<FatalSignal>() {
        Ok(signal) => signal.into_runtime_error(),
        Err(payload) => RuntimeError::TaskFailed {
            slot,
            task_type: ty.get(),
            message: panic_message(payload),
        },
    }
}

pub(crate) fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

/// Drains every queued map request, running each over its full range.
/// Effects are visible before the next epoch's setup phase. Returns
/// (requests, work items) drained.
pub(crate) fn drain_maps(
    state: &RuntimeState,
    program: &Program,
    arena: &Arena,
    backend: BackendConfig,
) -> Result<(u64, u64), RuntimeError> {
    let shared = state.shared();
    let mut requests = Vec::new();
    while let Some(request) = shared.pop_map() {
        requests.push(request);
    }
    if requests.is_empty() {
        return Ok((0, 0));
    }
    let items: u64 = requests.iter().map(|r| r.range).sum();
    match backend {
        BackendConfig::Sequential => {
            for request in &requests {
                run_map_request(program, arena, request, 0, request.range)?;
            }
        }
        BackendConfig::BulkParallel {
            workers,
            group_size,
        } => {
            parallel::drain_parallel(
                program,
                arena,
                &requests,
                workers.max(1),
                group_size.max(1),
            )?;
        }
    }
    Ok((requests.len() as u64, items))
}

/// Runs work-items `[start, end)` of one map request.
pub(crate) fn run_map_request(
    program: &Program,
    arena: &Arena,
    request: &MapRequest,
    start: u64,
    end: u64,
) -> Result<(), RuntimeError> {
    let f = program.registry().map_fn(request.fn_id).clone();
    for index in start..end {
        let ctx = MapCtx {
            arena,
            args: request.args,
            index,
            range: request.range,
        };
        catch_unwind(AssertUnwindSafe(|| f(&ctx))).map_err(|payload| RuntimeError::TaskFailed {
            slot: usize::MAX,
            task_type: 0,
            message: format!(
                "map kernel {} work-item {index}: {}",
                request.fn_id.get(),
                panic_message(payload)
            ),
        })?;
    }
    Ok(())
}

/// Top-level driver: loops setup / launch / finish / map-drain until the
/// machine halts, then returns the accumulated metrics. `observer` is
/// called once per epoch, after the drain, with the trace snapshot and the
/// executor statistics.
pub fn run_to_completion(
    state: &mut RuntimeState,
    program: &Program,
    arena: &Arena,
    config: &RunConfig,
    observer: &mut dyn FnMut(&crate::tvm::EpochTrace, &EpochStats),
) -> Result<Metrics, RuntimeError> {
    let mut metrics = Metrics::default();
    let mut epoch_index = 0u64;
    while !state.halted() {
        if epoch_index >= config.epoch_limit {
            return Err(RuntimeError::EpochLimit {
                limit: config.epoch_limit,
            });
        }
        let rmw_before = state.total_alloc_rmw_ops();
        let (cen, range) = state.epoch_setup();
        let outcome = launch_epoch(
            state,
            program,
            arena,
            cen,
            range,
            config.backend,
            config.record_executed,
        )?;
        state.epoch_finish();
        let (map_requests, map_items) = if state.shared().map_scheduled() {
            drain_maps(state, program, arena, config.backend)?
        } else {
            (0, 0)
        };
        let trace = state.snapshot_trace(epoch_index, outcome.launched, outcome.valid_executed);
        let stats = EpochStats {
            cen,
            launched: outcome.launched,
            valid_executed: outcome.valid_executed,
            forked: trace.forked,
            alloc_rmw_ops: state.total_alloc_rmw_ops() - rmw_before,
            lock_ops: state.total_lock_ops(),
            groups_total: outcome.groups_total,
            groups_with_forks: outcome.groups_with_forks,
            map_requests,
            map_items,
            executed: outcome.executed,
        };
        metrics.record_epoch(&trace);
        metrics.record_stats(&stats);
        observer(&trace, &stats);
        epoch_index += 1;
    }
    Ok(metrics)
}
