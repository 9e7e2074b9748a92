use std::cmp::min;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::thread;

use crossbeam::queue::SegQueue;

use super::context::{commit_group, ExecCtx, GroupAccumulator};
use super::{run_map_request, run_task_body, ExecutedTask, LaunchOutcome};
use crate::error::RuntimeError;
use crate::program::{Arena, Program};
use crate::tvm::{MapRequest, NDRange, SharedState};

/// Splits the range into work-groups and lets `workers` threads claim
/// groups through an atomic cursor, mirroring a hardware scheduler
/// distributing work-groups to cores. The thread scope joining at the end
/// is the epoch barrier: all task effects are published before the host
/// resumes.
#[allow(clippy::too_many_arguments)]
pub(crate) fn launch_parallel(
    shared: &SharedState,
    program: &Program,
    arena: &Arena,
    cen: u64,
    range: NDRange,
    workers: usize,
    group_size: usize,
    record_executed: bool,
) -> Result<LaunchOutcome, RuntimeError> {
    let n_groups = range.size().div_ceil(group_size);
    if n_groups == 1 {
        // Nothing to distribute; run the lone group on the host thread.
        // Allocation still goes through the group commit, so the batching
        // bound is unchanged.
        let outcome = run_group(shared, program, arena, cen, range.lo, range.hi, record_executed)?;
        return Ok(LaunchOutcome {
            launched: range.size() as u64,
            valid_executed: outcome.valid,
            groups_total: 1,
            groups_with_forks: outcome.forked as u64,
            executed: outcome.executed,
        });
    }
    let cursor = AtomicUsize::new(0);
    let valid_total = AtomicU64::new(0);
    let groups_with_forks = AtomicU64::new(0);
    let fatal: OnceLock<RuntimeError> = OnceLock::new();
    let executed_parts: SegQueue<Vec<ExecutedTask>> = SegQueue::new();

    thread::scope(|scope| {
        for _ in 0..workers.min(n_groups) {
            scope.spawn(|| loop {
                if fatal.get().is_some() {
                    return;
                }
                let group = cursor.fetch_add(1, Ordering::Relaxed);
                if group >= n_groups {
                    return;
                }
                let lo = range.lo + group * group_size;
                let hi = min(range.hi, lo + group_size - 1);
                match run_group(shared, program, arena, cen, lo, hi, record_executed) {
                    Ok(outcome) => {
                        valid_total.fetch_add(outcome.valid, Ordering::Relaxed);
                        if outcome.forked {
                            groups_with_forks.fetch_add(1, Ordering::Relaxed);
                        }
                        if let Some(list) = outcome.executed {
                            executed_parts.push(list);
                        }
                    }
                    Err(err) => {
                        let _ = fatal.set(err);
                        return;
                    }
                }
            });
        }
    });

    if let Some(err) = fatal.into_inner() {
        return Err(err);
    }
    let executed = if record_executed {
        let mut all = Vec::new();
        while let Some(mut part) = executed_parts.pop() {
            all.append(&mut part);
        }
        all.sort_by_key(|t| t.slot);
        Some(all)
    } else {
        None
    };
    Ok(LaunchOutcome {
        launched: range.size() as u64,
        valid_executed: valid_total.into_inner(),
        groups_total: n_groups as u64,
        groups_with_forks: groups_with_forks.into_inner(),
        executed,
    })
}

struct GroupOutcome {
    valid: u64,
    forked: bool,
    executed: Option<Vec<ExecutedTask>>,
}

/// Runs one work-group's slots in order, buffering scheduling requests,
/// then commits the whole group in one shot.
fn run_group(
    shared: &SharedState,
    program: &Program,
    arena: &Arena,
    cen: u64,
    lo: usize,
    hi: usize,
    record_executed: bool,
) -> Result<GroupOutcome, RuntimeError> {
    let num_types = shared.num_task_types();
    let mut acc = GroupAccumulator::default();
    let mut valid = 0u64;
    let mut executed = record_executed.then(Vec::new);
    for slot in lo..=hi {
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
        let mut ctx = ExecCtx::batched(slot, cen, args, shared, arena, program.registry(), &mut acc);
        run_task_body(program, ty, &mut ctx, slot)?;
        ctx.retire();
    }
    let forked = acc.has_forks();
    commit_group(&acc, shared, cen).map_err(|signal| signal.into_runtime_error())?;
    Ok(GroupOutcome {
        valid,
        forked,
        executed,
    })
}

/// Runs all queued map requests across the worker pool. Work is claimed in
/// `group_size` chunks of each request's index range.
pub(crate) fn drain_parallel(
    program: &Program,
    arena: &Arena,
    requests: &[MapRequest],
    workers: usize,
    group_size: usize,
) -> Result<(), RuntimeError> {
    let mut chunks = Vec::new();
    for (idx, request) in requests.iter().enumerate() {
        let mut start = 0u64;
        while start < request.range {
            let end = min(request.range, start + group_size as u64);
            chunks.push((idx, start, end));
            start = end;
        }
    }
    if chunks.len() <= 1 {
        for &(idx, start, end) in &chunks {
            run_map_request(program, arena, &requests[idx], start, end)?;
        }
        return Ok(());
    }
    let cursor = AtomicUsize::new(0);
    let fatal: OnceLock<RuntimeError> = OnceLock::new();
    thread::scope(|scope| {
        for _ in 0..workers.min(chunks.len()) {
            scope.spawn(|| loop {
                if fatal.get().is_some() {
                    return;
                }
                let at = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(&(idx, start, end)) = chunks.get(at) else {
                    return;
                };
                if let Err(err) = run_map_request(program, arena, &requests[idx], start, end) {
                    let _ = fatal.set(err);
                    return;
                }
            });
        }
    });
    match fatal.into_inner() {
        Some(err) => Err(err),
        None => Ok(()),
    }
}
