//! Work and critical-path accounting, plus the closed-form execution-time
//! model.
//!
//! Work (`work_tasks`) counts valid task executions over the whole run; a
//! slot that joins contributes again when its continuation runs. The
//! critical path is the number of epochs plus the number of map drains:
//! both are serialization points, and neither depends on the backend or on
//! worker count. Map work-items are tracked separately from task work since
//! they never occupy a task-vector slot.

use serde::Serialize;
use thiserror::Error;

use crate::executor::EpochStats;
use crate::tvm::EpochTrace;

/// Counters accumulated over one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    /// Task epochs executed (setup/launch/finish rounds).
    pub epochs: u64,
    /// Map drains performed; each adds one critical-path step.
    pub map_drains: u64,
    /// Valid task executions (work, measured in tasks).
    pub work_tasks: u64,
    /// Total map work-items executed.
    pub work_map_items: u64,
    /// Slots launched, including invalid holes in revisited ranges.
    pub launched_total: u64,
    /// High-water mark of the slot allocation counter.
    pub peak_next_free_core: u64,
    /// Read-modify-write operations on the allocation counter.
    pub atomic_ops: u64,
    /// Lock acquisitions on the execution path. Zero, structurally.
    pub lock_ops: u64,
}

impl Metrics {
    /// Folds one epoch's trace into the counters.
    pub fn record_epoch(&mut self, trace: &EpochTrace) {
        self.epochs += 1;
        self.work_tasks += trace.valid_executed;
        self.launched_total += trace.launched;
        self.peak_next_free_core = self.peak_next_free_core.max(trace.next_free_core);
    }

    pub(crate) fn record_stats(&mut self, stats: &EpochStats) {
        self.atomic_ops += stats.alloc_rmw_ops;
        self.lock_ops = stats.lock_ops;
        if stats.map_requests > 0 {
            self.map_drains += 1;
        }
        self.work_map_items += stats.map_items;
    }

    /// Fraction of launched slots that held runnable tasks.
    pub fn utilization(&self) -> f64 {
        if self.launched_total == 0 {
            return 0.0;
        }
        self.work_tasks as f64 / self.launched_total as f64
    }

    /// Critical-path length in serialization steps: epochs plus map drains.
    pub fn critical_path(&self) -> u64 {
        self.epochs + self.map_drains
    }

    /// Single-line JSON encoding, appended after the per-epoch trace lines.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Record {
            epochs: u64,
            map_drains: u64,
            work_tasks: u64,
            work_map_items: u64,
            launched_total: u64,
            utilization: f64,
            peak_next_free_core: u64,
            atomic_ops: u64,
            lock_ops: u64,
            critical_path: u64,
        }
        serde_json::to_string(&Record {
            epochs: self.epochs,
            map_drains: self.map_drains,
            work_tasks: self.work_tasks,
            work_map_items: self.work_map_items,
            launched_total: self.launched_total,
            utilization: self.utilization(),
            peak_next_free_core: self.peak_next_free_core,
            atomic_ops: self.atomic_ops,
            lock_ops: self.lock_ops,
            critical_path: self.critical_path(),
        })
        .expect("metrics serialization cannot fail")
    }
}

/// Inputs to the execution-time model: measured work and critical path plus
/// machine shape (P processors, each W lanes wide) and the multiplicative
/// overhead factors on work and critical path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfModelParams {
    pub t1: f64,
    pub t_inf: f64,
    pub p: f64,
    pub w: f64,
    pub v1: f64,
    pub v_inf: f64,
    /// Maximum branch-nesting depth, used only by the worst-case bound.
    pub branch_depth: u32,
}

/// Which closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelCase {
    /// P scalar processors: `v1·t1/p + v_inf·t_inf`.
    Scalar,
    /// Full lane utilization: `v1·t1/(p·w) + v_inf·t_inf`.
    Best,
    /// Average divergence penalty of log2(w):
    /// `v1·log2(w)·t1/(p·w) + v_inf·t_inf`.
    Pessimistic,
    /// Divergence bounded by branch nesting depth d, requiring 2^d < w:
    /// `v1·2^d·t1/(p·w) + v_inf·t_inf`.
    Worst,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParam(String),
    #[error("worst-case bound requires 2^branch_depth < w (2^{depth} >= {w})")]
    BranchDepthTooDeep { depth: u32, w: u64 },
    #[error("critical path is zero; no epochs were recorded")]
    EmptyRun,
}

/// Evaluates the modeled execution time for one case.
pub fn model_time(params: &PerfModelParams, case: ModelCase) -> Result<f64, ModelError> {
    if params.p < 1.0 {
        return Err(ModelError::InvalidParam(format!("p = {} < 1", params.p)));
    }
    if params.w < 1.0 {
        return Err(ModelError::InvalidParam(format!("w = {} < 1", params.w)));
    }
    if params.v1 < 1.0 {
        return Err(ModelError::InvalidParam(format!("v1 = {} < 1", params.v1)));
    }
    if params.v_inf < 0.0 {
        return Err(ModelError::InvalidParam(format!(
            "v_inf = {} < 0",
            params.v_inf
        )));
    }
    let tail = params.v_inf * params.t_inf;
    let time = match case {
        ModelCase::Scalar => params.v1 * params.t1 / params.p + tail,
        ModelCase::Best => params.v1 * params.t1 / (params.p * params.w) + tail,
        ModelCase::Pessimistic => {
            params.v1 * params.w.log2() * params.t1 / (params.p * params.w) + tail
        }
        ModelCase::Worst => {
            let divergence = 2f64.powi(params.branch_depth as i32);
            if divergence >= params.w {
                return Err(ModelError::BranchDepthTooDeep {
                    depth: params.branch_depth,
                    w: params.w as u64,
                });
            }
            params.v1 * divergence * params.t1 / (params.p * params.w) + tail
        }
    };
    Ok(time)
}

/// Slot-space bounds implied by a run: at least the average parallelism
/// `ceil(work / critical_path)`, at most the work itself. The peak
/// allocation watermark of every bundled program falls in this bracket.
pub fn space_bounds(metrics: &Metrics) -> Result<(u64, u64), ModelError> {
    let critical_path = metrics.critical_path();
    if critical_path == 0 {
        return Err(ModelError::EmptyRun);
    }
    let lower = metrics.work_tasks.div_ceil(critical_path);
    Ok((lower, metrics.work_tasks))
}
