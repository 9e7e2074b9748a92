use serde::{Deserialize, Serialize};

/// Identifier of a registered task function. Valid ids run from 1 to the
/// registry's task count; 0 is reserved so that a zero code word can mark an
/// invalid slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskTypeId(u32);

impl TaskTypeId {
    /// Builds a task type id. Panics on the reserved id 0.
    pub const fn new(id: u32) -> Self {
        assert!(id >= 1, "task type ids start at 1; 0 marks an invalid slot");
        TaskTypeId(id)
    }

    pub const fn get(self) -> u32 {
        self.0
    }
}

/// Packed (epoch, task type) word stored in a task-vector slot.
///
/// A valid code is `epoch * num_task_types + task_type`, which is strictly
/// positive because task types start at 1. Code 0 marks an invalid slot: one
/// that was never allocated, already emitted, or finished without
/// scheduling more work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskCode(u64);

impl TaskCode {
    pub const INVALID: TaskCode = TaskCode(0);

    pub const fn from_raw(raw: u64) -> Self {
        TaskCode(raw)
    }

    pub const fn raw(self) -> u64 {
        self.0
    }

    pub const fn is_invalid(self) -> bool {
        self.0 == 0
    }

    /// Splits a valid code back into (epoch, task type). Returns `None` for
    /// the invalid code.
    pub fn decode(self, num_task_types: u32) -> Option<(u64, TaskTypeId)> {
        if self.is_invalid() {
            return None;
        }
        let n = num_task_types as u64;
        // Codes are biased by 1: epoch e spans [e*n + 1, (e+1)*n].
        let epoch = (self.0 - 1) / n;
        let ty = self.0 - epoch * n;
        Some((epoch, TaskTypeId::new(ty as u32)))
    }

    /// A slot is runnable in epoch `cen` iff its code lies in that epoch's
    /// window `[cen*n + 1, (cen+1)*n]`. The invalid code is never runnable.
    pub fn is_runnable(self, cen: u64, num_task_types: u32) -> bool {
        let n = num_task_types as u64;
        let lo = cen * n + 1;
        let hi = (cen + 1) * n;
        self.0 >= lo && self.0 <= hi
    }
}

/// Packs an epoch number and task type into a slot code word.
///
/// Panics if the task type falls outside the registry's range; that is a
/// caller bug, not a program input error.
pub fn encode_task(epoch: u64, ty: TaskTypeId, num_task_types: u32) -> TaskCode {
    assert!(
        ty.get() <= num_task_types,
        "task type {} out of range (registry has {} task types)",
        ty.get(),
        num_task_types
    );
    TaskCode(epoch * num_task_types as u64 + ty.get() as u64)
}
