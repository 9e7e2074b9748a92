use thiserror::Error;

/// Rejected program or machine configuration. These are caught before any
/// epoch runs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("task vector capacity must be at least 1")]
    ZeroCapacity,
    #[error("task type {id} is not registered (registry has {num_task_types} task types)")]
    UnknownTaskType { id: u32, num_task_types: u32 },
    #[error("program must register at least one task function")]
    NoTaskFunctions,
    #[error("duplicate {kind} function name: {name}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
}

/// Fatal error raised while a program is executing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error(
        "task vector capacity {capacity} exhausted: fork from slot {slot} (task type {task_type}) \
         needs {requested} more slot(s)"
    )]
    CapacityExhausted {
        capacity: usize,
        slot: usize,
        task_type: u32,
        requested: usize,
    },
    #[error("epoch limit {limit} reached without halting; the program may fork forever")]
    EpochLimit { limit: u64 },
    #[error("task at slot {slot} (task type {task_type}) failed: {message}")]
    TaskFailed {
        slot: usize,
        task_type: u32,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
}

/// Panic payload used to carry a fatal condition out of a task body and
/// across the epoch barrier. Workers downcast panics to this before giving
/// up and reporting a plain task failure.
#[derive(Debug, Clone)]
pub(crate) enum FatalSignal {
    Capacity {
        capacity: usize,
        slot: usize,
        task_type: u32,
        requested: usize,
    },
}

impl FatalSignal {
    pub(crate) fn into_runtime_error(self) -> RuntimeError {
        match self {
            FatalSignal::Capacity {
                capacity,
                slot,
                task_type,
                requested,
            } => RuntimeError::CapacityExhausted {
                capacity,
                slot,
                task_type,
                requested,
            },
        }
    }
}
