//! Machine state and the serial host protocol.
//!
//! The machine is a fixed-capacity task vector plus two paired stacks. Each
//! vector slot holds one packed code word that encodes both the epoch in
//! which the slot's task runs and which task function it runs, so a single
//! integer comparison decides whether a slot is runnable in the current
//! epoch. The join stack holds epoch numbers and the range stack holds the
//! contiguous slot ranges scheduled for those epochs; they are pushed and
//! popped strictly pairwise.
//!
//! Between epochs the host pops both stacks (setup), hands the popped range
//! to an executor backend, and then pushes at most two entries (finish): the
//! re-scheduled current range if any task joined, above it the freshly
//! forked range if any task forked. The machine halts when the stacks drain.

mod code;
mod state;
mod trace;

pub use code::{encode_task, TaskCode, TaskTypeId};
pub use state::{MapRequest, NDRange, RuntimeState, StackPush};
pub use trace::EpochTrace;

pub(crate) use state::SharedState;

/// Number of argument words carried by every task-vector entry.
///
/// Fixed arity keeps entries flat and the trace format stable; programs
/// that need more state pass indices into their arena buffers.
pub const TASK_ARG_WORDS: usize = 4;

/// Argument word array stored in a task-vector slot.
pub type ArgWords = [u64; TASK_ARG_WORDS];

/// Sentinel word used by programs for "no value" (null node links,
/// unreached distances, and similar).
pub const WORD_NONE: u64 = u64::MAX;
