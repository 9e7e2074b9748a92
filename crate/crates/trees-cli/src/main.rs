//! `trees` — command-line runner for the epoch-synchronized task-parallel
//! runtime.
//!
//! Exit codes: 0 success, 1 golden-trace mismatch, 2 bad configuration or
//! input, 3 fatal runtime error (capacity, epoch limit, task failure),
//! 4 oracle mismatch in check mode.

mod compare;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub(crate) const EXIT_OK: u8 = 0;
pub(crate) const EXIT_GOLDEN_MISMATCH: u8 = 1;
pub(crate) const EXIT_CONFIG: u8 = 2;
pub(crate) const EXIT_RUNTIME: u8 = 3;
pub(crate) const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "trees",
    about = "Run task-parallel programs as bulk-synchronized epochs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a bundled program and report its result and metrics.
    Run(Box<RunArgs>),
    /// Compare two trace files line by line, reporting the first divergence.
    CompareTrace {
        /// Trace produced by a run.
        actual: PathBuf,
        /// Golden trace to compare against.
        golden: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum BackendArg {
    /// Single-threaded, fully deterministic.
    Seq,
    /// Work-groups distributed over a worker pool.
    Par,
}

#[derive(Args)]
pub(crate) struct RunArgs {
    /// Program to run: fib, preorder, postorder, bfs, sssp, mergesort,
    /// fft, or forever.
    #[arg(long)]
    pub program: String,

    /// Input file (tree, graph, or array, depending on the program).
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Inline problem size: fib argument, or generated input length for
    /// mergesort and fft.
    #[arg(long)]
    pub n: Option<u64>,

    /// Source vertex for bfs and sssp.
    #[arg(long, default_value_t = 0)]
    pub src: u64,

    /// Seed for generated inputs.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Use the data-parallel merge kernel (mergesort only).
    #[arg(long)]
    pub use_map: bool,

    /// Execution backend.
    #[arg(long, value_enum, default_value_t = BackendArg::Seq)]
    pub backend: BackendArg,

    /// Worker threads for the parallel backend; defaults to the number of
    /// available CPUs.
    #[arg(long)]
    pub workers: Option<usize>,

    /// Work-group width for the parallel backend.
    #[arg(long, default_value_t = trees_core::DEFAULT_GROUP_SIZE)]
    pub group_size: usize,

    /// Task-vector capacity. Falls back to the TREES_CAPACITY environment
    /// variable, then to 1048576.
    #[arg(long)]
    pub capacity: Option<usize>,

    /// Abort runs that have not halted after this many epochs.
    #[arg(long, default_value_t = 1_000_000)]
    pub epoch_limit: u64,

    /// Write the per-epoch trace to this path; `-` streams it to standard
    /// output with the metrics record appended as the final line.
    #[arg(long)]
    pub trace: Option<PathBuf>,

    /// Add executed (slot, task type) pairs to each trace line
    /// (sequential backend only).
    #[arg(long)]
    pub trace_slots: bool,

    /// Compare the produced trace against this golden file.
    #[arg(long)]
    pub golden: Option<PathBuf>,

    /// Verify the result against the program's oracle.
    #[arg(long)]
    pub check: bool,
}

fn main() -> ExitCode {
    // Fatal conditions unwind out of task bodies as typed payloads and are
    // reported through normal error paths; keep the hook to one readable
    // line for string panics and silent for the internal signals.
    std::panic::set_hook(Box::new(|info| {
        let payload = info.payload();
        let message = payload
            .downcast_ref::<&str>()
            .map(|s| (*s).to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned());
        if let Some(message) = message {
            eprintln!("panic: {message}");
        }
    }));

    let code = match Cli::parse().command {
        Command::Run(args) => run::cmd_run(&args),
        Command::CompareTrace { actual, golden } => compare::cmd_compare_trace(&actual, &golden),
    };
    ExitCode::from(code)
}
