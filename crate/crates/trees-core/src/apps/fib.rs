use crate::error::ConfigError;
use crate::program::{Arg, Program, ProgramBuilder, ResultSummary};
use crate::tvm::TaskTypeId;

const FIB: TaskTypeId = TaskTypeId::new(1);
const SUM: TaskTypeId = TaskTypeId::new(2);

/// Naive recursive Fibonacci with fib(0) = 0, fib(1) = 1.
///
/// Each non-leaf call forks its two subproblems and joins a summing
/// continuation that reads both children's emitted results through their
/// handles. The useful computation per task is near zero, which makes this
/// the stress case for scheduling overhead.
pub fn fib_program(n: u64) -> Result<Program, ConfigError> {
    if n > 40 {
        return Err(ConfigError::Invalid(format!(
            "fib argument {n} out of range (0..=40)"
        )));
    }
    let mut builder = ProgramBuilder::new("fib");
    builder.task("fib", |ctx| {
        let n = ctx.arg(0);
        if n < 2 {
            ctx.emit(n);
        } else {
            let a = ctx.fork(FIB, &[Arg::Word(n - 1)]);
            let b = ctx.fork(FIB, &[Arg::Word(n - 2)]);
            ctx.join(SUM, &[Arg::Child(a), Arg::Child(b)]);
        }
    });
    builder.task("fib_sum", |ctx| {
        let total = ctx.child_result(ctx.arg(0)) + ctx.child_result(ctx.arg(1));
        ctx.emit(total);
    });
    builder.root(FIB, &[n]);
    builder.extractor(|_, root_result| ResultSummary::Word(root_result));
    builder.build()
}
