//! Synthetic programs for exercising the engine itself: a deliberate
//! non-terminator for epoch-limit handling, a wide single-group forker for
//! allocation batching checks, and a general fork/join shape driven by a
//! recipe, used heavily by the differential tests.

use crate::error::ConfigError;
use crate::program::{Arg, Program, ProgramBuilder, ResultSummary};
use crate::tvm::TaskTypeId;

/// Forks one copy of itself every epoch, forever. Exists so the epoch
/// limit has something real to catch.
pub fn forever_program() -> Program {
    let mut builder = ProgramBuilder::new("forever");
    let again = builder.task("again", |ctx| {
        let generation = ctx.arg(0);
        ctx.fork(TaskTypeId::new(1), &[Arg::Word(generation + 1)]);
    });
    builder.root(again, &[0]);
    builder
        .build()
        .expect("forever program is statically valid")
}

/// Root forks `width` children in one epoch; every child forks one
/// grandchild and emits. Sized to fill exactly one default work-group, it
/// pins down the one-allocation-per-group batching behavior.
pub fn wide_fanout_program(width: u64) -> Program {
    const ROOT: TaskTypeId = TaskTypeId::new(1);
    const CHILD: TaskTypeId = TaskTypeId::new(2);
    const LEAF: TaskTypeId = TaskTypeId::new(3);
    let mut builder = ProgramBuilder::new("wide_fanout");
    builder.task("root", move |ctx| {
        for i in 0..width {
            ctx.fork(CHILD, &[Arg::Word(i)]);
        }
    });
    builder.task("child", |ctx| {
        let i = ctx.arg(0);
        ctx.fork(LEAF, &[Arg::Word(i)]);
        ctx.emit(i);
    });
    builder.task("leaf", |ctx| {
        let i = ctx.arg(0);
        ctx.emit(i);
    });
    builder.root(ROOT, &[]);
    builder.build().expect("fanout program is statically valid")
}

/// Shape of a synthetic fork/join program: per node, the children it forks
/// and whether it joins a finish continuation. Nodes without children and
/// without a join emit instead, covering all three ways a task can end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForkJoinRecipe {
    pub children: Vec<Vec<u32>>,
    pub joins: Vec<bool>,
    pub root: u32,
}

impl ForkJoinRecipe {
    pub fn node_count(&self) -> usize {
        self.children.len()
    }
}

const SPAWN: TaskTypeId = TaskTypeId::new(1);
const FINISH: TaskTypeId = TaskTypeId::new(2);

/// Builds the program described by a recipe. Tasks carry their recipe node
/// as the first argument, which gives differential tests a backend-
/// independent identity for every execution.
pub fn recipe_program(recipe: &ForkJoinRecipe) -> Result<Program, ConfigError> {
    let n = recipe.node_count();
    if recipe.joins.len() != n {
        return Err(ConfigError::Invalid(
            "recipe joins and children lengths differ".into(),
        ));
    }
    if recipe.root as usize >= n {
        return Err(ConfigError::Invalid("recipe root out of range".into()));
    }
    let mut offsets = vec![0u64; n + 1];
    for (i, kids) in recipe.children.iter().enumerate() {
        for &k in kids {
            if k as usize >= n {
                return Err(ConfigError::Invalid(format!(
                    "recipe child {k} out of range"
                )));
            }
        }
        offsets[i + 1] = offsets[i] + kids.len() as u64;
    }
    let targets: Vec<u64> = recipe
        .children
        .iter()
        .flatten()
        .map(|&k| k as u64)
        .collect();
    let joins: Vec<u64> = recipe.joins.iter().map(|&j| j as u64).collect();

    let mut builder = ProgramBuilder::new("fork_join_recipe");
    let offsets = builder.buffer("child_offsets", offsets);
    let targets = builder.buffer("child_targets", targets);
    let joins = builder.buffer("join_flags", joins);
    builder.task("spawn", move |ctx| {
        let node = ctx.arg(0) as usize;
        let start = ctx.arena().buf(offsets).get(node) as usize;
        let end = ctx.arena().buf(offsets).get(node + 1) as usize;
        for at in start..end {
            let child = ctx.arena().buf(targets).get(at);
            ctx.fork(SPAWN, &[Arg::Word(child)]);
        }
        if ctx.arena().buf(joins).get(node) == 1 {
            ctx.join(FINISH, &[Arg::Word(node as u64)]);
        } else if start == end {
            ctx.emit(node as u64);
        }
    });
    builder.task("finish", |ctx| {
        ctx.emit(ctx.arg(0));
    });
    builder.root(SPAWN, &[recipe.root as u64]);
    builder.extractor(|_, root_result| ResultSummary::Word(root_result));
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{run_program, RunConfig};
    use crate::RuntimeError;

    #[test]
    fn forever_hits_the_epoch_limit() {
        let program = forever_program();
        let config = RunConfig {
            epoch_limit: 64,
            ..RunConfig::default()
        };
        match run_program(&program, &config) {
            Err(RuntimeError::EpochLimit { limit: 64 }) => {}
            other => panic!("expected epoch limit error, got {other:?}"),
        }
    }

    #[test]
    fn join_without_forks_reruns_next_epoch() {
        // One node, no children, join flag set: the spawn joins finish,
        // which runs in the immediately following epoch.
        let recipe = ForkJoinRecipe {
            children: vec![vec![]],
            joins: vec![true],
            root: 0,
        };
        let program = recipe_program(&recipe).unwrap();
        let result = run_program(&program, &RunConfig::default()).unwrap();
        assert_eq!(result.metrics.epochs, 2);
        assert_eq!(result.summary, ResultSummary::Word(0));
    }
}
