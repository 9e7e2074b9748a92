use crate::error::ConfigError;
use crate::program::{Arena, Arg, BufId, Program, ProgramBuilder, ResultSummary};
use crate::tvm::{TaskTypeId, WORD_NONE};

const PREORDER: TaskTypeId = TaskTypeId::new(1);
const POSTORDER: TaskTypeId = TaskTypeId::new(2);
const VISIT_AFTER: TaskTypeId = TaskTypeId::new(3);

/// Binary tree as index arrays; `WORD_NONE` marks missing children and an
/// empty tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSpec {
    pub left: Vec<u64>,
    pub right: Vec<u64>,
    pub root: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraversalOrder {
    Pre,
    Post,
}

impl TreeSpec {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// The fixed six-node tree used by the golden traces: node 0 has
    /// children 1 and 2, node 1 has 3 and 4, node 2 has only 5.
    pub fn six_node_example() -> TreeSpec {
        TreeSpec {
            left: vec![1, 3, 5, WORD_NONE, WORD_NONE, WORD_NONE],
            right: vec![2, 4, WORD_NONE, WORD_NONE, WORD_NONE, WORD_NONE],
            root: 0,
        }
    }

    /// Checks index bounds, the single-parent property, and that no walk
    /// from the root can revisit a node.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.left.len() != self.right.len() {
            return Err(ConfigError::Invalid(
                "tree child arrays differ in length".into(),
            ));
        }
        let n = self.len() as u64;
        if self.root != WORD_NONE && self.root >= n {
            return Err(ConfigError::Invalid(format!(
                "tree root {} out of range",
                self.root
            )));
        }
        let mut parents = vec![0u32; self.len()];
        for (node, child) in self.left.iter().chain(self.right.iter()).enumerate() {
            let _ = node;
            if *child == WORD_NONE {
                continue;
            }
            if *child >= n {
                return Err(ConfigError::Invalid(format!(
                    "tree child index {child} out of range"
                )));
            }
            parents[*child as usize] += 1;
            if parents[*child as usize] > 1 {
                return Err(ConfigError::Invalid(format!(
                    "tree node {child} has more than one parent"
                )));
            }
        }
        if self.root != WORD_NONE && parents[self.root as usize] != 0 {
            return Err(ConfigError::Invalid("tree root has a parent".into()));
        }
        Ok(())
    }
}

fn record_visit(arena: &Arena, cursor: BufId, order: BufId, rank: BufId, node: u64) {
    let ticket = arena.buf(cursor).fetch_add(0, 1);
    arena.buf(order).set(ticket as usize, node);
    arena.buf(rank).set(node as usize, ticket);
}

/// Tree traversal with visits recorded through an atomic sequence counter.
///
/// Preorder visits a node and then forks its children (right first, then
/// left), never joining. Postorder forks both children and joins a
/// visit-after continuation, so a node's visit lands only after its whole
/// subtree finished. Both variants register the same three task types; the
/// root task selects the order.
pub fn traversal_program(tree: &TreeSpec, order: TraversalOrder) -> Result<Program, ConfigError> {
    tree.validate()?;
    let slots = tree.len().max(1);
    let mut builder = ProgramBuilder::new(match order {
        TraversalOrder::Pre => "preorder",
        TraversalOrder::Post => "postorder",
    });
    let left = builder.buffer("left", tree.left.clone());
    let right = builder.buffer("right", tree.right.clone());
    let cursor = builder.buffer("cursor", vec![0]);
    let visit_order = builder.buffer("visit_order", vec![WORD_NONE; slots]);
    let visit_rank = builder.buffer("visit_rank", vec![WORD_NONE; slots]);

    builder.task("preorder", move |ctx| {
        let node = ctx.arg(0);
        if node == WORD_NONE {
            return;
        }
        record_visit(ctx.arena(), cursor, visit_order, visit_rank, node);
        let r = ctx.arena().buf(right).get(node as usize);
        let l = ctx.arena().buf(left).get(node as usize);
        ctx.fork(PREORDER, &[Arg::Word(r)]);
        ctx.fork(PREORDER, &[Arg::Word(l)]);
    });
    builder.task("postorder", move |ctx| {
        let node = ctx.arg(0);
        if node == WORD_NONE {
            return;
        }
        let r = ctx.arena().buf(right).get(node as usize);
        let l = ctx.arena().buf(left).get(node as usize);
        ctx.fork(POSTORDER, &[Arg::Word(r)]);
        ctx.fork(POSTORDER, &[Arg::Word(l)]);
        ctx.join(VISIT_AFTER, &[Arg::Word(node)]);
    });
    builder.task("visit_after", move |ctx| {
        record_visit(ctx.arena(), cursor, visit_order, visit_rank, ctx.arg(0));
    });

    let root_task = match order {
        TraversalOrder::Pre => PREORDER,
        TraversalOrder::Post => POSTORDER,
    };
    builder.root(root_task, &[tree.root]);
    builder.extractor(move |arena, _| {
        let count = arena.buf(cursor).get(0) as usize;
        ResultSummary::Words(arena.buf(visit_order).to_vec()[..count].to_vec())
    });
    builder.build()
}
