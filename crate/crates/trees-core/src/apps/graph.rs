use crate::error::ConfigError;
use crate::program::{Arg, Program, ProgramBuilder, ResultSummary};
use crate::tvm::{TaskTypeId, WORD_NONE};

/// Directed graph in compressed sparse row form. `weights` parallels
/// `col_indices` and is all ones for unweighted inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphCsr {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub row_offsets: Vec<u64>,
    pub col_indices: Vec<u64>,
    pub weights: Vec<u64>,
}

impl GraphCsr {
    pub fn from_edges(
        vertex_count: usize,
        edges: &[(u64, u64, u64)],
    ) -> Result<GraphCsr, ConfigError> {
        let v = vertex_count as u64;
        let mut degree = vec![0u64; vertex_count + 1];
        for &(src, dst, _) in edges {
            if src >= v || dst >= v {
                return Err(ConfigError::Invalid(format!(
                    "edge ({src}, {dst}) out of range for {vertex_count} vertices"
                )));
            }
            degree[src as usize + 1] += 1;
        }
        for i in 1..degree.len() {
            degree[i] += degree[i - 1];
        }
        let row_offsets = degree.clone();
        let mut cursor = degree;
        let mut col_indices = vec![0u64; edges.len()];
        let mut weights = vec![0u64; edges.len()];
        for &(src, dst, w) in edges {
            let at = cursor[src as usize] as usize;
            col_indices[at] = dst;
            weights[at] = w;
            cursor[src as usize] += 1;
        }
        Ok(GraphCsr {
            vertex_count,
            edge_count: edges.len(),
            row_offsets,
            col_indices,
            weights,
        })
    }

    fn check_source(&self, src: u64) -> Result<(), ConfigError> {
        if src >= self.vertex_count as u64 {
            return Err(ConfigError::Invalid(format!(
                "source vertex {src} out of range for {} vertices",
                self.vertex_count
            )));
        }
        Ok(())
    }
}

const BFS_RELAX: TaskTypeId = TaskTypeId::new(1);

/// Level-synchronous breadth-first search. The task vector is the worklist:
/// each task relaxes one vertex's out-edges and forks a relaxation for every
/// neighbor whose distance it improved. Distances shrink through atomic
/// minimum, so duplicate relaxations are harmless. Halts on the first epoch
/// that forks nothing.
pub fn bfs_program(graph: &GraphCsr, src: u64) -> Result<Program, ConfigError> {
    graph.check_source(src)?;
    let mut dist_init = vec![WORD_NONE; graph.vertex_count];
    dist_init[src as usize] = 0;
    let mut builder = ProgramBuilder::new("bfs");
    let offsets = builder.buffer("row_offsets", graph.row_offsets.clone());
    let cols = builder.buffer("col_indices", graph.col_indices.clone());
    let dist = builder.buffer("dist", dist_init);

    builder.task("relax", move |ctx| {
        let v = ctx.arg(0) as usize;
        let d = ctx.arena().buf(dist).get(v);
        if d == WORD_NONE {
            return;
        }
        let start = ctx.arena().buf(offsets).get(v) as usize;
        let end = ctx.arena().buf(offsets).get(v + 1) as usize;
        for e in start..end {
            let u = ctx.arena().buf(cols).get(e);
            let nd = d + 1;
            let old = ctx.arena().buf(dist).fetch_min(u as usize, nd);
            if nd < old {
                ctx.fork(BFS_RELAX, &[Arg::Word(u)]);
            }
        }
    });
    builder.root(BFS_RELAX, &[src]);
    builder.extractor(move |arena, _| ResultSummary::Words(arena.buf(dist).to_vec()));
    builder.build()
}

const SSSP_RELAX: TaskTypeId = TaskTypeId::new(1);
const SSSP_EXPAND: TaskTypeId = TaskTypeId::new(2);

/// Level-synchronous single-source shortest paths over non-negative integer
/// weights.
///
/// Relaxation is split into a propose/confirm pair so the set of tasks each
/// epoch spawns depends only on the previous epoch's distances, never on
/// scheduling order inside an epoch: a relax task lowers the distance by
/// atomic minimum and unconditionally forks a confirm task, which expands
/// the vertex's edges only if its proposal still equals the settled
/// distance and no equal-or-better expansion already claimed the vertex.
/// Duplicate relaxations remain possible (and harmless), but their count is
/// identical across backends and worker counts.
pub fn sssp_program(graph: &GraphCsr, src: u64) -> Result<Program, ConfigError> {
    graph.check_source(src)?;
    let mut builder = ProgramBuilder::new("sssp");
    let offsets = builder.buffer("row_offsets", graph.row_offsets.clone());
    let cols = builder.buffer("col_indices", graph.col_indices.clone());
    let weights = builder.buffer("edge_weights", graph.weights.clone());
    let dist = builder.buffer("dist", vec![WORD_NONE; graph.vertex_count]);
    let expanded = builder.buffer("expanded", vec![WORD_NONE; graph.vertex_count]);

    builder.task("relax", move |ctx| {
        let v = ctx.arg(0);
        let d = ctx.arg(1);
        ctx.arena().buf(dist).fetch_min(v as usize, d);
        ctx.fork(SSSP_EXPAND, &[Arg::Word(v), Arg::Word(d)]);
    });
    builder.task("expand", move |ctx| {
        let v = ctx.arg(0) as usize;
        let d = ctx.arg(1);
        if ctx.arena().buf(dist).get(v) != d {
            return;
        }
        if ctx.arena().buf(expanded).fetch_min(v, d) <= d {
            return;
        }
        let start = ctx.arena().buf(offsets).get(v) as usize;
        let end = ctx.arena().buf(offsets).get(v + 1) as usize;
        for e in start..end {
            let u = ctx.arena().buf(cols).get(e);
            let nd = d.saturating_add(ctx.arena().buf(weights).get(e));
            ctx.fork(SSSP_RELAX, &[Arg::Word(u), Arg::Word(nd)]);
        }
    });
    builder.root(SSSP_RELAX, &[src, 0]);
    builder.extractor(move |arena, _| ResultSummary::Words(arena.buf(dist).to_vec()));
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::oracle;
    use crate::program::{run_program, RunConfig};

    fn path5() -> GraphCsr {
        GraphCsr::from_edges(5, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1)]).unwrap()
    }

    #[test]
    fn bfs_on_a_path() {
        let program = bfs_program(&path5(), 0).unwrap();
        let result = run_program(&program, &RunConfig::default()).unwrap();
        assert_eq!(result.summary, ResultSummary::Words(vec![0, 1, 2, 3, 4]));
    }

    #[test]
    fn disconnected_vertices_stay_unreached() {
        let graph = GraphCsr::from_edges(3, &[(0, 1, 1)]).unwrap();
        let program = bfs_program(&graph, 0).unwrap();
        let result = run_program(&program, &RunConfig::default()).unwrap();
        assert_eq!(result.summary, ResultSummary::Words(vec![0, 1, WORD_NONE]));
    }

    #[test]
    fn sssp_prefers_cheaper_longer_path() {
        // 0 -> 2 costs 10 direct, 3 via 1.
        let graph =
            GraphCsr::from_edges(3, &[(0, 2, 10), (0, 1, 1), (1, 2, 2)]).unwrap();
        let program = sssp_program(&graph, 0).unwrap();
        let result = run_program(&program, &RunConfig::default()).unwrap();
        assert_eq!(result.summary, ResultSummary::Words(vec![0, 1, 3]));
    }

    #[test]
    fn sssp_matches_dijkstra_on_zero_weight_cycle() {
        let graph = GraphCsr::from_edges(
            4,
            &[(0, 1, 0), (1, 0, 0), (1, 2, 5), (2, 3, 0), (3, 1, 0)],
        )
        .unwrap();
        let program = sssp_program(&graph, 0).unwrap();
        let result = run_program(&program, &RunConfig::default()).unwrap();
        let expected = oracle::dijkstra_distances(&graph, 0);
        assert_eq!(result.summary, ResultSummary::Words(expected));
    }
}
