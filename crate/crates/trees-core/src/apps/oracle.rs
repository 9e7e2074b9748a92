//! Independent reference implementations for the bundled applications.
//!
//! Nothing here touches the runtime: these are the straight-line algorithms
//! (iterative Fibonacci, queue BFS, heap Dijkstra, library sort, quadratic
//! DFT, explicit-stack traversals) that the engine's outputs are checked
//! against, both in tests and by the CLI's check mode.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::apps::graph::GraphCsr;
use crate::apps::traversal::{TraversalOrder, TreeSpec};
use crate::tvm::WORD_NONE;

pub fn fib(n: u64) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

/// Call counts of the naive recursion: total activations, and how many of
/// them are non-leaf calls (each of which re-activates once as its summing
/// continuation).
pub fn fib_call_counts(n: u64) -> (u64, u64) {
    let n = n as usize;
    let mut activations = vec![1u64; n.max(2) + 1];
    for i in 2..=n.max(2) {
        activations[i] = 1 + activations[i - 1] + activations[i - 2];
    }
    let total = activations[n];
    // A full binary call tree with i internal nodes has 2i + 1 nodes.
    let internal = (total - 1) / 2;
    (total, internal)
}

/// Visit order of a sequential recursive traversal, via an explicit stack.
pub fn traversal_order(tree: &TreeSpec, order: TraversalOrder) -> Vec<u64> {
    enum Step {
        Enter(u64),
        Visit(u64),
    }
    let mut visits = Vec::new();
    let mut stack = vec![Step::Enter(tree.root)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(node) => {
                if node == WORD_NONE {
                    continue;
                }
                let left = tree.left[node as usize];
                let right = tree.right[node as usize];
                match order {
                    TraversalOrder::Pre => {
                        visits.push(node);
                        stack.push(Step::Enter(right));
                        stack.push(Step::Enter(left));
                    }
                    TraversalOrder::Post => {
                        stack.push(Step::Visit(node));
                        stack.push(Step::Enter(right));
                        stack.push(Step::Enter(left));
                    }
                }
            }
            Step::Visit(node) => visits.push(node),
        }
    }
    visits
}

pub fn bfs_distances(graph: &GraphCsr, src: u64) -> Vec<u64> {
    let mut dist = vec![WORD_NONE; graph.vertex_count];
    dist[src as usize] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let start = graph.row_offsets[v as usize] as usize;
        let end = graph.row_offsets[v as usize + 1] as usize;
        for e in start..end {
            let u = graph.col_indices[e];
            if dist[u as usize] == WORD_NONE {
                dist[u as usize] = dist[v as usize] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

pub fn dijkstra_distances(graph: &GraphCsr, src: u64) -> Vec<u64> {
    let mut dist = vec![WORD_NONE; graph.vertex_count];
    dist[src as usize] = 0;
    let mut heap = BinaryHeap::from([(Reverse(0u64), src)]);
    while let Some((Reverse(d), v)) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        let start = graph.row_offsets[v as usize] as usize;
        let end = graph.row_offsets[v as usize + 1] as usize;
        for e in start..end {
            let u = graph.col_indices[e] as usize;
            let nd = d + graph.weights[e];
            if nd < dist[u] {
                dist[u] = nd;
                heap.push((Reverse(nd), u as u64));
            }
        }
    }
    dist
}

pub fn sorted(values: &[u64]) -> Vec<u64> {
    let mut out = values.to_vec();
    out.sort_unstable();
    out
}

/// Direct quadratic DFT, the precision oracle for the FFT.
pub fn dft(input: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = input.len();
    (0..n)
        .map(|k| {
            let mut acc = (0.0f64, 0.0f64);
            for (j, (re, im)) in input.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
                let (w_re, w_im) = (angle.cos(), angle.sin());
                acc.0 += re * w_re - im * w_im;
                acc.1 += re * w_im + im * w_re;
            }
            acc
        })
        .collect()
}

/// Largest absolute component difference between two complex vectors.
pub fn max_complex_error(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs()))
        .fold(0.0, f64::max)
}
