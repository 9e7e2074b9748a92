//! Bundled applications, each expressed directly against the program API
//! and paired with an independent oracle in [`oracle`].

mod fft;
mod fib;
mod graph;
mod input;
mod mergesort;
pub mod oracle;
pub mod synth;
mod traversal;

pub use fft::fft_program;
pub use fib::fib_program;
pub use graph::{bfs_program, sssp_program, GraphCsr};
pub use input::{parse_array, parse_complex, parse_graph, parse_tree};
pub use mergesort::mergesort_program;
pub use traversal::{traversal_program, TraversalOrder, TreeSpec};
