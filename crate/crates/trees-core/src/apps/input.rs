//! Text input formats for the bundled applications.
//!
//! Graph: a header line `V E` followed by `E` lines `u v [w]` (weight
//! defaults to 1). Tree: lines `idx left right` with `-1` for a missing
//! child; node 0 is the root. Array: one value per line. Complex array:
//! `re [im]` per line. Blank lines are ignored everywhere.

use crate::apps::graph::GraphCsr;
use crate::apps::traversal::TreeSpec;
use crate::error::ConfigError;
use crate::tvm::WORD_NONE;

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty())
}

pub fn parse_graph(text: &str) -> Result<GraphCsr, ConfigError> {
    let mut rows = lines(text);
    let header = rows.next().ok_or_else(|| bad("graph input is empty"))?;
    let mut head = header.split_whitespace();
    let v: usize = head
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("graph header must be `V E`"))?;
    let e: usize = head
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("graph header must be `V E`"))?;
    let mut edges = Vec::with_capacity(e);
    for line in rows {
        let mut parts = line.split_whitespace();
        let src: u64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(format!("bad edge line: {line}")))?;
        let dst: u64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(format!("bad edge line: {line}")))?;
        let weight: u64 = match parts.next() {
            Some(t) => t
                .parse()
                .map_err(|_| bad(format!("bad edge weight: {line}")))?,
            None => 1,
        };
        edges.push((src, dst, weight));
    }
    if edges.len() != e {
        return Err(bad(format!(
            "graph header promises {e} edges, found {}",
            edges.len()
        )));
    }
    GraphCsr::from_edges(v, &edges)
}

pub fn parse_tree(text: &str) -> Result<TreeSpec, ConfigError> {
    let mut entries = Vec::new();
    let mut max_index = None::<u64>;
    for line in lines(text) {
        let mut parts = line.split_whitespace();
        let mut field = |name: &str| -> Result<i64, ConfigError> {
            parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(format!("bad tree line ({name} missing): {line}")))
        };
        let index = field("index")?;
        let left = field("left child")?;
        let right = field("right child")?;
        if index < 0 {
            return Err(bad(format!("negative node index: {line}")));
        }
        let as_link = |v: i64| if v < 0 { WORD_NONE } else { v as u64 };
        entries.push((index as u64, as_link(left), as_link(right)));
        max_index = Some(max_index.map_or(index as u64, |m| m.max(index as u64)));
    }
    let Some(max_index) = max_index else {
        return Ok(TreeSpec {
            left: vec![],
            right: vec![],
            root: WORD_NONE,
        });
    };
    let count = (max_index + 1) as usize;
    let mut left = vec![WORD_NONE; count];
    let mut right = vec![WORD_NONE; count];
    let mut seen = vec![false; count];
    for (index, l, r) in entries {
        if seen[index as usize] {
            return Err(bad(format!("duplicate tree node {index}")));
        }
        seen[index as usize] = true;
        left[index as usize] = l;
        right[index as usize] = r;
    }
    let tree = TreeSpec {
        left,
        right,
        root: 0,
    };
    tree.validate()?;
    Ok(tree)
}

pub fn parse_array(text: &str) -> Result<Vec<u64>, ConfigError> {
    lines(text)
        .map(|line| {
            line.parse()
                .map_err(|_| bad(format!("bad array value: {line}")))
        })
        .collect()
}

pub fn parse_complex(text: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    lines(text)
        .map(|line| {
            let mut parts = line.split_whitespace();
            let re: f64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(format!("bad complex value: {line}")))?;
            let im: f64 = match parts.next() {
                Some(t) => t
                    .parse()
                    .map_err(|_| bad(format!("bad complex value: {line}")))?,
                None => 0.0,
            };
            Ok((re, im))
        })
        .collect()
}
