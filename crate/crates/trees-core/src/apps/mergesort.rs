use crate::error::ConfigError;
use crate::program::{Arena, ArenaBuf, Arg, BufId, MapFnId, Program, ProgramBuilder, ResultSummary};
use crate::tvm::TaskTypeId;

const MSORT: TaskTypeId = TaskTypeId::new(1);
const MERGE: TaskTypeId = TaskTypeId::new(2);
const MERGE_KERNEL: MapFnId = MapFnId::new(1);

/// Recursive mergesort over the arena. The input is padded to a power of
/// two with max-value sentinels; runs ping-pong between two buffers by
/// merge level, so every merge reads the buffer its children wrote and
/// writes the opposite one.
///
/// The divide task forks its two halves and joins a merge continuation.
/// With `use_map` the continuation issues one data-parallel merge kernel
/// over the whole span (each work-item binary-searches its element's rank
/// in the sibling run and writes it straight to its final position);
/// without it the continuation merges serially inside the task.
pub fn mergesort_program(input: &[u64], use_map: bool) -> Result<Program, ConfigError> {
    let n = input.len();
    let padded = n.next_power_of_two().max(1);
    let mut data = input.to_vec();
    data.resize(padded, u64::MAX);

    let mut builder = ProgramBuilder::new(if use_map { "mergesort_map" } else { "mergesort" });
    let buf0 = builder.buffer("data", data);
    let buf1 = builder.buffer("aux", vec![0; padded]);

    builder.task("msort", |ctx| {
        let lo = ctx.arg(0);
        let hi = ctx.arg(1);
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        ctx.fork(MSORT, &[Arg::Word(mid + 1), Arg::Word(hi)]);
        ctx.fork(MSORT, &[Arg::Word(lo), Arg::Word(mid)]);
        ctx.join(MERGE, &[Arg::Word(lo), Arg::Word(hi)]);
    });
    builder.task("merge", move |ctx| {
        let lo = ctx.arg(0);
        let hi = ctx.arg(1);
        let span = hi - lo + 1;
        if use_map {
            ctx.map(MERGE_KERNEL, &[Arg::Word(lo), Arg::Word(span)], span);
        } else {
            let (src, dst) = level_buffers(span, buf0, buf1);
            serial_merge(
                ctx.arena().buf(src),
                ctx.arena().buf(dst),
                lo as usize,
                span as usize,
            );
        }
    });
    builder.map_fn("merge_kernel", move |item| {
        let lo = item.arg(0) as usize;
        let span = item.arg(1) as usize;
        let (src_id, dst_id) = level_buffers(span as u64, buf0, buf1);
        let src = item.arena().buf(src_id);
        let dst = item.arena().buf(dst_id);
        rank_merge_item(src, dst, lo, span, item.index() as usize);
    });

    builder.root(MSORT, &[0, (padded - 1) as u64]);
    builder.extractor(move |arena: &Arena, _| {
        let levels = padded.trailing_zeros();
        let final_buf = if levels % 2 == 0 { buf0 } else { buf1 };
        ResultSummary::Words(arena.buf(final_buf).to_vec()[..n].to_vec())
    });
    builder.build()
}

/// Source/destination buffers for a merge producing a sorted run of `span`
/// elements. Runs of size 2^k live in buffer k % 2, so merges at level k
/// read buffer (k-1) % 2.
fn level_buffers(span: u64, buf0: BufId, buf1: BufId) -> (BufId, BufId) {
    let level = span.trailing_zeros();
    if level % 2 == 1 {
        (buf0, buf1)
    } else {
        (buf1, buf0)
    }
}

fn serial_merge(src: ArenaBuf<'_>, dst: ArenaBuf<'_>, lo: usize, span: usize) {
    let half = span / 2;
    let (mut i, mut j) = (lo, lo + half);
    for out in lo..lo + span {
        let take_left = i < lo + half && (j >= lo + span || src.get(i) <= src.get(j));
        if take_left {
            dst.set(out, src.get(i));
            i += 1;
        } else {
            dst.set(out, src.get(j));
            j += 1;
        }
    }
}

/// Places one element of the merged span: left-run elements rank by the
/// count of strictly smaller right-run elements, right-run elements by the
/// count of smaller-or-equal left-run elements. Equal keys keep left-before-
/// right order, so output positions never collide.
fn rank_merge_item(src: ArenaBuf<'_>, dst: ArenaBuf<'_>, lo: usize, span: usize, index: usize) {
    let half = span / 2;
    let (value, pos) = if index < half {
        let x = src.get(lo + index);
        let rank = count_less(src, lo + half, lo + span, x);
        (x, index + rank)
    } else {
        let j = index - half;
        let x = src.get(lo + half + j);
        let rank = count_less_or_equal(src, lo, lo + half, x);
        (x, j + rank)
    };
    dst.set(lo + pos, value);
}

/// Elements of the sorted run `[start, end)` strictly less than `x`.
fn count_less(buf: ArenaBuf<'_>, start: usize, end: usize, x: u64) -> usize {
    let (mut lo, mut hi) = (start, end);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if buf.get(mid) < x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo - start
}

/// Elements of the sorted run `[start, end)` less than or equal to `x`.
fn count_less_or_equal(buf: ArenaBuf<'_>, start: usize, end: usize, x: u64) -> usize {
    let (mut lo, mut hi) = (start, end);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if buf.get(mid) <= x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo - start
}
