use std::f64::consts::PI;

use crate::error::ConfigError;
use crate::program::{Arg, Program, ProgramBuilder, ResultSummary};
use crate::tvm::TaskTypeId;

const SPLIT: TaskTypeId = TaskTypeId::new(1);
const COMBINE: TaskTypeId = TaskTypeId::new(2);

/// Recursive radix-2 decimation-in-time FFT (forward transform,
/// `X[k] = sum x[j]·e^{-2πijk/n}`).
///
/// A split task forks its even- and odd-index subproblems (stride doubles,
/// the odd half starts one stride in) and joins a butterfly continuation.
/// Subtransform results live at their original strided positions, so the
/// combine stage snapshots its span into scratch before writing the
/// butterflies back; spans at one recursion level are disjoint, making the
/// scratch race-free. Unlike the Fibonacci stress case, each combine does
/// real arithmetic over its whole span.
pub fn fft_program(input: &[(f64, f64)]) -> Result<Program, ConfigError> {
    let n = input.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(ConfigError::Invalid(format!(
            "fft length {n} is not a power of two"
        )));
    }
    let re_init: Vec<f64> = input.iter().map(|c| c.0).collect();
    let im_init: Vec<f64> = input.iter().map(|c| c.1).collect();

    let mut builder = ProgramBuilder::new("fft");
    let re = builder.buffer_f64("re", &re_init);
    let im = builder.buffer_f64("im", &im_init);
    let scratch_re = builder.buffer("scratch_re", vec![0; n]);
    let scratch_im = builder.buffer("scratch_im", vec![0; n]);

    builder.task("split", |ctx| {
        let off = ctx.arg(0);
        let len = ctx.arg(1);
        let stride = ctx.arg(2);
        if len == 1 {
            return;
        }
        ctx.fork(
            SPLIT,
            &[Arg::Word(off), Arg::Word(len / 2), Arg::Word(stride * 2)],
        );
        ctx.fork(
            SPLIT,
            &[
                Arg::Word(off + stride),
                Arg::Word(len / 2),
                Arg::Word(stride * 2),
            ],
        );
        ctx.join(
            COMBINE,
            &[Arg::Word(off), Arg::Word(len), Arg::Word(stride)],
        );
    });
    builder.task("combine", move |ctx| {
        let off = ctx.arg(0) as usize;
        let len = ctx.arg(1) as usize;
        let stride = ctx.arg(2) as usize;
        let arena = ctx.arena();
        let (re, im) = (arena.buf(re), arena.buf(im));
        let (s_re, s_im) = (arena.buf(scratch_re), arena.buf(scratch_im));
        for i in 0..len {
            let p = off + i * stride;
            s_re.set_f64(p, re.get_f64(p));
            s_im.set_f64(p, im.get_f64(p));
        }
        let half = len / 2;
        for k in 0..half {
            let even_at = off + 2 * stride * k;
            let odd_at = even_at + stride;
            let (e_re, e_im) = (s_re.get_f64(even_at), s_im.get_f64(even_at));
            let (o_re, o_im) = (s_re.get_f64(odd_at), s_im.get_f64(odd_at));
            let angle = -2.0 * PI * k as f64 / len as f64;
            let (w_re, w_im) = (angle.cos(), angle.sin());
            let t_re = w_re * o_re - w_im * o_im;
            let t_im = w_re * o_im + w_im * o_re;
            re.set_f64(off + stride * k, e_re + t_re);
            im.set_f64(off + stride * k, e_im + t_im);
            re.set_f64(off + stride * (k + half), e_re - t_re);
            im.set_f64(off + stride * (k + half), e_im - t_im);
        }
    });

    builder.root(SPLIT, &[0, n as u64, 1]);
    builder.extractor(move |arena, _| {
        let (re, im) = (arena.buf(re), arena.buf(im));
        ResultSummary::Complex((0..n).map(|i| (re.get_f64(i), im.get_f64(i))).collect())
    });
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::oracle;
    use crate::program::{run_program, RunConfig};

    fn fft_of(input: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let program = fft_program(input).unwrap();
        let result = run_program(&program, &RunConfig::default()).unwrap();
        match result.summary {
            ResultSummary::Complex(values) => values,
            other => panic!("expected complex output, got {other:?}"),
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let out = fft_of(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        for (re, im) in out {
            assert!((re - 1.0).abs() < 1e-12 && im.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_input_is_all_dc() {
        let out = fft_of(&[(1.0, 0.0); 8]);
        assert!((out[0].0 - 8.0).abs() < 1e-12 && out[0].1.abs() < 1e-12);
        for (re, im) in &out[1..] {
            assert!(re.abs() < 1e-12 && im.abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_dft() {
        let input: Vec<(f64, f64)> = (0..32)
            .map(|i| {
                let x = i as f64;
                ((x * 0.37).sin(), (x * 0.11).cos() - 0.5)
            })
            .collect();
        let expected = oracle::dft(&input);
        let actual = fft_of(&input);
        assert!(oracle::max_complex_error(&actual, &expected) < 1e-9);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(fft_program(&[(0.0, 0.0); 3]).is_err());
        assert!(fft_program(&[]).is_err());
    }
}
