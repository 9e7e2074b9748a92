//! Acceptance suite: one test per criterion, each printing its own
//! pass/fail line through the harness.
//!
//! 1. Golden trace of postorder on the pinned six-node tree.
//! 2. Differential equivalence against the mask-stack interpreter on 100+
//!    randomized programs.
//! 3. Application outputs equal their independent oracles.
//! 4. Sequential and bulk-parallel backends agree exactly.
//! 5. Structural properties: zero locks, batched allocation bound, epoch
//!    isolation.
//! 6. Closed-form time model and space bounds.
//! 7. Capacity, halting, and epoch-limit behavior.
//! 8. Utilization counters of the golden run.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use trees_core::apps::synth::{self, ForkJoinRecipe};
use trees_core::apps::{
    self, bfs_program, fib_program, fft_program, mergesort_program, oracle, sssp_program,
    traversal_program, GraphCsr, TraversalOrder, TreeSpec,
};
use trees_core::reference::ReferenceMachine;
use trees_core::{
    model_time, run_program, run_program_observed, space_bounds, BackendConfig, EpochStats,
    EpochTrace, ModelCase, PerfModelParams, Program, ResultSummary, RunConfig, RuntimeError,
    TaskTypeId, WORD_NONE,
};

fn seq_config() -> RunConfig {
    RunConfig::default()
}

fn par_config(workers: usize) -> RunConfig {
    RunConfig {
        backend: BackendConfig::parallel(workers),
        ..RunConfig::default()
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: golden trace of the worked example.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_golden_trace_postorder_six_nodes() {
    let started = std::time::Instant::now();
    let program = traversal_program(&TreeSpec::six_node_example(), TraversalOrder::Post).unwrap();
    let result = run_program(
        &program,
        &RunConfig {
            collect_trace: true,
            ..seq_config()
        },
    )
    .unwrap();
    let trace = result.trace.unwrap();

    assert_eq!(trace.len(), 7, "epoch count");
    let cens: Vec<u64> = trace.iter().map(|t| t.cen).collect();
    assert_eq!(cens, [0, 1, 2, 3, 2, 1, 0], "epoch number sequence");
    let launched: Vec<u64> = trace.iter().map(|t| t.launched).collect();
    assert_eq!(launched, [1, 2, 4, 6, 4, 2, 1], "launched counts");
    let valid: Vec<u64> = trace.iter().map(|t| t.valid_executed).collect();
    assert_eq!(valid, [1, 2, 4, 6, 3, 2, 1], "valid counts");

    // The revisit of epoch 2 launches 4 slots of which 3 are still live.
    assert_eq!((trace[4].cen, trace[4].launched, trace[4].valid_executed), (2, 4, 3));

    let peak = trace.iter().map(|t| t.next_free_core).max().unwrap();
    assert_eq!(peak, 13, "allocation high-water mark");
    assert_eq!(trace[4].next_free_core, 7, "reclamation at the revisit");

    let last = trace.last().unwrap();
    assert!(last.join_stack.is_empty() && last.ndrange_stack.is_empty());

    assert!(started.elapsed().as_secs() < 1, "criterion 1 runtime bound");
}

// ---------------------------------------------------------------------------
// Criterion 2: differential equivalence against the reference interpreter.
// ---------------------------------------------------------------------------

/// Backend-independent identity of one executed task: its type plus however
/// many leading argument words are semantic for that type (handle-valued
/// arguments are excluded, since slot numbering legitimately differs
/// between the engine and the interpreter).
fn identity_arity(program: &Program, ty: TaskTypeId) -> usize {
    match (program.name(), program.task_name(ty)) {
        ("fib", "fib") => 1,
        ("fib", "fib_sum") => 0,
        (_, "msort") | (_, "merge") => 2,
        _ => 1,
    }
}

type EpochIdentity = (u64, Vec<(u32, Vec<u64>)>, u64);

fn engine_epochs(program: &Program, config: &RunConfig) -> (Vec<EpochIdentity>, ResultSummary) {
    let mut epochs = Vec::new();
    let config = RunConfig {
        record_executed: true,
        ..config.clone()
    };
    let result = run_program_observed(program, &config, |trace: &EpochTrace, stats: &EpochStats| {
        let mut tasks: Vec<(u32, Vec<u64>)> = stats
            .executed
            .as_ref()
            .unwrap()
            .iter()
            .map(|t| {
                let arity = identity_arity(program, t.task_type);
                (t.task_type.get(), t.args[..arity].to_vec())
            })
            .collect();
        tasks.sort_unstable();
        epochs.push((trace.cen, tasks, stats.map_items));
    })
    .unwrap();
    (epochs, result.summary)
}

fn reference_epochs(program: &Program, capacity: usize) -> (Vec<EpochIdentity>, ResultSummary) {
    let mut machine = ReferenceMachine::new(program, capacity).unwrap();
    let log = machine.run(1_000_000).unwrap();
    let epochs = log
        .iter()
        .map(|epoch| {
            let mut tasks: Vec<(u32, Vec<u64>)> = epoch
                .executed
                .iter()
                .map(|t| {
                    let arity = identity_arity(program, t.task_type);
                    (t.task_type.get(), t.args[..arity].to_vec())
                })
                .collect();
            tasks.sort_unstable();
            (epoch.cen, tasks, epoch.map_items)
        })
        .collect();
    (epochs, machine.summary())
}

fn assert_matches_reference(program: &Program, label: &str) {
    // The interpreter never reclaims slots, so its capacity covers the
    // program's total fork count rather than its live peak.
    let (ref_epochs, ref_summary) = reference_epochs(program, 1 << 12);
    let small = RunConfig {
        capacity: 1 << 14,
        ..seq_config()
    };
    let (seq_epochs, seq_summary) = engine_epochs(program, &small);
    assert_eq!(seq_epochs, ref_epochs, "sequential engine vs interpreter: {label}");
    assert_eq!(seq_summary, ref_summary, "summary: {label}");
    let small_par = RunConfig {
        capacity: 1 << 14,
        ..par_config(4)
    };
    let (par_epochs, _) = engine_epochs(program, &small_par);
    assert_eq!(par_epochs, ref_epochs, "parallel engine vs interpreter: {label}");
}

fn random_tree(rng: &mut StdRng, max_nodes: usize) -> TreeSpec {
    let n = rng.gen_range(0..=max_nodes);
    if n == 0 {
        return TreeSpec {
            left: vec![],
            right: vec![],
            root: WORD_NONE,
        };
    }
    let mut left = vec![WORD_NONE; n];
    let mut right = vec![WORD_NONE; n];
    // Open (node, is_left) attachment points; every attach opens two more.
    let mut open = vec![(0usize, true), (0usize, false)];
    for node in 1..n {
        let at = rng.gen_range(0..open.len());
        let (parent, is_left) = open.swap_remove(at);
        if is_left {
            left[parent] = node as u64;
        } else {
            right[parent] = node as u64;
        }
        open.push((node, true));
        open.push((node, false));
    }
    TreeSpec {
        left,
        right,
        root: 0,
    }
}

fn random_recipe(rng: &mut StdRng, max_nodes: usize) -> ForkJoinRecipe {
    let n = rng.gen_range(1..=max_nodes);
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    for node in 1..n {
        let parent = rng.gen_range(0..node);
        children[parent].push(node as u32);
    }
    let joins = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    ForkJoinRecipe {
        children,
        joins,
        root: 0,
    }
}

fn random_graph(rng: &mut StdRng, max_vertices: usize, max_edges: usize) -> GraphCsr {
    let v = rng.gen_range(2..=max_vertices);
    let e = rng.gen_range(0..=max_edges);
    let edges: Vec<(u64, u64, u64)> = (0..e)
        .map(|_| {
            (
                rng.gen_range(0..v) as u64,
                rng.gen_range(0..v) as u64,
                rng.gen_range(0..=20),
            )
        })
        .collect();
    GraphCsr::from_edges(v, &edges).unwrap()
}

#[test]
fn criterion_2_reference_interpreter_equivalence() {
    let started = std::time::Instant::now();
    let mut rng = StdRng::seed_from_u64(0x7ee5);
    let mut programs = 0usize;

    for i in 0..30 {
        let tree = random_tree(&mut rng, 24);
        for order in [TraversalOrder::Pre, TraversalOrder::Post] {
            let program = traversal_program(&tree, order).unwrap();
            assert_matches_reference(&program, &format!("tree {i} {order:?}"));
            programs += 1;
        }
    }
    for n in 2..=12 {
        let program = fib_program(n).unwrap();
        assert_matches_reference(&program, &format!("fib({n})"));
        programs += 1;
    }
    for i in 0..40 {
        let recipe = random_recipe(&mut rng, 40);
        let program = synth::recipe_program(&recipe).unwrap();
        assert_matches_reference(&program, &format!("recipe {i}"));
        programs += 1;
    }
    for i in 0..5 {
        let len = rng.gen_range(0..64);
        let values: Vec<u64> = (0..len).map(|_| rng.gen_range(0..1000)).collect();
        for use_map in [false, true] {
            let program = mergesort_program(&values, use_map).unwrap();
            assert_matches_reference(&program, &format!("mergesort {i} map={use_map}"));
            programs += 1;
        }
    }
    for i in 0..5 {
        let graph = random_graph(&mut rng, 24, 60);
        let src = rng.gen_range(0..graph.vertex_count) as u64;
        assert_matches_reference(&bfs_program(&graph, src).unwrap(), &format!("bfs {i}"));
        assert_matches_reference(&sssp_program(&graph, src).unwrap(), &format!("sssp {i}"));
        programs += 2;
    }

    assert!(programs >= 100, "only {programs} programs exercised");
    assert!(started.elapsed().as_secs() < 30, "criterion 2 runtime bound");
}

// ---------------------------------------------------------------------------
// Criterion 3: oracle correctness of the application suite.
// ---------------------------------------------------------------------------

fn words(summary: ResultSummary) -> Vec<u64> {
    match summary {
        ResultSummary::Words(w) => w,
        other => panic!("expected words, got {other:?}"),
    }
}

#[test]
fn criterion_3_application_oracles() {
    let started = std::time::Instant::now();
    let mut rng = StdRng::seed_from_u64(0xacce55);

    for n in 0..=25 {
        let result = run_program(&fib_program(n).unwrap(), &seq_config()).unwrap();
        assert_eq!(result.summary, ResultSummary::Word(oracle::fib(n)), "fib({n})");
    }

    for i in 0..50 {
        let graph = random_graph(&mut rng, 1000, 8000);
        let src = rng.gen_range(0..graph.vertex_count) as u64;
        let bfs = run_program(&bfs_program(&graph, src).unwrap(), &seq_config()).unwrap();
        assert_eq!(words(bfs.summary), oracle::bfs_distances(&graph, src), "bfs {i}");
        let sssp = run_program(&sssp_program(&graph, src).unwrap(), &seq_config()).unwrap();
        assert_eq!(
            words(sssp.summary),
            oracle::dijkstra_distances(&graph, src),
            "sssp {i}"
        );
    }

    for i in 0..50 {
        let len = match i {
            0 => 0,
            1 => 1,
            2 => 1 << 15,
            3 => 1 << 16,
            _ => rng.gen_range(2..4096),
        };
        let values: Vec<u64> = (0..len).map(|_| rng.gen()).collect();
        let expected = oracle::sorted(&values);
        for use_map in [false, true] {
            let result =
                run_program(&mergesort_program(&values, use_map).unwrap(), &seq_config()).unwrap();
            assert_eq!(words(result.summary), expected, "mergesort {i} map={use_map}");
        }
    }

    for exponent in 0..=10 {
        let n = 1usize << exponent;
        let input: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let result = run_program(&fft_program(&input).unwrap(), &seq_config()).unwrap();
        let ResultSummary::Complex(actual) = result.summary else {
            panic!("expected complex output");
        };
        let expected = oracle::dft(&input);
        let error = oracle::max_complex_error(&actual, &expected);
        assert!(error < 1e-9, "fft n={n} max error {error}");
    }

    assert!(started.elapsed().as_secs() < 120, "criterion 3 runtime bound");
}

// ---------------------------------------------------------------------------
// Criterion 4: backend equivalence.
// ---------------------------------------------------------------------------

fn trace_file(program: &Program, config: &RunConfig) -> (String, ResultSummary, u64, u64) {
    let result = run_program(
        program,
        &RunConfig {
            collect_trace: true,
            ..config.clone()
        },
    )
    .unwrap();
    let lines: Vec<String> = result
        .trace
        .unwrap()
        .iter()
        .map(EpochTrace::to_json_line)
        .collect();
    (
        lines.join("\n"),
        result.summary,
        result.metrics.work_tasks,
        result.metrics.critical_path(),
    )
}

#[test]
fn criterion_4_backend_equivalence() {
    let mut rng = StdRng::seed_from_u64(0xbac);
    let graph = random_graph(&mut rng, 300, 2000);
    let array: Vec<u64> = (0..3000).map(|_| rng.gen()).collect();
    let signal: Vec<(f64, f64)> = (0..256)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();

    let programs: Vec<Program> = vec![
        fib_program(16).unwrap(),
        bfs_program(&graph, 0).unwrap(),
        sssp_program(&graph, 0).unwrap(),
        mergesort_program(&array, false).unwrap(),
        mergesort_program(&array, true).unwrap(),
        fft_program(&signal).unwrap(),
    ];

    for program in &programs {
        let baseline = trace_file(program, &seq_config());
        for workers in [1, 2, 4, 8] {
            let candidate = trace_file(program, &par_config(workers));
            assert_eq!(
                candidate.0,
                baseline.0,
                "trace mismatch: {} with {workers} workers",
                program.name()
            );
            assert_eq!(candidate.1, baseline.1, "result: {}", program.name());
            assert_eq!(candidate.2, baseline.2, "work: {}", program.name());
            assert_eq!(candidate.3, baseline.3, "critical path: {}", program.name());
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion 5: structural work-together properties.
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_structural_properties() {
    let mut rng = StdRng::seed_from_u64(0x575c);
    let graph = random_graph(&mut rng, 400, 3000);
    let array: Vec<u64> = (0..2048).map(|_| rng.gen()).collect();

    let programs: Vec<Program> = vec![
        fib_program(14).unwrap(),
        synth::wide_fanout_program(1000),
        bfs_program(&graph, 0).unwrap(),
        sssp_program(&graph, 0).unwrap(),
        mergesort_program(&array, true).unwrap(),
    ];

    for program in &programs {
        for workers in [1, 4] {
            let config = RunConfig {
                record_executed: true,
                ..par_config(workers)
            };
            let result = run_program_observed(program, &config, |trace, stats| {
                // Batched allocation: at most one counter RMW per forking group.
                assert!(
                    stats.alloc_rmw_ops <= stats.groups_with_forks,
                    "{}: {} RMWs for {} forking groups",
                    program.name(),
                    stats.alloc_rmw_ops,
                    stats.groups_with_forks
                );
                assert_eq!(stats.lock_ops, 0);
                // Epoch isolation: everything executed lies in the popped
                // range; forked slots start strictly above it.
                for task in stats.executed.as_ref().unwrap() {
                    assert!(
                        (task.slot as u64) >= trace.ndrange_lo
                            && (task.slot as u64) <= trace.ndrange_hi
                    );
                }
                if stats.forked > 0 {
                    assert_eq!(trace.next_free_core, trace.ndrange_hi + 1 + stats.forked);
                }
            })
            .unwrap();
            assert_eq!(result.metrics.lock_ops, 0, "{}", program.name());
        }
        // The sequential backend shares the lock-free property.
        let result = run_program(program, &seq_config()).unwrap();
        assert_eq!(result.metrics.lock_ops, 0, "{}", program.name());
    }
}

// ---------------------------------------------------------------------------
// Criterion 6: time model closed forms and space bounds.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_metrics_formulas() {
    let p = |t1: f64, t_inf: f64, p: f64, w: f64, v1: f64, v_inf: f64, d: u32| PerfModelParams {
        t1,
        t_inf,
        p,
        w,
        v1,
        v_inf,
        branch_depth: d,
    };
    // Hand-evaluated closed forms.
    let table: Vec<(PerfModelParams, ModelCase, f64)> = vec![
        (p(100.0, 10.0, 1.0, 1.0, 1.0, 1.0, 0), ModelCase::Scalar, 110.0),
        (p(1024.0, 8.0, 4.0, 16.0, 1.0, 2.0, 0), ModelCase::Best, 32.0),
        (p(1024.0, 8.0, 4.0, 16.0, 1.0, 2.0, 0), ModelCase::Pessimistic, 80.0),
        (p(1024.0, 8.0, 4.0, 16.0, 1.0, 2.0, 2), ModelCase::Worst, 80.0),
        (p(1000.0, 50.0, 8.0, 1.0, 2.0, 3.0, 0), ModelCase::Scalar, 400.0),
        (p(4096.0, 4.0, 2.0, 32.0, 1.0, 1.0, 0), ModelCase::Best, 68.0),
        (p(4096.0, 4.0, 2.0, 32.0, 1.0, 1.0, 0), ModelCase::Pessimistic, 324.0),
        (p(4096.0, 4.0, 2.0, 32.0, 1.0, 1.0, 4), ModelCase::Worst, 1028.0),
        (p(64.0, 2.0, 4.0, 8.0, 1.5, 0.0, 0), ModelCase::Best, 3.0),
        (p(64.0, 2.0, 4.0, 8.0, 1.5, 0.5, 0), ModelCase::Pessimistic, 10.0),
        (p(640.0, 10.0, 10.0, 4.0, 2.0, 2.5, 1), ModelCase::Worst, 89.0),
        (p(300.0, 7.0, 3.0, 1.0, 3.0, 2.0, 0), ModelCase::Scalar, 314.0),
    ];
    assert!(table.len() >= 10);
    for (params, case, expected) in &table {
        let actual = model_time(params, *case).unwrap();
        let relative = (actual - expected).abs() / expected.abs();
        assert!(
            relative <= 1e-12,
            "{case:?} {params:?}: got {actual}, want {expected}"
        );
    }

    // Space bounds bracket the observed peak for every bundled program.
    let mut rng = StdRng::seed_from_u64(0x5bace);
    let graph = random_graph(&mut rng, 300, 1500);
    let array: Vec<u64> = (0..1024).map(|_| rng.gen()).collect();
    let signal: Vec<(f64, f64)> = (0..128).map(|_| (rng.gen(), rng.gen())).collect();
    let tree = random_tree(&mut rng, 64);
    let programs: Vec<Program> = vec![
        fib_program(12).unwrap(),
        traversal_program(&tree, TraversalOrder::Pre).unwrap(),
        traversal_program(&tree, TraversalOrder::Post).unwrap(),
        bfs_program(&graph, 0).unwrap(),
        sssp_program(&graph, 0).unwrap(),
        mergesort_program(&array, false).unwrap(),
        mergesort_program(&array, true).unwrap(),
        fft_program(&signal).unwrap(),
    ];
    for program in &programs {
        let result = run_program(program, &seq_config()).unwrap();
        let (lower, upper) = space_bounds(&result.metrics).unwrap();
        let peak = result.metrics.peak_next_free_core;
        assert!(
            lower <= peak && peak <= upper,
            "{}: peak {peak} outside [{lower}, {upper}]",
            program.name()
        );
    }
}

// ---------------------------------------------------------------------------
// Criterion 7: capacity and halting behavior.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_capacity_and_halting() {
    // A fork against a capacity-1 vector is the documented fatal error.
    let config = RunConfig {
        capacity: 1,
        ..seq_config()
    };
    match run_program(&fib_program(3).unwrap(), &config) {
        Err(RuntimeError::CapacityExhausted {
            capacity: 1,
            slot: 0,
            ..
        }) => {}
        other => panic!("expected capacity error, got {other:?}"),
    }

    // Every bundled program halts with drained stacks.
    let mut rng = StdRng::seed_from_u64(0x4a17);
    let graph = random_graph(&mut rng, 200, 800);
    let array: Vec<u64> = (0..512).map(|_| rng.gen()).collect();
    let tree = random_tree(&mut rng, 40);
    let signal: Vec<(f64, f64)> = (0..64).map(|_| (rng.gen(), rng.gen())).collect();
    let programs: Vec<Program> = vec![
        fib_program(10).unwrap(),
        traversal_program(&tree, TraversalOrder::Pre).unwrap(),
        traversal_program(&tree, TraversalOrder::Post).unwrap(),
        bfs_program(&graph, 1).unwrap(),
        sssp_program(&graph, 1).unwrap(),
        mergesort_program(&array, false).unwrap(),
        mergesort_program(&array, true).unwrap(),
        fft_program(&signal).unwrap(),
    ];
    for program in &programs {
        for config in [seq_config(), par_config(4)] {
            let result = run_program(
                program,
                &RunConfig {
                    collect_trace: true,
                    ..config
                },
            )
            .unwrap();
            let trace = result.trace.unwrap();
            let last = trace.last().unwrap();
            assert!(
                last.join_stack.is_empty() && last.ndrange_stack.is_empty(),
                "{} did not drain its stacks",
                program.name()
            );
        }
    }

    // A deliberate non-terminator trips the epoch limit (the CLI maps this
    // to exit code 3; see the CLI suite).
    let config = RunConfig {
        epoch_limit: 100,
        ..seq_config()
    };
    match run_program(&synth::forever_program(), &config) {
        Err(RuntimeError::EpochLimit { limit: 100 }) => {}
        other => panic!("expected epoch limit error, got {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// Criterion 8: utilization counters of the golden run.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_utilization_of_golden_run() {
    let program = traversal_program(&TreeSpec::six_node_example(), TraversalOrder::Post).unwrap();
    let result = run_program(&program, &seq_config()).unwrap();
    assert_eq!(result.metrics.work_tasks, 19);
    assert_eq!(result.metrics.launched_total, 20);
    assert_eq!(result.metrics.utilization(), 0.95);
    assert_eq!(result.metrics.epochs, 7);
    assert_eq!(result.metrics.critical_path(), 7);
    assert_eq!(result.metrics.peak_next_free_core, 13);

    // Cross-check the derived counts with the traversal oracle: 6 node
    // visits via continuations, 6 node expansions, 7 null expansions, one
    // stale launch at the revisit.
    let visits = oracle::traversal_order(&TreeSpec::six_node_example(), TraversalOrder::Post);
    assert_eq!(visits.len(), 6);
    assert_eq!(apps::oracle::sorted(&visits), vec![0, 1, 2, 3, 4, 5]);
}
