use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use trees_core::apps::{
    self, oracle, synth, GraphCsr, TraversalOrder, TreeSpec,
};
use trees_core::{
    run_program_observed, BackendConfig, ConfigError, Metrics, Program, ResultSummary, RunConfig,
    RuntimeError, WORD_NONE,
};

use crate::{
    BackendArg, RunArgs, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_GOLDEN_MISMATCH, EXIT_OK,
    EXIT_RUNTIME,
};

const DEFAULT_CAPACITY: usize = 1 << 20;

/// The parsed program selection, kept around so check mode can consult the
/// oracle with the same inputs the run used.
enum Loaded {
    Fib { n: u64 },
    Traversal { tree: TreeSpec, order: TraversalOrder },
    Bfs { graph: GraphCsr, src: u64 },
    Sssp { graph: GraphCsr, src: u64 },
    Sort { values: Vec<u64>, use_map: bool },
    Fft { input: Vec<(f64, f64)> },
    Forever,
}

pub(crate) fn cmd_run(args: &RunArgs) -> u8 {
    match try_run(args) {
        Ok(code) => code,
        Err(CliError::Config(message)) => {
            eprintln!("error: {message}");
            EXIT_CONFIG
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err}");
            EXIT_RUNTIME
        }
    }
}

enum CliError {
    Config(String),
    Runtime(RuntimeError),
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        CliError::Config(err.to_string())
    }
}

fn try_run(args: &RunArgs) -> Result<u8, CliError> {
    let loaded = load_program(args)?;
    let program = build_program(&loaded)?;
    let config = engine_config(args)?;

    let trace_to_stdout = args.trace.as_deref() == Some(Path::new("-"));
    let collect_lines = args.trace.is_some() || args.golden.is_some();

    let mut lines: Vec<String> = Vec::new();
    let result = run_program_observed(&program, &config, |trace, stats| {
        if !collect_lines {
            return;
        }
        let mut line = trace.to_json_line();
        if args.trace_slots {
            let mut value: Value = serde_json::from_str(&line).expect("trace roundtrip");
            let executed: Vec<Value> = stats
                .executed
                .as_ref()
                .map(|tasks| {
                    tasks
                        .iter()
                        .map(|t| Value::from(vec![t.slot as u64, t.task_type.get() as u64]))
                        .collect()
                })
                .unwrap_or_default();
            value
                .as_object_mut()
                .expect("trace line is an object")
                .insert("slots".to_string(), Value::from(executed));
            line = value.to_string();
        }
        lines.push(line);
    });
    let result = match result {
        Ok(result) => result,
        Err(RuntimeError::Config(err)) => return Err(err.into()),
        Err(err) => return Err(CliError::Runtime(err)),
    };

    match &args.trace {
        Some(path) if trace_to_stdout => {
            let _ = path;
            for line in &lines {
                println!("{line}");
            }
            println!("{}", result.metrics.to_json_line());
        }
        Some(path) => {
            let body = lines.join("\n") + if lines.is_empty() { "" } else { "\n" };
            fs::write(path, body)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {}
    }

    if args.check {
        if let Err(message) = check_result(&loaded, &result.summary) {
            eprintln!("check failed: {message}");
            return Ok(EXIT_CHECK_FAILED);
        }
    }

    let rendered = result.summary.to_string();
    if !rendered.is_empty() {
        if matches!(result.summary, ResultSummary::Word(_)) {
            println!("{rendered}");
        } else {
            print!("{rendered}");
        }
    }
    if !trace_to_stdout {
        println!("{}", result.metrics.to_json_line());
    }
    print_metrics_table(&result.metrics);

    if let Some(golden) = &args.golden {
        let golden_text = fs::read_to_string(golden)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", golden.display())))?;
        let actual_text = lines.join("\n") + if lines.is_empty() { "" } else { "\n" };
        match crate::compare::compare_texts(&actual_text, &golden_text) {
            Ok(()) => {}
            Err(message) => {
                eprintln!("golden mismatch: {message}");
                return Ok(EXIT_GOLDEN_MISMATCH);
            }
        }
    }

    Ok(EXIT_OK)
}

fn engine_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let backend = match args.backend {
        BackendArg::Seq => BackendConfig::Sequential,
        BackendArg::Par => {
            let workers = args.workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(4, |n| n.get())
            });
            if workers == 0 {
                return Err(CliError::Config("--workers must be at least 1".into()));
            }
            if args.group_size == 0 {
                return Err(CliError::Config("--group-size must be at least 1".into()));
            }
            BackendConfig::BulkParallel {
                workers,
                group_size: args.group_size,
            }
        }
    };
    if args.trace_slots && backend != BackendConfig::Sequential {
        return Err(CliError::Config(
            "--trace-slots requires the sequential backend".into(),
        ));
    }
    let capacity = match args.capacity {
        Some(c) => c,
        None => match std::env::var("TREES_CAPACITY") {
            Ok(raw) => raw.parse().map_err(|_| {
                CliError::Config(format!("TREES_CAPACITY is not a valid size: {raw}"))
            })?,
            Err(_) => DEFAULT_CAPACITY,
        },
    };
    Ok(RunConfig {
        backend,
        capacity,
        epoch_limit: args.epoch_limit,
        collect_trace: false,
        record_executed: args.trace_slots,
    })
}

fn read_input(args: &RunArgs) -> Result<String, CliError> {
    let path = args.input.as_ref().ok_or_else(|| {
        CliError::Config(format!("program {} requires --input", args.program))
    })?;
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_program(args: &RunArgs) -> Result<Loaded, CliError> {
    match args.program.as_str() {
        "fib" => {
            let n = args
                .n
                .ok_or_else(|| CliError::Config("fib requires --n".into()))?;
            Ok(Loaded::Fib { n })
        }
        "preorder" | "postorder" => {
            let tree = apps::parse_tree(&read_input(args)?)?;
            let order = if args.program == "preorder" {
                TraversalOrder::Pre
            } else {
                TraversalOrder::Post
            };
            Ok(Loaded::Traversal { tree, order })
        }
        "bfs" => {
            let graph = apps::parse_graph(&read_input(args)?)?;
            Ok(Loaded::Bfs {
                graph,
                src: args.src,
            })
        }
        "sssp" => {
            let graph = apps::parse_graph(&read_input(args)?)?;
            Ok(Loaded::Sssp {
                graph,
                src: args.src,
            })
        }
        "mergesort" => {
            let values = match (&args.input, args.n) {
                (Some(_), _) => apps::parse_array(&read_input(args)?)?,
                (None, Some(n)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                    (0..n).map(|_| rng.gen()).collect()
                }
                (None, None) => {
                    return Err(CliError::Config(
                        "mergesort requires --input or --n".into(),
                    ))
                }
            };
            Ok(Loaded::Sort {
                values,
                use_map: args.use_map,
            })
        }
        "fft" => {
            let input = match (&args.input, args.n) {
                (Some(_), _) => apps::parse_complex(&read_input(args)?)?,
                (None, Some(n)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                    (0..n)
                        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect()
                }
                (None, None) => {
                    return Err(CliError::Config("fft requires --input or --n".into()))
                }
            };
            Ok(Loaded::Fft { input })
        }
        "forever" => Ok(Loaded::Forever),
        other => Err(CliError::Config(format!(
            "unknown program {other}; expected fib, preorder, postorder, bfs, sssp, \
             mergesort, fft, or forever"
        ))),
    }
}

fn build_program(loaded: &Loaded) -> Result<Program, CliError> {
    let program = match loaded {
        Loaded::Fib { n } => apps::fib_program(*n)?,
        Loaded::Traversal { tree, order } => apps::traversal_program(tree, *order)?,
        Loaded::Bfs { graph, src } => apps::bfs_program(graph, *src)?,
        Loaded::Sssp { graph, src } => apps::sssp_program(graph, *src)?,
        Loaded::Sort { values, use_map } => apps::mergesort_program(values, *use_map)?,
        Loaded::Fft { input } => apps::fft_program(input)?,
        Loaded::Forever => synth::forever_program(),
    };
    Ok(program)
}

fn check_result(loaded: &Loaded, summary: &ResultSummary) -> Result<(), String> {
    match loaded {
        Loaded::Fib { n } => {
            let expected = ResultSummary::Word(oracle::fib(*n));
            if *summary != expected {
                return Err(format!("fib({n}): got {summary:?}, expected {expected:?}"));
            }
        }
        Loaded::Traversal { tree, order } => {
            let ResultSummary::Words(visits) = summary else {
                return Err("traversal produced a non-list result".into());
            };
            let expected = oracle::traversal_order(tree, *order);
            let mut got = visits.clone();
            let mut want = expected.clone();
            got.sort_unstable();
            want.sort_unstable();
            if got != want {
                return Err("visited node set differs from the recursive traversal".into());
            }
            // Within one run the visit list is a linearization; parents must
            // come after (postorder) or before (preorder) their children.
            let mut rank = vec![usize::MAX; tree.len()];
            for (i, node) in visits.iter().enumerate() {
                rank[*node as usize] = i;
            }
            for node in 0..tree.len() {
                if rank[node] == usize::MAX {
                    continue;
                }
                for child in [tree.left[node], tree.right[node]] {
                    if child == WORD_NONE {
                        continue;
                    }
                    let ordered = match order {
                        TraversalOrder::Pre => rank[node] < rank[child as usize],
                        TraversalOrder::Post => rank[node] > rank[child as usize],
                    };
                    if !ordered {
                        return Err(format!(
                            "node {node} and child {child} visited out of order"
                        ));
                    }
                }
            }
        }
        Loaded::Bfs { graph, src } => {
            let expected = ResultSummary::Words(oracle::bfs_distances(graph, *src));
            if *summary != expected {
                return Err("bfs distances differ from reference search".into());
            }
        }
        Loaded::Sssp { graph, src } => {
            let expected = ResultSummary::Words(oracle::dijkstra_distances(graph, *src));
            if *summary != expected {
                return Err("sssp distances differ from reference shortest paths".into());
            }
        }
        Loaded::Sort { values, .. } => {
            let expected = ResultSummary::Words(oracle::sorted(values));
            if *summary != expected {
                return Err("output is not the sorted input".into());
            }
        }
        Loaded::Fft { input } => {
            let ResultSummary::Complex(actual) = summary else {
                return Err("fft produced a non-complex result".into());
            };
            let expected = oracle::dft(input);
            let error = oracle::max_complex_error(actual, &expected);
            if error >= 1e-9 {
                return Err(format!("fft error {error} exceeds 1e-9"));
            }
        }
        Loaded::Forever => return Err("forever has no oracle".into()),
    }
    Ok(())
}

fn print_metrics_table(metrics: &Metrics) {
    let rows: Vec<(&str, String)> = vec![
        ("epochs", metrics.epochs.to_string()),
        ("map drains", metrics.map_drains.to_string()),
        ("work (tasks)", metrics.work_tasks.to_string()),
        ("map work items", metrics.work_map_items.to_string()),
        ("launched total", metrics.launched_total.to_string()),
        ("utilization", format!("{:.4}", metrics.utilization())),
        (
            "peak slot watermark",
            metrics.peak_next_free_core.to_string(),
        ),
        ("allocation rmw ops", metrics.atomic_ops.to_string()),
        ("lock ops", metrics.lock_ops.to_string()),
        ("critical path", metrics.critical_path().to_string()),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (key, value) in rows {
        println!("{key:<width$}  {value}");
    }
}
