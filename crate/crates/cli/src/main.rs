//! Command-line surface: ingest CSVs into a data file, build decomposition
//! trees over it, then estimate, benchmark, and monitor them.
//!
//! Every command prints one JSON object per result on stdout; anything
//! diagnostic (`--explain`) goes to stderr. Exit codes: 0 on success, 1 on
//! usage errors, 2 on data or model errors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gluecard::catalog::{load_schema, Database};
use gluecard::gluetree::{
    build_tree, check_update, load_database, save_database, BuildConfig, DecompositionTree,
    PartitionStrategy, StatsMode,
};
use gluecard::inference::{estimate, estimate_subplans, EstimateReport};
use gluecard::oracle::{exec_exact, qerror, QErrorSummary};
use gluecard::regions::{parse_query, Query};
use gluecard::{Error, Result};

/// Intermediate-row cap for exact benchmark execution.
const ORACLE_CAP: usize = 10_000_000;

#[derive(Parser)]
#[command(name = "gluecard", version, about = "Join cardinality estimation over merged per-table models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load `<data>/<table>.csv` for every schema table into one data file
    Ingest {
        /// Schema document (JSON)
        #[arg(long)]
        schema: PathBuf,
        /// Directory holding one CSV per table
        #[arg(long)]
        data: PathBuf,
        /// Output data file
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a decomposition tree over an ingested data file
    Build(BuildArgs),
    /// Estimate one query against a model
    Estimate {
        #[arg(long)]
        model: PathBuf,
        /// Path to a query document (JSON)
        #[arg(long)]
        query: PathBuf,
        /// Count distinct constrained-attribute tuples instead of rows
        #[arg(long)]
        distinct: bool,
        /// Narrate the evaluation on stderr
        #[arg(long)]
        explain: bool,
    },
    /// Run a workload file; optionally score against exact execution
    Bench {
        #[arg(long)]
        model: PathBuf,
        /// Query documents, one JSON object per line
        #[arg(long)]
        workload: PathBuf,
        /// Compare against exact execution and report q-errors
        #[arg(long, requires = "data")]
        oracle: bool,
        /// Ingested data file to execute the oracle on
        #[arg(long)]
        data: Option<PathBuf>,
        /// Write per-query results here, one JSON object per line
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate every connected sub-plan of a query
    Subplans {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Dump a model file as readable JSON
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
    /// Rescore a model's partitions against current CSV data
    CheckUpdate {
        #[arg(long)]
        model: PathBuf,
        /// Directory holding one CSV per table
        #[arg(long)]
        data: PathBuf,
        /// Override the model's dependence threshold
        #[arg(long)]
        tau: Option<f64>,
    },
}

#[derive(Args)]
struct BuildArgs {
    /// Ingested data file
    #[arg(long)]
    catalog: PathBuf,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
    /// `context` or `independent`
    #[arg(long)]
    mode: Option<String>,
    /// Dependence threshold for partition refinement
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    max_parts: Option<usize>,
    /// Statistics sample size in `sampled` mode
    #[arg(long = "sample")]
    sample_n: Option<usize>,
    /// `exact` or `sampled`
    #[arg(long)]
    stats: Option<String>,
    /// `auto` (dependence-driven) or `singleton` (one part per value combination)
    #[arg(long)]
    partitions: Option<String>,
    /// Cost weight on the smaller side's table count
    #[arg(long)]
    alpha: Option<f64>,
    /// Cost weight on the split's dependence score
    #[arg(long)]
    beta: Option<f64>,
    /// Cost weight on dependence raised to the larger side's table count
    #[arg(long)]
    gamma: Option<f64>,
    /// `KIND` for every table or `TABLE=KIND,...` per table
    /// (exact, histogram, sample, spn)
    #[arg(long)]
    leaf: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests parse as "errors" but exit clean.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest { schema, data, out } => cmd_ingest(&schema, &data, &out),
        Command::Build(args) => cmd_build(&args),
        Command::Estimate { model, query, distinct, explain } => {
            cmd_estimate(&model, &query, distinct, explain)
        }
        Command::Bench { model, workload, oracle, data, out } => {
            cmd_bench(&model, &workload, oracle, data.as_deref(), out.as_deref())
        }
        Command::Subplans { model, query } => cmd_subplans(&model, &query),
        Command::Inspect { model } => cmd_inspect(&model),
        Command::CheckUpdate { model, data, tau } => cmd_check_update(&model, &data, tau),
    }
}

fn cmd_ingest(schema: &Path, data: &Path, out: &Path) -> Result<()> {
    let catalog = load_schema(&std::fs::read_to_string(schema)?)?;
    let db = Database::ingest_dir(catalog, data)?;
    save_database(&db, BufWriter::new(File::create(out)?))?;
    let rows: serde_json::Map<String, serde_json::Value> = db
        .catalog
        .tables
        .iter()
        .zip(&db.tables)
        .map(|(meta, table)| (meta.name.clone(), table.rows.into()))
        .collect();
    emit(&serde_json::json!({ "out": out, "tables": db.tables.len(), "rows": rows }).to_string())
}

fn cmd_build(args: &BuildArgs) -> Result<()> {
    let db = load_database(BufReader::new(File::open(&args.catalog)?))?;
    let mut config = BuildConfig::default();
    if let Some(mode) = &args.mode {
        config.mode = mode.parse()?;
    }
    if let Some(tau) = args.tau {
        config.tau = tau;
    }
    if let Some(max_parts) = args.max_parts {
        config.max_parts = max_parts;
    }
    if let Some(sample_n) = args.sample_n {
        config.sample_n = sample_n;
    }
    if let Some(stats) = &args.stats {
        config.stats = match stats.as_str() {
            "exact" => StatsMode::Exact,
            "sampled" => StatsMode::Sampled,
            other => {
                return Err(Error::Build(format!(
                    "unknown stats mode '{other}', expected exact or sampled"
                )))
            }
        };
    }
    if let Some(partitions) = &args.partitions {
        config.partitions = match partitions.as_str() {
            "auto" => PartitionStrategy::Auto,
            "singleton" => PartitionStrategy::Singleton,
            other => {
                return Err(Error::Build(format!(
                    "unknown partition strategy '{other}', expected auto or singleton"
                )))
            }
        };
    }
    if let Some(alpha) = args.alpha {
        config.cost.alpha = alpha;
    }
    if let Some(beta) = args.beta {
        config.cost.beta = beta;
    }
    if let Some(gamma) = args.gamma {
        config.cost.gamma = gamma;
    }
    if let Some(leaf) = &args.leaf {
        apply_leaf_flag(leaf, &mut config)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    let tree = build_tree(&db, &config)?;
    tree.save(BufWriter::new(File::create(&args.out)?))?;
    emit(
        &serde_json::json!({
            "out": args.out,
            "tables": db.tables.len(),
            "nodes": tree.root.node_count(),
            "join_rows": tree.root.join_rows(),
        })
        .to_string(),
    )
}

/// `--leaf spn` sets the default; `--leaf T=exact,S=histogram` overrides
/// per table.
fn apply_leaf_flag(spec: &str, config: &mut BuildConfig) -> Result<()> {
    if spec.contains('=') {
        for pair in spec.split(',') {
            let (table, kind) = pair.split_once('=').ok_or_else(|| {
                Error::Build(format!("bad leaf override '{pair}', expected TABLE=KIND"))
            })?;
            config.leaf_overrides.insert(table.trim().to_string(), kind.trim().parse()?);
        }
    } else {
        config.leaf_default = spec.trim().parse()?;
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<DecompositionTree> {
    DecompositionTree::load(BufReader::new(File::open(path)?))
}

fn load_query(path: &Path, tree: &DecompositionTree) -> Result<Query> {
    parse_query(&std::fs::read_to_string(path)?, &tree.catalog)
}

/// Print one result line. A closed stdout (piping into `head`, say) is the
/// consumer's way of saying it has read enough, not an error.
fn emit(line: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}").and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        other => Ok(other?),
    }
}

fn cmd_estimate(model: &Path, query: &Path, distinct: bool, explain: bool) -> Result<()> {
    let tree = load_model(model)?;
    let mut q = load_query(query, &tree)?;
    q.distinct = q.distinct || distinct;
    let report = estimate(&tree, &q, None)?;
    if explain {
        let names: Vec<&str> = report
            .effective_tables
            .iter()
            .map(|&t| tree.catalog.tables[t].name.as_str())
            .collect();
        eprintln!(
            "mode {}; effective join [{}]; {} leaf calls; {:.3} ms",
            tree.config.mode,
            names.join(", "),
            report.leaf_calls,
            report.elapsed_ms
        );
    }
    emit(&serde_json::to_string(&report)?)
}

fn cmd_bench(
    model: &Path,
    workload: &Path,
    oracle: bool,
    data: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let tree = load_model(model)?;
    let text = std::fs::read_to_string(workload)?;
    let queries: Vec<Query> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| parse_query(l, &tree.catalog))
        .collect::<Result<_>>()?;

    let reports: Vec<EstimateReport> =
        run_parallel(&queries, |q| estimate(&tree, q, None))?;

    let truths: Option<Vec<f64>> = match (oracle, data) {
        (true, Some(path)) => {
            let db = load_database(BufReader::new(File::open(path)?))?;
            Some(run_parallel(&queries, |q| exec_exact(&db, q, ORACLE_CAP))?)
        }
        _ => None,
    };

    if let Some(path) = out {
        let mut sink = BufWriter::new(File::create(path)?);
        for (i, report) in reports.iter().enumerate() {
            let mut line = serde_json::json!({ "query": i, "cardinality": report.cardinality });
            if let Some(truths) = &truths {
                line["truth"] = truths[i].into();
                line["qerror"] = qerror(report.cardinality, truths[i]).into();
            }
            writeln!(sink, "{line}")?;
        }
    }

    match truths {
        Some(truths) => {
            let qerrors: Vec<f64> = reports
                .iter()
                .zip(&truths)
                .map(|(r, &t)| qerror(r.cardinality, t))
                .collect();
            emit(&serde_json::to_string(&QErrorSummary::new(qerrors))?)?;
        }
        None => {
            emit(
                &serde_json::json!({
                    "queries": reports.len(),
                    "leaf_calls": reports.iter().map(|r| r.leaf_calls).sum::<u64>(),
                    "elapsed_ms": reports.iter().map(|r| r.elapsed_ms).sum::<f64>(),
                })
                .to_string(),
            )?;
        }
    }
    Ok(())
}

/// Map `f` over the queries, fanning out over `GLUE_THREADS` threads
/// (0 or 1 = sequential, unset = all available). Order is preserved and
/// the first error wins.
fn run_parallel<T, F>(queries: &[Query], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Query) -> Result<T> + Sync,
{
    let threads = match std::env::var("GLUE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Build(format!("GLUE_THREADS must be a number, got '{v}'")))?,
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    if threads <= 1 || queries.len() <= 1 {
        return queries.iter().map(&f).collect();
    }

    let chunk = queries.len().div_ceil(threads);
    let mut results: Vec<Option<Result<T>>> = Vec::new();
    results.resize_with(queries.len(), || None);
    std::thread::scope(|scope| {
        for (slot, work) in results.chunks_mut(chunk).zip(queries.chunks(chunk)) {
            let f = &f;
            scope.spawn(move || {
                for (out, q) in slot.iter_mut().zip(work) {
                    *out = Some(f(q));
                }
            });
        }
    });
    results.into_iter().map(|r| r.expect("worker filled every slot")).collect()
}

fn cmd_subplans(model: &Path, query: &Path) -> Result<()> {
    let tree = load_model(model)?;
    let q = load_query(query, &tree)?;
    let report = estimate_subplans(&tree, &q)?;
    emit(&serde_json::to_string(&report)?)
}

fn cmd_inspect(model: &Path) -> Result<()> {
    let tree = load_model(model)?;
    emit(&tree.inspect())
}

fn cmd_check_update(model: &Path, data: &Path, tau: Option<f64>) -> Result<()> {
    let tree = load_model(model)?;
    let db = Database::ingest_dir(tree.catalog.clone(), data)?;
    let stale = check_update(&tree, &db, tau)?;
    emit(
        &serde_json::json!({
            "threshold": tau.unwrap_or(tree.config.tau),
            "count": stale.len(),
            "stale": stale,
        })
        .to_string(),
    )
}
