//! Thin command-line front end over the library: `schedule`, `simulate`,
//! `generate` and `report`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use memsched::experiment::{
    dynamic_summary_table, report_dynamic, summary_table, DynamicRow, StaticRow,
};
use memsched::{
    generate_synthetic, report, run_dynamic, run_static, Algorithm, ClusterKind, ClusterSource,
    DeviationModel, EvictionPolicy, ExperimentConfig, Mode, WeightRanges, WorkflowSource,
};

#[derive(Parser)]
#[command(
    name = "memsched",
    about = "Memory-aware HEFT scheduling and runtime simulation for workflow DAGs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Schedule workflows on a cluster and validate the results.
    Schedule(RunArgs),
    /// Simulate executions under deviations, with and without recomputation.
    Simulate(RunArgs),
    /// Generate a synthetic workflow JSON file.
    Generate(GenerateArgs),
    /// Aggregate a results.jsonl file into a summary table.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EvictionArg {
    Largest,
    Smallest,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Static,
    Dynamic,
}

#[derive(Args)]
struct RunArgs {
    /// Workflow file (.json or .dot); repeatable.
    #[arg(long = "workflow", required = true)]
    workflows: Vec<PathBuf>,
    /// Cluster JSON file, or `default` / `mem_constrained` for the
    /// reference clusters.
    #[arg(long, default_value = "default")]
    cluster: String,
    /// Copies of each reference machine kind (reference clusters only).
    #[arg(long, default_value_t = 1)]
    replication: u32,
    /// Algorithm to run; repeatable. Defaults to all four.
    #[arg(long = "algo")]
    algos: Vec<String>,
    #[arg(long, value_enum, default_value_t = EvictionArg::Largest)]
    eviction: EvictionArg,
    /// static = schedule once; dynamic = simulate deviations too.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Relative deviation of actual weights (dynamic mode).
    #[arg(long, default_value_t = 0.10)]
    std: f64,
    /// Seeds per workflow and algorithm (dynamic mode).
    #[arg(long, default_value_t = 1)]
    seeds: u32,
    /// Base seed for the deviation streams.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Output directory for results.csv, results.jsonl, schedules/, events/.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    tasks: u32,
    #[arg(long, default_value_t = 8)]
    levels: u32,
    #[arg(long, default_value_t = 4)]
    fanout: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Work range, `lo:hi`.
    #[arg(long)]
    work: Option<String>,
    /// Memory range in bytes, `lo:hi`.
    #[arg(long)]
    mem: Option<String>,
    /// Edge size range in bytes, `lo:hi`.
    #[arg(long)]
    edge: Option<String>,
    /// Output file for the workflow JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// A results.jsonl file or a directory containing one.
    #[arg(long = "in")]
    input: PathBuf,
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo = lo.parse().map_err(|e| format!("bad lo: {e}"))?;
    let hi = hi.parse().map_err(|e| format!("bad hi: {e}"))?;
    Ok((lo, hi))
}

fn build_config(args: &RunArgs, mode: Mode) -> Result<ExperimentConfig, memsched::Error> {
    let cluster = match args.cluster.as_str() {
        "default" => ClusterSource::Reference {
            kind: ClusterKind::Default,
            replication: args.replication,
        },
        "mem_constrained" | "mem-constrained" => ClusterSource::Reference {
            kind: ClusterKind::MemConstrained,
            replication: args.replication,
        },
        path => ClusterSource::Path(PathBuf::from(path)),
    };
    let algorithms = if args.algos.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        args.algos
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(ExperimentConfig {
        workflows: args
            .workflows
            .iter()
            .map(|p| WorkflowSource::Path(p.clone()))
            .collect(),
        cluster,
        algorithms,
        eviction: match args.eviction {
            EvictionArg::Largest => EvictionPolicy::LargestFirst,
            EvictionArg::Smallest => EvictionPolicy::SmallestFirst,
        },
        mode,
        deviation: DeviationModel {
            relative_std: args.std,
            ..DeviationModel::default()
        },
        repetitions: args.seeds,
        seed_base: args.seed_base,
        out_dir: args.out.clone(),
    })
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> Result<(), memsched::Error> {
    match Cli::parse().cmd {
        Cmd::Schedule(args) => {
            let mode = match args.mode {
                Some(ModeArg::Dynamic) => Mode::Dynamic,
                _ => Mode::Static,
            };
            match mode {
                Mode::Static => {
                    let rows = run_static(&build_config(&args, mode)?)?;
                    print!("{}", summary_table(&report(&rows)));
                }
                Mode::Dynamic => {
                    let rows = run_dynamic(&build_config(&args, mode)?)?;
                    print!("{}", dynamic_summary_table(&report_dynamic(&rows)));
                }
            }
            Ok(())
        }
        Cmd::Simulate(args) => {
            let rows = run_dynamic(&build_config(&args, Mode::Dynamic)?)?;
            print!("{}", dynamic_summary_table(&report_dynamic(&rows)));
            Ok(())
        }
        Cmd::Generate(args) => {
            let mut ranges = WeightRanges::default();
            if let Some(s) = &args.work {
                ranges.work = parse_range(s).map_err(memsched::Error::Config)?;
            }
            if let Some(s) = &args.mem {
                ranges.mem = parse_range(s).map_err(memsched::Error::Config)?;
            }
            if let Some(s) = &args.edge {
                ranges.edge = parse_range(s).map_err(memsched::Error::Config)?;
            }
            let w = generate_synthetic(args.tasks, args.levels, args.fanout, &ranges, args.seed)?;
            if let Some(parent) = args.out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(&args.out, w.to_json_string())?;
            println!(
                "wrote {} tasks, {} edges to {}",
                w.n_tasks(),
                w.edges().len(),
                args.out.display()
            );
            Ok(())
        }
        Cmd::Report(args) => {
            let path = if args.input.is_dir() {
                args.input.join("results.jsonl")
            } else {
                args.input.clone()
            };
            let text = std::fs::read_to_string(&path)?;
            let first = text.lines().next().unwrap_or("");
            if first.contains("\"no_recompute_valid\"") {
                let rows: Vec<DynamicRow> = text
                    .lines()
                    .map(serde_json::from_str)
                    .collect::<Result<_, _>>()?;
                print!("{}", dynamic_summary_table(&report_dynamic(&rows)));
            } else {
                let rows: Vec<StaticRow> = text
                    .lines()
                    .map(serde_json::from_str)
                    .collect::<Result<_, _>>()?;
                print!("{}", summary_table(&report(&rows)));
            }
            Ok(())
        }
    }
}
