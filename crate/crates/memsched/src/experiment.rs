//! Batch experiment driver: schedule suites of workflows on a cluster, run
//! the static and dynamic modes, and aggregate success rates, relative
//! makespans, memory usage and scheduler runtimes.
//!
//! All randomness derives from per-row seeds computed from the config's
//! seed base, so re-running a config reproduces the result files byte for
//! byte (scheduler wall times are reported only in the JSONL output, which
//! is the one legitimately run-dependent field).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::platform::{parse_cluster, reference_cluster, Cluster, ClusterKind};
use crate::ranking::{bottom_level, RankPolicy};
use crate::scheduler::{heft_schedule, heftm_schedule, EvictionPolicy, Schedule};
use crate::simulator::{
    events_jsonl, sample_actuals, simulate_no_recompute, simulate_with_recompute_algorithm,
    DeviationModel, EngineAlgorithm,
};
use crate::validator::{memory_usage, validate};

pub use crate::workflow::SizeClass;

/// The four schedulers under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Heft,
    HeftmBl,
    HeftmBlc,
    HeftmMm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Heft,
        Algorithm::HeftmBl,
        Algorithm::HeftmBlc,
        Algorithm::HeftmMm,
    ];

    pub fn rank_policy(self) -> Option<RankPolicy> {
        match self {
            Algorithm::Heft => None,
            Algorithm::HeftmBl => Some(RankPolicy::Bl),
            Algorithm::HeftmBlc => Some(RankPolicy::Blc),
            Algorithm::HeftmMm => Some(RankPolicy::Mm),
        }
    }

    fn engine(self) -> EngineAlgorithm {
        match self.rank_policy() {
            None => EngineAlgorithm::Heft,
            Some(p) => EngineAlgorithm::Heftm(p),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Heft => "HEFT",
            Algorithm::HeftmBl => "HEFTM-BL",
            Algorithm::HeftmBlc => "HEFTM-BLC",
            Algorithm::HeftmMm => "HEFTM-MM",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HEFT" => Ok(Algorithm::Heft),
            "HEFTM-BL" => Ok(Algorithm::HeftmBl),
            "HEFTM-BLC" => Ok(Algorithm::HeftmBlc),
            "HEFTM-MM" => Ok(Algorithm::HeftmMm),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Static,
    Dynamic,
}

/// Where a workflow comes from.
#[derive(Debug, Clone)]
pub enum WorkflowSource {
    Path(PathBuf),
    Generated {
        name: String,
        n_tasks: u32,
        n_levels: u32,
        fanout: u32,
        ranges: crate::generator::WeightRanges,
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub enum ClusterSource {
    Path(PathBuf),
    Reference { kind: ClusterKind, replication: u32 },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub workflows: Vec<WorkflowSource>,
    pub cluster: ClusterSource,
    pub algorithms: Vec<Algorithm>,
    pub eviction: EvictionPolicy,
    pub mode: Mode,
    pub deviation: DeviationModel,
    /// Seeds per (workflow, algorithm) row in dynamic mode.
    pub repetitions: u32,
    pub seed_base: u64,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.workflows.is_empty() {
            return Err(Error::Config("no workflows given".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms given".into()));
        }
        if self.mode == Mode::Dynamic && self.repetitions == 0 {
            return Err(Error::Config("dynamic mode needs at least one seed".into()));
        }
        Ok(())
    }
}

fn load_workflow(source: &WorkflowSource) -> Result<(String, crate::workflow::Workflow)> {
    match source {
        WorkflowSource::Path(path) => {
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some("dot") | Some("gv") => crate::workflow::WorkflowFormat::Dot,
                _ => crate::workflow::WorkflowFormat::Json,
            };
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("workflow")
                .to_string();
            Ok((name, crate::workflow::parse_workflow(path, format)?))
        }
        WorkflowSource::Generated {
            name,
            n_tasks,
            n_levels,
            fanout,
            ranges,
            seed,
        } => Ok((
            name.clone(),
            crate::generator::generate_synthetic(*n_tasks, *n_levels, *fanout, ranges, *seed)?,
        )),
    }
}

fn load_cluster(source: &ClusterSource) -> Result<Cluster> {
    match source {
        ClusterSource::Path(path) => parse_cluster(path),
        ClusterSource::Reference { kind, replication } => {
            Ok(reference_cluster(*kind, *replication))
        }
    }
}

/// One static-mode result row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StaticRow {
    pub workflow: String,
    pub n_tasks: usize,
    pub size_class: SizeClass,
    pub algorithm: String,
    /// Whether the scheduler produced a schedule at all.
    pub scheduled: bool,
    /// Whether the produced schedule passed the independent validator.
    pub valid: bool,
    pub makespan: Option<f64>,
    /// Against HEFT on the same instance, even when HEFT itself is invalid.
    pub relative_makespan: Option<f64>,
    pub memory_usage: Option<f64>,
    /// Flags rows whose HEFT baseline is itself invalid.
    pub heft_valid: bool,
    /// Run-dependent; excluded from the CSV to keep it byte-reproducible.
    pub sched_time_s: f64,
    pub note: String,
}

/// One dynamic-mode result row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicRow {
    pub workflow: String,
    pub n_tasks: usize,
    pub size_class: SizeClass,
    pub algorithm: String,
    pub seed: u64,
    pub static_valid: bool,
    pub no_recompute_valid: bool,
    pub no_recompute_makespan: Option<f64>,
    pub with_recompute_valid: bool,
    pub with_recompute_makespan: Option<f64>,
    pub recompute_count: Option<u32>,
    /// `no_recompute_makespan / with_recompute_makespan - 1` when both runs
    /// stay valid.
    pub improvement: Option<f64>,
}

fn schedule_with(
    algo: Algorithm,
    w: &crate::workflow::Workflow,
    c: &Cluster,
    ev: EvictionPolicy,
) -> std::result::Result<Schedule, crate::scheduler::SchedulingFailure> {
    match algo.rank_policy() {
        None => Ok(heft_schedule(w, c, &bottom_level(w))),
        Some(policy) => heftm_schedule(w, c, policy, ev),
    }
}

/// Runs every configured algorithm on every workflow once, statically.
pub fn run_static(cfg: &ExperimentConfig) -> Result<Vec<StaticRow>> {
    cfg.validate()?;
    let cluster = load_cluster(&cfg.cluster)?;
    let mut rows = Vec::new();

    for source in &cfg.workflows {
        let (name, w) = load_workflow(source)?;
        let size_class = crate::workflow::size_class(&w);

        // HEFT is always computed: it is the normalization baseline.
        let heft = heft_schedule(&w, &cluster, &bottom_level(&w));
        let heft_valid = validate(&heft, &w, &cluster).valid;
        let heft_makespan = heft.makespan;

        for &algo in &cfg.algorithms {
            let t0 = std::time::Instant::now();
            let result = schedule_with(algo, &w, &cluster, cfg.eviction);
            let sched_time_s = t0.elapsed().as_secs_f64();
            let row = match result {
                Ok(s) => {
                    let report = validate(&s, &w, &cluster);
                    if let Some(dir) = &cfg.out_dir {
                        let dir = dir.join("schedules");
                        std::fs::create_dir_all(&dir)?;
                        std::fs::write(
                            dir.join(format!("{name}__{algo}.json")),
                            s.to_json_string(),
                        )?;
                    }
                    StaticRow {
                        workflow: name.clone(),
                        n_tasks: w.n_tasks(),
                        size_class,
                        algorithm: algo.to_string(),
                        scheduled: true,
                        valid: report.valid,
                        makespan: Some(s.makespan),
                        relative_makespan: (heft_makespan > 0.0)
                            .then(|| s.makespan / heft_makespan),
                        memory_usage: Some(memory_usage(&s, &w, &cluster)),
                        heft_valid,
                        sched_time_s,
                        note: String::new(),
                    }
                }
                Err(fail) => StaticRow {
                    workflow: name.clone(),
                    n_tasks: w.n_tasks(),
                    size_class,
                    algorithm: algo.to_string(),
                    scheduled: false,
                    valid: false,
                    makespan: None,
                    relative_makespan: None,
                    memory_usage: None,
                    heft_valid,
                    sched_time_s,
                    note: format!("scheduling_failure task {}", fail.task),
                },
            };
            rows.push(row);
        }
    }

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), static_csv(&rows)?)?;
        std::fs::write(dir.join("results.jsonl"), jsonl(&rows))?;
    }
    Ok(rows)
}

/// Seed for one (workflow, repetition) cell: every algorithm sees the same
/// actual weights on the same instance.
fn row_seed(seed_base: u64, wf_idx: usize, rep: u32) -> u64 {
    seed_base
        .wrapping_add(wf_idx as u64 * 1_000_003)
        .wrapping_add(rep as u64)
}

/// Runs both simulator modes on identical actual weights for every
/// (workflow, algorithm, seed) cell.
pub fn run_dynamic(cfg: &ExperimentConfig) -> Result<Vec<DynamicRow>> {
    cfg.validate()?;
    if cfg.mode != Mode::Dynamic {
        return Err(Error::Config("run_dynamic requires dynamic mode".into()));
    }
    let cluster = load_cluster(&cfg.cluster)?;
    let mut rows = Vec::new();

    for (wf_idx, source) in cfg.workflows.iter().enumerate() {
        let (name, w) = load_workflow(source)?;
        let size_class = crate::workflow::size_class(&w);

        for &algo in &cfg.algorithms {
            let static_schedule = schedule_with(algo, &w, &cluster, cfg.eviction)
                .ok()
                .filter(|s| validate(s, &w, &cluster).valid);

            for rep in 0..cfg.repetitions {
                let seed = row_seed(cfg.seed_base, wf_idx, rep);
                let deviation = DeviationModel {
                    seed,
                    ..cfg.deviation.clone()
                };
                let actuals = sample_actuals(&w, &deviation);

                let row = match &static_schedule {
                    None => DynamicRow {
                        workflow: name.clone(),
                        n_tasks: w.n_tasks(),
                        size_class,
                        algorithm: algo.to_string(),
                        seed,
                        static_valid: false,
                        no_recompute_valid: false,
                        no_recompute_makespan: None,
                        with_recompute_valid: false,
                        with_recompute_makespan: None,
                        recompute_count: None,
                        improvement: None,
                    },
                    Some(s) => {
                        let without = simulate_no_recompute(s, &w, &cluster, &actuals);
                        let with = simulate_with_recompute_algorithm(
                            &w,
                            &cluster,
                            algo.engine(),
                            cfg.eviction,
                            &actuals,
                        );
                        if let Some(dir) = &cfg.out_dir {
                            let dir = dir.join("events");
                            std::fs::create_dir_all(&dir)?;
                            std::fs::write(
                                dir.join(format!("{name}__{algo}__s{seed}__no.jsonl")),
                                events_jsonl(&without.events),
                            )?;
                            std::fs::write(
                                dir.join(format!("{name}__{algo}__s{seed}__with.jsonl")),
                                events_jsonl(&with.events),
                            )?;
                        }
                        let improvement = (without.valid && with.valid)
                            .then(|| without.makespan / with.makespan - 1.0);
                        DynamicRow {
                            workflow: name.clone(),
                            n_tasks: w.n_tasks(),
                            size_class,
                            algorithm: algo.to_string(),
                            seed,
                            static_valid: true,
                            no_recompute_valid: without.valid,
                            no_recompute_makespan: Some(without.makespan),
                            with_recompute_valid: with.valid,
                            with_recompute_makespan: Some(with.makespan),
                            recompute_count: Some(with.recompute_count),
                            improvement,
                        }
                    }
                };
                rows.push(row);
            }
        }
    }

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), dynamic_csv(&rows)?)?;
        std::fs::write(dir.join("results.jsonl"), jsonl(&rows))?;
    }
    Ok(rows)
}

/// Aggregate of one (size class, algorithm) group of static rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub size_class: SizeClass,
    pub algorithm: String,
    pub runs: usize,
    pub success_rate: f64,
    /// Geometric mean over rows with a defined relative makespan.
    pub geomean_relative_makespan: Option<f64>,
    pub mean_memory_usage: Option<f64>,
    pub mean_sched_time_s: f64,
}

/// Groups static rows by size class and algorithm; deterministic order.
pub fn report(rows: &[StaticRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(SizeClass, String), Vec<&StaticRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.size_class, row.algorithm.clone()))
            .or_default()
            .push(row);
    }
    let algo_order = |name: &str| {
        Algorithm::ALL
            .iter()
            .position(|a| a.to_string() == name)
            .unwrap_or(usize::MAX)
    };
    let mut keys: Vec<_> = groups.keys().cloned().collect();
    keys.sort_by_key(|(sc, name)| (*sc, algo_order(name), name.clone()));

    keys.into_iter()
        .map(|key| {
            let members = &groups[&key];
            let runs = members.len();
            let successes = members.iter().filter(|r| r.valid).count();
            let rels: Vec<f64> = members
                .iter()
                .filter_map(|r| r.relative_makespan)
                .filter(|v| *v > 0.0)
                .collect();
            let geomean = (!rels.is_empty())
                .then(|| (rels.iter().map(|v| v.ln()).sum::<f64>() / rels.len() as f64).exp());
            let mems: Vec<f64> = members.iter().filter_map(|r| r.memory_usage).collect();
            let mean_mem =
                (!mems.is_empty()).then(|| mems.iter().sum::<f64>() / mems.len() as f64);
            SummaryRow {
                size_class: key.0,
                algorithm: key.1,
                runs,
                success_rate: successes as f64 / runs as f64,
                geomean_relative_makespan: geomean,
                mean_memory_usage: mean_mem,
                mean_sched_time_s: members.iter().map(|r| r.sched_time_s).sum::<f64>()
                    / runs as f64,
            }
        })
        .collect()
}

/// Aggregate of one (size class, algorithm) group of dynamic rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicSummaryRow {
    pub size_class: SizeClass,
    pub algorithm: String,
    pub runs: usize,
    pub static_valid: usize,
    pub no_recompute_valid: usize,
    pub with_recompute_valid: usize,
    pub mean_improvement: Option<f64>,
    pub mean_recomputes: Option<f64>,
}

pub fn report_dynamic(rows: &[DynamicRow]) -> Vec<DynamicSummaryRow> {
    let mut groups: BTreeMap<(SizeClass, String), Vec<&DynamicRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.size_class, row.algorithm.clone()))
            .or_default()
            .push(row);
    }
    groups
        .into_iter()
        .map(|((size_class, algorithm), members)| {
            let improvements: Vec<f64> =
                members.iter().filter_map(|r| r.improvement).collect();
            let recomputes: Vec<f64> = members
                .iter()
                .filter_map(|r| r.recompute_count.map(|c| c as f64))
                .collect();
            DynamicSummaryRow {
                size_class,
                algorithm,
                runs: members.len(),
                static_valid: members.iter().filter(|r| r.static_valid).count(),
                no_recompute_valid: members.iter().filter(|r| r.no_recompute_valid).count(),
                with_recompute_valid: members.iter().filter(|r| r.with_recompute_valid).count(),
                mean_improvement: (!improvements.is_empty()).then(|| {
                    improvements.iter().sum::<f64>() / improvements.len() as f64
                }),
                mean_recomputes: (!recomputes.is_empty())
                    .then(|| recomputes.iter().sum::<f64>() / recomputes.len() as f64),
            }
        })
        .collect()
}

fn opt_num<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Static rows as CSV; excludes wall times so repeated runs are identical.
pub fn static_csv(rows: &[StaticRow]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "workflow",
        "n_tasks",
        "size_class",
        "algorithm",
        "scheduled",
        "valid",
        "makespan",
        "relative_makespan",
        "memory_usage",
        "heft_valid",
        "note",
    ])?;
    for r in rows {
        wtr.write_record([
            r.workflow.as_str(),
            &r.n_tasks.to_string(),
            &r.size_class.to_string(),
            &r.algorithm,
            &r.scheduled.to_string(),
            &r.valid.to_string(),
            &opt_num(&r.makespan),
            &opt_num(&r.relative_makespan),
            &opt_num(&r.memory_usage),
            &r.heft_valid.to_string(),
            &r.note,
        ])?;
    }
    Ok(String::from_utf8(wtr.into_inner().map_err(|e| Error::Config(e.to_string()))?)
        .expect("csv output is utf-8"))
}

pub fn dynamic_csv(rows: &[DynamicRow]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "workflow",
        "n_tasks",
        "size_class",
        "algorithm",
        "seed",
        "static_valid",
        "no_recompute_valid",
        "no_recompute_makespan",
        "with_recompute_valid",
        "with_recompute_makespan",
        "recompute_count",
        "improvement",
    ])?;
    for r in rows {
        wtr.write_record([
            r.workflow.as_str(),
            &r.n_tasks.to_string(),
            &r.size_class.to_string(),
            &r.algorithm,
            &r.seed.to_string(),
            &r.static_valid.to_string(),
            &r.no_recompute_valid.to_string(),
            &opt_num(&r.no_recompute_makespan),
            &r.with_recompute_valid.to_string(),
            &opt_num(&r.with_recompute_makespan),
            &opt_num(&r.recompute_count),
            &opt_num(&r.improvement),
        ])?;
    }
    Ok(String::from_utf8(wtr.into_inner().map_err(|e| Error::Config(e.to_string()))?)
        .expect("csv output is utf-8"))
}

/// One serialized row per line.
pub fn jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("row serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Renders summary rows as an aligned text table.
pub fn summary_table(summary: &[SummaryRow]) -> String {
    let mut out = String::from(
        "size_class algorithm  runs success_rate geomean_rel_makespan mean_mem_usage mean_sched_s\n",
    );
    for s in summary {
        out.push_str(&format!(
            "{:<10} {:<10} {:>4} {:>12.3} {:>20} {:>14} {:>12.6}\n",
            s.size_class.to_string(),
            s.algorithm,
            s.runs,
            s.success_rate,
            s.geomean_relative_makespan
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into()),
            s.mean_memory_usage
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into()),
            s.mean_sched_time_s,
        ));
    }
    out
}

pub fn dynamic_summary_table(summary: &[DynamicSummaryRow]) -> String {
    let mut out = String::from(
        "size_class algorithm  runs static_ok no_rec_ok with_rec_ok mean_improvement mean_recomputes\n",
    );
    for s in summary {
        out.push_str(&format!(
            "{:<10} {:<10} {:>4} {:>9} {:>9} {:>11} {:>16} {:>15}\n",
            s.size_class.to_string(),
            s.algorithm,
            s.runs,
            s.static_valid,
            s.no_recompute_valid,
            s.with_recompute_valid,
            s.mean_improvement
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into()),
            s.mean_recomputes
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "-".into()),
        ));
    }
    out
}
