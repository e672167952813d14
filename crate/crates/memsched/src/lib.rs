//! Memory-aware list scheduling of workflow DAGs on heterogeneous clusters,
//! plus a runtime simulator for executions whose task parameters deviate
//! from their estimates.
//!
//! The static side implements the classic HEFT baseline and three
//! memory-aware variants (BL, BLC and MM task orderings) that evict files
//! into per-processor communication buffers when memory runs short. The
//! dynamic side replays schedules under sampled actual weights, retraces
//! them after reported changes, and optionally reschedules the unstarted
//! tasks on the fly.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --example schedule_basic
//! cargo run --example eviction_buffers
//! cargo run --example memory_traversals
//! cargo run --example dynamic_rescheduling
//! cargo run --example experiment_batch
//! cargo run --example parse_formats
//! ```
//!
//! A thin `memsched` binary exposes the same functionality as `schedule`,
//! `simulate`, `generate` and `report` subcommands.

pub mod dot;
pub mod error;
pub mod experiment;
pub mod generator;
pub mod platform;
pub mod ranking;
pub mod scheduler;
pub mod simulator;
pub mod validator;
pub mod workflow;

pub use error::{Error, Result};
pub use experiment::{
    report, run_dynamic, run_static, Algorithm, ClusterSource, DynamicRow, ExperimentConfig,
    Mode, StaticRow, SummaryRow, WorkflowSource,
};
pub use generator::{generate_synthetic, WeightRanges};
pub use platform::{parse_cluster, reference_cluster, Cluster, ClusterKind, ProcId, Processor};
pub use ranking::{
    bottom_level, bottom_level_comm, min_memory_order, rank_order, sequential_peak,
    MinMemoryMode, RankPolicy, RankTable,
};
pub use scheduler::{
    commit_assign, compute_res, heft_schedule, heftm_schedule, heftm_schedule_with_order,
    plan_evictions, tentative_assign, Candidate, EvictionPolicy, InfeasibleReason, Schedule,
    ScheduleEntry, SchedulerState, SchedulingFailure,
};
pub use simulator::{
    retrace, sample_actuals, simulate_no_recompute, simulate_with_recompute, ActualWeights,
    DeviationModel, DeviationTargets, EventKind, FailureCause, PartialWeights, RetraceOutcome,
    RetraceReason, SimEvent, SimFailure, SimOutcome,
};
pub use validator::{
    makespan, memory_usage, validate, ValidationReport, Violation, ViolationKind,
};
pub use workflow::{
    apply_weight_csv, parse_workflow, size_class, EdgeFile, SizeClass, Task, TaskId, Workflow,
    WorkflowFormat,
};
