//! Run a small batch experiment: generate a suite of synthetic workflows,
//! schedule each with all four algorithms on the memory-constrained
//! reference cluster, and print the aggregated summary.
//!
//!     cargo run --example experiment_batch

use memsched::experiment::{summary_table, Algorithm, ClusterSource, Mode, WorkflowSource};
use memsched::{
    report, run_static, ClusterKind, DeviationModel, EvictionPolicy, ExperimentConfig,
    WeightRanges,
};

fn main() {
    let workflows = (0..8u64)
        .map(|i| WorkflowSource::Generated {
            name: format!("synthetic-{i}"),
            n_tasks: 40 + 10 * i as u32,
            n_levels: 6,
            fanout: 3,
            ranges: WeightRanges::default(),
            seed: 100 + i,
        })
        .collect();

    let cfg = ExperimentConfig {
        workflows,
        cluster: ClusterSource::Reference {
            kind: ClusterKind::MemConstrained,
            replication: 1,
        },
        algorithms: Algorithm::ALL.to_vec(),
        eviction: EvictionPolicy::LargestFirst,
        mode: Mode::Static,
        deviation: DeviationModel::default(),
        repetitions: 1,
        seed_base: 7,
        out_dir: None,
    };

    let rows = run_static(&cfg).expect("experiment runs");
    println!("per-run rows:");
    for r in &rows {
        println!(
            "  {:<13} {:<9} valid={:<5} makespan={:<12} relative={:?}",
            r.workflow,
            r.algorithm,
            r.valid,
            r.makespan.map(|m| format!("{m:.1}")).unwrap_or_else(|| "-".into()),
            r.relative_makespan.map(|v| (v * 1000.0).round() / 1000.0),
        );
    }

    println!("\nsummary (per size class and algorithm):");
    print!("{}", summary_table(&report(&rows)));
}
