//! Schedule a small diamond workflow with the HEFT baseline and the three
//! memory-aware variants, and compare the resulting placements.
//!
//!     cargo run --example schedule_basic

use memsched::workflow::{EdgeFile, Task};
use memsched::{
    bottom_level, heft_schedule, heftm_schedule, makespan, reference_cluster, validate,
    ClusterKind, EvictionPolicy, RankPolicy, Schedule, Workflow,
};

fn print_schedule(name: &str, s: &Schedule, valid: bool) {
    println!("\n{name}: makespan {:.3} s, valid = {valid}", makespan(s));
    for e in &s.entries {
        print!(
            "  t{:<2} on p{}  [{:8.3} .. {:8.3}]",
            e.task, e.proc, e.start, e.finish
        );
        if !e.evictions.is_empty() {
            let files: Vec<String> = e
                .evictions
                .iter()
                .map(|f| format!("({},{})", f.src, f.dst))
                .collect();
            print!("  evicts {}", files.join(" "));
        }
        println!();
    }
}

fn main() {
    // A diamond: one producer fans out to two branches that join again.
    let gb = 1_000_000_000u64;
    let tasks = vec![
        Task { id: 0, name: "load".into(),   work: 20 * gb, mem: 2 * gb },
        Task { id: 1, name: "left".into(),   work: 60 * gb, mem: 4 * gb },
        Task { id: 2, name: "right".into(),  work: 30 * gb, mem: 3 * gb },
        Task { id: 3, name: "merge".into(),  work: 10 * gb, mem: 2 * gb },
    ];
    let edges = vec![
        EdgeFile { src: 0, dst: 1, size: gb },
        EdgeFile { src: 0, dst: 2, size: gb / 2 },
        EdgeFile { src: 1, dst: 3, size: gb },
        EdgeFile { src: 2, dst: 3, size: gb / 4 },
    ];
    let w = Workflow::new(tasks, edges).expect("diamond is a DAG");
    let cluster = reference_cluster(ClusterKind::Default, 1);

    println!("cluster:");
    for p in cluster.processors() {
        println!(
            "  p{} {:8}  speed {:>5.0e} ops/s  memory {:>5.1} GB",
            p.id,
            p.name,
            p.speed,
            p.memory as f64 / 1e9
        );
    }

    let heft = heft_schedule(&w, &cluster, &bottom_level(&w));
    print_schedule("HEFT", &heft, validate(&heft, &w, &cluster).valid);

    for policy in [RankPolicy::Bl, RankPolicy::Blc, RankPolicy::Mm] {
        let s = heftm_schedule(&w, &cluster, policy, EvictionPolicy::LargestFirst)
            .expect("the default cluster has room for the diamond");
        let valid = validate(&s, &w, &cluster).valid;
        print_schedule(&format!("HEFTM-{policy}"), &s, valid);
    }
}
