//! Simulate an execution whose actual memory deviates from the estimate:
//! following the original schedule rigidly runs out of memory, while the
//! adaptive mode retraces, reschedules and finishes.
//!
//!     cargo run --example dynamic_rescheduling

use memsched::platform::{Cluster, Processor};
use memsched::workflow::{EdgeFile, Task};
use memsched::{
    heftm_schedule, simulate_no_recompute, simulate_with_recompute, ActualWeights,
    EvictionPolicy, RankPolicy, SimOutcome, Workflow,
};

fn show(name: &str, out: &SimOutcome) {
    println!("\n{name}:");
    println!(
        "  valid = {}, makespan = {:.2}, recomputations = {}",
        out.valid, out.makespan, out.recompute_count
    );
    if let Some(f) = &out.failure {
        println!("  failure: {:?} at task {} (t = {:.2})", f.cause, f.task, f.time);
    }
    for e in &out.events {
        println!(
            "  t={:7.2}  {:<18} task {:?} proc {:?}",
            e.t,
            format!("{:?}", e.kind),
            e.task,
            e.proc
        );
    }
}

fn main() {
    let w = Workflow::new(
        vec![
            Task { id: 0, name: "feed".into(), work: 50, mem: 10 },
            Task { id: 1, name: "big".into(),  work: 100, mem: 90 },
        ],
        vec![EdgeFile { src: 0, dst: 1, size: 5 }],
    )
    .unwrap();
    // The estimate says "big" fits the fast machine; the slow one has the
    // headroom.
    let cluster = Cluster::new(
        vec![
            Processor { id: 0, name: "fast-small".into(), speed: 2.0, memory: 100, buffer: 1000 },
            Processor { id: 1, name: "slow-big".into(),   speed: 1.0, memory: 400, buffer: 4000 },
        ],
        10,
    )
    .unwrap();

    let s = heftm_schedule(&w, &cluster, RankPolicy::Bl, EvictionPolicy::LargestFirst).unwrap();
    println!("static plan (from estimates): makespan {:.2}", s.makespan);
    for e in &s.entries {
        println!(
            "  {}  on p{} [{:.2} .. {:.2}]",
            w.task(e.task).name,
            e.proc,
            e.start,
            e.finish
        );
    }

    // At runtime the big task needs half again as much memory.
    let mut actual = ActualWeights::from_estimates(&w);
    actual.mem[1] = 150;

    let rigid = simulate_no_recompute(&s, &w, &cluster, &actual);
    show("without recomputation (follows the plan)", &rigid);

    let adaptive = simulate_with_recompute(
        &w,
        &cluster,
        RankPolicy::Bl,
        EvictionPolicy::LargestFirst,
        &actual,
    );
    show("with recomputation (reschedules on the memory trigger)", &adaptive);
}
