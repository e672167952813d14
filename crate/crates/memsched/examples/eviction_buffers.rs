//! Force the memory-aware scheduler to evict pending files into the
//! communication buffer, and show that its schedule still validates while
//! the memory-oblivious baseline does not.
//!
//!     cargo run --example eviction_buffers

use memsched::platform::{Cluster, Processor};
use memsched::workflow::{EdgeFile, Task};
use memsched::{
    bottom_level, heft_schedule, heftm_schedule, memory_usage, validate, EvictionPolicy,
    RankPolicy, Workflow,
};

fn main() {
    // Two producers write files, then a memory-hungry task arrives, then
    // the files are consumed. On the fast processor, the hungry task only
    // fits after the largest file leaves memory for the buffer.
    let w = Workflow::new(
        vec![
            Task { id: 0, name: "src-a".into(),  work: 10, mem: 2 },
            Task { id: 1, name: "src-b".into(),  work: 10, mem: 2 },
            Task { id: 2, name: "hungry".into(), work: 10, mem: 90 },
            Task { id: 3, name: "use-a".into(),  work: 10, mem: 1 },
            Task { id: 4, name: "use-b".into(),  work: 10, mem: 1 },
        ],
        vec![
            EdgeFile { src: 0, dst: 3, size: 6 },
            EdgeFile { src: 1, dst: 4, size: 5 },
        ],
    )
    .unwrap();

    let cluster = Cluster::new(
        vec![
            Processor { id: 0, name: "fast".into(), speed: 1.0, memory: 100, buffer: 1000 },
            Processor { id: 1, name: "slow".into(), speed: 0.5, memory: 20, buffer: 200 },
        ],
        1,
    )
    .unwrap();

    let s = heftm_schedule(&w, &cluster, RankPolicy::Bl, EvictionPolicy::LargestFirst).unwrap();
    println!("memory-aware schedule:");
    for e in &s.entries {
        let name = &w.task(e.task).name;
        print!("  {name:<7} on p{} [{:5.1} .. {:5.1}]", e.proc, e.start, e.finish);
        for f in &e.evictions {
            print!("  -> evicts the {}-byte file ({},{})", f.size, f.src, f.dst);
        }
        println!();
    }
    let report = validate(&s, &w, &cluster);
    println!(
        "valid: {}, mean peak memory usage: {:.2}",
        report.valid,
        memory_usage(&s, &w, &cluster)
    );
    println!(
        "note: the consumer of the evicted file cannot run on the evicting \
         processor again, so it moved to the other one\n"
    );

    // The baseline ignores memory entirely and overcommits.
    let heft = heft_schedule(&w, &cluster, &bottom_level(&w));
    let report = validate(&heft, &w, &cluster);
    println!("baseline HEFT valid: {}", report.valid);
    for v in &report.violations {
        println!("  {:?} at task {}: {}", v.kind, v.task, v.detail);
    }
}
