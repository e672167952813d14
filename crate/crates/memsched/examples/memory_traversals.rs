//! Compare the three task orderings on one workflow: bottom level, bottom
//! level with communications, and the minimum-memory traversal, including
//! the exact branch-and-bound mode on a small instance.
//!
//!     cargo run --example memory_traversals

use memsched::workflow::{EdgeFile, Task};
use memsched::{
    bottom_level, bottom_level_comm, min_memory_order, sequential_peak, MinMemoryMode, Workflow,
};

fn main() {
    // Three independent two-task chains: a peak-memory-minimizing order
    // retires one chain before opening the next, while rank orders visit
    // all chain heads first and keep every intermediate file resident.
    let mut tasks = Vec::new();
    let mut edges = Vec::new();
    for chain in 0u32..3 {
        let a = chain * 2;
        let b = a + 1;
        tasks.push(Task { id: a, name: format!("head{chain}"), work: 10 - chain as u64, mem: 1 });
        tasks.push(Task { id: b, name: format!("tail{chain}"), work: 1, mem: 1 });
        edges.push(EdgeFile { src: a, dst: b, size: 10 });
    }
    let w = Workflow::new(tasks, edges).unwrap();

    let bl = bottom_level(&w);
    let blc = bottom_level_comm(&w);
    let mm_exact = min_memory_order(&w, MinMemoryMode::Exact).unwrap();
    let mm_heur = min_memory_order(&w, MinMemoryMode::Heuristic).unwrap();

    println!("order and sequential peak memory on one processor:");
    for (name, order) in [
        ("BL ", &bl.order),
        ("BLC", &blc.order),
        ("MM exact    ", &mm_exact.order),
        ("MM heuristic", &mm_heur.order),
    ] {
        println!(
            "  {name}: {:?} -> peak {} bytes",
            order,
            sequential_peak(&w, order).unwrap()
        );
    }

    println!("\nbottom levels:");
    for t in w.tasks() {
        println!(
            "  {:>5}: bl = {:>2}, blc = {:>2}",
            t.name,
            bl.rank[t.id as usize],
            blc.rank[t.id as usize]
        );
    }
}
