//! Parse the supported input formats: workflow JSON, a DOT digraph with
//! weight attributes, a per-task weight CSV, and a cluster description.
//!
//!     cargo run --example parse_formats

use memsched::{apply_weight_csv, parse_cluster, parse_workflow, Cluster, WorkflowFormat};

fn main() -> memsched::Result<()> {
    let dir = std::env::temp_dir().join("memsched-formats-example");
    std::fs::create_dir_all(&dir)?;

    // DOT: node attributes work/mem, edge attribute size; missing weights
    // fall back to the small-task defaults (work 1, 50 MB, 1 KB files).
    let dot = r#"digraph pipeline {
        fetch   [work=4000000000, mem=200000000];
        align   [work=9000000000, mem=1500000000];
        index;
        report  [work=1000000000, mem=100000000];
        fetch -> align [size=500000000];
        fetch -> index;
        align -> report [size=250000000];
        index -> report;
    }"#;
    let dot_path = dir.join("pipeline.dot");
    std::fs::write(&dot_path, dot)?;
    let w = parse_workflow(&dot_path, WorkflowFormat::Dot)?;
    println!("parsed {} tasks and {} edges from DOT", w.n_tasks(), w.edges().len());
    for t in w.tasks() {
        println!(
            "  {:<7} work={:<12} mem={:<11} memory requirement={}",
            t.name,
            t.work,
            t.mem,
            w.memory_requirement(t.id)?
        );
    }

    // Historical weights by task name: total output split evenly across
    // out-edges.
    let csv_path = dir.join("weights.csv");
    std::fs::write(
        &csv_path,
        "task_name,work,mem,total_output_bytes\n\
         index,2000000000,800000000,600000001\n",
    )?;
    let w = apply_weight_csv(&w, &csv_path)?;
    let index = w.tasks().iter().find(|t| t.name == "index").unwrap();
    println!("\nafter the CSV, index has work={} mem={}", index.work, index.mem);
    for e in w.out_edges(index.id) {
        println!("  file ({}, {}) now {} bytes", e.src, e.dst, e.size);
    }

    // Round-trip through the JSON form.
    let json_path = dir.join("pipeline.json");
    std::fs::write(&json_path, w.to_json_string())?;
    let again = parse_workflow(&json_path, WorkflowFormat::Json)?;
    assert_eq!(w, again);
    println!("\nJSON round-trip preserved the workflow exactly");

    // Clusters: buffer defaults to ten times the memory when omitted.
    let cluster_json = r#"{
        "bandwidth": 1000000000,
        "processors": [
            {"name": "alpha", "speed": 4e9,  "memory": 16000000000},
            {"name": "beta",  "speed": 32e9, "memory": 32000000000, "buffer": 64000000000}
        ]
    }"#;
    let cluster_path = dir.join("cluster.json");
    std::fs::write(&cluster_path, cluster_json)?;
    let c: Cluster = parse_cluster(&cluster_path)?;
    println!("\ncluster with {} processors:", c.k());
    for p in c.processors() {
        println!(
            "  {:<6} speed {:>6.0e}  memory {:>5.1} GB  buffer {:>6.1} GB",
            p.name,
            p.speed,
            p.memory as f64 / 1e9,
            p.buffer as f64 / 1e9
        );
    }
    Ok(())
}
