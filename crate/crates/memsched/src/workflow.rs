//! Workflow DAGs: tasks with work and memory weights, edges carrying sized
//! output files.
//!
//! A [`Workflow`] is immutable after construction. Adjacency (parent and
//! child lists) is derived from the edge list, never stored independently,
//! and acyclicity is verified with a topological sort on every construction
//! path (JSON, DOT, CSV-weighted, generated).

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TaskId = u32;

/// Work assigned to a task when an input file carries no weight.
pub const DEFAULT_WORK: u64 = 1;
/// Memory (bytes) assigned to a task when an input file carries no weight.
pub const DEFAULT_MEM: u64 = 50_000_000;
/// File size (bytes) assigned to an edge when an input carries no weight.
pub const DEFAULT_EDGE_SIZE: u64 = 1_000;

fn default_work() -> u64 {
    DEFAULT_WORK
}
fn default_mem() -> u64 {
    DEFAULT_MEM
}
fn default_edge_size() -> u64 {
    DEFAULT_EDGE_SIZE
}

/// A workflow task: `work` is an abstract operation count (execution time on
/// a processor with speed `s` is `work / s`), `mem` is the memory the task
/// itself occupies while executing, in bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_work")]
    pub work: u64,
    #[serde(default = "default_mem")]
    pub mem: u64,
}

/// A file produced by `src` and consumed by `dst`, `size` bytes large.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeFile {
    pub src: TaskId,
    pub dst: TaskId,
    #[serde(default = "default_edge_size")]
    pub size: u64,
}

/// An immutable task DAG with derived adjacency and per-task file totals.
#[derive(Debug, Clone)]
pub struct Workflow {
    tasks: Vec<Task>,
    edges: Vec<EdgeFile>,
    /// Per task, indices into `edges` of incoming edges, ascending by source.
    parents: Vec<Vec<usize>>,
    /// Per task, indices into `edges` of outgoing edges, ascending by target.
    children: Vec<Vec<usize>>,
    total_in: Vec<u64>,
    total_out: Vec<u64>,
}

impl PartialEq for Workflow {
    fn eq(&self, other: &Self) -> bool {
        self.tasks == other.tasks && self.edges == other.edges
    }
}

#[derive(Serialize, Deserialize)]
struct WorkflowJson {
    #[serde(default)]
    tasks: Vec<Task>,
    #[serde(default)]
    edges: Vec<EdgeFile>,
}

/// Supported on-disk workflow formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkflowFormat {
    Json,
    Dot,
}

impl Workflow {
    /// Builds a workflow from raw tasks and edges.
    ///
    /// Ids must be dense (`0..n`). Multi-edges between the same task pair are
    /// merged by summing their sizes. Fails on duplicate ids, unknown edge
    /// endpoints, self-loops and cycles.
    pub fn new(mut tasks: Vec<Task>, edges: Vec<EdgeFile>) -> Result<Self> {
        tasks.sort_by_key(|t| t.id);
        for (i, t) in tasks.iter().enumerate() {
            if t.id as usize != i {
                if i > 0 && tasks[i - 1].id == t.id {
                    return Err(Error::DuplicateId(t.id));
                }
                return Err(Error::Parse(format!(
                    "task ids must be dense 0..{}, found {}",
                    tasks.len(),
                    t.id
                )));
            }
        }
        for t in &mut tasks {
            if t.name.is_empty() {
                t.name = format!("t{}", t.id);
            }
        }
        let n = tasks.len();

        let mut merged: HashMap<(TaskId, TaskId), u64> = HashMap::new();
        for e in &edges {
            if e.src as usize >= n || e.dst as usize >= n {
                return Err(Error::UnknownTask(format!(
                    "edge ({}, {}) references a missing task",
                    e.src, e.dst
                )));
            }
            if e.src == e.dst {
                return Err(Error::Cycle(format!(": self-loop at task {}", e.src)));
            }
            let slot = merged.entry((e.src, e.dst)).or_insert(0);
            *slot = slot.saturating_add(e.size);
        }
        let mut edges: Vec<EdgeFile> = merged
            .into_iter()
            .map(|((src, dst), size)| EdgeFile { src, dst, size })
            .collect();
        edges.sort_by_key(|e| (e.src, e.dst));

        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut total_in = vec![0u64; n];
        let mut total_out = vec![0u64; n];
        for (i, e) in edges.iter().enumerate() {
            children[e.src as usize].push(i);
            parents[e.dst as usize].push(i);
            total_in[e.dst as usize] = total_in[e.dst as usize].saturating_add(e.size);
            total_out[e.src as usize] = total_out[e.src as usize].saturating_add(e.size);
        }

        let w = Workflow {
            tasks,
            edges,
            parents,
            children,
            total_in,
            total_out,
        };
        // Kahn's algorithm doubles as the acyclicity check.
        let order = w.try_topological_order()?;
        debug_assert_eq!(order.len(), n);
        Ok(w)
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id as usize]
    }

    /// Edges sorted by `(src, dst)`, multi-edges already merged.
    pub fn edges(&self) -> &[EdgeFile] {
        &self.edges
    }

    /// Incoming edges of `u`, ascending by source id.
    pub fn in_edges(&self, u: TaskId) -> impl Iterator<Item = &EdgeFile> + '_ {
        self.parents[u as usize].iter().map(|&i| &self.edges[i])
    }

    /// Outgoing edges of `u`, ascending by target id.
    pub fn out_edges(&self, u: TaskId) -> impl Iterator<Item = &EdgeFile> + '_ {
        self.children[u as usize].iter().map(|&i| &self.edges[i])
    }

    /// Total size of files received from parents.
    pub fn total_in(&self, u: TaskId) -> u64 {
        self.total_in[u as usize]
    }

    /// Total size of files sent to children.
    pub fn total_out(&self, u: TaskId) -> u64 {
        self.total_out[u as usize]
    }

    /// Total memory requirement of a task: the maximum of its own memory,
    /// the sum of incoming file sizes and the sum of outgoing file sizes.
    pub fn memory_requirement(&self, u: TaskId) -> Result<u64> {
        let i = u as usize;
        if i >= self.tasks.len() {
            return Err(Error::UnknownTask(u.to_string()));
        }
        Ok(self.tasks[i].mem.max(self.total_in[i]).max(self.total_out[i]))
    }

    /// A topological order (ready tasks taken in ascending id order).
    pub fn topological_order(&self) -> Vec<TaskId> {
        self.try_topological_order()
            .expect("constructed workflows are acyclic")
    }

    fn try_topological_order(&self) -> Result<Vec<TaskId>> {
        let n = self.tasks.len();
        let mut indeg: Vec<usize> = (0..n).map(|u| self.parents[u].len()).collect();
        let mut heap = std::collections::BinaryHeap::new();
        for (u, &d) in indeg.iter().enumerate() {
            if d == 0 {
                heap.push(std::cmp::Reverse(u as TaskId));
            }
        }
        let mut order = Vec::with_capacity(n);
        while let Some(std::cmp::Reverse(u)) = heap.pop() {
            order.push(u);
            for &ei in &self.children[u as usize] {
                let v = self.edges[ei].dst as usize;
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    heap.push(std::cmp::Reverse(v as TaskId));
                }
            }
        }
        if order.len() != n {
            let stuck = indeg
                .iter()
                .enumerate()
                .find(|(_, &d)| d > 0)
                .map(|(u, _)| u)
                .unwrap_or(0);
            return Err(Error::Cycle(format!(" involving task {stuck}")));
        }
        Ok(order)
    }

    /// A copy of this workflow with task and edge weights replaced.
    ///
    /// `edge_sizes` is indexed like [`Workflow::edges`].
    pub fn with_weights(&self, work: &[u64], mem: &[u64], edge_sizes: &[u64]) -> Workflow {
        assert_eq!(work.len(), self.tasks.len());
        assert_eq!(mem.len(), self.tasks.len());
        assert_eq!(edge_sizes.len(), self.edges.len());
        let mut w = self.clone();
        for (t, (&wk, &m)) in w.tasks.iter_mut().zip(work.iter().zip(mem)) {
            t.work = wk;
            t.mem = m;
        }
        for (e, &s) in w.edges.iter_mut().zip(edge_sizes) {
            e.size = s;
        }
        for u in 0..w.tasks.len() {
            w.total_in[u] = w.parents[u]
                .iter()
                .fold(0u64, |a, &i| a.saturating_add(w.edges[i].size));
            w.total_out[u] = w.children[u]
                .iter()
                .fold(0u64, |a, &i| a.saturating_add(w.edges[i].size));
        }
        w
    }

    pub fn from_json_str(s: &str) -> Result<Workflow> {
        let raw: WorkflowJson =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("workflow json: {e}")))?;
        Workflow::new(raw.tasks, raw.edges)
    }

    pub fn to_json_string(&self) -> String {
        let raw = WorkflowJson {
            tasks: self.tasks.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("workflow serialization cannot fail")
    }
}

/// Parses a workflow file in the given format and validates it.
pub fn parse_workflow(path: impl AsRef<Path>, format: WorkflowFormat) -> Result<Workflow> {
    let text = std::fs::read_to_string(path)?;
    match format {
        WorkflowFormat::Json => Workflow::from_json_str(&text),
        WorkflowFormat::Dot => crate::dot::parse_dot(&text),
    }
}

/// Workflow size classes used for report grouping.
///
/// Core ranges are up to 200 tasks (tiny), 1000-8000 (small), 10000-18000
/// (middle) and 20000-30000 (big); counts falling between two ranges are
/// assigned to the nearer one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Tiny,
    Small,
    Middle,
    Big,
}

impl std::fmt::Display for SizeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SizeClass::Tiny => "tiny",
            SizeClass::Small => "small",
            SizeClass::Middle => "middle",
            SizeClass::Big => "big",
        };
        f.write_str(s)
    }
}

/// Classifies a workflow by task count.
pub fn size_class(w: &Workflow) -> SizeClass {
    size_class_of(w.n_tasks())
}

pub fn size_class_of(n_tasks: usize) -> SizeClass {
    // Midpoints between the class ranges; ties round down.
    match n_tasks {
        0..=600 => SizeClass::Tiny,
        601..=9000 => SizeClass::Small,
        9001..=19000 => SizeClass::Middle,
        _ => SizeClass::Big,
    }
}

/// Applies per-task weights from a CSV file with columns
/// `task_name, work, mem, total_output_bytes`.
///
/// The historical-data convention: tasks are matched by name; a matched
/// task's total output is split evenly across its outgoing edges (remainder
/// to the first edges in child order). Rows naming tasks absent from the
/// workflow are skipped, and tasks without a row keep their current weights.
pub fn apply_weight_csv(w: &Workflow, path: impl AsRef<Path>) -> Result<Workflow> {
    #[derive(Deserialize)]
    struct Row {
        task_name: String,
        work: u64,
        mem: u64,
        total_output_bytes: u64,
    }

    let mut by_name: HashMap<&str, TaskId> = HashMap::new();
    for t in w.tasks() {
        by_name.insert(t.name.as_str(), t.id);
    }

    let mut work: Vec<u64> = w.tasks().iter().map(|t| t.work).collect();
    let mut mem: Vec<u64> = w.tasks().iter().map(|t| t.mem).collect();
    let mut sizes: Vec<u64> = w.edges().iter().map(|e| e.size).collect();

    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    for row in rdr.deserialize() {
        let row: Row = row?;
        let Some(&id) = by_name.get(row.task_name.as_str()) else {
            continue;
        };
        work[id as usize] = row.work;
        mem[id as usize] = row.mem;
        let out: Vec<usize> = w.children[id as usize].clone();
        if !out.is_empty() {
            let d = out.len() as u64;
            let share = row.total_output_bytes / d;
            let rem = (row.total_output_bytes % d) as usize;
            for (k, &ei) in out.iter().enumerate() {
                sizes[ei] = share + if k < rem { 1 } else { 0 };
            }
        }
    }
    Ok(w.with_weights(&work, &mem, &sizes))
}
