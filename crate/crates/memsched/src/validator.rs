//! Independent re-verification of schedules against the platform model.
//!
//! The replay here shares no bookkeeping code with the scheduler: it tracks
//! each file's location individually and re-derives transient memory use,
//! buffer occupancy and precedence timing from the workflow and cluster
//! alone. Violations never abort the replay, so a report lists everything
//! wrong with a schedule and the peak memory each processor would reach.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::platform::{Cluster, ProcId};
use crate::scheduler::Schedule;
use crate::workflow::{TaskId, Workflow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Precedence,
    MemoryExceeded,
    BufferExceeded,
    MissingTask,
    UnknownProcessor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub task: TaskId,
    pub detail: String,
}

/// Outcome of validating one schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    /// Peak transient memory over each processor's capacity; above 1.0 only
    /// for invalid schedules.
    pub peak_fraction: Vec<f64>,
}

impl ValidationReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Makespan of a schedule: the latest entry finish time, 0 when empty.
pub fn makespan(s: &Schedule) -> f64 {
    s.entries.iter().map(|e| e.finish).fold(0.0, f64::max)
}

#[derive(Clone, Copy, PartialEq)]
enum Loc {
    Mem(ProcId),
    Buf(ProcId),
}

/// Replays `s` entry by entry and reports every model violation.
pub fn validate(s: &Schedule, w: &Workflow, c: &Cluster) -> ValidationReport {
    let n = w.n_tasks();
    let k = c.k();
    let mut violations = Vec::new();

    // Structural pass: every workflow task exactly once, on a known
    // processor. Broken entries are skipped by the replay.
    let mut entry_of = vec![usize::MAX; n];
    let mut usable = vec![false; s.entries.len()];
    for (i, e) in s.entries.iter().enumerate() {
        if e.task as usize >= n {
            violations.push(Violation {
                kind: ViolationKind::MissingTask,
                task: e.task,
                detail: format!("entry {i} names a task outside the workflow"),
            });
            continue;
        }
        if entry_of[e.task as usize] != usize::MAX {
            violations.push(Violation {
                kind: ViolationKind::MissingTask,
                task: e.task,
                detail: "task committed more than once".into(),
            });
            continue;
        }
        if e.proc as usize >= k {
            violations.push(Violation {
                kind: ViolationKind::UnknownProcessor,
                task: e.task,
                detail: format!("processor {} does not exist", e.proc),
            });
            continue;
        }
        entry_of[e.task as usize] = i;
        usable[i] = true;
    }
    for (u, &entry) in entry_of.iter().enumerate() {
        if entry == usize::MAX {
            violations.push(Violation {
                kind: ViolationKind::MissingTask,
                task: u as TaskId,
                detail: "task never scheduled".into(),
            });
        }
    }

    let beta = c.bandwidth() as f64;
    let mut loc: HashMap<(TaskId, TaskId), Loc> = HashMap::new();
    let mut mem_used = vec![0u128; k];
    let mut buf_used = vec![0u128; k];
    let mut peak = vec![0u128; k];
    let mut occupied = vec![false; k];

    for (i, e) in s.entries.iter().enumerate() {
        if !usable[i] {
            continue;
        }
        let v = e.task;
        let p = e.proc;
        let pi = p as usize;
        occupied[pi] = true;

        // Declared evictions move resident files into the buffer.
        for f in &e.evictions {
            match loc.get(&(f.src, f.dst)) {
                Some(&Loc::Mem(q)) if q == p => {
                    let size = size_of(w, f.src, f.dst);
                    mem_used[pi] -= size;
                    buf_used[pi] += size;
                    loc.insert((f.src, f.dst), Loc::Buf(p));
                }
                _ => violations.push(Violation {
                    kind: ViolationKind::Precedence,
                    task: v,
                    detail: format!(
                        "evicts file ({}, {}) that is not resident here",
                        f.src, f.dst
                    ),
                }),
            }
        }
        if buf_used[pi] > c.proc(p).buffer as u128 {
            violations.push(Violation {
                kind: ViolationKind::BufferExceeded,
                task: v,
                detail: format!(
                    "buffer holds {} of {} bytes",
                    buf_used[pi],
                    c.proc(p).buffer
                ),
            });
        }

        // Timing against each parent, and the file bookkeeping for inputs.
        let mut remote_in: u128 = 0;
        for edge in w.in_edges(v) {
            let u = edge.src;
            let ui = u as usize;
            if entry_of[ui] == usize::MAX {
                continue; // already reported as missing
            }
            let pe = &s.entries[entry_of[ui]];
            if entry_of[ui] > i {
                violations.push(Violation {
                    kind: ViolationKind::Precedence,
                    task: v,
                    detail: format!("committed before its parent {u}"),
                });
            }
            if pe.proc == p {
                if e.start < pe.finish {
                    violations.push(Violation {
                        kind: ViolationKind::Precedence,
                        task: v,
                        detail: format!(
                            "starts at {} before parent {u} finishes at {}",
                            e.start, pe.finish
                        ),
                    });
                }
            } else {
                remote_in += edge.size as u128;
                let arrival = pe.finish + edge.size as f64 / beta;
                if e.start < arrival {
                    violations.push(Violation {
                        kind: ViolationKind::Precedence,
                        task: v,
                        detail: format!(
                            "starts at {} before data from {u} arrives at {arrival}",
                            e.start
                        ),
                    });
                }
            }
            // Release the consumed file wherever it lives.
            match loc.remove(&(u, v)) {
                Some(Loc::Mem(q)) => {
                    mem_used[q as usize] -= size_of(w, u, v);
                }
                Some(Loc::Buf(q)) => {
                    buf_used[q as usize] -= size_of(w, u, v);
                    if pe.proc == p {
                        // The model provides no path from the buffer back
                        // into the same processor's memory.
                        violations.push(Violation {
                            kind: ViolationKind::Precedence,
                            task: v,
                            detail: format!(
                                "reads file ({u}, {v}) from the buffer on its own processor"
                            ),
                        });
                    }
                }
                None => violations.push(Violation {
                    kind: ViolationKind::Precedence,
                    task: v,
                    detail: format!("consumes file ({u}, {v}) that was never produced"),
                }),
            }
        }

        // Transient usage while v runs: resident files (its same-processor
        // inputs were still resident above), its own memory, remote inputs
        // and all outputs.
        let out_total = w.total_out(v) as u128;
        let transient = mem_used[pi] + w.task(v).mem as u128 + remote_in + out_total
            + same_proc_inputs(w, s, &entry_of, v, p);
        peak[pi] = peak[pi].max(transient);
        if transient > c.proc(p).memory as u128 {
            violations.push(Violation {
                kind: ViolationKind::MemoryExceeded,
                task: v,
                detail: format!(
                    "needs {transient} bytes on processor {p} with {}",
                    c.proc(p).memory
                ),
            });
        }

        // Produced files stay with this processor.
        for edge in w.out_edges(v) {
            loc.insert((v, edge.dst), Loc::Mem(p));
            mem_used[pi] += edge.size as u128;
        }
    }

    let peak_fraction: Vec<f64> = peak
        .iter()
        .zip(c.processors())
        .map(|(&pk, proc)| pk as f64 / proc.memory as f64)
        .collect();

    ValidationReport {
        valid: violations.is_empty(),
        violations,
        peak_fraction,
    }
}

fn size_of(w: &Workflow, src: TaskId, dst: TaskId) -> u128 {
    w.out_edges(src)
        .find(|e| e.dst == dst)
        .map(|e| e.size as u128)
        .unwrap_or(0)
}

/// Inputs of `v` consumed from its own processor, which the loop above has
/// already removed from the resident sum but which occupy memory while `v`
/// executes.
fn same_proc_inputs(
    w: &Workflow,
    s: &Schedule,
    entry_of: &[usize],
    v: TaskId,
    p: ProcId,
) -> u128 {
    w.in_edges(v)
        .filter(|e| {
            let ui = e.src as usize;
            entry_of[ui] != usize::MAX && s.entries[entry_of[ui]].proc == p
        })
        .map(|e| e.size as u128)
        .sum()
}

/// Mean over occupied processors of their peak transient usage fraction.
pub fn memory_usage(s: &Schedule, w: &Workflow, c: &Cluster) -> f64 {
    let report = validate(s, w, c);
    let mut used = Vec::new();
    let mut occupied = vec![false; c.k()];
    for e in &s.entries {
        if (e.proc as usize) < c.k() {
            occupied[e.proc as usize] = true;
        }
    }
    for (p, &occ) in occupied.iter().enumerate() {
        if occ {
            used.push(report.peak_fraction[p]);
        }
    }
    if used.is_empty() {
        0.0
    } else {
        used.iter().sum::<f64>() / used.len() as f64
    }
}
