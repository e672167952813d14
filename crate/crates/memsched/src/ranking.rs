//! Task ordering, the first stage of HEFT-style scheduling.
//!
//! Three policies: plain bottom level (BL), bottom level augmented with the
//! largest incoming communication (BLC), and a minimum-peak-memory traversal
//! (MM). Rank values are computed in exact integer arithmetic so orders are
//! reproducible; ties always break toward the smaller task id.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::workflow::{TaskId, Workflow};

/// Which ordering drives task assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankPolicy {
    /// Non-increasing bottom level.
    Bl,
    /// Non-increasing bottom level with incoming communications.
    Blc,
    /// Minimum-peak-memory traversal.
    Mm,
}

impl std::fmt::Display for RankPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RankPolicy::Bl => "BL",
            RankPolicy::Blc => "BLC",
            RankPolicy::Mm => "MM",
        })
    }
}

/// A per-task rank plus the scheduling order it induces.
///
/// `order` is always a valid topological order: it is produced by repeatedly
/// taking the highest-rank ready task (rank ties to the smaller id), which
/// coincides with the plain rank sort whenever that sort is topological —
/// in particular whenever all work weights are positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    pub rank: Vec<u128>,
    pub order: Vec<TaskId>,
}

fn order_by_rank(w: &Workflow, rank: &[u128]) -> Vec<TaskId> {
    let n = w.n_tasks();
    let mut indeg: Vec<usize> = (0..n).map(|u| w.in_edges(u as TaskId).count()).collect();
    let mut heap: BinaryHeap<(u128, Reverse<TaskId>)> = BinaryHeap::new();
    for u in 0..n {
        if indeg[u] == 0 {
            heap.push((rank[u], Reverse(u as TaskId)));
        }
    }
    let mut order = Vec::with_capacity(n);
    while let Some((_, Reverse(u))) = heap.pop() {
        order.push(u);
        for e in w.out_edges(u) {
            let v = e.dst as usize;
            indeg[v] -= 1;
            if indeg[v] == 0 {
                heap.push((rank[v], Reverse(e.dst)));
            }
        }
    }
    debug_assert_eq!(order.len(), n);
    order
}

/// Bottom levels: `bl(u) = w_u + max over children v of (c_uv + bl(v))`,
/// the max contributing 0 at sinks. Order is non-increasing `bl`.
pub fn bottom_level(w: &Workflow) -> RankTable {
    let mut rank = vec![0u128; w.n_tasks()];
    for &u in w.topological_order().iter().rev() {
        let best = w
            .out_edges(u)
            .map(|e| e.size as u128 + rank[e.dst as usize])
            .max()
            .unwrap_or(0);
        rank[u as usize] = w.task(u).work as u128 + best;
    }
    let order = order_by_rank(w, &rank);
    RankTable { rank, order }
}

/// Bottom levels with communications: the BL recursion plus the largest
/// incoming file, prioritizing tasks that clear big inputs out of memory.
pub fn bottom_level_comm(w: &Workflow) -> RankTable {
    let mut rank = vec![0u128; w.n_tasks()];
    for &u in w.topological_order().iter().rev() {
        let down = w
            .out_edges(u)
            .map(|e| e.size as u128 + rank[e.dst as usize])
            .max()
            .unwrap_or(0);
        let inc = w.in_edges(u).map(|e| e.size as u128).max().unwrap_or(0);
        rank[u as usize] = w.task(u).work as u128 + down + inc;
    }
    let order = order_by_rank(w, &rank);
    RankTable { rank, order }
}

/// How the minimum-memory traversal is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinMemoryMode {
    /// Branch-and-bound over all topological orders; optimal, limited to
    /// [`EXACT_ENUMERATION_LIMIT`] tasks.
    Exact,
    /// Greedy best-first traversal; its peak never exceeds the BL order's.
    Heuristic,
}

/// Task-count ceiling for [`MinMemoryMode::Exact`].
pub const EXACT_ENUMERATION_LIMIT: usize = 10;

/// Peak memory of executing `order` on one processor with unbounded memory.
///
/// The resident set holds produced-but-unconsumed files. While a task runs,
/// usage is the resident set (its own inputs included) plus its memory and
/// the outputs it writes; afterwards its inputs are freed and its outputs
/// stay resident.
pub fn sequential_peak(w: &Workflow, order: &[TaskId]) -> Result<u64> {
    let n = w.n_tasks();
    if order.len() != n {
        return Err(Error::NonTopologicalOrder(format!(
            "order visits {} of {} tasks",
            order.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &u in order {
        if u as usize >= n || seen[u as usize] {
            return Err(Error::NonTopologicalOrder(format!("bad entry {u}")));
        }
        for e in w.in_edges(u) {
            if !seen[e.src as usize] {
                return Err(Error::NonTopologicalOrder(format!(
                    "task {u} precedes its parent {}",
                    e.src
                )));
            }
        }
        seen[u as usize] = true;
    }

    let mut resident: u128 = 0;
    let mut peak: u128 = 0;
    for &u in order {
        let usage = resident + w.task(u).mem as u128 + w.total_out(u) as u128;
        peak = peak.max(usage);
        resident = resident - w.total_in(u) as u128 + w.total_out(u) as u128;
    }
    Ok(peak.min(u64::MAX as u128) as u64)
}

/// Greedy traversal: among ready tasks, prefer the one that shrinks the
/// resident set the most (consuming files frees memory for everything
/// after), then the smallest transient footprint, then the higher bottom
/// level, then the smaller id. All keys are per-task constants, so the
/// choice is a single ordered-set lookup per step.
fn greedy_min_memory(w: &Workflow, bl: &RankTable) -> Vec<TaskId> {
    type Key = (i128, u128, Reverse<u128>, TaskId);
    let n = w.n_tasks();
    let key = |u: TaskId| -> Key {
        let transient = w.task(u).mem as u128 + w.total_out(u) as u128;
        let growth = w.total_out(u) as i128 - w.total_in(u) as i128;
        (growth, transient, Reverse(bl.rank[u as usize]), u)
    };
    let mut indeg: Vec<usize> = (0..n).map(|u| w.in_edges(u as TaskId).count()).collect();
    let mut ready: std::collections::BTreeSet<Key> = (0..n)
        .filter(|&u| indeg[u] == 0)
        .map(|u| key(u as TaskId))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&k) = ready.iter().next() {
        ready.remove(&k);
        let u = k.3;
        order.push(u);
        for e in w.out_edges(u) {
            let v = e.dst as usize;
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.insert(key(e.dst));
            }
        }
    }
    debug_assert_eq!(order.len(), n);
    order
}

/// Depth-first branch-and-bound over topological orders, pruning on peak.
struct ExactSearch<'a> {
    w: &'a Workflow,
    best_peak: u128,
    best_order: Vec<TaskId>,
    current: Vec<TaskId>,
}

impl ExactSearch<'_> {
    fn run(&mut self, indeg: &mut [usize], placed: &mut [bool], resident: u128, peak: u128) {
        if self.current.len() == self.w.n_tasks() {
            if peak < self.best_peak {
                self.best_peak = peak;
                self.best_order = self.current.clone();
            }
            return;
        }
        for u in 0..self.w.n_tasks() as TaskId {
            if placed[u as usize] || indeg[u as usize] != 0 {
                continue;
            }
            let usage = resident + self.w.task(u).mem as u128 + self.w.total_out(u) as u128;
            let new_peak = peak.max(usage);
            if new_peak >= self.best_peak {
                continue;
            }
            placed[u as usize] = true;
            self.current.push(u);
            for e in self.w.out_edges(u) {
                indeg[e.dst as usize] -= 1;
            }
            let new_resident =
                resident - self.w.total_in(u) as u128 + self.w.total_out(u) as u128;
            self.run(indeg, placed, new_resident, new_peak);
            for e in self.w.out_edges(u) {
                indeg[e.dst as usize] += 1;
            }
            self.current.pop();
            placed[u as usize] = false;
        }
    }
}

/// Produces a low-peak-memory topological order.
///
/// Exact mode returns an order whose sequential peak is minimal over all
/// topological orders; heuristic mode returns the greedy traversal, falling
/// back to the BL order if that happens to peak lower. The rank stored in
/// the table is the reverse position in the order.
pub fn min_memory_order(w: &Workflow, mode: MinMemoryMode) -> Result<RankTable> {
    let n = w.n_tasks();
    let bl = bottom_level(w);
    let order = match mode {
        MinMemoryMode::Exact => {
            if n > EXACT_ENUMERATION_LIMIT {
                return Err(Error::ExactThresholdExceeded {
                    n,
                    limit: EXACT_ENUMERATION_LIMIT,
                });
            }
            let greedy = greedy_min_memory(w, &bl);
            let greedy_peak = sequential_peak(w, &greedy)? as u128;
            let mut search = ExactSearch {
                w,
                best_peak: greedy_peak + 1,
                best_order: greedy,
                current: Vec::with_capacity(n),
            };
            let mut indeg: Vec<usize> =
                (0..n).map(|u| w.in_edges(u as TaskId).count()).collect();
            let mut placed = vec![false; n];
            search.run(&mut indeg, &mut placed, 0, 0);
            search.best_order
        }
        MinMemoryMode::Heuristic => {
            let greedy = greedy_min_memory(w, &bl);
            if sequential_peak(w, &greedy)? <= sequential_peak(w, &bl.order)? {
                greedy
            } else {
                bl.order.clone()
            }
        }
    };
    let mut rank = vec![0u128; n];
    for (pos, &u) in order.iter().enumerate() {
        rank[u as usize] = (n - pos) as u128;
    }
    Ok(RankTable { rank, order })
}

/// Dispatches to the ranking for `policy`; MM uses the heuristic traversal.
pub fn rank_order(w: &Workflow, policy: RankPolicy) -> RankTable {
    match policy {
        RankPolicy::Bl => bottom_level(w),
        RankPolicy::Blc => bottom_level_comm(w),
        RankPolicy::Mm => {
            min_memory_order(w, MinMemoryMode::Heuristic).expect("heuristic mode cannot fail")
        }
    }
}
