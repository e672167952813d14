//! Second-stage task-to-processor assignment.
//!
//! [`heft_schedule`] is the memory-oblivious baseline: every task goes to
//! the processor where it finishes earliest, and nothing tracks memory, so
//! the resulting schedule may be invalid on a real platform.
//!
//! [`heftm_schedule`] is the memory-aware variant. A tentative assignment
//! of task `v` to processor `p` runs three steps:
//!
//! 1. every file from a parent already on `p` must still be in `p`'s
//!    memory (an evicted file cannot be re-loaded);
//! 2. the memory slack `Res = availM - m_v - incoming remote files -
//!    outgoing files` must end up non-negative, evicting pending files
//!    into the communication buffer if needed;
//! 3. the start time is the max of the processor ready time and every
//!    remote parent's data arrival, `max(FT(u), link ready) + size/beta`.
//!
//! Infeasible choices carry `finish = +inf`. The cheapest feasible finish
//! wins (ties to the lower processor id) and the commit updates ready
//! times, memories, buffers and the pending-file sets.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::platform::{Cluster, ProcId};
use crate::ranking::{rank_order, RankPolicy, RankTable};
use crate::workflow::{EdgeFile, TaskId, Workflow};

/// Which pending files leave memory first when space runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvictionPolicy {
    LargestFirst,
    SmallestFirst,
}

impl std::fmt::Display for EvictionPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvictionPolicy::LargestFirst => "largest",
            EvictionPolicy::SmallestFirst => "smallest",
        })
    }
}

/// A pending file keyed for size-ordered eviction scans.
pub type PendingFile = (u64, TaskId, TaskId);

/// All mutable bookkeeping of one scheduling run.
///
/// `avail_mem[j] + sum(pending[j]) == memory[j]` and the buffer analogue
/// hold after every commit; [`commit_assign`] asserts them in debug builds
/// and [`SchedulerState::check_conservation`] re-verifies on demand.
#[derive(Debug, Clone)]
pub struct SchedulerState {
    /// Per-processor ready time, seconds.
    pub rt: Vec<f64>,
    /// Ready times of ordered processor pairs, row-major `from * k + to`.
    link_rt: Vec<f64>,
    /// Memory not occupied by pending files, per processor.
    pub avail_mem: Vec<u64>,
    /// Buffer capacity not occupied by evicted files, per processor.
    pub avail_buf: Vec<u64>,
    /// Files resident in memory, per processor, ordered by size.
    pub pending: Vec<BTreeSet<PendingFile>>,
    /// Files evicted into the communication buffer, per processor.
    pub buffer_pending: Vec<BTreeSet<PendingFile>>,
    /// Committed processor of each task.
    pub placement: Vec<Option<ProcId>>,
    /// Committed start times (NaN until placed).
    pub st: Vec<f64>,
    /// Committed finish times (NaN until placed).
    pub ft: Vec<f64>,
}

impl SchedulerState {
    pub fn new(w: &Workflow, c: &Cluster) -> Self {
        let k = c.k();
        SchedulerState {
            rt: vec![0.0; k],
            link_rt: vec![0.0; k * k],
            avail_mem: c.processors().iter().map(|p| p.memory).collect(),
            avail_buf: c.processors().iter().map(|p| p.buffer).collect(),
            pending: vec![BTreeSet::new(); k],
            buffer_pending: vec![BTreeSet::new(); k],
            placement: vec![None; w.n_tasks()],
            st: vec![f64::NAN; w.n_tasks()],
            ft: vec![f64::NAN; w.n_tasks()],
        }
    }

    pub fn link_rt(&self, from: ProcId, to: ProcId) -> f64 {
        let k = self.rt.len();
        self.link_rt[from as usize * k + to as usize]
    }

    pub fn link_rt_mut(&mut self, from: ProcId, to: ProcId) -> &mut f64 {
        let k = self.rt.len();
        &mut self.link_rt[from as usize * k + to as usize]
    }

    fn pending_total(&self, p: ProcId) -> u128 {
        self.pending[p as usize].iter().map(|&(s, _, _)| s as u128).sum()
    }

    fn buffer_total(&self, p: ProcId) -> u128 {
        self.buffer_pending[p as usize]
            .iter()
            .map(|&(s, _, _)| s as u128)
            .sum()
    }

    fn conserved(&self, p: ProcId, c: &Cluster) -> bool {
        self.avail_mem[p as usize] as u128 + self.pending_total(p)
            == c.proc(p).memory as u128
            && self.avail_buf[p as usize] as u128 + self.buffer_total(p)
                == c.proc(p).buffer as u128
    }

    /// Verifies memory and buffer conservation on every processor.
    pub fn check_conservation(&self, c: &Cluster) -> Result<(), String> {
        for p in 0..c.k() as ProcId {
            let mem = self.avail_mem[p as usize] as u128 + self.pending_total(p);
            if mem != c.proc(p).memory as u128 {
                return Err(format!(
                    "processor {p}: avail_mem + pending = {mem}, memory = {}",
                    c.proc(p).memory
                ));
            }
            let buf = self.avail_buf[p as usize] as u128 + self.buffer_total(p);
            if buf != c.proc(p).buffer as u128 {
                return Err(format!(
                    "processor {p}: avail_buf + buffer_pending = {buf}, buffer = {}",
                    c.proc(p).buffer
                ));
            }
        }
        Ok(())
    }
}

/// Why a tentative assignment was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// A same-processor parent's file is no longer in memory (step 1).
    InputEvicted { src: TaskId },
    /// Evicting every allowed pending file cannot cover the deficit (step 2).
    MemoryExhausted { deficit: u128 },
    /// The eviction plan would overflow the communication buffer (step 2).
    BufferExhausted,
}

impl std::fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InfeasibleReason::InputEvicted { src } => {
                write!(f, "input file from task {src} already evicted")
            }
            InfeasibleReason::MemoryExhausted { deficit } => {
                write!(f, "memory short by {deficit} bytes after eviction")
            }
            InfeasibleReason::BufferExhausted => write!(f, "communication buffer full"),
        }
    }
}

/// One tentative placement of a task on a processor.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub task: TaskId,
    pub proc: ProcId,
    pub start: f64,
    /// `+inf` when infeasible.
    pub finish: f64,
    pub evictions: Vec<EdgeFile>,
    pub feasible: bool,
    pub reason: Option<InfeasibleReason>,
}

/// No processor could host a task.
#[derive(Debug, Clone, thiserror::Error)]
pub struct SchedulingFailure {
    pub task: TaskId,
    pub reasons: Vec<(ProcId, InfeasibleReason)>,
}

impl std::fmt::Display for SchedulingFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no feasible processor for task {}:", self.task)?;
        for (p, r) in &self.reasons {
            write!(f, " p{p}: {r};")?;
        }
        Ok(())
    }
}

/// One committed placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub task: TaskId,
    pub proc: ProcId,
    pub start: f64,
    pub finish: f64,
    #[serde(rename = "evicted", default)]
    pub evictions: Vec<EdgeFile>,
}

/// Placement decisions in commit order plus the derived makespan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
    pub makespan: f64,
}

impl Schedule {
    pub fn from_entries(entries: Vec<ScheduleEntry>) -> Schedule {
        let makespan = entries.iter().map(|e| e.finish).fold(0.0, f64::max);
        Schedule { entries, makespan }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> crate::error::Result<Schedule> {
        serde_json::from_str(s)
            .map_err(|e| crate::error::Error::Parse(format!("schedule json: {e}")))
    }
}

/// Memory slack of placing `v` on `p` right now: available memory minus the
/// task memory, the files arriving from parents on other processors and the
/// files it will write. Negative means eviction is needed.
pub fn compute_res(v: TaskId, p: ProcId, state: &SchedulerState, w: &Workflow) -> i128 {
    let mut res = state.avail_mem[p as usize] as i128 - w.task(v).mem as i128;
    for e in w.in_edges(v) {
        if state.placement[e.src as usize] != Some(p) {
            res -= e.size as i128;
        }
    }
    res - w.total_out(v) as i128
}

/// Walks `p`'s pending files in eviction order (policy size order, ties by
/// ascending `(src, dst)`), skipping `protected`, until `deficit` bytes are
/// covered. `None` if the files run out or the buffer cannot hold them.
pub fn plan_evictions(
    deficit: u128,
    p: ProcId,
    state: &SchedulerState,
    policy: EvictionPolicy,
    protected: &BTreeSet<(TaskId, TaskId)>,
) -> Option<Vec<EdgeFile>> {
    debug_assert!(deficit > 0);
    let pd = &state.pending[p as usize];
    let mut planned = Vec::new();
    let mut freed: u128 = 0;
    let mut visit = |&(size, src, dst): &PendingFile, freed: &mut u128| -> bool {
        if protected.contains(&(src, dst)) {
            return false;
        }
        planned.push(EdgeFile { src, dst, size });
        *freed += size as u128;
        *freed >= deficit
    };

    let mut done = false;
    match policy {
        EvictionPolicy::SmallestFirst => {
            for f in pd.iter() {
                if visit(f, &mut freed) {
                    done = true;
                    break;
                }
            }
        }
        EvictionPolicy::LargestFirst => {
            // Sizes descending, (src, dst) ascending inside each size group.
            let mut cursor = pd.iter().next_back().map(|&(s, _, _)| s);
            'outer: while let Some(size) = cursor {
                for f in pd.range((size, 0, 0)..=(size, TaskId::MAX, TaskId::MAX)) {
                    if visit(f, &mut freed) {
                        done = true;
                        break 'outer;
                    }
                }
                cursor = pd.range(..(size, 0, 0)).next_back().map(|&(s, _, _)| s);
            }
        }
    }

    if !done {
        return None;
    }
    if freed > state.avail_buf[p as usize] as u128 {
        return None;
    }
    Some(planned)
}

/// Tentatively assigns `v` to `p` without touching the state.
///
/// Requires every parent of `v` to be placed already.
pub fn tentative_assign(
    v: TaskId,
    p: ProcId,
    state: &SchedulerState,
    w: &Workflow,
    c: &Cluster,
    policy: EvictionPolicy,
) -> Candidate {
    let infeasible = |reason: InfeasibleReason| Candidate {
        task: v,
        proc: p,
        start: f64::INFINITY,
        finish: f64::INFINITY,
        evictions: Vec::new(),
        feasible: false,
        reason: Some(reason),
    };

    // Step 1: same-processor inputs must still be resident; they are also
    // protected from eviction within this very assignment.
    let mut protected = BTreeSet::new();
    for e in w.in_edges(v) {
        if state.placement[e.src as usize] == Some(p) {
            if !state.pending[p as usize].contains(&(e.size, e.src, v)) {
                return infeasible(InfeasibleReason::InputEvicted { src: e.src });
            }
            protected.insert((e.src, v));
        }
    }

    // Step 2: memory slack, evicting pending files if negative.
    let res = compute_res(v, p, state, w);
    let evictions = if res < 0 {
        let deficit = res.unsigned_abs();
        match plan_evictions(deficit, p, state, policy, &protected) {
            Some(plan) => plan,
            None => {
                let evictable: u128 = state.pending[p as usize]
                    .iter()
                    .filter(|&&(_, src, dst)| !protected.contains(&(src, dst)))
                    .map(|&(s, _, _)| s as u128)
                    .sum();
                let reason = if evictable < deficit {
                    InfeasibleReason::MemoryExhausted {
                        deficit: deficit - evictable,
                    }
                } else {
                    InfeasibleReason::BufferExhausted
                };
                return infeasible(reason);
            }
        }
    } else {
        Vec::new()
    };

    // Step 3: start after the processor is ready and every remote input has
    // arrived.
    let beta = c.bandwidth() as f64;
    let mut start = state.rt[p as usize];
    for e in w.in_edges(v) {
        match state.placement[e.src as usize] {
            Some(q) if q != p => {
                let arrival =
                    state.ft[e.src as usize].max(state.link_rt(q, p)) + e.size as f64 / beta;
                start = start.max(arrival);
            }
            _ => {}
        }
    }
    let finish = start + w.task(v).work as f64 / c.proc(p).speed;

    Candidate {
        task: v,
        proc: p,
        start,
        finish,
        evictions,
        feasible: true,
        reason: None,
    }
}

/// Applies a feasible candidate to the state: planned evictions move to the
/// buffer, consumed inputs are released (on this processor or remotely),
/// produced files enter the pending set, and processor/link ready times
/// advance.
pub fn commit_assign(cand: &Candidate, state: &mut SchedulerState, w: &Workflow, c: &Cluster) {
    assert!(cand.feasible, "cannot commit an infeasible candidate");
    let v = cand.task;
    let p = cand.proc;
    let pi = p as usize;
    let beta = c.bandwidth() as f64;

    // (a) Evictions: memory -> communication buffer.
    for f in &cand.evictions {
        let removed = state.pending[pi].remove(&(f.size, f.src, f.dst));
        assert!(removed, "evicted file not pending");
        state.avail_mem[pi] += f.size;
        state.avail_buf[pi] = state.avail_buf[pi]
            .checked_sub(f.size)
            .expect("eviction plan exceeded buffer");
        state.buffer_pending[pi].insert((f.size, f.src, f.dst));
    }

    let mut touched_remote = Vec::new();
    for e in w.in_edges(v) {
        let src = e.src as usize;
        match state.placement[src] {
            Some(q) if q != p => {
                // (b) Remote input: release it at the producer and book the
                // transfer on the link.
                let qi = q as usize;
                if state.pending[qi].remove(&(e.size, e.src, v)) {
                    state.avail_mem[qi] += e.size;
                } else if state.buffer_pending[qi].remove(&(e.size, e.src, v)) {
                    state.avail_buf[qi] += e.size;
                } else {
                    panic!("input file ({}, {v}) lost from processor {q}", e.src);
                }
                *state.link_rt_mut(q, p) += e.size as f64 / beta;
                touched_remote.push(q);
            }
            Some(_) => {
                // (c) Same-processor input: consumed from memory.
                let removed = state.pending[pi].remove(&(e.size, e.src, v));
                assert!(removed, "same-processor input missing at commit");
                state.avail_mem[pi] += e.size;
            }
            None => panic!("parent {} of task {v} not placed", e.src),
        }
    }

    // (d) Produced files become pending on this processor.
    for e in w.out_edges(v) {
        state.pending[pi].insert((e.size, v, e.dst));
        state.avail_mem[pi] = state.avail_mem[pi]
            .checked_sub(e.size)
            .expect("commit would overdraw memory");
    }

    // (e) Ready time, placement and times.
    debug_assert!(cand.finish >= state.rt[pi]);
    state.rt[pi] = cand.finish;
    state.placement[v as usize] = Some(p);
    state.st[v as usize] = cand.start;
    state.ft[v as usize] = cand.finish;

    debug_assert!(state.conserved(p, c), "conservation broken on {p}");
    for q in touched_remote {
        debug_assert!(state.conserved(q, c), "conservation broken on {q}");
    }
}

/// Baseline HEFT tentative times: the printed formula takes, per parent,
/// `max(FT(u) + size/beta, link ready + size/beta)`, with the communication
/// term dropped for same-processor parents.
fn heft_tentative(
    v: TaskId,
    p: ProcId,
    state: &SchedulerState,
    w: &Workflow,
    c: &Cluster,
) -> Candidate {
    let beta = c.bandwidth() as f64;
    let mut start = state.rt[p as usize];
    for e in w.in_edges(v) {
        let ft_u = state.ft[e.src as usize];
        match state.placement[e.src as usize] {
            Some(q) if q != p => {
                let cb = e.size as f64 / beta;
                start = start.max((ft_u + cb).max(state.link_rt(q, p) + cb));
            }
            Some(_) => start = start.max(ft_u),
            None => panic!("parent {} of task {v} not placed", e.src),
        }
    }
    let finish = start + w.task(v).work as f64 / c.proc(p).speed;
    Candidate {
        task: v,
        proc: p,
        start,
        finish,
        evictions: Vec::new(),
        feasible: true,
        reason: None,
    }
}

fn heft_commit(cand: &Candidate, state: &mut SchedulerState, w: &Workflow, c: &Cluster) {
    let v = cand.task;
    let p = cand.proc;
    let beta = c.bandwidth() as f64;
    for e in w.in_edges(v) {
        if let Some(q) = state.placement[e.src as usize] {
            if q != p {
                *state.link_rt_mut(q, p) += e.size as f64 / beta;
            }
        }
    }
    state.rt[p as usize] = cand.finish;
    state.placement[v as usize] = Some(p);
    state.st[v as usize] = cand.start;
    state.ft[v as usize] = cand.finish;
}

/// The shared greedy loop: take the next ready task in rank order, try every
/// processor, commit the earliest feasible finish (ties to the lower
/// processor id).
pub(crate) fn greedy_assign(
    w: &Workflow,
    c: &Cluster,
    ev: EvictionPolicy,
    state: &mut SchedulerState,
    order: &[TaskId],
    memory_aware: bool,
) -> Result<Vec<ScheduleEntry>, SchedulingFailure> {
    let n = w.n_tasks();
    let k = c.k() as ProcId;
    let mut position = vec![usize::MAX; n];
    for (i, &u) in order.iter().enumerate() {
        position[u as usize] = i;
    }
    let mut waiting: Vec<usize> = (0..n)
        .map(|u| {
            w.in_edges(u as TaskId)
                .filter(|e| state.placement[e.src as usize].is_none())
                .count()
        })
        .collect();
    let mut ready: BinaryHeap<Reverse<(usize, TaskId)>> = order
        .iter()
        .filter(|&&u| waiting[u as usize] == 0 && state.placement[u as usize].is_none())
        .map(|&u| Reverse((position[u as usize], u)))
        .collect();

    let mut entries = Vec::with_capacity(order.len());
    while let Some(Reverse((_, v))) = ready.pop() {
        let mut best: Option<Candidate> = None;
        let mut reasons = Vec::new();
        for p in 0..k {
            let cand = if memory_aware {
                tentative_assign(v, p, state, w, c, ev)
            } else {
                heft_tentative(v, p, state, w, c)
            };
            if cand.feasible {
                if best.as_ref().is_none_or(|b| cand.finish < b.finish) {
                    best = Some(cand);
                }
            } else {
                reasons.push((p, cand.reason.expect("infeasible candidates carry a reason")));
            }
        }
        let Some(cand) = best else {
            return Err(SchedulingFailure { task: v, reasons });
        };
        if memory_aware {
            commit_assign(&cand, state, w, c);
        } else {
            heft_commit(&cand, state, w, c);
        }
        entries.push(ScheduleEntry {
            task: v,
            proc: cand.proc,
            start: cand.start,
            finish: cand.finish,
            evictions: cand.evictions,
        });
        for e in w.out_edges(v) {
            let x = e.dst as usize;
            waiting[x] -= 1;
            if waiting[x] == 0 {
                debug_assert_ne!(position[x], usize::MAX);
                ready.push(Reverse((position[x], e.dst)));
            }
        }
    }
    Ok(entries)
}

/// Memory-oblivious HEFT over the given rank order.
pub fn heft_schedule(w: &Workflow, c: &Cluster, ranks: &RankTable) -> Schedule {
    let mut state = SchedulerState::new(w, c);
    let entries = greedy_assign(w, c, EvictionPolicy::LargestFirst, &mut state, &ranks.order, false)
        .expect("baseline HEFT always finds a processor");
    Schedule::from_entries(entries)
}

/// Memory-aware HEFT under the given rank policy and eviction policy.
///
/// Fails when some task fits no processor; the failure names the task and
/// each processor's reason. Successful schedules respect every memory and
/// buffer capacity by construction.
pub fn heftm_schedule(
    w: &Workflow,
    c: &Cluster,
    policy: RankPolicy,
    ev: EvictionPolicy,
) -> Result<Schedule, SchedulingFailure> {
    heftm_schedule_with_order(w, c, &rank_order(w, policy).order, ev)
}

/// Memory-aware assignment over a caller-supplied topological order.
pub fn heftm_schedule_with_order(
    w: &Workflow,
    c: &Cluster,
    order: &[TaskId],
    ev: EvictionPolicy,
) -> Result<Schedule, SchedulingFailure> {
    let mut state = SchedulerState::new(w, c);
    let entries = greedy_assign(w, c, ev, &mut state, order, true)?;
    Ok(Schedule::from_entries(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::Processor;
    use crate::ranking::bottom_level;
    use crate::workflow::Task;

    fn wf(tasks: &[(u64, u64)], edges: &[(TaskId, TaskId, u64)]) -> Workflow {
        let tasks = tasks
            .iter()
            .enumerate()
            .map(|(i, &(work, mem))| Task {
                id: i as TaskId,
                name: String::new(),
                work,
                mem,
            })
            .collect();
        let edges = edges
            .iter()
            .map(|&(src, dst, size)| EdgeFile { src, dst, size })
            .collect();
        Workflow::new(tasks, edges).unwrap()
    }

    fn cluster(specs: &[(f64, u64)], bandwidth: u64) -> Cluster {
        let procs = specs
            .iter()
            .enumerate()
            .map(|(i, &(speed, memory))| Processor {
                id: i as ProcId,
                name: format!("p{i}"),
                speed,
                memory,
                buffer: memory * 10,
            })
            .collect();
        Cluster::new(procs, bandwidth).unwrap()
    }

    #[test]
    fn heft_single_task() {
        let w = wf(&[(10, 0)], &[]);
        let c = cluster(&[(2.0, 100)], 1);
        let s = heft_schedule(&w, &c, &bottom_level(&w));
        assert_eq!(s.entries[0].start, 0.0);
        assert_eq!(s.entries[0].finish, 5.0);
        assert_eq!(s.makespan, 5.0);
    }

    #[test]
    fn heft_two_independent_tasks_tie_to_lower_proc() {
        let w = wf(&[(10, 0), (10, 0)], &[]);
        let c = cluster(&[(2.0, 100), (1.0, 100)], 1_000_000_000);
        let s = heft_schedule(&w, &c, &bottom_level(&w));
        // First task on the fast processor (FT 5); the second finishes at 10
        // on either processor, so the tie goes to processor 0.
        assert_eq!(s.entries[0].proc, 0);
        assert_eq!(s.entries[1].proc, 0);
        assert_eq!(s.makespan, 10.0);
    }

    #[test]
    fn heft_chain_stays_on_one_processor() {
        let w = wf(&[(4, 0), (4, 0)], &[(0, 1, 8)]);
        let c = cluster(&[(1.0, 100), (1.0, 100)], 1);
        let s = heft_schedule(&w, &c, &bottom_level(&w));
        // Same processor: FT(b) = 8. Cross: 4 + 8 + 4 = 16.
        assert_eq!(s.entries[1].proc, s.entries[0].proc);
        assert_eq!(s.makespan, 8.0);
    }

    #[test]
    fn res_formula() {
        let w = wf(&[(1, 0), (1, 10), (1, 0)], &[(0, 1, 4), (1, 2, 5)]);
        let c = cluster(&[(1.0, 20), (1.0, 20)], 1);
        let mut state = SchedulerState::new(&w, &c);
        // Parent placed remotely: its 4 bytes must be loaded.
        state.placement[0] = Some(1);
        state.ft[0] = 1.0;
        assert_eq!(compute_res(1, 0, &state, &w), 20 - 10 - 4 - 5);

        // availM 10, mem 10, no edges -> 0.
        let w2 = wf(&[(1, 10)], &[]);
        let c2 = cluster(&[(1.0, 10)], 1);
        let state2 = SchedulerState::new(&w2, &c2);
        assert_eq!(compute_res(0, 0, &state2, &w2), 0);

        // availM 10, mem 10, outgoing 12 -> -12.
        let w3 = wf(&[(1, 10), (1, 0)], &[(0, 1, 12)]);
        let c3 = cluster(&[(1.0, 10), (1.0, 10)], 1);
        let state3 = SchedulerState::new(&w3, &c3);
        assert_eq!(compute_res(0, 0, &state3, &w3), -12);
    }

    fn state_with_pending(c: &Cluster, w: &Workflow, files: &[PendingFile]) -> SchedulerState {
        let mut state = SchedulerState::new(w, c);
        for &(size, src, dst) in files {
            state.pending[0].insert((size, src, dst));
            state.avail_mem[0] -= size;
        }
        state
    }

    #[test]
    fn eviction_plans() {
        let w = wf(&[(1, 0); 6], &[(0, 1, 3), (2, 3, 5), (4, 5, 8)]);
        let c = cluster(&[(1.0, 100)], 1);
        let state = state_with_pending(&c, &w, &[(3, 0, 1), (5, 2, 3), (8, 4, 5)]);
        let none = BTreeSet::new();

        let plan = plan_evictions(6, 0, &state, EvictionPolicy::LargestFirst, &none).unwrap();
        assert_eq!(plan.iter().map(|f| f.size).collect::<Vec<_>>(), vec![8]);

        let plan = plan_evictions(12, 0, &state, EvictionPolicy::LargestFirst, &none).unwrap();
        assert_eq!(plan.iter().map(|f| f.size).collect::<Vec<_>>(), vec![8, 5]);

        assert!(plan_evictions(20, 0, &state, EvictionPolicy::LargestFirst, &none).is_none());

        let plan = plan_evictions(6, 0, &state, EvictionPolicy::SmallestFirst, &none).unwrap();
        assert_eq!(plan.iter().map(|f| f.size).collect::<Vec<_>>(), vec![3, 5]);
    }

    #[test]
    fn eviction_size_ties_break_by_edge_id() {
        let w = wf(&[(1, 0); 6], &[(0, 2, 5), (1, 3, 5), (4, 5, 5)]);
        let c = cluster(&[(1.0, 100)], 1);
        let state = state_with_pending(&c, &w, &[(5, 1, 3), (5, 4, 5), (5, 0, 2)]);
        let none = BTreeSet::new();
        let plan = plan_evictions(11, 0, &state, EvictionPolicy::LargestFirst, &none).unwrap();
        let picked: Vec<_> = plan.iter().map(|f| (f.src, f.dst)).collect();
        assert_eq!(picked, vec![(0, 2), (1, 3), (4, 5)]);
    }

    #[test]
    fn eviction_respects_buffer_capacity() {
        let w = wf(&[(1, 0), (1, 0)], &[(0, 1, 8)]);
        let procs = vec![Processor {
            id: 0,
            name: "p0".into(),
            speed: 1.0,
            memory: 100,
            buffer: 4,
        }];
        let c = Cluster::new(procs, 1).unwrap();
        let state = state_with_pending(&c, &w, &[(8, 0, 1)]);
        let none = BTreeSet::new();
        assert!(plan_evictions(5, 0, &state, EvictionPolicy::LargestFirst, &none).is_none());
    }

    #[test]
    fn tentative_rejects_evicted_input() {
        let w = wf(&[(1, 0), (1, 0)], &[(0, 1, 4)]);
        let c = cluster(&[(1.0, 100)], 1);
        let mut state = SchedulerState::new(&w, &c);
        state.placement[0] = Some(0);
        state.ft[0] = 1.0;
        state.st[0] = 0.0;
        // The file went to the buffer instead of staying in memory.
        state.buffer_pending[0].insert((4, 0, 1));
        state.avail_buf[0] -= 4;
        let cand = tentative_assign(1, 0, &state, &w, &c, EvictionPolicy::LargestFirst);
        assert!(!cand.feasible);
        assert_eq!(cand.finish, f64::INFINITY);
        assert_eq!(cand.reason, Some(InfeasibleReason::InputEvicted { src: 0 }));
    }

    #[test]
    fn tentative_source_task_times() {
        let w = wf(&[(6, 0)], &[]);
        let c = cluster(&[(2.0, 100)], 1);
        let state = SchedulerState::new(&w, &c);
        let cand = tentative_assign(0, 0, &state, &w, &c, EvictionPolicy::LargestFirst);
        assert_eq!(cand.start, 0.0);
        assert_eq!(cand.finish, 3.0);
    }

    #[test]
    fn tentative_remote_parent_arrival() {
        let w = wf(&[(1, 0), (4, 0)], &[(0, 1, 6)]);
        let c = cluster(&[(1.0, 100), (2.0, 100)], 2);
        let mut state = SchedulerState::new(&w, &c);
        state.placement[0] = Some(0);
        state.ft[0] = 10.0;
        state.st[0] = 9.0;
        state.pending[0].insert((6, 0, 1));
        state.avail_mem[0] -= 6;
        *state.link_rt_mut(0, 1) = 12.0;
        let cand = tentative_assign(1, 1, &state, &w, &c, EvictionPolicy::LargestFirst);
        // max(0, max(10, 12) + 6/2) = 15.
        assert_eq!(cand.start, 15.0);
        assert_eq!(cand.finish, 17.0);
    }

    #[test]
    fn commit_bookkeeping_chain() {
        let w = wf(&[(1, 0), (1, 0), (1, 0)], &[(0, 1, 4), (1, 2, 3)]);
        let c = cluster(&[(1.0, 10), (1.0, 10)], 2);
        let mut state = SchedulerState::new(&w, &c);

        // Source task with one 4-byte output on an empty processor.
        let cand = tentative_assign(0, 0, &state, &w, &c, EvictionPolicy::LargestFirst);
        commit_assign(&cand, &mut state, &w, &c);
        assert_eq!(state.avail_mem[0], 6);
        assert!(state.pending[0].contains(&(4, 0, 1)));

        // Child on the same processor: +4 back, then -3 for its own output.
        let cand = tentative_assign(1, 0, &state, &w, &c, EvictionPolicy::LargestFirst);
        commit_assign(&cand, &mut state, &w, &c);
        assert_eq!(state.avail_mem[0], 7);
        assert!(state.pending[0].contains(&(3, 1, 2)));

        // Grandchild on the remote processor: producer memory freed and the
        // link ready time advances by size / bandwidth.
        let cand = tentative_assign(2, 1, &state, &w, &c, EvictionPolicy::LargestFirst);
        commit_assign(&cand, &mut state, &w, &c);
        assert_eq!(state.avail_mem[0], 10);
        assert_eq!(state.link_rt(0, 1), 1.5);
        state.check_conservation(&c).unwrap();
    }

    #[test]
    fn heftm_reports_impossible_task() {
        let w = wf(&[(1, 1_000)], &[]);
        let c = cluster(&[(1.0, 10), (1.0, 20)], 1);
        let err = heftm_schedule(&w, &c, RankPolicy::Bl, EvictionPolicy::LargestFirst)
            .unwrap_err();
        assert_eq!(err.task, 0);
        assert_eq!(err.reasons.len(), 2);
    }

    #[test]
    fn heftm_prefers_faster_processor() {
        let w = wf(&[(10, 5)], &[]);
        let c = cluster(&[(1.0, 100), (2.0, 100)], 1);
        let s = heftm_schedule(&w, &c, RankPolicy::Bl, EvictionPolicy::LargestFirst).unwrap();
        assert_eq!(s.entries[0].proc, 1);
        assert_eq!(s.makespan, 5.0);
    }

    #[test]
    fn heftm_is_deterministic() {
        let w = wf(
            &[(5, 8), (3, 6), (7, 4), (2, 9), (4, 2)],
            &[(0, 2, 3), (0, 3, 2), (1, 3, 4), (2, 4, 1), (3, 4, 2)],
        );
        let c = cluster(&[(1.0, 30), (2.0, 25), (1.5, 40)], 3);
        let a = heftm_schedule(&w, &c, RankPolicy::Blc, EvictionPolicy::LargestFirst).unwrap();
        let b = heftm_schedule(&w, &c, RankPolicy::Blc, EvictionPolicy::LargestFirst).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn heftm_evicts_when_memory_is_tight() {
        // Two source tasks write files on the fast processor; a third task
        // needing almost all of its memory forces the largest file into the
        // buffer, and the file's consumer must then run remotely.
        let w = wf(
            &[(1, 2), (1, 2), (1, 90), (1, 1), (1, 1)],
            &[(0, 3, 6), (1, 4, 5)],
        );
        let c = cluster(&[(1.0, 100), (0.5, 20)], 1);
        let s = heftm_schedule(&w, &c, RankPolicy::Bl, EvictionPolicy::LargestFirst).unwrap();
        let evicted: Vec<_> = s
            .entries
            .iter()
            .flat_map(|e| e.evictions.iter().map(|f| (f.src, f.dst)))
            .collect();
        assert_eq!(evicted, vec![(0, 3)]);
        // The consumer of the evicted file cannot return to processor 0.
        let entry3 = s.entries.iter().find(|e| e.task == 3).unwrap();
        assert_eq!(entry3.proc, 1);
        let report = crate::validator::validate(&s, &w, &c);
        assert!(report.valid, "violations: {:?}", report.violations);
    }

    #[test]
    fn schedule_json_round_trip() {
        let w = wf(&[(5, 1), (3, 1)], &[(0, 1, 2)]);
        let c = cluster(&[(1.0, 50), (1.0, 50)], 1);
        let s = heftm_schedule(&w, &c, RankPolicy::Bl, EvictionPolicy::LargestFirst).unwrap();
        let again = Schedule::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(s, again);
    }
}
