//! Runtime simulation of schedule execution under parameter deviations.
//!
//! Estimated task parameters rarely survive contact with a real run. This
//! module samples actual weights around the estimates, replays a schedule
//! without recomputation (the runtime holds to the planned mapping and start
//! order, waiting on busy processors and idling when predecessors finish
//! early, and aborts on the first memory overrun), retraces a schedule after
//! reported changes, and runs the adaptive mode in which deviations trigger
//! retraces and full reschedules of the unstarted tasks.
//!
//! Revelation model: a task's actual memory becomes known when the task is
//! ready, a file's actual size when its producer finishes writing it, and a
//! task's actual work only once it completes. The scheduler side of the
//! simulation only ever sees revealed values; the physical side always uses
//! the actuals.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::platform::{Cluster, ProcId};
use crate::ranking::{bottom_level, rank_order, RankPolicy};
use crate::scheduler::{greedy_assign, EvictionPolicy, Schedule, ScheduleEntry, SchedulerState};
use crate::workflow::{EdgeFile, TaskId, Workflow};

/// Which quantities deviate and by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationModel {
    /// Standard deviation as a fraction of the estimate.
    pub relative_std: f64,
    pub targets: DeviationTargets,
    pub seed: u64,
    /// Samples are clamped below at this fraction of the estimate.
    pub clamp_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationTargets {
    pub work: bool,
    pub mem: bool,
    pub edge: bool,
}

impl Default for DeviationTargets {
    fn default() -> Self {
        // Running times and memory requirements deviate; edge sizes only if
        // explicitly enabled.
        DeviationTargets {
            work: true,
            mem: true,
            edge: false,
        }
    }
}

impl Default for DeviationModel {
    fn default() -> Self {
        DeviationModel {
            relative_std: 0.10,
            targets: DeviationTargets::default(),
            seed: 0,
            clamp_floor: 0.01,
        }
    }
}

/// Actual weights of one simulated execution. `edge` is indexed like
/// [`Workflow::edges`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActualWeights {
    pub work: Vec<u64>,
    pub mem: Vec<u64>,
    pub edge: Vec<u64>,
}

impl ActualWeights {
    pub fn from_estimates(w: &Workflow) -> Self {
        ActualWeights {
            work: w.tasks().iter().map(|t| t.work).collect(),
            mem: w.tasks().iter().map(|t| t.mem).collect(),
            edge: w.edges().iter().map(|e| e.size).collect(),
        }
    }

    /// The workflow reweighted with these actuals.
    pub fn materialize(&self, w: &Workflow) -> Workflow {
        w.with_weights(&self.work, &self.mem, &self.edge)
    }
}

/// Draws actual weights: independent normal samples with the estimate as
/// mean and `relative_std * estimate` as deviation, clamped below and
/// rounded to whole units. Draw order is tasks by id (work then mem), then
/// edges in edge order, so adding edges never perturbs the task draws.
pub fn sample_actuals(w: &Workflow, d: &DeviationModel) -> ActualWeights {
    let mut actual = ActualWeights::from_estimates(w);
    if d.relative_std == 0.0 {
        return actual;
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(d.seed);
    let mut draw = |est: u64| -> u64 {
        if est == 0 {
            return 0;
        }
        let mean = est as f64;
        let normal = Normal::new(mean, d.relative_std * mean).expect("std is finite");
        let sampled = normal.sample(&mut rng).max(d.clamp_floor * mean);
        (sampled.round() as u64).max(1)
    };
    for t in w.tasks() {
        if d.targets.work {
            actual.work[t.id as usize] = draw(t.work);
        }
        if d.targets.mem {
            actual.mem[t.id as usize] = draw(t.mem);
        }
    }
    if d.targets.edge {
        for (i, e) in w.edges().iter().enumerate() {
            actual.edge[i] = draw(e.size);
        }
    }
    actual
}

/// A sparse weight overlay: what the scheduler has learned so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialWeights {
    pub work: BTreeMap<TaskId, u64>,
    pub mem: BTreeMap<TaskId, u64>,
    pub edge: BTreeMap<(TaskId, TaskId), u64>,
}

impl PartialWeights {
    pub fn is_empty(&self) -> bool {
        self.work.is_empty() && self.mem.is_empty() && self.edge.is_empty()
    }

    /// Estimates overlaid with every revealed value.
    pub fn apply(&self, w: &Workflow) -> Workflow {
        let mut work: Vec<u64> = w.tasks().iter().map(|t| t.work).collect();
        let mut mem: Vec<u64> = w.tasks().iter().map(|t| t.mem).collect();
        let mut edge: Vec<u64> = w.edges().iter().map(|e| e.size).collect();
        for (&t, &v) in &self.work {
            work[t as usize] = v;
        }
        for (&t, &v) in &self.mem {
            mem[t as usize] = v;
        }
        if !self.edge.is_empty() {
            for (i, e) in w.edges().iter().enumerate() {
                if let Some(&v) = self.edge.get(&(e.src, e.dst)) {
                    edge[i] = v;
                }
            }
        }
        w.with_weights(&work, &mem, &edge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    OutOfMemory,
    BufferOverflow,
    SchedulingFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFailure {
    pub cause: FailureCause,
    pub task: TaskId,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    Finish,
    OutOfMemory,
    BufferOverflow,
    Reschedule,
    SchedulingFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: f64,
    pub kind: EventKind,
    pub task: Option<TaskId>,
    pub proc: Option<ProcId>,
}

/// Result of one simulated execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub valid: bool,
    pub makespan: f64,
    pub failure: Option<SimFailure>,
    pub recompute_count: u32,
    pub events: Vec<SimEvent>,
}

impl SimOutcome {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("outcome serialization cannot fail")
    }
}

/// One event per line, for `events/*.jsonl` files.
pub fn events_jsonl(events: &[SimEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serialization cannot fail"));
        out.push('\n');
    }
    out
}

fn failure_event_kind(cause: FailureCause) -> EventKind {
    match cause {
        FailureCause::OutOfMemory => EventKind::OutOfMemory,
        FailureCause::BufferOverflow => EventKind::BufferOverflow,
        FailureCause::SchedulingFailure => EventKind::SchedulingFailure,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Loc {
    Mem(ProcId),
    Buf(ProcId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetraceReason {
    LostProcessor(ProcId),
    MemoryExceeded(TaskId),
    BufferExceeded(TaskId),
}

/// Replays a schedule's structure (placements, commit order, evictions)
/// under the given weights: scheduler-style bookkeeping plus recomputed
/// start and finish times. Shared by [`retrace`] and the adaptive engine.
///
/// The walk always completes; every memory or buffer breach is collected
/// with its entry position so callers can distinguish breaches at tasks
/// that already ran (retrospective, after late size revelations) from
/// breaches at tasks whose placement can still change.
struct PlanReplay {
    reason: Option<RetraceReason>,
    /// `(entry index, breaching task, reason)` in entry order.
    breaches: Vec<(usize, TaskId, RetraceReason)>,
    st: Vec<f64>,
    ft: Vec<f64>,
}

impl PlanReplay {
    fn valid(&self) -> bool {
        self.reason.is_none() && self.breaches.is_empty()
    }
}

fn replay_schedule(
    s: &Schedule,
    w_eff: &Workflow,
    c: &Cluster,
    lost: &BTreeSet<ProcId>,
) -> PlanReplay {
    replay_schedule_forced(s, w_eff, c, lost, None)
}

/// `forced_buffered` names files that the runtime moved straight into the
/// communication buffer outside any schedule entry (residency normalization
/// at a reschedule); the replay produces them into the buffer so its books
/// agree with the physical state.
fn replay_schedule_forced(
    s: &Schedule,
    w_eff: &Workflow,
    c: &Cluster,
    lost: &BTreeSet<ProcId>,
    forced_buffered: Option<&std::collections::HashSet<(TaskId, TaskId)>>,
) -> PlanReplay {
    let n = w_eff.n_tasks();
    let k = c.k();
    let mut replay = PlanReplay {
        reason: None,
        breaches: Vec::new(),
        st: vec![f64::NAN; n],
        ft: vec![f64::NAN; n],
    };

    if !lost.is_empty() {
        for e in &s.entries {
            if lost.contains(&e.proc) {
                replay.reason = Some(RetraceReason::LostProcessor(e.proc));
                return replay;
            }
        }
    }

    let beta = c.bandwidth() as f64;
    let size_of = |src: TaskId, dst: TaskId| -> u64 {
        w_eff
            .out_edges(src)
            .find(|e| e.dst == dst)
            .map(|e| e.size)
            .unwrap_or(0)
    };

    let mut avail_mem: Vec<i128> = c.processors().iter().map(|p| p.memory as i128).collect();
    let mut avail_buf: Vec<i128> = c.processors().iter().map(|p| p.buffer as i128).collect();
    let mut loc: HashMap<(TaskId, TaskId), Loc> = HashMap::new();
    let mut rt = vec![0.0f64; k];
    let mut link_rt = vec![0.0f64; k * k];
    let mut placed: Vec<Option<ProcId>> = vec![None; n];

    for (idx, entry) in s.entries.iter().enumerate() {
        let v = entry.task;
        let p = entry.proc;
        let pi = p as usize;

        // Step 2 under the new weights. An entry without evictions had
        // non-negative slack originally and must keep it; an entry with
        // evictions must still fit them into the buffer.
        let mut res = avail_mem[pi] - w_eff.task(v).mem as i128;
        for e in w_eff.in_edges(v) {
            if placed[e.src as usize] != Some(p) {
                res -= e.size as i128;
            }
        }
        res -= w_eff.total_out(v) as i128;

        if entry.evictions.is_empty() {
            if res < 0 {
                replay
                    .breaches
                    .push((idx, v, RetraceReason::MemoryExceeded(v)));
            }
        } else {
            let freed: i128 = entry
                .evictions
                .iter()
                .map(|f| size_of(f.src, f.dst) as i128)
                .sum();
            if freed > avail_buf[pi] {
                replay
                    .breaches
                    .push((idx, v, RetraceReason::BufferExceeded(v)));
            }
            for f in &entry.evictions {
                if loc.get(&(f.src, f.dst)) == Some(&Loc::Mem(p)) {
                    let size = size_of(f.src, f.dst) as i128;
                    loc.insert((f.src, f.dst), Loc::Buf(p));
                    avail_mem[pi] += size;
                    avail_buf[pi] -= size;
                }
            }
        }

        // Consume inputs, produce outputs.
        for e in w_eff.in_edges(v) {
            let size = size_of(e.src, v) as i128;
            match loc.remove(&(e.src, v)) {
                Some(Loc::Mem(q)) => avail_mem[q as usize] += size,
                Some(Loc::Buf(q)) => avail_buf[q as usize] += size,
                None => {}
            }
        }
        for e in w_eff.out_edges(v) {
            if forced_buffered.is_some_and(|f| f.contains(&(v, e.dst))) {
                loc.insert((v, e.dst), Loc::Buf(p));
                avail_buf[pi] -= e.size as i128;
            } else {
                loc.insert((v, e.dst), Loc::Mem(p));
                avail_mem[pi] -= e.size as i128;
            }
        }

        // Step 3 timing under the new weights.
        let mut st = rt[pi];
        for e in w_eff.in_edges(v) {
            if let Some(q) = placed[e.src as usize] {
                if q != p {
                    let arrival = replay.ft[e.src as usize].max(link_rt[q as usize * k + pi])
                        + e.size as f64 / beta;
                    st = st.max(arrival);
                }
            }
        }
        let ft = st + w_eff.task(v).work as f64 / c.proc(p).speed;
        rt[pi] = ft;
        for e in w_eff.in_edges(v) {
            if let Some(q) = placed[e.src as usize] {
                if q != p {
                    link_rt[q as usize * k + pi] += e.size as f64 / beta;
                }
            }
        }
        replay.st[v as usize] = st;
        replay.ft[v as usize] = ft;
        placed[v as usize] = Some(p);
    }
    replay
}

/// Outcome of retracing a schedule after reported changes.
#[derive(Debug, Clone)]
pub struct RetraceOutcome {
    pub valid: bool,
    /// Recomputed finish times per task; meaningful when `valid`.
    pub new_ft: Vec<f64>,
    pub reason: Option<RetraceReason>,
}

/// Re-assesses an existing schedule after some weights changed or
/// processors were lost, without re-placing any task.
///
/// A lost processor that hosts at least one task invalidates the schedule
/// outright. Otherwise tasks are replayed in schedule order: entries that
/// originally needed no eviction must keep non-negative memory slack,
/// entries with evictions must still fit them into the communication
/// buffer, and every finish time is recomputed from the changed values.
pub fn retrace(
    s: &Schedule,
    w: &Workflow,
    c: &Cluster,
    changes: &PartialWeights,
    lost: &BTreeSet<ProcId>,
) -> RetraceOutcome {
    let replay = if changes.is_empty() {
        replay_schedule(s, w, c, lost)
    } else {
        replay_schedule(s, &changes.apply(w), c, lost)
    };
    RetraceOutcome {
        valid: replay.valid(),
        reason: replay
            .reason
            .or_else(|| replay.breaches.first().map(|&(_, _, r)| r)),
        new_ft: replay.ft,
    }
}

/// Replays a schedule under actual weights without ever recomputing it.
///
/// The runtime keeps the task-processor mapping and the per-processor
/// order, never starts a task before its planned time (early predecessors
/// leave the processor idle), waits for busy processors and late inputs,
/// and stops with `out_of_memory` the first time actual transient usage
/// exceeds a processor's memory (or `buffer_overflow` when the planned
/// evictions no longer fit).
///
/// Expects a schedule that is valid under the estimated weights.
pub fn simulate_no_recompute(
    s: &Schedule,
    w: &Workflow,
    c: &Cluster,
    a: &ActualWeights,
) -> SimOutcome {
    let w_act = a.materialize(w);
    let k = c.k();
    let beta = c.bandwidth() as f64;
    let size_of = |src: TaskId, dst: TaskId| -> u64 {
        w_act
            .out_edges(src)
            .find(|e| e.dst == dst)
            .map(|e| e.size)
            .unwrap_or(0)
    };

    let mut rt = vec![0.0f64; k];
    let mut link_rt = vec![0.0f64; k * k];
    let mut mem_used = vec![0u128; k];
    let mut buf_used = vec![0u128; k];
    let mut loc: HashMap<(TaskId, TaskId), Loc> = HashMap::new();
    let mut placed: Vec<Option<ProcId>> = vec![None; w.n_tasks()];
    let mut st_act = vec![f64::NAN; w.n_tasks()];
    let mut ft_act = vec![f64::NAN; w.n_tasks()];
    let mut failure: Option<SimFailure> = None;

    for entry in &s.entries {
        let v = entry.task;
        let p = entry.proc;
        let pi = p as usize;

        // Actual start: never before the plan, the processor, or the data.
        let mut st = entry.start.max(rt[pi]);
        for e in w_act.in_edges(v) {
            if let Some(q) = placed[e.src as usize] {
                if q != p {
                    let arrival = ft_act[e.src as usize].max(link_rt[q as usize * k + pi])
                        + e.size as f64 / beta;
                    st = st.max(arrival);
                }
            }
        }

        let record_failure = |cause: FailureCause, fail: &mut Option<SimFailure>| {
            let earlier = fail
                .as_ref()
                .is_none_or(|f| st < f.time || (st == f.time && v < f.task));
            if earlier {
                *fail = Some(SimFailure {
                    cause,
                    task: v,
                    time: st,
                });
            }
        };

        // Planned evictions, at their actual sizes.
        for f in &entry.evictions {
            if loc.get(&(f.src, f.dst)) == Some(&Loc::Mem(p)) {
                let size = size_of(f.src, f.dst) as u128;
                loc.insert((f.src, f.dst), Loc::Buf(p));
                mem_used[pi] -= size;
                buf_used[pi] += size;
            }
        }
        if buf_used[pi] > c.proc(p).buffer as u128 {
            record_failure(FailureCause::BufferOverflow, &mut failure);
        }

        // Transient memory while v runs: resident files (its own local
        // inputs among them), its memory, remote inputs, outputs.
        let mut remote_in: u128 = 0;
        for e in w_act.in_edges(v) {
            if placed[e.src as usize] != Some(p) {
                remote_in += e.size as u128;
            }
        }
        let transient =
            mem_used[pi] + w_act.task(v).mem as u128 + remote_in + w_act.total_out(v) as u128;
        if transient > c.proc(p).memory as u128 {
            record_failure(FailureCause::OutOfMemory, &mut failure);
        }

        // Consume inputs, produce outputs, advance times.
        for e in w_act.in_edges(v) {
            let size = size_of(e.src, v) as u128;
            match loc.remove(&(e.src, v)) {
                Some(Loc::Mem(q)) => mem_used[q as usize] -= size,
                Some(Loc::Buf(q)) => buf_used[q as usize] -= size,
                None => {}
            }
        }
        for e in w_act.out_edges(v) {
            loc.insert((v, e.dst), Loc::Mem(p));
            mem_used[pi] += e.size as u128;
        }
        let ft = st + w_act.task(v).work as f64 / c.proc(p).speed;
        rt[pi] = ft;
        for e in w_act.in_edges(v) {
            if let Some(q) = placed[e.src as usize] {
                if q != p {
                    link_rt[q as usize * k + pi] += e.size as f64 / beta;
                }
            }
        }
        st_act[v as usize] = st;
        ft_act[v as usize] = ft;
        placed[v as usize] = Some(p);
    }

    // The temporally first failure stops the execution; nothing after it
    // appears in the log.
    let mut events = Vec::new();
    let horizon = failure.as_ref().map(|f| f.time);
    for entry in &s.entries {
        let v = entry.task;
        if failure.as_ref().is_some_and(|f| f.task == v) {
            continue;
        }
        let (st, ft) = (st_act[v as usize], ft_act[v as usize]);
        if st.is_nan() {
            continue;
        }
        if horizon.is_none_or(|h| st <= h) {
            events.push(SimEvent {
                t: st,
                kind: EventKind::Start,
                task: Some(v),
                proc: Some(entry.proc),
            });
        }
        if horizon.is_none_or(|h| ft <= h) {
            events.push(SimEvent {
                t: ft,
                kind: EventKind::Finish,
                task: Some(v),
                proc: Some(entry.proc),
            });
        }
    }
    if let Some(f) = &failure {
        let proc = s.entries.iter().find(|e| e.task == f.task).map(|e| e.proc);
        events.push(SimEvent {
            t: f.time,
            kind: failure_event_kind(f.cause),
            task: Some(f.task),
            proc,
        });
    }
    events.sort_by(|a, b| {
        (a.t, event_rank(a.kind), a.task)
            .partial_cmp(&(b.t, event_rank(b.kind), b.task))
            .expect("event times are finite")
    });

    match failure {
        Some(f) => SimOutcome {
            valid: false,
            makespan: f.time,
            failure: Some(f),
            recompute_count: 0,
            events,
        },
        None => SimOutcome {
            valid: true,
            makespan: ft_act.iter().copied().fold(0.0, f64::max),
            failure: None,
            recompute_count: 0,
            events,
        },
    }
}

fn event_rank(kind: EventKind) -> u8 {
    match kind {
        EventKind::Finish => 0,
        EventKind::Start => 1,
        _ => 2,
    }
}

/// Which scheduler the adaptive engine recomputes with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EngineAlgorithm {
    Heft,
    Heftm(RankPolicy),
}

/// Simulates the adaptive mode: an initial schedule from estimates, then an
/// event loop in which deviations trigger retraces and reschedules.
///
/// Triggers: a task starting later than planned (blocked processor or
/// unfinished predecessor) retraces the plan and reschedules only if the
/// retrace reports it invalid; insufficient memory at a task's start always
/// reschedules; a task finishing more than 10% earlier than expected
/// reschedules to exploit the freed time. Rescheduling re-places all
/// unstarted tasks with the same rank policy, pinning running tasks and
/// keeping resident and evicted files where they are. The outcome is
/// invalid only if the initial schedule or a reschedule fails, or if the
/// same task still cannot fit immediately after a memory-triggered
/// reschedule.
pub fn simulate_with_recompute(
    w: &Workflow,
    c: &Cluster,
    policy: RankPolicy,
    ev: EvictionPolicy,
    a: &ActualWeights,
) -> SimOutcome {
    simulate_with_recompute_algorithm(w, c, EngineAlgorithm::Heftm(policy), ev, a)
}

pub(crate) fn simulate_with_recompute_algorithm(
    w: &Workflow,
    c: &Cluster,
    algo: EngineAlgorithm,
    ev: EvictionPolicy,
    a: &ActualWeights,
) -> SimOutcome {
    Engine::new(w, c, algo, ev, a).run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Unstarted,
    Running,
    Done,
}

struct Engine<'a> {
    w: &'a Workflow,
    c: &'a Cluster,
    algo: EngineAlgorithm,
    ev: EvictionPolicy,
    act: &'a ActualWeights,
    w_act: Workflow,
    k: usize,

    revealed: PartialWeights,

    // Current plan: executed prefix plus the planned tail.
    exec_entries: Vec<ScheduleEntry>,
    tail_entries: Vec<ScheduleEntry>,
    plan_st: Vec<f64>,
    plan_ft: Vec<f64>,
    plan_proc: Vec<Option<ProcId>>,
    plan_evictions: Vec<Vec<EdgeFile>>,
    queues: Vec<VecDeque<TaskId>>,

    // Physical state.
    status: Vec<Status>,
    start_act: Vec<f64>,
    ft_act: Vec<f64>,
    running_on: Vec<Option<TaskId>>,
    file_loc: HashMap<(TaskId, TaskId), Loc>,
    link_phys: Vec<f64>,
    unfinished_parents: Vec<usize>,
    now: f64,
    n_done: usize,

    events: Vec<SimEvent>,
    recompute_count: u32,
    last_memory_trigger: Option<TaskId>,
    pending_failure: Option<SimFailure>,
    /// Files moved into buffers by residency normalization, outside any
    /// schedule entry.
    forced_buffered: std::collections::HashSet<(TaskId, TaskId)>,
}

impl<'a> Engine<'a> {
    fn new(
        w: &'a Workflow,
        c: &'a Cluster,
        algo: EngineAlgorithm,
        ev: EvictionPolicy,
        act: &'a ActualWeights,
    ) -> Self {
        let n = w.n_tasks();
        let k = c.k();
        Engine {
            w,
            c,
            algo,
            ev,
            act,
            w_act: act.materialize(w),
            k,
            revealed: PartialWeights::default(),
            exec_entries: Vec::new(),
            tail_entries: Vec::new(),
            plan_st: vec![f64::NAN; n],
            plan_ft: vec![f64::NAN; n],
            plan_proc: vec![None; n],
            plan_evictions: vec![Vec::new(); n],
            queues: vec![VecDeque::new(); k],
            status: vec![Status::Unstarted; n],
            start_act: vec![f64::NAN; n],
            ft_act: vec![f64::NAN; n],
            running_on: vec![None; k],
            file_loc: HashMap::new(),
            link_phys: vec![0.0; k * k],
            unfinished_parents: (0..n).map(|u| w.in_edges(u as TaskId).count()).collect(),
            now: 0.0,
            n_done: 0,
            events: Vec::new(),
            recompute_count: 0,
            last_memory_trigger: None,
            pending_failure: None,
            forced_buffered: std::collections::HashSet::new(),
        }
    }

    fn run(mut self) -> SimOutcome {
        let initial = match self.algo {
            EngineAlgorithm::Heft => Ok(crate::scheduler::heft_schedule(
                self.w,
                self.c,
                &bottom_level(self.w),
            )),
            EngineAlgorithm::Heftm(policy) => {
                crate::scheduler::heftm_schedule(self.w, self.c, policy, self.ev)
            }
        };
        match initial {
            Ok(s) => self.adopt_tail(s.entries),
            Err(fail) => {
                self.pending_failure = Some(SimFailure {
                    cause: FailureCause::SchedulingFailure,
                    task: fail.task,
                    time: 0.0,
                });
            }
        }
        for u in 0..self.w.n_tasks() as TaskId {
            if self.unfinished_parents[u as usize] == 0 {
                self.reveal_ready(u);
            }
        }

        loop {
            if let Some(f) = self.pending_failure.take() {
                self.events.push(SimEvent {
                    t: f.time,
                    kind: failure_event_kind(f.cause),
                    task: Some(f.task),
                    proc: self.plan_proc[f.task as usize],
                });
                return SimOutcome {
                    valid: false,
                    makespan: f.time,
                    failure: Some(f),
                    recompute_count: self.recompute_count,
                    events: self.events,
                };
            }
            if self.n_done == self.w.n_tasks() {
                let makespan = self.ft_act.iter().copied().fold(0.0, f64::max);
                return SimOutcome {
                    valid: true,
                    makespan,
                    failure: None,
                    recompute_count: self.recompute_count,
                    events: self.events,
                };
            }

            let mut next_finish: Option<f64> = None;
            for p in 0..self.k {
                if let Some(u) = self.running_on[p] {
                    let t = self.ft_act[u as usize];
                    if next_finish.is_none_or(|bt| t < bt) {
                        next_finish = Some(t);
                    }
                }
            }
            let mut next_start: Option<(f64, ProcId, TaskId)> = None;
            for p in 0..self.k {
                if self.running_on[p].is_some() {
                    continue;
                }
                let Some(&v) = self.queues[p].front() else {
                    continue;
                };
                if self.unfinished_parents[v as usize] > 0 {
                    continue;
                }
                let est = self.earliest_start(v, p as ProcId);
                if next_start.is_none_or(|(bt, _, _)| est < bt) {
                    next_start = Some((est, p as ProcId, v));
                }
            }

            match (next_finish, next_start) {
                (Some(tf), Some((ts, p, v))) if ts < tf => self.attempt_start(ts, p, v),
                (None, Some((ts, p, v))) => self.attempt_start(ts, p, v),
                (Some(tf), _) => self.process_finishes(tf),
                (None, None) => {
                    unreachable!("tasks pending but nothing can run: plan corrupted")
                }
            }
        }
    }

    fn reveal_ready(&mut self, v: TaskId) {
        self.revealed.mem.insert(v, self.act.mem[v as usize]);
    }

    fn reveal_finished(&mut self, u: TaskId) {
        self.revealed.work.insert(u, self.act.work[u as usize]);
        // File sizes are measured as the files are written.
        for (i, e) in self.w.edges().iter().enumerate() {
            if e.src == u {
                self.revealed.edge.insert((e.src, e.dst), self.act.edge[i]);
            }
        }
    }

    fn earliest_start(&self, v: TaskId, p: ProcId) -> f64 {
        let beta = self.c.bandwidth() as f64;
        let mut est = self.plan_st[v as usize].max(self.now);
        for e in self.w_act.in_edges(v) {
            let u = e.src as usize;
            let q = self.plan_proc[u].expect("parents of ready tasks are placed");
            if q != p {
                let arrival = self.ft_act[u].max(self.link_phys[q as usize * self.k + p as usize])
                    + e.size as f64 / beta;
                est = est.max(arrival);
            }
        }
        est
    }

    fn process_finishes(&mut self, t: f64) {
        self.now = t;
        let mut early_finishers = Vec::new();
        for p in 0..self.k {
            let Some(u) = self.running_on[p] else { continue };
            if self.ft_act[u as usize] != t {
                continue;
            }
            self.running_on[p] = None;
            self.status[u as usize] = Status::Done;
            self.n_done += 1;
            self.reveal_finished(u);
            self.events.push(SimEvent {
                t,
                kind: EventKind::Finish,
                task: Some(u),
                proc: Some(p as ProcId),
            });
            for e in self.w.out_edges(u) {
                let x = e.dst as usize;
                self.unfinished_parents[x] -= 1;
                if self.unfinished_parents[x] == 0 {
                    self.reveal_ready(e.dst);
                }
            }
            // Issue class 4: more than 10% faster than expected.
            let expected = self.w.task(u).work as f64;
            let actual = self.act.work[u as usize] as f64;
            if actual < 0.9 * expected {
                early_finishers.push(u);
            }
        }
        for u in early_finishers {
            if self.pending_failure.is_some() {
                return;
            }
            if self.has_unstarted() {
                // Exploit the freed time: retrace, then re-place the
                // unstarted tasks.
                let _ = self.run_retrace();
                self.reschedule(u, t);
            }
        }
    }

    fn has_unstarted(&self) -> bool {
        self.status.contains(&Status::Unstarted)
    }

    fn attempt_start(&mut self, t: f64, p: ProcId, v: TaskId) {
        self.now = t;
        let pi = p as usize;
        let vi = v as usize;

        // Memory gate, in the model's commit-order accounting: retrace the
        // current plan under everything revealed and look for a breach at
        // or before this task's entry. Breaches at tasks that already ran
        // are retrospective (their output sizes were revealed after their
        // own start check) and cannot be replanned, so they are tolerated.
        let (replay, positions) = self.plan_replay();
        let v_pos = positions[vi];
        let gate = replay.breaches.iter().find(|&&(idx, task, _)| {
            idx <= v_pos && self.status[task as usize] == Status::Unstarted
        });
        if let Some(&(_, breach_task, reason)) = gate {
            let cause = match reason {
                RetraceReason::BufferExceeded(_) => FailureCause::BufferOverflow,
                _ => FailureCause::OutOfMemory,
            };
            self.memory_trigger(t, breach_task, cause);
            return;
        }

        // Start for real: evictions, input consumption, output production.
        let planned_ev = self.plan_evictions[vi].clone();
        for f in &planned_ev {
            if self.file_loc.get(&(f.src, f.dst)) == Some(&Loc::Mem(p)) {
                self.file_loc.insert((f.src, f.dst), Loc::Buf(p));
            }
        }
        let beta = self.c.bandwidth() as f64;
        for e in self.w_act.in_edges(v) {
            self.file_loc.remove(&(e.src, v));
            let q = self.plan_proc[e.src as usize].expect("parents placed");
            if q != p {
                self.link_phys[q as usize * self.k + pi] += e.size as f64 / beta;
            }
        }
        for e in self.w_act.out_edges(v) {
            self.file_loc.insert((v, e.dst), Loc::Mem(p));
        }

        self.status[vi] = Status::Running;
        self.start_act[vi] = t;
        self.ft_act[vi] = t + self.act.work[vi] as f64 / self.c.proc(p).speed;
        self.running_on[pi] = Some(v);
        self.queues[pi].pop_front();
        self.exec_entries.push(ScheduleEntry {
            task: v,
            proc: p,
            start: t,
            finish: self.ft_act[vi],
            evictions: planned_ev,
        });
        self.tail_entries.retain(|e| e.task != v);
        self.events.push(SimEvent {
            t,
            kind: EventKind::Start,
            task: Some(v),
            proc: Some(p),
        });
        self.last_memory_trigger = None;

        // Issue classes 1 and 2: started later than planned because the
        // processor was blocked or a predecessor was late. The retrace just
        // ran; adopt its times, and reschedule only if the plan no longer
        // holds together for the unstarted tasks.
        if t > self.plan_st[vi] {
            let clean = self.adopt_times(&replay);
            if !clean && self.has_unstarted() {
                self.reschedule(v, t);
            }
        }
    }

    /// Issue class 3: a task cannot fit right now. The retrace verdict is
    /// moot — always reschedule with the revealed values. A repeat for the
    /// same task right after such a reschedule means even updated knowledge
    /// cannot place it.
    fn memory_trigger(&mut self, t: f64, v: TaskId, cause: FailureCause) {
        if self.last_memory_trigger == Some(v) {
            self.pending_failure = Some(SimFailure {
                cause,
                task: v,
                time: t,
            });
            return;
        }
        self.last_memory_trigger = Some(v);
        self.reschedule(v, t);
    }

    /// Replays the current plan under everything revealed so far. Returns
    /// the replay plus each task's entry position in the plan.
    fn plan_replay(&self) -> (PlanReplay, Vec<usize>) {
        let mut entries = self.exec_entries.clone();
        entries.extend(self.tail_entries.iter().cloned());
        let mut positions = vec![usize::MAX; self.w.n_tasks()];
        for (i, e) in entries.iter().enumerate() {
            positions[e.task as usize] = i;
        }
        let plan = Schedule::from_entries(entries);
        let w_eff = self.revealed.apply(self.w);
        (
            replay_schedule_forced(
                &plan,
                &w_eff,
                self.c,
                &BTreeSet::new(),
                Some(&self.forced_buffered),
            ),
            positions,
        )
    }

    /// Adopts retraced plan times; true when the plan has no breach at any
    /// unstarted task.
    fn adopt_times(&mut self, replay: &PlanReplay) -> bool {
        for u in 0..self.w.n_tasks() {
            if !replay.st[u].is_nan() {
                self.plan_st[u] = replay.st[u];
                self.plan_ft[u] = replay.ft[u];
            }
        }
        replay
            .breaches
            .iter()
            .all(|&(_, task, _)| self.status[task as usize] != Status::Unstarted)
    }

    /// Retraces the current plan and adopts its times; true when clean for
    /// every unstarted task.
    fn run_retrace(&mut self) -> bool {
        let (replay, _) = self.plan_replay();
        self.adopt_times(&replay)
    }

    fn adopt_tail(&mut self, entries: Vec<ScheduleEntry>) {
        for q in &mut self.queues {
            q.clear();
        }
        self.tail_entries = entries;
        for e in &self.tail_entries {
            let i = e.task as usize;
            self.plan_st[i] = e.start;
            self.plan_ft[i] = e.finish;
            self.plan_proc[i] = Some(e.proc);
            self.plan_evictions[i] = e.evictions.clone();
            self.queues[e.proc as usize].push_back(e.task);
        }
    }

    /// Rebuilds the schedule for every unstarted task, pinning what already
    /// ran; a failure here ends the simulation.
    fn reschedule(&mut self, trigger: TaskId, t: f64) {
        self.recompute_count += 1;
        self.events.push(SimEvent {
            t,
            kind: EventKind::Reschedule,
            task: Some(trigger),
            proc: None,
        });

        let w_eff = self.revealed.apply(self.w);
        if let Some(overflow_proc) = self.normalize_residency(&w_eff) {
            self.pending_failure = Some(SimFailure {
                cause: FailureCause::BufferOverflow,
                task: trigger,
                time: t,
            });
            let _ = overflow_proc;
            return;
        }
        let order_all = match self.algo {
            EngineAlgorithm::Heft => bottom_level(&w_eff).order,
            EngineAlgorithm::Heftm(policy) => rank_order(&w_eff, policy).order,
        };
        let remaining: Vec<TaskId> = order_all
            .into_iter()
            .filter(|&u| self.status[u as usize] == Status::Unstarted)
            .collect();

        let mut state = self.seed_state(&w_eff, t);
        let memory_aware = matches!(self.algo, EngineAlgorithm::Heftm(_));
        match greedy_assign(&w_eff, self.c, self.ev, &mut state, &remaining, memory_aware) {
            Ok(entries) => self.adopt_tail(entries),
            Err(fail) => {
                self.pending_failure = Some(SimFailure {
                    cause: FailureCause::SchedulingFailure,
                    task: fail.task,
                    time: t,
                });
            }
        }
    }

    /// The frozen prefix can hold more file bytes than a processor's memory:
    /// the plan freed a producer-side file at its consumer's commit, but the
    /// consumer has not started and is about to be replanned. Evict files
    /// (largest first) into the communication buffer until every memory fits
    /// again; returns the processor that overflowed if a buffer cannot take
    /// the spill.
    fn normalize_residency(&mut self, w_eff: &Workflow) -> Option<ProcId> {
        let size_of = |src: TaskId, dst: TaskId| -> u64 {
            w_eff
                .out_edges(src)
                .find(|e| e.dst == dst)
                .map(|e| e.size)
                .unwrap_or(0)
        };
        let mut mem_total = vec![0u128; self.k];
        let mut buf_total = vec![0u128; self.k];
        for (&(src, dst), &loc) in &self.file_loc {
            match loc {
                Loc::Mem(q) => mem_total[q as usize] += size_of(src, dst) as u128,
                Loc::Buf(q) => buf_total[q as usize] += size_of(src, dst) as u128,
            }
        }
        for q in 0..self.k {
            let capacity = self.c.proc(q as ProcId).memory as u128;
            if mem_total[q] <= capacity {
                continue;
            }
            let mut resident: Vec<(u64, TaskId, TaskId)> = self
                .file_loc
                .iter()
                .filter(|&(_, &loc)| loc == Loc::Mem(q as ProcId))
                .map(|(&(src, dst), _)| (size_of(src, dst), src, dst))
                .collect();
            resident.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            for (size, src, dst) in resident {
                if mem_total[q] <= capacity {
                    break;
                }
                self.file_loc.insert((src, dst), Loc::Buf(q as ProcId));
                self.forced_buffered.insert((src, dst));
                mem_total[q] -= size as u128;
                buf_total[q] += size as u128;
            }
            if buf_total[q] > self.c.proc(q as ProcId).buffer as u128 {
                return Some(q as ProcId);
            }
        }
        None
    }

    /// Scheduler knowledge of the world at time `t`, as a seeded state:
    /// committed bookkeeping for everything done or running, ready times
    /// floored at `t`.
    fn seed_state(&self, w_eff: &Workflow, t: f64) -> SchedulerState {
        let mut state = SchedulerState::new(w_eff, self.c);
        for p in 0..self.k {
            state.rt[p] = match self.running_on[p] {
                Some(u) => {
                    // Still estimate-based: its actual work is unrevealed.
                    let st = self.start_act[u as usize];
                    let knowledge =
                        st + w_eff.task(u).work as f64 / self.c.proc(p as ProcId).speed;
                    knowledge.max(t)
                }
                None => t,
            };
        }
        for from in 0..self.k {
            for to in 0..self.k {
                *state.link_rt_mut(from as ProcId, to as ProcId) =
                    self.link_phys[from * self.k + to];
            }
        }
        for u in 0..self.w.n_tasks() {
            match self.status[u] {
                Status::Done => {
                    state.placement[u] = self.plan_proc[u];
                    state.st[u] = self.start_act[u];
                    state.ft[u] = self.ft_act[u];
                }
                Status::Running => {
                    let p = self.plan_proc[u].expect("running tasks are placed");
                    state.placement[u] = Some(p);
                    state.st[u] = self.start_act[u];
                    state.ft[u] = state.rt[p as usize];
                }
                Status::Unstarted => {}
            }
        }
        // Live files at the sizes the scheduler knows; producers finished,
        // so the sizes were measured at production and match the actuals.
        for (&(src, dst), &loc) in &self.file_loc {
            let size = w_eff
                .out_edges(src)
                .find(|e| e.dst == dst)
                .map(|e| e.size)
                .unwrap_or(0);
            match loc {
                Loc::Mem(q) => {
                    state.pending[q as usize].insert((size, src, dst));
                    state.avail_mem[q as usize] = state.avail_mem[q as usize]
                        .checked_sub(size)
                        .expect("resident files exceed memory in seeded state");
                }
                Loc::Buf(q) => {
                    state.buffer_pending[q as usize].insert((size, src, dst));
                    state.avail_buf[q as usize] = state.avail_buf[q as usize]
                        .checked_sub(size)
                        .expect("buffered files exceed buffer in seeded state");
                }
            }
        }
        state
    }
}
