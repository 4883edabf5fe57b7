//! Deterministic discrete-event simulation of GOP transcoding on a
//! heterogeneous VM cluster.
//!
//! Tasks arrive into a central ready queue ordered by deadline. Whenever
//! a VM is idle, the scheduler examines the earliest-deadline window of
//! the queue and assigns the (task, VM) pair with the highest policy
//! score; service is non-preemptive and takes exactly the ETC entry (the
//! scheduler and the simulated world share the matrix unless estimation
//! noise is enabled). Missed deadlines are counted, not dropped.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::rng::{self, tag, Stream};
use crate::suitability::{
    naive_matrix, suitability_matrix, suitability_matrix_with_gap, FuzzyParams, NaiveParams,
    SuitabilityError, TradeoffPreference,
};
use crate::timemodel::EtcMatrix;
use crate::workload::{Catalog, GopTask, VideoStream, Workload};

/// Cluster composition and accounting parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    /// Instances per VM type.
    pub counts: BTreeMap<String, u32>,
    /// Billing granularity in seconds; busy spans round up to whole quanta.
    pub billing_quantum_s: f64,
    /// Startup allowance delta_0 before a stream's first GOP is due.
    /// `f64::INFINITY` disables deadlines entirely.
    pub startup_allowance_s: f64,
}

impl ClusterConfig {
    pub fn new(counts: BTreeMap<String, u32>) -> Result<Self, SimError> {
        let config = Self {
            counts,
            billing_quantum_s: 3600.0,
            startup_allowance_s: 5.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.counts.values().map(|&c| u64::from(c)).sum::<u64>() == 0 {
            return Err(SimError::EmptyCluster);
        }
        if !(self.billing_quantum_s > 0.0) {
            return Err(SimError::BadConfig("billing_quantum_s must be > 0"));
        }
        if self.startup_allowance_s.is_nan() || self.startup_allowance_s < 0.0 {
            return Err(SimError::BadConfig("startup_allowance_s must be >= 0"));
        }
        Ok(())
    }
}

/// One VM of the cluster with its service log.
#[derive(Debug, Clone, PartialEq)]
pub struct VmInstance {
    pub vm_id: u64,
    pub vm_type: String,
    pub vm_type_idx: usize,
    pub busy_until_s: f64,
    pub first_use_s: Option<f64>,
    pub last_release_s: f64,
    pub assignments: Vec<Assignment>,
}

impl VmInstance {
    fn new(vm_id: u64, vm_type: &str, vm_type_idx: usize) -> Self {
        Self {
            vm_id,
            vm_type: vm_type.to_string(),
            vm_type_idx,
            busy_until_s: 0.0,
            first_use_s: None,
            last_release_s: 0.0,
            assignments: Vec::new(),
        }
    }
}

/// One scheduled service interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub task_id: u64,
    pub start_s: f64,
    pub finish_s: f64,
}

/// Scheduling policy; the variants carry their own parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Suitability { pref: TradeoffPreference<f64>, fuzzy: FuzzyParams<f64> },
    /// Suitability scoring with the gap tolerance given directly.
    SuitabilityGap { delta_th: f64 },
    Naive { params: NaiveParams<f64> },
    /// Highest score to the lowest expected time.
    FastestVm,
    /// Stateless pseudo-random scores keyed by (seed, task, vm type).
    Random,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Suitability { .. } | Policy::SuitabilityGap { .. } => "suitability",
            Policy::Naive { .. } => "naive",
            Policy::FastestVm => "fastest_vm",
            Policy::Random => "random",
        }
    }
}

/// Simulator tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// How many earliest-deadline queued tasks the scheduler considers.
    pub scheduler_window: usize,
    /// Lognormal sigma of multiplicative noise applied to the times the
    /// scheduler sees. 0 disables; the executed times are never perturbed.
    pub estimate_noise_std: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { scheduler_window: 10, estimate_noise_std: 0.0 }
    }
}

/// Outcome of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub task_id: u64,
    pub vm_id: u64,
    pub start_s: f64,
    pub finish_s: f64,
    pub deadline_s: f64,
    pub missed: bool,
}

/// Result of one simulation replication.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Per-task log in completion order of assignment.
    pub per_task: Vec<TaskOutcome>,
    pub per_stream_startup_delay_s: BTreeMap<String, f64>,
    pub total_cost_usd: f64,
    pub replication_seed: u64,
    /// Final VM logs, for billing breakdowns and replay checks.
    pub vms: Vec<VmInstance>,
}

impl SimResult {
    /// Fraction of tasks finishing after their deadline; 0 for an empty
    /// run (flagged by [`SimResult::is_empty`]).
    pub fn miss_rate(&self) -> f64 {
        if self.per_task.is_empty() {
            return 0.0;
        }
        self.per_task.iter().filter(|t| t.missed).count() as f64 / self.per_task.len() as f64
    }

    /// Mean startup delay over streams; 0 when there are none.
    pub fn mean_startup_delay_s(&self) -> f64 {
        if self.per_stream_startup_delay_s.is_empty() {
            return 0.0;
        }
        self.per_stream_startup_delay_s.values().sum::<f64>()
            / self.per_stream_startup_delay_s.len() as f64
    }

    pub fn is_empty(&self) -> bool {
        self.per_task.is_empty()
    }
}

/// Deadline of a GOP under continuous playback: the stream's first GOP
/// is due `allowance` seconds after the stream arrives, and each later
/// GOP by its playback offset.
pub fn deadline_of(task: &GopTask, stream: &VideoStream, startup_allowance_s: f64) -> f64 {
    stream.arrival_time_s + startup_allowance_s + stream.playback_offset_s(task.gop_index)
}

/// Ready-queue key: earliest deadline first, ties by task id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEntry {
    pub deadline_s: f64,
    pub task_id: u64,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.deadline_s
            .total_cmp(&other.deadline_s)
            .then(self.task_id.cmp(&other.task_id))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Picks the next assignment: over the `window` earliest-deadline queued
/// tasks and all idle VMs, the pair with the highest score wins; ties go
/// to the earlier deadline, then the smaller task id, then the smaller
/// vm id. Returns `None` iff the queue or the idle set is empty.
pub fn schedule_next(
    queue: &BTreeSet<QueueEntry>,
    idle: &BTreeSet<u64>,
    vms: &[VmInstance],
    score: impl Fn(u64, usize) -> f64,
    window: usize,
) -> Option<(u64, u64)> {
    let mut best: Option<(f64, u64, u64)> = None;
    for entry in queue.iter().take(window.max(1)) {
        for &vm_id in idle {
            let s = score(entry.task_id, vms[vm_id as usize].vm_type_idx);
            // strict improvement only: iteration order already encodes
            // the tie-break (deadline, task_id, vm_id)
            if best.is_none_or(|(bs, _, _)| s > bs) {
                best = Some((s, entry.task_id, vm_id));
            }
        }
    }
    best.map(|(_, task_id, vm_id)| (task_id, vm_id))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Arrival(usize),
    VmFree(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time_s: f64,
    seq: u64,
    kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we pop earliest first
        other
            .time_s
            .total_cmp(&self.time_s)
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct ScoreMatrix {
    /// Row-major (task rows in ETC order) x vm type columns; `None` for
    /// the random policy, which hashes on demand.
    table: Option<Vec<f64>>,
    width: usize,
    row_of: BTreeMap<u64, usize>,
    seed: u64,
}

impl ScoreMatrix {
    fn score(&self, task_id: u64, vm_type_idx: usize) -> f64 {
        match &self.table {
            Some(table) => table[self.row_of[&task_id] * self.width + vm_type_idx],
            None => rng::unit_from_bits(rng::mix(
                self.seed,
                &[tag::RANDOM_POLICY, task_id, vm_type_idx as u64],
            )),
        }
    }
}

fn build_scores(
    etc: &EtcMatrix,
    catalog: &Catalog,
    policy: &Policy,
    options: &SimOptions,
    seed: u64,
) -> Result<ScoreMatrix, SimError> {
    let width = etc.vm_types().len();
    let row_of: BTreeMap<u64, usize> =
        etc.task_ids().iter().enumerate().map(|(i, &t)| (t, i)).collect();

    // The scheduler may see noisy time estimates; the world never does.
    let estimate = |row: usize, vm: usize| -> f64 {
        let t = etc.row(row)[vm];
        if options.estimate_noise_std > 0.0 {
            let task_id = etc.task_ids()[row];
            let mut stream =
                Stream::derived(seed, tag::ESTIMATE_NOISE, &[task_id, vm as u64]);
            t * (options.estimate_noise_std * stream.standard_normal()).exp()
        } else {
            t
        }
    };

    let scored_etc = || -> Result<EtcMatrix, SimError> {
        if options.estimate_noise_std > 0.0 {
            let mut times = Vec::with_capacity(etc.n_tasks() * width);
            for row in 0..etc.n_tasks() {
                for vm in 0..width {
                    times.push(estimate(row, vm));
                }
            }
            EtcMatrix::new(etc.task_ids().to_vec(), etc.vm_types().to_vec(), times)
                .map_err(|_| SimError::BadConfig("noisy estimate produced invalid matrix"))
        } else {
            Ok(etc.clone())
        }
    };

    let table = match policy {
        Policy::Suitability { pref, fuzzy } => {
            let m = suitability_matrix(&scored_etc()?, catalog, pref, fuzzy)?;
            Some(m.rows.iter().flat_map(|r| r.scores.iter().copied()).collect())
        }
        Policy::SuitabilityGap { delta_th } => {
            let m = suitability_matrix_with_gap(&scored_etc()?, catalog, *delta_th)?;
            Some(m.rows.iter().flat_map(|r| r.scores.iter().copied()).collect())
        }
        Policy::Naive { params } => {
            let rows = naive_matrix(&scored_etc()?, catalog, params)?;
            Some(rows.into_iter().flat_map(|(_, scores)| scores).collect())
        }
        Policy::FastestVm => {
            let mut table = Vec::with_capacity(etc.n_tasks() * width);
            for row in 0..etc.n_tasks() {
                for vm in 0..width {
                    table.push(-estimate(row, vm));
                }
            }
            Some(table)
        }
        Policy::Random => None,
    };
    Ok(ScoreMatrix { table, width, row_of, seed })
}

/// Runs one replication. Deterministic: identical inputs produce an
/// identical result.
pub fn run_sim(
    workload: &Workload,
    etc: &EtcMatrix,
    cluster: &ClusterConfig,
    catalog: &Catalog,
    policy: &Policy,
    options: &SimOptions,
    seed: u64,
) -> Result<SimResult, SimError> {
    cluster.validate()?;

    // instantiate VMs in catalog order
    let mut vms: Vec<VmInstance> = Vec::new();
    for (type_idx, vm_type) in catalog.names().enumerate() {
        let count = cluster.counts.get(vm_type).copied().unwrap_or(0);
        for _ in 0..count {
            vms.push(VmInstance::new(vms.len() as u64, vm_type, type_idx));
        }
    }
    for vm_type in cluster.counts.keys() {
        if catalog.index_of(vm_type).is_none() {
            return Err(SimError::UnknownVmType(vm_type.clone()));
        }
    }
    if vms.is_empty() {
        return Err(SimError::EmptyCluster);
    }

    // ETC must cover every (task, instantiated type) pair
    let mut etc_col_of_type: BTreeMap<usize, usize> = BTreeMap::new();
    for vm in &vms {
        let col = etc.vm_index(&vm.vm_type).ok_or_else(|| SimError::EtcGap {
            task_id: workload.tasks().first().map(|t| t.task_id).unwrap_or(0),
            vm_type: vm.vm_type.clone(),
        })?;
        etc_col_of_type.insert(vm.vm_type_idx, col);
    }
    for task in workload.tasks() {
        if etc.row_for_task(task.task_id).is_none() {
            return Err(SimError::EtcGap {
                task_id: task.task_id,
                vm_type: "<missing row>".into(),
            });
        }
    }

    let scores = build_scores(etc, catalog, policy, options, seed)?;

    let mut deadlines: BTreeMap<u64, f64> = BTreeMap::new();
    for task in workload.tasks() {
        let stream = workload.video(&task.video_id).expect("stream exists for every task");
        deadlines.insert(task.task_id, deadline_of(task, stream, cluster.startup_allowance_s));
    }

    let mut heap: BinaryHeap<Event> = BinaryHeap::new();
    let mut seq = 0u64;
    for (idx, task) in workload.tasks().iter().enumerate() {
        heap.push(Event { time_s: task.arrival_time_s, seq, kind: EventKind::Arrival(idx) });
        seq += 1;
    }

    let mut queue: BTreeSet<QueueEntry> = BTreeSet::new();
    let mut idle: BTreeSet<u64> = (0..vms.len() as u64).collect();
    let mut outcomes: Vec<TaskOutcome> = Vec::with_capacity(workload.len());

    while let Some(first) = heap.pop() {
        let now = first.time_s;
        let mut batch = vec![first];
        while heap.peek().is_some_and(|e| e.time_s == now) {
            batch.push(heap.pop().unwrap());
        }
        for event in batch {
            match event.kind {
                EventKind::Arrival(idx) => {
                    let task = &workload.tasks()[idx];
                    queue.insert(QueueEntry {
                        deadline_s: deadlines[&task.task_id],
                        task_id: task.task_id,
                    });
                }
                EventKind::VmFree(vm_id) => {
                    idle.insert(vm_id);
                }
            }
        }
        while let Some((task_id, vm_id)) = schedule_next(
            &queue,
            &idle,
            &vms,
            |t, v| scores.score(t, v),
            options.scheduler_window,
        ) {
            let vm = &mut vms[vm_id as usize];
            let col = etc_col_of_type[&vm.vm_type_idx];
            let service = etc.time(task_id, col).expect("coverage checked above");
            let start = now;
            let finish = start + service;
            vm.busy_until_s = finish;
            vm.first_use_s.get_or_insert(start);
            vm.last_release_s = finish;
            vm.assignments.push(Assignment { task_id, start_s: start, finish_s: finish });
            queue.remove(&QueueEntry { deadline_s: deadlines[&task_id], task_id });
            idle.remove(&vm_id);
            heap.push(Event { time_s: finish, seq, kind: EventKind::VmFree(vm_id) });
            seq += 1;
            let deadline_s = deadlines[&task_id];
            outcomes.push(TaskOutcome {
                task_id,
                vm_id,
                start_s: start,
                finish_s: finish,
                deadline_s,
                missed: finish > deadline_s,
            });
        }
    }

    let mut startup = BTreeMap::new();
    for (video_id, stream) in workload.videos() {
        let first_task = stream.gops[0].0;
        let outcome = outcomes
            .iter()
            .find(|o| o.task_id == first_task)
            .expect("every task is eventually served");
        startup.insert(video_id.clone(), outcome.finish_s - stream.arrival_time_s);
    }

    let total_cost_usd = billed_cost(&vms, cluster, catalog);
    Ok(SimResult {
        per_task: outcomes,
        per_stream_startup_delay_s: startup,
        total_cost_usd,
        replication_seed: seed,
        vms,
    })
}

/// Dollar cost of a run: each used VM's busy span (first use to last
/// release) rounds up to whole billing quanta at its type's hourly rate.
/// Never-used VMs cost nothing.
pub fn billed_cost(vms: &[VmInstance], cluster: &ClusterConfig, catalog: &Catalog) -> f64 {
    let quantum = cluster.billing_quantum_s;
    vms.iter()
        .filter_map(|vm| {
            let first = vm.first_use_s?;
            let span = vm.last_release_s - first;
            let quanta = (span / quantum).ceil().max(1.0);
            let rate = catalog[vm.vm_type_idx].hourly_cost;
            Some(quanta * rate * quantum / 3600.0)
        })
        .sum()
}

/// Event row of the optional simulation log.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub time_s: f64,
    pub event: &'static str,
    pub task_id: u64,
    pub vm_id: Option<u64>,
}

/// Flattens a result into `arrive`/`start`/`finish`/`miss` rows ordered
/// by time, then by event kind in that order, then by task id.
pub fn event_log(workload: &Workload, result: &SimResult) -> Vec<EventRow> {
    let mut rows = Vec::new();
    for task in workload.tasks() {
        rows.push(EventRow {
            time_s: task.arrival_time_s,
            event: "arrive",
            task_id: task.task_id,
            vm_id: None,
        });
    }
    for o in &result.per_task {
        rows.push(EventRow { time_s: o.start_s, event: "start", task_id: o.task_id, vm_id: Some(o.vm_id) });
        rows.push(EventRow { time_s: o.finish_s, event: "finish", task_id: o.task_id, vm_id: Some(o.vm_id) });
        if o.missed {
            rows.push(EventRow { time_s: o.finish_s, event: "miss", task_id: o.task_id, vm_id: Some(o.vm_id) });
        }
    }
    let rank = |e: &str| match e {
        "arrive" => 0,
        "start" => 1,
        "finish" => 2,
        _ => 3,
    };
    rows.sort_by(|a, b| {
        a.time_s
            .total_cmp(&b.time_s)
            .then(rank(a.event).cmp(&rank(b.event)))
            .then(a.task_id.cmp(&b.task_id))
    });
    rows
}

/// Serializes an event log: `time_s,event,task_id,vm_id` (vm empty on
/// arrivals).
pub fn serialize_events(rows: &[EventRow]) -> String {
    let mut out = String::from("time_s,event,task_id,vm_id\n");
    for r in rows {
        let vm = r.vm_id.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{:.6},{},{},{}\n", r.time_s, r.event, r.task_id, vm));
    }
    out
}

/// Simulation errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("EmptyCluster: no VM instances configured")]
    EmptyCluster,
    #[error("UnknownVmType: {0} not in catalog")]
    UnknownVmType(String),
    #[error("EtcGap: task {task_id}, vm type {vm_type}")]
    EtcGap { task_id: u64, vm_type: String },
    #[error("BadConfig: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Suitability(#[from] SuitabilityError),
}
