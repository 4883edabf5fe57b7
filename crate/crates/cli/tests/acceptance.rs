//! Acceptance suite. One test per criterion; each prints a `[PASS]` line
//! (visible with `--nocapture`). Every tolerance is pinned in the assert
//! it belongs to.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use gopsim::metrics::{ratio_histogram, SummaryMetric};
use gopsim::rng::{self, mix, tag, Stream};
use gopsim::simcore::{run_sim, ClusterConfig, Policy, SimOptions, SimResult};
use gopsim::suitability::{
    naive_matrix, normalize_row, suitability_matrix_with_gap, task_costs, threshold_gap,
    weight_row, FuzzyParams, NaiveParams, TradeoffPreference,
};
use gopsim::timemodel::{
    build_etc, default_base_fit, default_ratio_distributions, fit_quadratic, sample_ratio,
    EtcMatrix, Predictor, RatioDistribution,
};
use gopsim::workload::{
    default_vm_catalog, generate_workload, parse_trace, Catalog, ContentType, GenerateConfig,
    GopTask, Operation, TraceRecord, Workload,
};

fn pass(criterion: u32, what: &str) {
    println!("[PASS] criterion {criterion:02}: {what}");
}

/// Row shaped like a built ETC row: gpu baseline time times per-VM ratio
/// draws from the benchmark Normals (negative gap sums included).
fn random_etc_row(stream: &mut Stream) -> [f64; 4] {
    let t_gpu = stream.uniform(0.5, 20.0);
    [
        t_gpu * stream.normal(2.781, 1.524).max(0.1),
        t_gpu * stream.normal(1.263, 0.508).max(0.1),
        t_gpu * stream.normal(1.608, 0.652).max(0.1),
        t_gpu,
    ]
}

#[test]
fn criterion_01_threshold_gap_reproduction() {
    let params = FuzzyParams::default();
    let gap = |p: f64| {
        threshold_gap(&TradeoffPreference::from_performance(p).unwrap(), &params).unwrap()
    };
    assert!((gap(0.5) - 5.0).abs() <= 1e-9, "p=0.5 gave {}", gap(0.5));
    for (p, expected, caption) in
        [(0.98, 1.1082, 1.0), (0.01, 9.5951, 10.0), (0.0001, 14.2103, 15.0)]
    {
        let got = gap(p);
        assert!((got - expected).abs() <= 1e-4, "p={p}: {got} vs {expected}");
        assert!((got - caption).abs() <= 0.8, "p={p}: {got} vs caption {caption}");
    }
    assert!((gap(0.5) - 5.0).abs() <= 0.8);
    pass(1, "gap tolerance matches direct evaluation and caption values");
}

#[test]
fn criterion_02_weight_normalize_hand_oracle() {
    let rates = [0.15, 0.20, 0.33, 0.65];
    let row = [12.0, 5.0, 6.5, 4.0];
    let check = |delta_th: f64, expected: [f64; 4]| {
        let scores = normalize_row(&weight_row(&row, &rates, delta_th, 3).unwrap());
        for (got, want) in scores.iter().zip(expected) {
            assert!((got - want).abs() <= 1e-3, "delta_th={delta_th}: {scores:?}");
        }
    };
    check(5.0, [0.0, 1.0, 0.7079, 0.9665]);
    check(1.0, [0.0, 0.8905, 0.7110, 1.0]);

    let mut stream = Stream::new(2020);
    let mut checked = 0;
    while checked < 10_000 {
        let row: Vec<f64> = (0..4).map(|_| stream.uniform(0.1, 30.0)).collect();
        let delta_th = stream.uniform(0.0, 20.0);
        let weights = weight_row(&row, &rates, delta_th, 3).unwrap();
        let lo = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            continue;
        }
        checked += 1;
        let scores = normalize_row(&weights);
        assert_eq!(scores.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
    }
    pass(2, "hand-computed score rows match; 10k random rows span [0,1]");
}

#[test]
fn criterion_03_rank_flip_monotonicity() {
    let rates = [0.15, 0.20, 0.33, 0.65];
    let mut stream = Stream::new(3030);
    let mut violations = 0usize;
    for _ in 0..1000 {
        let row = random_etc_row(&mut stream);
        let phis = task_costs(&row, &rates).unwrap();
        let phi_sum: f64 = phis.iter().sum();
        let cf: Vec<f64> = phis.iter().map(|p| 1.0 - p / phi_sum).collect();
        let weights: Vec<Vec<f64>> =
            (0..=30).map(|d| weight_row(&row, &rates, d as f64, 3).unwrap()).collect();
        for i in 0..4 {
            for j in 0..4 {
                if cf[i] < cf[j] {
                    for pair in weights.windows(2) {
                        let before = pair[0][i] - pair[0][j];
                        let after = pair[1][i] - pair[1][j];
                        if after > before + 1e-9 * before.abs().max(1.0) {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    assert_eq!(violations, 0);
    pass(3, "weight differences are monotone in the gap tolerance (0 violations)");
}

#[test]
fn criterion_04_ratio_distribution_round_trip() {
    for (i, (vm, mean, std)) in
        [("general", 2.781, 1.524), ("cpu_opt", 1.263, 0.508), ("mem_opt", 1.608, 0.652)]
            .into_iter()
            .enumerate()
    {
        let dist = RatioDistribution::new(vm, mean, std, 0.0).unwrap();
        let mut stream = Stream::new(4000 + i as u64);
        let mut trace = Vec::with_capacity(200_000);
        for pair in 0..100_000u64 {
            let video = format!("v{pair}");
            let record = |vm_type: &str, time: f64| TraceRecord {
                video_id: video.clone(),
                gop_index: 0,
                operation: Operation::Codec,
                vm_type: vm_type.into(),
                content_type: ContentType::Mixed,
                gop_size_mb: 1.0,
                frame_count: 100,
                transcode_time_s: time,
            };
            trace.push(record("gpu", 1.0));
            trace.push(record(vm, sample_ratio(&dist, &mut stream).unwrap()));
        }
        let hist = ratio_histogram(&trace, "gpu", 0.1, None, None).unwrap();
        assert!((hist.mean - mean).abs() <= 0.02, "{vm}: mean {}", hist.mean);
        assert!((hist.std - std).abs() <= 0.02, "{vm}: std {}", hist.std);
        assert_eq!(hist.counts.iter().sum::<u64>(), 100_000);
    }
    pass(4, "histogram moments recover all three generating Normals within 0.02");
}

// ---- criterion 5: straight-line replay oracle --------------------------

struct OracleTask {
    task_id: u64,
    arrival_s: f64,
    deadline_s: f64,
}

/// Deadlines recomputed from scratch: first-GOP arrival plus allowance
/// plus the playback offset of the preceding GOPs.
fn oracle_deadlines(workload: &Workload, allowance_s: f64) -> Vec<OracleTask> {
    let mut by_video: BTreeMap<&str, Vec<&GopTask>> = BTreeMap::new();
    for task in workload.tasks() {
        by_video.entry(task.video_id.as_str()).or_default().push(task);
    }
    let mut out = Vec::new();
    for group in by_video.values_mut() {
        group.sort_by_key(|t| t.gop_index);
        let first_arrival = group[0].arrival_time_s;
        let mut offset = 0.0;
        for task in group.iter() {
            out.push(OracleTask {
                task_id: task.task_id,
                arrival_s: task.arrival_time_s,
                deadline_s: first_arrival + allowance_s + offset,
            });
            offset += f64::from(task.frame_count) / task.fps;
        }
    }
    out.sort_by_key(|t| t.task_id);
    out
}

/// The same policy scores the simulator derives, keyed by
/// (task, vm type index).
fn oracle_scores(
    etc: &EtcMatrix,
    catalog: &Catalog,
    policy: &Policy,
    seed: u64,
) -> BTreeMap<(u64, usize), f64> {
    let mut scores = BTreeMap::new();
    match policy {
        Policy::Suitability { pref, fuzzy } => {
            let delta_th = threshold_gap(pref, fuzzy).unwrap();
            let m = suitability_matrix_with_gap(etc, catalog, delta_th).unwrap();
            for row in &m.rows {
                for (idx, &s) in row.scores.iter().enumerate() {
                    scores.insert((row.task_id, idx), s);
                }
            }
        }
        Policy::SuitabilityGap { delta_th } => {
            let m = suitability_matrix_with_gap(etc, catalog, *delta_th).unwrap();
            for row in &m.rows {
                for (idx, &s) in row.scores.iter().enumerate() {
                    scores.insert((row.task_id, idx), s);
                }
            }
        }
        Policy::Naive { params } => {
            for (tid, row) in naive_matrix(etc, catalog, params).unwrap() {
                for (idx, s) in row.into_iter().enumerate() {
                    scores.insert((tid, idx), s);
                }
            }
        }
        Policy::FastestVm => {
            for (r, &tid) in etc.task_ids().iter().enumerate() {
                for (idx, &t) in etc.row(r).iter().enumerate() {
                    scores.insert((tid, idx), -t);
                }
            }
        }
        Policy::Random => {
            for &tid in etc.task_ids() {
                for idx in 0..catalog.len() {
                    scores.insert(
                        (tid, idx),
                        rng::unit_from_bits(mix(seed, &[tag::RANDOM_POLICY, tid, idx as u64])),
                    );
                }
            }
        }
    }
    scores
}

/// Straight-line interpreter: repeatedly find the earliest moment at
/// which any queued task and any free VM coexist, then assign the
/// highest-scored pair among the window of earliest deadlines, breaking
/// ties by (deadline, task id, vm id).
fn oracle_replay(
    tasks: &[OracleTask],
    vms: &[(u64, usize)], // (vm_id, vm_type_idx), ascending ids
    service: &BTreeMap<(u64, u64), f64>,
    scores: &BTreeMap<(u64, usize), f64>,
    window: usize,
) -> Vec<(u64, u64, f64, f64)> {
    let mut free: Vec<f64> = vec![0.0; vms.len()];
    let mut remaining: Vec<usize> = (0..tasks.len()).collect();
    let mut log = Vec::new();
    while !remaining.is_empty() {
        let mut t = f64::INFINITY;
        for &i in &remaining {
            for &f in &free {
                t = t.min(tasks[i].arrival_s.max(f));
            }
        }
        let mut queued: Vec<usize> =
            remaining.iter().copied().filter(|&i| tasks[i].arrival_s <= t).collect();
        queued.sort_by(|&a, &b| {
            tasks[a]
                .deadline_s
                .total_cmp(&tasks[b].deadline_s)
                .then(tasks[a].task_id.cmp(&tasks[b].task_id))
        });
        queued.truncate(window.max(1));
        let mut best: Option<(f64, usize, usize)> = None;
        for &i in &queued {
            for (slot, &(vm_id, type_idx)) in vms.iter().enumerate() {
                if free[slot] > t {
                    continue;
                }
                let _ = vm_id;
                let s = scores[&(tasks[i].task_id, type_idx)];
                if best.is_none_or(|(bs, _, _)| s > bs) {
                    best = Some((s, i, slot));
                }
            }
        }
        let (_, i, slot) = best.expect("a feasible pair exists at time t");
        let vm_id = vms[slot].0;
        let dur = service[&(tasks[i].task_id, vm_id)];
        log.push((tasks[i].task_id, vm_id, t, t + dur));
        free[slot] = t + dur;
        remaining.retain(|&j| j != i);
    }
    log.sort_by_key(|&(tid, ..)| tid);
    log
}

#[test]
fn criterion_05_simulator_matches_replay_oracle() {
    let catalog = default_vm_catalog();
    let clusters: [&[(&str, u32)]; 5] = [
        &[("gpu", 1)],
        &[("gpu", 2)],
        &[("gpu", 1), ("general", 1)],
        &[("cpu_opt", 2)],
        &[("mem_opt", 1), ("general", 1)],
    ];
    let mut instance_stream = Stream::new(5050);
    for case in 0..200u64 {
        let n = (instance_stream.next_u64() % 6) as usize; // 0..=5
        let gops = 1 + (instance_stream.next_u64() % 2) as usize;
        let allowance = match instance_stream.next_u64() % 3 {
            0 => 0.5,
            1 => 5.0,
            _ => f64::INFINITY,
        };
        let window = match instance_stream.next_u64() % 3 {
            0 => 1,
            1 => 2,
            _ => 10,
        };
        let cluster_spec = clusters[(instance_stream.next_u64() % 5) as usize];
        let policy = match instance_stream.next_u64() % 4 {
            0 => Policy::Suitability {
                pref: TradeoffPreference::from_performance(0.4).unwrap(),
                fuzzy: FuzzyParams::default(),
            },
            1 => Policy::Naive { params: NaiveParams::new(0.5).unwrap() },
            2 => Policy::FastestVm,
            _ => Policy::Random,
        };
        let seed = instance_stream.next_u64();

        let workload = if n == 0 {
            Workload::empty()
        } else {
            let mut config = GenerateConfig::new(
                n,
                [(ContentType::Mixed, 1.0)].into_iter().collect(),
                8.0,
                seed,
            );
            config.gops_per_video = gops;
            generate_workload(&config).unwrap()
        };
        let etc = build_etc(
            &workload,
            &default_base_fit(),
            &default_ratio_distributions(),
            &catalog,
            seed,
            0.05,
        )
        .unwrap();
        let mut cluster = ClusterConfig::new(
            cluster_spec.iter().map(|&(name, c)| (name.to_string(), c)).collect(),
        )
        .unwrap();
        cluster.startup_allowance_s = allowance;
        let options = SimOptions { scheduler_window: window, estimate_noise_std: 0.0 };
        let result =
            run_sim(&workload, &etc, &cluster, &catalog, &policy, &options, seed).unwrap();

        if n == 0 {
            assert_eq!(result.total_cost_usd, 0.0, "case {case}");
            assert_eq!(result.miss_rate(), 0.0);
            continue;
        }

        // independent replay
        let mut vms: Vec<(u64, usize)> = Vec::new();
        for (type_idx, name) in catalog.names().enumerate() {
            let count = cluster_spec
                .iter()
                .find(|&&(n, _)| n == name)
                .map(|&(_, c)| c)
                .unwrap_or(0);
            for _ in 0..count {
                vms.push((vms.len() as u64, type_idx));
            }
        }
        let tasks = oracle_deadlines(&workload, allowance);
        let scores = oracle_scores(&etc, &catalog, &policy, seed);
        let mut service: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for &(vm_id, type_idx) in &vms {
            let col = etc.vm_index(catalog[type_idx].name.as_str()).unwrap();
            for &tid in etc.task_ids() {
                service.insert((tid, vm_id), etc.time(tid, col).unwrap());
            }
        }
        let expected = oracle_replay(&tasks, &vms, &service, &scores, window);

        let mut got: Vec<(u64, u64, f64, f64)> =
            result.per_task.iter().map(|o| (o.task_id, o.vm_id, o.start_s, o.finish_s)).collect();
        got.sort_by_key(|&(tid, ..)| tid);
        assert_eq!(got, expected, "case {case} diverged from the replay oracle");

        // misses against the independently computed deadlines
        for outcome in &result.per_task {
            let oracle_task = tasks.iter().find(|t| t.task_id == outcome.task_id).unwrap();
            assert_eq!(outcome.missed, outcome.finish_s > oracle_task.deadline_s);
        }
        if allowance.is_infinite() {
            assert_eq!(result.miss_rate(), 0.0, "case {case}");
        }
    }
    pass(5, "200 randomized instances match the straight-line replay exactly");
}

// ---- criteria 6 & 7: directional experiments ---------------------------

struct ArmMetrics {
    delay: f64,
    miss: f64,
    cost: f64,
}

/// 500 tasks, cluster gpu=2,cpu_opt=4,general=4, 30 paired seeds; per
/// seed the same workload and ETC feed all three policies.
fn directional_runs() -> &'static Vec<[ArmMetrics; 3]> {
    static RUNS: OnceLock<Vec<[ArmMetrics; 3]>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let catalog = default_vm_catalog();
        let mut cluster = ClusterConfig::new(
            [("gpu", 2u32), ("cpu_opt", 4), ("general", 4)]
                .into_iter()
                .map(|(n, c)| (n.to_string(), c))
                .collect(),
        )
        .unwrap();
        cluster.billing_quantum_s = 60.0;
        cluster.startup_allowance_s = 1.1;
        let policies = [
            Policy::Suitability {
                pref: TradeoffPreference::from_performance(0.99).unwrap(),
                fuzzy: FuzzyParams::default(),
            },
            Policy::Suitability {
                pref: TradeoffPreference::from_performance(0.40).unwrap(),
                fuzzy: FuzzyParams::default(),
            },
            Policy::Naive { params: NaiveParams::new(0.5).unwrap() },
        ];
        (0..30u64)
            .map(|rep| {
                let seed = mix(4242, &[tag::REPLICATION, rep]);
                let mix_map =
                    [(ContentType::Slow, 0.05), (ContentType::Fast, 0.95)].into_iter().collect();
                let workload =
                    generate_workload(&GenerateConfig::new(500, mix_map, 1200.0, seed)).unwrap();
                let etc = build_etc(
                    &workload,
                    &default_base_fit(),
                    &default_ratio_distributions(),
                    &catalog,
                    seed,
                    0.05,
                )
                .unwrap();
                let run = |policy: &Policy| -> ArmMetrics {
                    let r: SimResult = run_sim(
                        &workload,
                        &etc,
                        &cluster,
                        &catalog,
                        policy,
                        &SimOptions::default(),
                        seed,
                    )
                    .unwrap();
                    ArmMetrics {
                        delay: SummaryMetric::StartupDelayS.of(&r),
                        miss: SummaryMetric::MissRate.of(&r),
                        cost: SummaryMetric::CostUsd.of(&r),
                    }
                };
                [run(&policies[0]), run(&policies[1]), run(&policies[2])]
            })
            .collect()
    })
}

#[test]
fn criterion_06_preference_direction() {
    let runs = directional_runs();
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&[ArmMetrics; 3]) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let frac = |f: &dyn Fn(&[ArmMetrics; 3]) -> bool| {
        runs.iter().filter(|r| f(r)).count() as f64 / n
    };

    let (d99, d40) = (mean(&|r| r[0].delay), mean(&|r| r[1].delay));
    let (m99, m40) = (mean(&|r| r[0].miss), mean(&|r| r[1].miss));
    let (c99, c40) = (mean(&|r| r[0].cost), mean(&|r| r[1].cost));
    assert!(d99 < d40, "startup delay: {d99} vs {d40}");
    assert!(m99 < m40, "miss rate: {m99} vs {m40}");
    assert!(c99 > c40, "cost: {c99} vs {c40}");
    assert!(frac(&|r| r[0].delay < r[1].delay) >= 0.8);
    assert!(frac(&|r| r[0].miss < r[1].miss) >= 0.8);
    assert!(frac(&|r| r[0].cost > r[1].cost) >= 0.8);
    pass(
        6,
        &format!(
            "p=0.99 vs p=0.40: delay {d99:.2}<{d40:.2}, miss {m99:.3}<{m40:.3}, \
             cost {c99:.2}>{c40:.2}, each direction in >=80% of pairs"
        ),
    );
}

#[test]
fn criterion_07_suitability_beats_naive() {
    let runs = directional_runs();
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&[ArmMetrics; 3]) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let (suit_delay, naive_delay) = (mean(&|r| r[1].delay), mean(&|r| r[2].delay));
    let (suit_miss, naive_miss) = (mean(&|r| r[1].miss), mean(&|r| r[2].miss));
    let (suit_cost, naive_cost) = (mean(&|r| r[1].cost), mean(&|r| r[2].cost));
    assert!(suit_miss <= naive_miss, "miss rate: {suit_miss} vs {naive_miss}");
    assert!(suit_delay <= naive_delay, "startup delay: {suit_delay} vs {naive_delay}");
    let ordering = if suit_cost <= naive_cost { "<=" } else { ">" };
    pass(
        7,
        &format!(
            "suitability(p=0.40) vs naive(k=0.5): miss {suit_miss:.3}<={naive_miss:.3}, \
             delay {suit_delay:.2}<={naive_delay:.2}; cost {suit_cost:.2} {ordering} \
             {naive_cost:.2} (informational)"
        ),
    );
}

// ---- criterion 8: golden analysis files ---------------------------------

fn sample_trace_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample_trace.csv")
}

struct RawRow {
    video: String,
    gop: u32,
    op: String,
    vm: String,
    time: f64,
}

fn read_sample_rows() -> Vec<RawRow> {
    let text = std::fs::read_to_string(sample_trace_path()).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            RawRow {
                video: f[0].into(),
                gop: f[1].parse().unwrap(),
                op: f[2].into(),
                vm: f[3].into(),
                time: f[7].parse().unwrap(),
            }
        })
        .collect()
}

const VMS_NO_BASELINE: [&str; 3] = ["general", "cpu_opt", "mem_opt"];
const OPS: [&str; 4] = ["codec", "bitrate", "framerate", "resolution"];

fn oracle_ratios(rows: &[RawRow]) -> Vec<(String, String, f64)> {
    let mut base: BTreeMap<(String, u32, String), f64> = BTreeMap::new();
    for r in rows {
        if r.vm == "gpu" {
            base.entry((r.video.clone(), r.gop, r.op.clone())).or_insert(r.time);
        }
    }
    rows.iter()
        .filter(|r| r.vm != "gpu")
        .filter_map(|r| {
            base.get(&(r.video.clone(), r.gop, r.op.clone()))
                .map(|b| (r.vm.clone(), r.op.clone(), r.time / b))
        })
        .collect()
}

fn oracle_threshold_csv(rows: &[RawRow], theta: f64, strict: bool) -> String {
    let ratios = oracle_ratios(rows);
    let mut out = String::from("vm_type,codec,bitrate,framerate,resolution\n");
    for vm in VMS_NO_BASELINE {
        out.push_str(vm);
        for op in OPS {
            out.push(',');
            let cell: Vec<f64> = ratios
                .iter()
                .filter(|(v, o, _)| v == vm && o == op)
                .map(|&(_, _, r)| r)
                .collect();
            if !cell.is_empty() {
                let under = cell
                    .iter()
                    .filter(|&&r| if strict { r < theta } else { r <= theta })
                    .count();
                out.push_str(&format!("{:.2}", 100.0 * under as f64 / cell.len() as f64));
            }
        }
        out.push('\n');
    }
    out
}

fn oracle_means_csv(rows: &[RawRow]) -> String {
    let mut acc: BTreeMap<(String, usize), (f64, u64)> = BTreeMap::new();
    for r in rows {
        let op_rank = OPS.iter().position(|&o| o == r.op).unwrap();
        let entry = acc.entry((r.vm.clone(), op_rank)).or_insert((0.0, 0));
        entry.0 += r.time;
        entry.1 += 1;
    }
    let mut out = String::from("vm_type,operation,mean_s\n");
    for ((vm, op_rank), (sum, n)) in acc {
        out.push_str(&format!("{vm},{},{:.6}\n", OPS[op_rank], sum / n as f64));
    }
    out
}

fn oracle_histogram_csv(rows: &[RawRow], width: f64) -> String {
    let ratios: Vec<f64> = oracle_ratios(rows).into_iter().map(|(_, _, r)| r).collect();
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min / width).floor() * width;
    let bins = ((max - lo) / width).floor() as usize + 1;
    let mut counts = vec![0u64; bins];
    for &r in &ratios {
        counts[(((r - lo) / width).floor() as usize).min(bins - 1)] += 1;
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let std = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in counts.iter().enumerate() {
        out.push_str(&format!(
            "{:.6},{:.6},{c}\n",
            lo + width * i as f64,
            lo + width * (i + 1) as f64
        ));
    }
    out.push_str(&format!("#mean={mean:.6},std={std:.6}\n"));
    out
}

fn run_binary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gopsim")).args(args).output().expect("binary runs")
}

#[test]
fn criterion_08_analysis_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("analysis");
    let out = run_binary(&[
        "analyze",
        "--trace",
        sample_trace_path().to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let rows = read_sample_rows();
    assert_eq!(rows.len(), 20);
    let read = |name: &str| std::fs::read_to_string(out_dir.join(name)).unwrap();
    assert_eq!(read("threshold_table_lt_1.0.csv"), oracle_threshold_csv(&rows, 1.0, true));
    assert_eq!(read("threshold_table_le_1.2.csv"), oracle_threshold_csv(&rows, 1.2, false));
    assert_eq!(read("operation_means.csv"), oracle_means_csv(&rows));
    assert_eq!(read("histogram.csv"), oracle_histogram_csv(&rows, 0.1));

    // conditional check against the published benchmark archive
    match std::env::var("GOPSIM_TRACE_ARCHIVE") {
        Ok(path) => {
            let catalog = default_vm_catalog();
            let records = parse_trace(&std::fs::read_to_string(&path).unwrap(), &catalog).unwrap();
            let strict = gopsim::metrics::threshold_table(&records, "gpu", 1.0, true).unwrap();
            let loose = gopsim::metrics::threshold_table(&records, "gpu", 1.2, false).unwrap();
            let key = ("cpu_opt".to_string(), Operation::Bitrate);
            assert!((strict.cells[&key] - 28.0).abs() <= 0.1);
            assert!((loose.cells[&key] - 63.93).abs() <= 0.1);
            pass(8, "golden files match the counting oracle; archive percentages reproduced");
        }
        Err(_) => {
            println!(
                "[SKIP] criterion 08 (conditional part): \
                 set GOPSIM_TRACE_ARCHIVE to check the published archive percentages"
            );
            pass(8, "golden files match the counting oracle byte-for-byte");
        }
    }
}

// ---- criterion 9: regression recovery -----------------------------------

/// 3x3 solve by the adjugate, plus the inverse for standard errors.
fn solve3_adjugate(m: [[f64; 3]; 3], v: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let cof = |r: usize, c: usize| -> f64 {
        let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..3).filter(|&j| j != c).collect();
        let minor = m[rows[0]][cols[0]] * m[rows[1]][cols[1]]
            - m[rows[0]][cols[1]] * m[rows[1]][cols[0]];
        if (r + c).is_multiple_of(2) {
            minor
        } else {
            -minor
        }
    };
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = cof(j, i) / det;
        }
    }
    let mut x = [0.0; 3];
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = (0..3).map(|j| inv[i][j] * v[j]).sum();
    }
    (x, inv)
}

#[test]
fn criterion_09_regression_recovery() {
    // noiseless: exact coefficient recovery
    let clean: Vec<(f64, f64)> = (1..=10)
        .map(|i| {
            let x = 10.0 * i as f64;
            (x, 1.0 + 0.5 * x + 0.01 * x * x)
        })
        .collect();
    let fit = fit_quadratic(&clean, Predictor::FrameCount).unwrap();
    for (got, want) in [(fit.a, 1.0), (fit.b, 0.5), (fit.c, 0.01)] {
        assert!((got - want).abs() <= 1e-6 * want.abs(), "{got} vs {want}");
    }

    // noisy: sigma=0.1, 200 points, seed 42
    let mut noise = Stream::new(42);
    let noisy: Vec<(f64, f64)> = (0..200)
        .map(|i| {
            let x = 10.0 * ((i % 10) + 1) as f64;
            (x, 1.0 + 0.5 * x + 0.01 * x * x + noise.normal(0.0, 0.1))
        })
        .collect();
    let fit = fit_quadratic(&noisy, Predictor::FrameCount).unwrap();
    assert!(fit.r2.unwrap() > 0.9, "r2 {}", fit.r2.unwrap());

    // independent normal-equations oracle with standard errors
    let n = noisy.len() as f64;
    let (mut sx, mut sx2, mut sx3, mut sx4) = (0.0, 0.0, 0.0, 0.0);
    let (mut st, mut sxt, mut sx2t) = (0.0, 0.0, 0.0);
    for &(x, t) in &noisy {
        sx += x;
        sx2 += x * x;
        sx3 += x * x * x;
        sx4 += x * x * x * x;
        st += t;
        sxt += x * t;
        sx2t += x * x * t;
    }
    let xtx = [[n, sx, sx2], [sx, sx2, sx3], [sx2, sx3, sx4]];
    let (beta, inv) = solve3_adjugate(xtx, [st, sxt, sx2t]);
    for (got, want) in [(fit.a, beta[0]), (fit.b, beta[1]), (fit.c, beta[2])] {
        assert!(
            (got - want).abs() <= 1e-6 * want.abs().max(1e-3),
            "solver vs oracle: {got} vs {want}"
        );
    }
    let ss_res: f64 = noisy
        .iter()
        .map(|&(x, t)| (t - beta[0] - beta[1] * x - beta[2] * x * x).powi(2))
        .sum();
    let sigma2 = ss_res / (n - 3.0);
    for (k, truth, got) in [(0, 1.0, fit.a), (1, 0.5, fit.b), (2, 0.01, fit.c)] {
        let se = (sigma2 * inv[k][k]).sqrt();
        assert!(
            (got - truth).abs() <= 3.0 * se,
            "coefficient {k}: {got} vs {truth} (se {se})"
        );
    }
    pass(9, "noiseless recovery at 1e-6; noisy fit within 3 standard errors, r2 > 0.9");
}

// ---- criterion 10: manifest replay ---------------------------------------

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        files.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    files
}

fn assert_replay_identical(command: &str, out_dir: &Path) {
    let before = snapshot(out_dir);
    assert!(before.contains_key("run_manifest.txt"));
    let manifest = out_dir.join("run_manifest.txt");
    let out = run_binary(&[command, "--config", manifest.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{command} replay failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let after = snapshot(out_dir);
    assert_eq!(
        before.keys().collect::<Vec<_>>(),
        after.keys().collect::<Vec<_>>(),
        "{command}: file set changed"
    );
    for (name, bytes) in &before {
        assert_eq!(bytes, &after[name], "{command}: {name} changed on replay");
    }
}

#[test]
fn criterion_10_manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let trace = sample_trace_path().canonicalize().unwrap();

    let gen_out = path("gen");
    let out = run_binary(&[
        "generate", "--n", "80", "--mix", "slow:0.3,fast:0.7", "--window", "40", "--seed", "21",
        "--gops-per-video", "2", "--out", &gen_out,
    ]);
    assert!(out.status.success());
    assert_replay_identical("generate", Path::new(&gen_out));

    let analyze_out = path("analysis");
    let out = run_binary(&[
        "analyze", "--trace", trace.to_str().unwrap(), "--per-video", "--out", &analyze_out,
    ]);
    assert!(out.status.success());
    assert_replay_identical("analyze", Path::new(&analyze_out));

    let fit_out = path("fit");
    let out = run_binary(&[
        "fit", "--trace", trace.to_str().unwrap(), "--vm-type", "general", "--out", &fit_out,
    ]);
    assert!(out.status.success());
    assert_replay_identical("fit", Path::new(&fit_out));

    let suit_out = path("suit");
    let out = run_binary(&[
        "suitability", "--etc", &format!("{gen_out}/etc.csv"), "--perf-pref", "0.98", "--out",
        &suit_out,
    ]);
    assert!(out.status.success());
    assert_replay_identical("suitability", Path::new(&suit_out));

    let sim_out = path("sim");
    let out = run_binary(&[
        "simulate", "--workload", &format!("{gen_out}/workload.csv"), "--etc",
        &format!("{gen_out}/etc.csv"), "--cluster", "gpu=1,cpu_opt=2", "--reps", "3",
        "--regen-arrivals", "--emit-events", "--quantum", "60", "--allowance", "2", "--seed",
        "13", "--out", &sim_out,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_replay_identical("simulate", Path::new(&sim_out));

    pass(10, "all five commands replay byte-identically from their manifests");
}
