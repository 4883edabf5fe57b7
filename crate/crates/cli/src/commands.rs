//! The five subcommands: analyze, fit, suitability, generate, simulate.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use gopsim::metrics::{
    aggregate, ratio_histogram, serialize_ci_summaries, serialize_histogram,
    serialize_operation_means, serialize_operation_means_per_video, serialize_threshold_table,
    summarize_by_operation, summarize_by_operation_per_video, threshold_table, SummaryMetric,
};
use gopsim::rng::{mix, tag};
use gopsim::simcore::{
    event_log, run_sim, serialize_events, ClusterConfig, Policy, SimOptions, SimResult,
};
use gopsim::suitability::{
    naive_matrix, serialize_suitability, suitability_matrix_with_gap, threshold_gap,
    threshold_gap_from_cost, FuzzyParams, NaiveParams, TradeoffPreference,
};
use gopsim::timemodel::{
    build_etc, default_base_fit, default_ratio_distributions, fit_quadratic, parse_etc,
    serialize_etc, EtcMatrix, Predictor, QuadraticFit, RatioDistribution, DEFAULT_TIME_FLOOR_S,
};
use gopsim::workload::{
    default_vm_catalog, generate_workload, parse_trace, parse_workload, resample_arrivals,
    serialize_workload, ArrivalProcess, Catalog, ContentType, GenerateConfig, Operation,
    TraceRecord, BASELINE_VM,
};

use crate::config::{check_command, KvMap, Manifest};
use crate::{
    AnalyzeArgs, CliError, FitArgs, GenerateArgs, SimulateArgs, SuitabilityArgs,
};

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("MissingInput: {}: {e}", path.display())))
}

fn require<T>(value: Option<T>, key: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::input(format!("MissingParam: {key}")))
}

fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    cfg: &KvMap,
    key: &str,
) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get_parsed(key),
    }
}

fn resolve_flag(flag: bool, cfg: &KvMap, key: &str) -> Result<bool, CliError> {
    if flag {
        return Ok(true);
    }
    Ok(cfg.get_parsed::<bool>(key)?.unwrap_or(false))
}

fn out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", path.display())))
}

fn parse_mix(spec: &str) -> Result<BTreeMap<ContentType, f64>, CliError> {
    let mut mix = BTreeMap::new();
    for part in spec.split(',') {
        let (name, frac) = part
            .split_once(':')
            .ok_or_else(|| CliError::input(format!("BadMix: expected type:frac, got `{part}`")))?;
        let ct = ContentType::parse(name)
            .ok_or_else(|| CliError::input(format!("BadMix: unknown content type `{name}`")))?;
        let frac: f64 = frac
            .parse()
            .map_err(|_| CliError::input(format!("BadMix: bad fraction `{frac}`")))?;
        if mix.insert(ct, frac).is_some() {
            return Err(CliError::input(format!("BadMix: duplicate content type `{name}`")));
        }
    }
    Ok(mix)
}

fn parse_cluster(spec: &str) -> Result<BTreeMap<String, u32>, CliError> {
    let mut counts = BTreeMap::new();
    for part in spec.split(',') {
        let (name, count) = part.split_once('=').ok_or_else(|| {
            CliError::input(format!("BadCluster: expected type=count, got `{part}`"))
        })?;
        let count: u32 = count
            .parse()
            .map_err(|_| CliError::input(format!("BadCluster: bad count `{count}`")))?;
        if counts.insert(name.to_string(), count).is_some() {
            return Err(CliError::input(format!("BadCluster: duplicate type `{name}`")));
        }
    }
    Ok(counts)
}

/// `lt:1.0,le:1.2` — `lt` counts ratios strictly below, `le` at or below.
fn parse_thresholds(spec: &str) -> Result<Vec<(String, f64, bool)>, CliError> {
    spec.split(',')
        .map(|part| {
            let (mode, value) = part.split_once(':').ok_or_else(|| {
                CliError::input(format!("BadThreshold: expected lt:X or le:X, got `{part}`"))
            })?;
            let strict = match mode {
                "lt" => true,
                "le" => false,
                _ => return Err(CliError::input(format!("BadThreshold: unknown mode `{mode}`"))),
            };
            let theta: f64 = value
                .parse()
                .map_err(|_| CliError::input(format!("BadThreshold: bad value `{value}`")))?;
            Ok((value.to_string(), theta, strict))
        })
        .collect()
}

fn parse_allowance(spec: &str) -> Result<f64, CliError> {
    if spec == "inf" {
        return Ok(f64::INFINITY);
    }
    let v: f64 = spec
        .parse()
        .map_err(|_| CliError::input(format!("BadAllowance: `{spec}`")))?;
    if v < 0.0 {
        return Err(CliError::input(format!("BadAllowance: `{spec}` must be >= 0")));
    }
    Ok(v)
}

fn parse_fit_coeffs(spec: &str, predictor: Predictor) -> Result<QuadraticFit<f64>, CliError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::input(format!("BadFit: expected a,b,c, got `{spec}`")));
    }
    let mut coeffs = [0.0; 3];
    for (slot, part) in coeffs.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::input(format!("BadFit: bad coefficient `{part}`")))?;
    }
    Ok(QuadraticFit::new(coeffs[0], coeffs[1], coeffs[2], predictor))
}

fn parse_ratio_dist(vm: &str, spec: &str) -> Result<RatioDistribution, CliError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::input(format!("BadRatio: expected mean,std,floor, got `{spec}`")));
    }
    let mut vals = [0.0; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::input(format!("BadRatio: bad value `{part}`")))?;
    }
    RatioDistribution::new(vm, vals[0], vals[1], vals[2])
        .map_err(|e| CliError::input(e.to_string()))
}

fn parse_operation(spec: &str) -> Result<Operation, CliError> {
    Operation::parse(spec)
        .ok_or_else(|| CliError::input(format!("UnknownEnum: operation `{spec}`")))
}

fn parse_predictor(spec: &str) -> Result<Predictor, CliError> {
    Predictor::parse(spec)
        .ok_or_else(|| CliError::input(format!("UnknownEnum: predictor `{spec}`")))
}

fn check_baseline(catalog: &Catalog, baseline: &str) -> Result<(), CliError> {
    if catalog.index_of(baseline).is_none() {
        return Err(CliError::input(format!("UnknownBaseline: `{baseline}`")));
    }
    Ok(())
}

const ANALYZE_KEYS: &[&str] = &[
    "baseline", "bin-width", "operation", "out", "per-video", "thresholds", "trace", "vm-type",
];

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let cfg = KvMap::load(args.config.as_deref())?;
    check_command(&cfg, "analyze")?;
    cfg.check_keys(ANALYZE_KEYS)?;

    let trace_path = require(resolve(args.trace.clone(), &cfg, "trace")?, "trace")?;
    let out = require(resolve(args.out.clone(), &cfg, "out")?, "out")?;
    let baseline =
        resolve(args.baseline.clone(), &cfg, "baseline")?.unwrap_or_else(|| BASELINE_VM.into());
    let thresholds_spec = resolve(args.thresholds.clone(), &cfg, "thresholds")?
        .unwrap_or_else(|| "lt:1.0,le:1.2".into());
    let bin_width = resolve(args.bin_width, &cfg, "bin-width")?.unwrap_or(0.1);
    let operation = resolve(args.operation.clone(), &cfg, "operation")?
        .map(|s| parse_operation(&s))
        .transpose()?;
    let vm_filter = resolve(args.vm_type.clone(), &cfg, "vm-type")?;
    let per_video = resolve_flag(args.per_video, &cfg, "per-video")?;

    let catalog = default_vm_catalog();
    check_baseline(&catalog, &baseline)?;
    let thresholds = parse_thresholds(&thresholds_spec)?;
    let records = parse_trace(&read_input(&trace_path)?, &catalog)
        .map_err(|e| CliError::input(e.to_string()))?;

    out_dir(&out)?;
    for (token, theta, strict) in &thresholds {
        let table = threshold_table(&records, &baseline, *theta, *strict)
            .map_err(|e| CliError::input(e.to_string()))?;
        let mode = if *strict { "lt" } else { "le" };
        let path = out.join(format!("threshold_table_{mode}_{token}.csv"));
        crate::write_output(&path, &serialize_threshold_table(&table, &catalog, &baseline))?;
    }
    let hist = ratio_histogram(&records, &baseline, bin_width, vm_filter.as_deref(), operation)
        .map_err(|e| CliError::input(e.to_string()))?;
    crate::write_output(&out.join("histogram.csv"), &serialize_histogram(&hist))?;
    let means = summarize_by_operation(&records).map_err(|e| CliError::input(e.to_string()))?;
    crate::write_output(&out.join("operation_means.csv"), &serialize_operation_means(&means))?;
    if per_video {
        let by_video =
            summarize_by_operation_per_video(&records).map_err(|e| CliError::input(e.to_string()))?;
        crate::write_output(
            &out.join("operation_means_per_video.csv"),
            &serialize_operation_means_per_video(&by_video),
        )?;
    }

    let mut manifest = Manifest::new("analyze");
    manifest
        .set("trace", trace_path.display())
        .set("out", out.display())
        .set("baseline", &baseline)
        .set("thresholds", &thresholds_spec)
        .set("bin-width", bin_width)
        .set("per-video", per_video)
        .set_opt("operation", operation.map(|o| o.as_str()))
        .set_opt("vm-type", vm_filter.as_deref());
    manifest.write(&out)?;
    Ok(())
}

const FIT_KEYS: &[&str] = &["operation", "out", "predictor", "trace", "vm-type"];

pub fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let cfg = KvMap::load(args.config.as_deref())?;
    check_command(&cfg, "fit")?;
    cfg.check_keys(FIT_KEYS)?;

    let trace_path = require(resolve(args.trace.clone(), &cfg, "trace")?, "trace")?;
    let out = require(resolve(args.out.clone(), &cfg, "out")?, "out")?;
    let vm_type =
        resolve(args.vm_type.clone(), &cfg, "vm-type")?.unwrap_or_else(|| BASELINE_VM.into());
    let predictor = parse_predictor(
        &resolve(args.predictor.clone(), &cfg, "predictor")?
            .unwrap_or_else(|| "frame_count".into()),
    )?;
    let operation = resolve(args.operation.clone(), &cfg, "operation")?
        .map(|s| parse_operation(&s))
        .transpose()?;

    let catalog = default_vm_catalog();
    check_baseline(&catalog, &vm_type)?;
    let records = parse_trace(&read_input(&trace_path)?, &catalog)
        .map_err(|e| CliError::input(e.to_string()))?;
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.vm_type == vm_type && operation.is_none_or(|op| r.operation == op))
        .map(|r| {
            let x = match predictor {
                Predictor::FrameCount => f64::from(r.frame_count),
                Predictor::GopSizeMb => r.gop_size_mb,
            };
            (x, r.transcode_time_s)
        })
        .collect();
    let fit = fit_quadratic(&points, predictor).map_err(|e| CliError::input(e.to_string()))?;

    out_dir(&out)?;
    let mut text = format!(
        "a={}\nb={}\nc={}\npredictor={}\n",
        fit.a, fit.b, fit.c, fit.predictor
    );
    if let Some(r2) = fit.r2 {
        text.push_str(&format!("r2={r2}\n"));
    }
    crate::write_output(&out.join("fit.txt"), &text)?;

    let mut manifest = Manifest::new("fit");
    manifest
        .set("trace", trace_path.display())
        .set("out", out.display())
        .set("vm-type", &vm_type)
        .set("predictor", predictor)
        .set_opt("operation", operation.map(|o| o.as_str()));
    manifest.write(&out)?;
    Ok(())
}

/// Builds ETC rows out of a trace: every `(video, gop, operation)` key
/// measured on all catalog VM types becomes a row, in key order.
fn etc_from_trace(records: &[TraceRecord], catalog: &Catalog) -> Result<EtcMatrix, CliError> {
    let mut by_key: BTreeMap<(String, u32, Operation), Vec<Option<f64>>> = BTreeMap::new();
    for r in records {
        let idx = catalog.index_of(&r.vm_type).expect("vm validated at parse");
        by_key
            .entry((r.video_id.clone(), r.gop_index, r.operation))
            .or_insert_with(|| vec![None; catalog.len()])[idx]
            .get_or_insert(r.transcode_time_s);
    }
    let mut task_ids = Vec::new();
    let mut times = Vec::new();
    for (tid, (_, row)) in by_key.into_iter().filter(|(_, row)| row.iter().all(Option::is_some)).enumerate()
    {
        task_ids.push(tid as u64);
        times.extend(row.into_iter().map(Option::unwrap));
    }
    if task_ids.is_empty() {
        return Err(CliError::input(
            "NoCompleteKeys: no (video, gop, operation) key covers every vm type",
        ));
    }
    EtcMatrix::new(task_ids, catalog.names().map(String::from).collect(), times)
        .map_err(|e| CliError::input(e.to_string()))
}

const SUITABILITY_KEYS: &[&str] = &[
    "alpha", "beta", "cost-pref", "delta-th", "etc", "k", "method", "out", "perf-pref", "trace",
];

pub fn cmd_suitability(args: &SuitabilityArgs) -> Result<(), CliError> {
    let cfg = KvMap::load(args.config.as_deref())?;
    check_command(&cfg, "suitability")?;
    cfg.check_keys(SUITABILITY_KEYS)?;

    let etc_path = resolve(args.etc.clone(), &cfg, "etc")?;
    let trace_path = resolve(args.trace.clone(), &cfg, "trace")?;
    let out = require(resolve(args.out.clone(), &cfg, "out")?, "out")?;
    let perf_pref = resolve(args.perf_pref, &cfg, "perf-pref")?.unwrap_or(0.4);
    let alpha = resolve(args.alpha, &cfg, "alpha")?.unwrap_or(1.0);
    let beta = resolve(args.beta, &cfg, "beta")?.unwrap_or(5.0);
    let delta_th_flag = resolve(args.delta_th, &cfg, "delta-th")?;
    let cost_pref = resolve(args.cost_pref, &cfg, "cost-pref")?;
    let method = resolve(args.method.clone(), &cfg, "method")?
        .unwrap_or_else(|| "suitability".into());
    let k = resolve(args.k, &cfg, "k")?.unwrap_or(0.5);

    let catalog = default_vm_catalog();
    let etc = match (&etc_path, &trace_path) {
        (Some(path), None) => parse_etc(&read_input(path)?, &catalog)
            .map_err(|e| CliError::input(e.to_string()))?,
        (None, Some(path)) => {
            let records = parse_trace(&read_input(path)?, &catalog)
                .map_err(|e| CliError::input(e.to_string()))?;
            etc_from_trace(&records, &catalog)?
        }
        _ => return Err(CliError::input("MissingInput: need exactly one of --etc/--trace")),
    };

    out_dir(&out)?;
    match method.as_str() {
        "suitability" => {
            let params =
                FuzzyParams::new(alpha, beta).map_err(|e| CliError::input(e.to_string()))?;
            let delta_th = match (delta_th_flag, cost_pref) {
                (Some(d), _) => d,
                (None, Some(c)) => threshold_gap_from_cost(c, &params)
                    .map_err(|e| CliError::input(e.to_string()))?,
                (None, None) => {
                    let pref = TradeoffPreference::from_performance(perf_pref)
                        .map_err(|e| CliError::input(e.to_string()))?;
                    threshold_gap(&pref, &params).map_err(|e| CliError::input(e.to_string()))?
                }
            };
            let matrix = suitability_matrix_with_gap(&etc, &catalog, delta_th)
                .map_err(|e| CliError::input(e.to_string()))?;
            println!("delta_th={delta_th:.6}");
            crate::write_output(&out.join("suitability.csv"), &serialize_suitability(&matrix))?;
        }
        "naive" => {
            let params = NaiveParams::new(k).map_err(|e| CliError::input(e.to_string()))?;
            let rows = naive_matrix(&etc, &catalog, &params)
                .map_err(|e| CliError::input(e.to_string()))?;
            // suitability layout with an empty tolerance column
            let mut text = String::from("task_id,delta_th");
            for vm in etc.vm_types() {
                text.push(',');
                text.push_str(vm);
            }
            text.push('\n');
            for (task_id, scores) in rows {
                text.push_str(&format!("{task_id},"));
                for s in scores {
                    text.push_str(&format!(",{s:.4}"));
                }
                text.push('\n');
            }
            crate::write_output(&out.join("suitability.csv"), &text)?;
        }
        other => return Err(CliError::input(format!("UnknownEnum: method `{other}`"))),
    }

    let mut manifest = Manifest::new("suitability");
    manifest
        .set("out", out.display())
        .set("method", &method)
        .set("perf-pref", perf_pref)
        .set("alpha", alpha)
        .set("beta", beta)
        .set("k", k)
        .set_opt("delta-th", delta_th_flag)
        .set_opt("cost-pref", cost_pref)
        .set_opt("etc", etc_path.as_ref().map(|p| p.display().to_string()))
        .set_opt("trace", trace_path.as_ref().map(|p| p.display().to_string()));
    manifest.write(&out)?;
    Ok(())
}

const GENERATE_KEYS: &[&str] = &[
    "arrival",
    "fit",
    "fps",
    "gops-per-video",
    "mix",
    "n",
    "out",
    "predictor",
    "ratio-cpu_opt",
    "ratio-general",
    "ratio-mem_opt",
    "seed",
    "time-floor",
    "window",
];

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let cfg = KvMap::load(args.config.as_deref())?;
    check_command(&cfg, "generate")?;
    cfg.check_keys(GENERATE_KEYS)?;

    let n = require(resolve(args.n, &cfg, "n")?, "n")?;
    let out = require(resolve(args.out.clone(), &cfg, "out")?, "out")?;
    let mix_spec =
        resolve(args.mix.clone(), &cfg, "mix")?.unwrap_or_else(|| "mixed:1.0".into());
    let window = resolve(args.window, &cfg, "window")?.unwrap_or(60.0);
    let gops_per_video = resolve(args.gops_per_video, &cfg, "gops-per-video")?.unwrap_or(1);
    let fps = resolve(args.fps, &cfg, "fps")?.unwrap_or(30.0);
    let arrival_spec =
        resolve(args.arrival.clone(), &cfg, "arrival")?.unwrap_or_else(|| "uniform".into());
    let seed = resolve(args.seed, &cfg, "seed")?.unwrap_or(0);
    let predictor = parse_predictor(
        &resolve(args.predictor.clone(), &cfg, "predictor")?
            .unwrap_or_else(|| "frame_count".into()),
    )?;
    let default_fit = default_base_fit();
    let fit_spec = resolve(args.fit.clone(), &cfg, "fit")?.unwrap_or_else(|| {
        format!("{},{},{}", default_fit.a, default_fit.b, default_fit.c)
    });
    let time_floor = resolve(args.time_floor, &cfg, "time-floor")?.unwrap_or(DEFAULT_TIME_FLOOR_S);

    let defaults = default_ratio_distributions();
    let mut ratio_specs: BTreeMap<String, String> = defaults
        .iter()
        .map(|(vm, d)| (vm.clone(), format!("{},{},{}", d.mean, d.std, d.floor)))
        .collect();
    for vm in ["general", "cpu_opt", "mem_opt"] {
        if let Some(spec) = cfg.get(&format!("ratio-{vm}")) {
            ratio_specs.insert(vm.to_string(), spec.to_string());
        }
    }
    let ratio_dists: BTreeMap<String, RatioDistribution> = ratio_specs
        .iter()
        .map(|(vm, spec)| Ok((vm.clone(), parse_ratio_dist(vm, spec)?)))
        .collect::<Result<_, CliError>>()?;

    let arrival = match arrival_spec.as_str() {
        "uniform" => ArrivalProcess::Uniform,
        "poisson" => ArrivalProcess::Poisson,
        other => return Err(CliError::input(format!("UnknownEnum: arrival `{other}`"))),
    };
    let mut config = GenerateConfig::new(n, parse_mix(&mix_spec)?, window, seed);
    config.gops_per_video = gops_per_video;
    config.fps = fps;
    config.arrival = arrival;
    let workload = generate_workload(&config).map_err(|e| CliError::input(e.to_string()))?;

    let base_fit = parse_fit_coeffs(&fit_spec, predictor)?;
    let catalog = default_vm_catalog();
    let etc = build_etc(&workload, &base_fit, &ratio_dists, &catalog, seed, time_floor)
        .map_err(|e| CliError::input(e.to_string()))?;

    out_dir(&out)?;
    crate::write_output(&out.join("workload.csv"), &serialize_workload(&workload))?;
    crate::write_output(&out.join("etc.csv"), &serialize_etc(&etc))?;

    let mut manifest = Manifest::new("generate");
    manifest
        .set("n", n)
        .set("out", out.display())
        .set("mix", &mix_spec)
        .set("window", window)
        .set("gops-per-video", gops_per_video)
        .set("fps", fps)
        .set("arrival", &arrival_spec)
        .set("seed", seed)
        .set("predictor", predictor)
        .set("fit", &fit_spec)
        .set("time-floor", time_floor);
    for (vm, spec) in &ratio_specs {
        manifest.set(&format!("ratio-{vm}"), spec);
    }
    manifest.write(&out)?;
    Ok(())
}

const SIMULATE_KEYS: &[&str] = &[
    "allowance",
    "alpha",
    "beta",
    "cluster",
    "delta-th",
    "emit-events",
    "etc",
    "k",
    "noise",
    "out",
    "parallel",
    "perf-pref",
    "policy",
    "quantum",
    "regen-arrivals",
    "reps",
    "scheduler-window",
    "seed",
    "workload",
];

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = KvMap::load(args.config.as_deref())?;
    check_command(&cfg, "simulate")?;
    cfg.check_keys(SIMULATE_KEYS)?;

    let workload_path = require(resolve(args.workload.clone(), &cfg, "workload")?, "workload")?;
    let etc_path = require(resolve(args.etc.clone(), &cfg, "etc")?, "etc")?;
    let cluster_spec = require(resolve(args.cluster.clone(), &cfg, "cluster")?, "cluster")?;
    let out = require(resolve(args.out.clone(), &cfg, "out")?, "out")?;
    let policy_spec =
        resolve(args.policy.clone(), &cfg, "policy")?.unwrap_or_else(|| "suitability".into());
    let perf_pref = resolve(args.perf_pref, &cfg, "perf-pref")?.unwrap_or(0.4);
    let alpha = resolve(args.alpha, &cfg, "alpha")?.unwrap_or(1.0);
    let beta = resolve(args.beta, &cfg, "beta")?.unwrap_or(5.0);
    let delta_th = resolve(args.delta_th, &cfg, "delta-th")?;
    let k = resolve(args.k, &cfg, "k")?.unwrap_or(0.5);
    let reps = resolve(args.reps, &cfg, "reps")?.unwrap_or(1);
    let seed = resolve(args.seed, &cfg, "seed")?.unwrap_or(0);
    let allowance_spec =
        resolve(args.allowance.clone(), &cfg, "allowance")?.unwrap_or_else(|| "5".into());
    let quantum = resolve(args.quantum, &cfg, "quantum")?.unwrap_or(3600.0);
    let scheduler_window = resolve(args.scheduler_window, &cfg, "scheduler-window")?.unwrap_or(10);
    let noise = resolve(args.noise, &cfg, "noise")?.unwrap_or(0.0);
    let regen_arrivals = resolve_flag(args.regen_arrivals, &cfg, "regen-arrivals")?;
    let emit_events = resolve_flag(args.emit_events, &cfg, "emit-events")?;
    let parallel = resolve(args.parallel, &cfg, "parallel")?.unwrap_or(1);

    if reps == 0 {
        return Err(CliError::input("BadParams: reps must be >= 1"));
    }
    let catalog = default_vm_catalog();
    let workload = parse_workload(&read_input(&workload_path)?)
        .map_err(|e| CliError::input(e.to_string()))?;
    let etc =
        parse_etc(&read_input(&etc_path)?, &catalog).map_err(|e| CliError::input(e.to_string()))?;
    let mut cluster =
        ClusterConfig::new(parse_cluster(&cluster_spec)?).map_err(|e| CliError::input(e.to_string()))?;
    cluster.billing_quantum_s = quantum;
    cluster.startup_allowance_s = parse_allowance(&allowance_spec)?;
    cluster.validate().map_err(|e| CliError::input(e.to_string()))?;

    let policy = match policy_spec.as_str() {
        "suitability" => match delta_th {
            Some(d) => Policy::SuitabilityGap { delta_th: d },
            None => Policy::Suitability {
                pref: TradeoffPreference::from_performance(perf_pref)
                    .map_err(|e| CliError::input(e.to_string()))?,
                fuzzy: FuzzyParams::new(alpha, beta).map_err(|e| CliError::input(e.to_string()))?,
            },
        },
        "naive" => Policy::Naive {
            params: NaiveParams::new(k).map_err(|e| CliError::input(e.to_string()))?,
        },
        "fastest_vm" => Policy::FastestVm,
        "random" => Policy::Random,
        other => return Err(CliError::input(format!("UnknownEnum: policy `{other}`"))),
    };
    let options = SimOptions { scheduler_window, estimate_noise_std: noise };

    let run_one = |rep: usize| -> Result<SimResult, CliError> {
        let rep_seed = mix(seed, &[tag::REPLICATION, rep as u64]);
        let rep_workload = if regen_arrivals {
            resample_arrivals(&workload, rep_seed).map_err(|e| CliError::input(e.to_string()))?
        } else {
            workload.clone()
        };
        run_sim(&rep_workload, &etc, &cluster, &catalog, &policy, &options, rep_seed)
            .map_err(|e| CliError::input(e.to_string()))
    };
    let results: Vec<SimResult> = if parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| CliError::internal(format!("thread pool: {e}")))?;
        pool.install(|| (0..reps).into_par_iter().map(run_one).collect::<Result<_, _>>())?
    } else {
        (0..reps).map(run_one).collect::<Result<_, _>>()?
    };

    out_dir(&out)?;
    let mut reps_csv = String::from("rep,seed,startup_delay_mean_s,miss_rate,cost_usd\n");
    for (rep, result) in results.iter().enumerate() {
        reps_csv.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            rep,
            result.replication_seed,
            result.mean_startup_delay_s(),
            result.miss_rate(),
            result.total_cost_usd
        ));
    }
    crate::write_output(&out.join("reps.csv"), &reps_csv)?;

    if reps >= 2 {
        let summaries: Vec<_> = SummaryMetric::ALL
            .iter()
            .map(|&m| aggregate(&results, m))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::input(e.to_string()))?;
        crate::write_output(&out.join("summary.csv"), &serialize_ci_summaries(&summaries))?;
    }

    if emit_events {
        for (rep, result) in results.iter().enumerate() {
            let rep_workload = if regen_arrivals {
                resample_arrivals(&workload, result.replication_seed)
                    .map_err(|e| CliError::input(e.to_string()))?
            } else {
                workload.clone()
            };
            let name = if reps == 1 {
                "events.csv".to_string()
            } else {
                format!("events_rep{rep:03}.csv")
            };
            let rows = event_log(&rep_workload, result);
            crate::write_output(&out.join(name), &serialize_events(&rows))?;
        }
    }

    let mut manifest = Manifest::new("simulate");
    manifest
        .set("workload", workload_path.display())
        .set("etc", etc_path.display())
        .set("cluster", &cluster_spec)
        .set("out", out.display())
        .set("policy", &policy_spec)
        .set("perf-pref", perf_pref)
        .set("alpha", alpha)
        .set("beta", beta)
        .set("k", k)
        .set("reps", reps)
        .set("seed", seed)
        .set("allowance", &allowance_spec)
        .set("quantum", quantum)
        .set("scheduler-window", scheduler_window)
        .set("noise", noise)
        .set("regen-arrivals", regen_arrivals)
        .set("emit-events", emit_events)
        .set("parallel", parallel)
        .set_opt("delta-th", delta_th);
    manifest.write(&out)?;
    Ok(())
}
