//! Trace analyses (performance-ratio histograms, threshold tables,
//! per-operation means) and replication aggregation with 95% confidence
//! intervals.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::scalar::Real;
use crate::simcore::SimResult;
use crate::workload::{Catalog, Operation, TraceRecord};

/// Sample mean and standard deviation (n-1 denominator). The deviation
/// is 0 for a single sample.
pub fn mean_std<R: Real>(xs: &[R]) -> (R, R) {
    let n = R::from_usize(xs.len()).unwrap();
    let mean = xs.iter().fold(R::zero(), |a, &x| a + x) / n;
    if xs.len() < 2 {
        return (mean, R::zero());
    }
    let ss = xs.iter().fold(R::zero(), |a, &x| {
        let d = x - mean;
        a + d * d
    });
    (mean, (ss / (n - R::one())).sqrt())
}

/// Matches non-baseline records to the baseline time of the same
/// `(video_id, gop_index, operation)` key and returns the performance
/// ratios, plus the count of records that had no baseline partner.
fn matched_ratios(
    trace: &[TraceRecord],
    baseline_vm: &str,
    vm_filter: Option<&str>,
    operation_filter: Option<Operation>,
) -> (Vec<(String, Operation, f64)>, usize) {
    let mut baseline: BTreeMap<(&str, u32, Operation), f64> = BTreeMap::new();
    for r in trace {
        if r.vm_type == baseline_vm {
            baseline
                .entry((r.video_id.as_str(), r.gop_index, r.operation))
                .or_insert(r.transcode_time_s);
        }
    }
    let mut ratios = Vec::new();
    let mut skipped = 0usize;
    for r in trace {
        if r.vm_type == baseline_vm {
            continue;
        }
        if vm_filter.is_some_and(|vm| vm != r.vm_type) {
            continue;
        }
        if operation_filter.is_some_and(|op| op != r.operation) {
            continue;
        }
        match baseline.get(&(r.video_id.as_str(), r.gop_index, r.operation)) {
            Some(&base) => {
                ratios.push((r.vm_type.clone(), r.operation, r.transcode_time_s / base))
            }
            None => skipped += 1,
        }
    }
    (ratios, skipped)
}

/// Fixed-width histogram plus the plain sample moments of the data (the
/// parameters of the fitted Normal).
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFit {
    /// `bins + 1` ascending edges; the first is `floor(min/width)*width`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub std: f64,
    /// Non-baseline records that had no baseline partner.
    pub skipped_pairs: usize,
}

/// Histograms the performance ratios of matched pairs. Optional filters
/// restrict to one VM type and/or one operation; by default all are
/// pooled.
pub fn ratio_histogram(
    trace: &[TraceRecord],
    baseline_vm: &str,
    bin_width: f64,
    vm_filter: Option<&str>,
    operation_filter: Option<Operation>,
) -> Result<HistogramFit, MetricsError> {
    if !(bin_width > 0.0) {
        return Err(MetricsError::BadBinWidth(bin_width));
    }
    let (pairs, skipped_pairs) = matched_ratios(trace, baseline_vm, vm_filter, operation_filter);
    if pairs.is_empty() {
        return Err(MetricsError::NoMatchedPairs);
    }
    let ratios: Vec<f64> = pairs.into_iter().map(|(_, _, r)| r).collect();
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min / bin_width).floor() * bin_width;
    // half-open [edge, edge + width) bins; a max landing exactly on an
    // edge gets its own bin
    let n_bins = (((max - lo) / bin_width).floor() as usize) + 1;
    let mut counts = vec![0u64; n_bins];
    for &r in &ratios {
        let idx = (((r - lo) / bin_width).floor() as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let bin_edges = (0..=n_bins).map(|i| lo + bin_width * i as f64).collect();
    let (mean, std) = mean_std(&ratios);
    Ok(HistogramFit { bin_edges, counts, mean, std, skipped_pairs })
}

/// Share of matched pairs under a ratio threshold, per (VM type,
/// operation). Cells with no samples are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pub threshold: f64,
    /// Strict uses `ratio < threshold`, otherwise `ratio <= threshold`.
    pub strict: bool,
    pub cells: BTreeMap<(String, Operation), f64>,
}

pub fn threshold_table(
    trace: &[TraceRecord],
    baseline_vm: &str,
    threshold: f64,
    strict: bool,
) -> Result<ThresholdTable, MetricsError> {
    let (pairs, _) = matched_ratios(trace, baseline_vm, None, None);
    if pairs.is_empty() {
        return Err(MetricsError::NoMatchedPairs);
    }
    let mut hit: BTreeMap<(String, Operation), (u64, u64)> = BTreeMap::new();
    for (vm, op, ratio) in pairs {
        let entry = hit.entry((vm, op)).or_insert((0, 0));
        entry.1 += 1;
        let under = if strict { ratio < threshold } else { ratio <= threshold };
        if under {
            entry.0 += 1;
        }
    }
    let cells = hit
        .into_iter()
        .map(|(key, (under, total))| (key, 100.0 * under as f64 / total as f64))
        .collect();
    Ok(ThresholdTable { threshold, strict, cells })
}

/// Arithmetic mean transcoding seconds grouped by (VM type, operation).
pub fn summarize_by_operation(
    trace: &[TraceRecord],
) -> Result<BTreeMap<(String, Operation), f64>, MetricsError> {
    if trace.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let mut acc: BTreeMap<(String, Operation), (f64, u64)> = BTreeMap::new();
    for r in trace {
        let entry = acc.entry((r.vm_type.clone(), r.operation)).or_insert((0.0, 0));
        entry.0 += r.transcode_time_s;
        entry.1 += 1;
    }
    Ok(acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect())
}

/// Per-video variant: means grouped by (video, VM type, operation).
pub fn summarize_by_operation_per_video(
    trace: &[TraceRecord],
) -> Result<BTreeMap<(String, String, Operation), f64>, MetricsError> {
    if trace.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let mut acc: BTreeMap<(String, String, Operation), (f64, u64)> = BTreeMap::new();
    for r in trace {
        let entry = acc
            .entry((r.video_id.clone(), r.vm_type.clone(), r.operation))
            .or_insert((0.0, 0));
        entry.0 += r.transcode_time_s;
        entry.1 += 1;
    }
    Ok(acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect())
}

/// Replication metric being summarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryMetric {
    StartupDelayS,
    MissRate,
    CostUsd,
}

impl SummaryMetric {
    pub const ALL: [SummaryMetric; 3] =
        [SummaryMetric::StartupDelayS, SummaryMetric::MissRate, SummaryMetric::CostUsd];

    pub fn as_str(self) -> &'static str {
        match self {
            SummaryMetric::StartupDelayS => "startup_delay_s",
            SummaryMetric::MissRate => "miss_rate",
            SummaryMetric::CostUsd => "cost_usd",
        }
    }

    /// The metric's value for one replication: the mean startup delay
    /// over streams, the miss rate, or the billed cost.
    pub fn of(self, result: &SimResult) -> f64 {
        match self {
            SummaryMetric::StartupDelayS => result.mean_startup_delay_s(),
            SummaryMetric::MissRate => result.miss_rate(),
            SummaryMetric::CostUsd => result.total_cost_usd,
        }
    }
}

impl std::fmt::Display for SummaryMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mean and normal-approximation 95% confidence half-width over
/// replications (`1.96 * s / sqrt(n)`, sample std).
#[derive(Debug, Clone, PartialEq)]
pub struct CiSummary {
    pub metric: SummaryMetric,
    pub mean: f64,
    pub ci_half_width: f64,
    pub n_reps: usize,
}

pub fn aggregate(replications: &[SimResult], metric: SummaryMetric) -> Result<CiSummary, MetricsError> {
    aggregate_values(
        &replications.iter().map(|r| metric.of(r)).collect::<Vec<_>>(),
        metric,
    )
}

/// Aggregation over raw per-replication values.
pub fn aggregate_values(values: &[f64], metric: SummaryMetric) -> Result<CiSummary, MetricsError> {
    if values.len() < 2 {
        return Err(MetricsError::TooFewReps(values.len()));
    }
    let (mean, std) = mean_std(values);
    Ok(CiSummary {
        metric,
        mean,
        ci_half_width: 1.96 * std / (values.len() as f64).sqrt(),
        n_reps: values.len(),
    })
}

/// `threshold_table.csv`: rows are non-baseline VM types in catalog
/// order, columns the four operations, cells percentages with 2 decimals
/// (empty when the cell had no samples).
pub fn serialize_threshold_table(
    table: &ThresholdTable,
    catalog: &Catalog,
    baseline_vm: &str,
) -> String {
    let mut out = String::from("vm_type");
    for op in Operation::ALL {
        out.push(',');
        out.push_str(op.as_str());
    }
    out.push('\n');
    for vm in catalog.names().filter(|&vm| vm != baseline_vm) {
        out.push_str(vm);
        for op in Operation::ALL {
            out.push(',');
            if let Some(pct) = table.cells.get(&(vm.to_string(), op)) {
                out.push_str(&format!("{pct:.2}"));
            }
        }
        out.push('\n');
    }
    out
}

/// `histogram.csv`: `bin_lo,bin_hi,count` rows plus a trailing comment
/// with the fitted moments.
pub fn serialize_histogram(hist: &HistogramFit) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (i, &count) in hist.counts.iter().enumerate() {
        out.push_str(&format!(
            "{:.6},{:.6},{}\n",
            hist.bin_edges[i],
            hist.bin_edges[i + 1],
            count
        ));
    }
    out.push_str(&format!("#mean={:.6},std={:.6}\n", hist.mean, hist.std));
    out
}

/// `summary.csv`: one row per metric.
pub fn serialize_ci_summaries(summaries: &[CiSummary]) -> String {
    let mut out = String::from("metric,mean,ci_half_width,n_reps\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            s.metric, s.mean, s.ci_half_width, s.n_reps
        ));
    }
    out
}

/// `operation_means.csv`: long-format per-(VM type, operation) means.
pub fn serialize_operation_means(means: &BTreeMap<(String, Operation), f64>) -> String {
    let mut out = String::from("vm_type,operation,mean_s\n");
    for ((vm, op), mean) in means {
        out.push_str(&format!("{vm},{op},{mean:.6}\n"));
    }
    out
}

/// Per-video variant of the means report.
pub fn serialize_operation_means_per_video(
    means: &BTreeMap<(String, String, Operation), f64>,
) -> String {
    let mut out = String::from("video_id,vm_type,operation,mean_s\n");
    for ((video, vm, op), mean) in means {
        out.push_str(&format!("{video},{vm},{op},{mean:.6}\n"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MetricsError {
    #[error("NoMatchedPairs: no non-baseline record had a baseline partner")]
    NoMatchedPairs,
    #[error("EmptyTrace: no records")]
    EmptyTrace,
    #[error("TooFewReps: got {0}, need at least 2")]
    TooFewReps(usize),
    #[error("BadBinWidth: {0} must be > 0")]
    BadBinWidth(f64),
}
