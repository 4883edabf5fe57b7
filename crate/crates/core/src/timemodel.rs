//! Transcoding-time model: second-degree regression over GOP features,
//! per-VM performance-ratio distributions, and ETC matrix construction.
//!
//! The expected-time-to-compute (ETC) matrix holds the expected
//! transcoding seconds for every (task, VM type) pair. The baseline
//! column comes from the regression; other columns scale the baseline by
//! ratios drawn from per-VM Normal distributions fitted to benchmark
//! histograms (general 2.781 +- 1.524, cpu_opt 1.263 +- 0.508, mem_opt
//! 1.608 +- 0.652 relative to gpu).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::rng::{tag, Stream};
use crate::scalar::Real;
use crate::workload::{Catalog, TraceParseError, Workload, BASELINE_VM};

/// Lower clamp applied to predicted times; quadratic extrapolation can
/// dip below zero for tiny GOPs.
pub const DEFAULT_TIME_FLOOR_S: f64 = 0.05;

/// Lower truncation bound for ratio draws; the Normal tails would
/// otherwise produce non-physical ratios near or below zero.
pub const DEFAULT_RATIO_FLOOR: f64 = 0.1;

/// Which GOP feature the regression runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    FrameCount,
    GopSizeMb,
}

impl Predictor {
    pub fn as_str(self) -> &'static str {
        match self {
            Predictor::FrameCount => "frame_count",
            Predictor::GopSizeMb => "gop_size_mb",
        }
    }

    pub fn parse(s: &str) -> Option<Predictor> {
        match s {
            "frame_count" => Some(Predictor::FrameCount),
            "gop_size_mb" => Some(Predictor::GopSizeMb),
            _ => None,
        }
    }
}

impl std::fmt::Display for Predictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Least-squares fit of `t = a + b*x + c*x^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit<R: Real> {
    pub a: R,
    pub b: R,
    pub c: R,
    pub predictor: Predictor,
    pub r2: Option<R>,
}

impl<R: Real> QuadraticFit<R> {
    pub fn new(a: R, b: R, c: R, predictor: Predictor) -> Self {
        Self { a, b, c, predictor, r2: None }
    }

    /// Raw polynomial evaluation.
    pub fn eval(&self, x: R) -> R {
        self.a + self.b * x + self.c * x * x
    }

    /// Evaluation clamped to a positive floor, for use as a time.
    pub fn predict_time(&self, x: R, floor: R) -> R {
        self.eval(x).max(floor)
    }
}

/// Default baseline regression over frame count when no trace is fitted:
/// a 250-frame GOP costs about 3.55 s on the gpu baseline. Shipped as a
/// tunable default, not measured truth.
pub fn default_base_fit() -> QuadraticFit<f64> {
    QuadraticFit::new(0.30, 0.012, 4.0e-6, Predictor::FrameCount)
}

/// Regression and ratio-model errors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("TooFewPoints: need at least 3 points")]
    TooFewPoints,
    #[error("SingularSystem: {0}")]
    SingularSystem(&'static str),
    #[error("ZeroVariance: all responses equal")]
    ZeroVariance,
}

/// Solves a 3x3 linear system by Gaussian elimination with partial
/// pivoting after scaling each column to unit max magnitude.
fn solve3<R: Real>(mut m: [[R; 3]; 3], mut rhs: [R; 3]) -> Result<[R; 3], FitError> {
    let mut scale = [R::one(); 3];
    for j in 0..3 {
        let mut max = R::zero();
        for row in &m {
            max = max.max(row[j].abs());
        }
        if max <= R::zero() {
            return Err(FitError::SingularSystem("zero column"));
        }
        scale[j] = max;
        for row in &mut m {
            row[j] = row[j] / max;
        }
    }
    let mut perm = [0usize, 1, 2];
    for k in 0..3 {
        let pivot_row = (k..3)
            .max_by(|&i, &j| m[perm[i]][k].abs().partial_cmp(&m[perm[j]][k].abs()).unwrap())
            .unwrap();
        perm.swap(k, pivot_row);
        let pivot = m[perm[k]][k];
        if pivot.abs() < R::lit(1e-12) {
            return Err(FitError::SingularSystem("pivot below 1e-12"));
        }
        let pivot_vals = m[perm[k]];
        for i in (k + 1)..3 {
            let factor = m[perm[i]][k] / pivot;
            for (slot, &p) in m[perm[i]].iter_mut().zip(&pivot_vals).skip(k) {
                *slot = *slot - factor * p;
            }
            rhs[perm[i]] = rhs[perm[i]] - factor * rhs[perm[k]];
        }
    }
    let mut y = [R::zero(); 3];
    for k in (0..3).rev() {
        let mut acc = rhs[perm[k]];
        for j in (k + 1)..3 {
            acc = acc - m[perm[k]][j] * y[j];
        }
        y[k] = acc / m[perm[k]][k];
    }
    Ok([y[0] / scale[0], y[1] / scale[1], y[2] / scale[2]])
}

/// Fits `t = a + b*x + c*x^2` by least squares via the 3x3 normal
/// equations. Requires at least 3 points over at least 3 distinct x.
pub fn fit_quadratic<R: Real>(
    points: &[(R, R)],
    predictor: Predictor,
) -> Result<QuadraticFit<R>, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints);
    }
    let mut distinct: Vec<R> = Vec::new();
    for &(x, _) in points {
        if !distinct.contains(&x) {
            distinct.push(x);
            if distinct.len() == 3 {
                break;
            }
        }
    }
    if distinct.len() < 3 {
        return Err(FitError::SingularSystem("fewer than 3 distinct x values"));
    }

    let n = R::from_usize(points.len()).unwrap();
    let (mut sx, mut sx2, mut sx3, mut sx4) = (R::zero(), R::zero(), R::zero(), R::zero());
    let (mut st, mut sxt, mut sx2t) = (R::zero(), R::zero(), R::zero());
    for &(x, t) in points {
        let x2 = x * x;
        sx = sx + x;
        sx2 = sx2 + x2;
        sx3 = sx3 + x2 * x;
        sx4 = sx4 + x2 * x2;
        st = st + t;
        sxt = sxt + x * t;
        sx2t = sx2t + x2 * t;
    }
    let m = [[n, sx, sx2], [sx, sx2, sx3], [sx2, sx3, sx4]];
    let [a, b, c] = solve3(m, [st, sxt, sx2t])?;
    let mut fit = QuadraticFit::new(a, b, c, predictor);
    fit.r2 = match r_squared(&fit, points) {
        Ok(v) => Some(v),
        // a constant response fit exactly: everything there is to
        // explain (nothing) is explained
        Err(FitError::ZeroVariance) => {
            let scale = points.iter().fold(R::zero(), |acc, &(_, t)| acc + t * t);
            let ss_res = points.iter().fold(R::zero(), |acc, &(x, t)| {
                let r = t - fit.eval(x);
                acc + r * r
            });
            if ss_res <= R::lit(1e-12) * scale.max(R::one()) {
                Some(R::one())
            } else {
                None
            }
        }
        Err(_) => None,
    };
    Ok(fit)
}

/// Coefficient of determination `1 - SS_res/SS_tot`. Negative values are
/// possible for a bad fit on held-out data and are returned as-is.
pub fn r_squared<R: Real>(fit: &QuadraticFit<R>, points: &[(R, R)]) -> Result<R, FitError> {
    if points.is_empty() {
        return Err(FitError::TooFewPoints);
    }
    let n = R::from_usize(points.len()).unwrap();
    let mean = points.iter().fold(R::zero(), |acc, &(_, t)| acc + t) / n;
    let mut ss_res = R::zero();
    let mut ss_tot = R::zero();
    for &(x, t) in points {
        let r = t - fit.eval(x);
        ss_res = ss_res + r * r;
        let d = t - mean;
        ss_tot = ss_tot + d * d;
    }
    if ss_tot <= R::zero() {
        return Err(FitError::ZeroVariance);
    }
    Ok(R::one() - ss_res / ss_tot)
}

/// Truncated Normal model of a VM type's performance ratio relative to
/// the baseline. A `floor` of 0 disables truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioDistribution {
    pub vm_type: String,
    pub mean: f64,
    pub std: f64,
    pub floor: f64,
}

impl RatioDistribution {
    pub fn new(vm_type: impl Into<String>, mean: f64, std: f64, floor: f64) -> Result<Self, EtcError> {
        let vm_type = vm_type.into();
        if !(mean > 0.0) || !(std > 0.0) || !(floor >= 0.0) || floor >= mean {
            return Err(EtcError::BadDistribution(vm_type));
        }
        Ok(Self { vm_type, mean, std, floor })
    }
}

/// The fitted Normal ranges of the benchmark performance-ratio
/// histograms, keyed by VM type, with the default truncation floor.
pub fn default_ratio_distributions() -> BTreeMap<String, RatioDistribution> {
    [
        ("general", 2.781, 1.524),
        ("cpu_opt", 1.263, 0.508),
        ("mem_opt", 1.608, 0.652),
    ]
    .into_iter()
    .map(|(name, mean, std)| {
        (
            name.to_string(),
            RatioDistribution::new(name, mean, std, DEFAULT_RATIO_FLOOR).unwrap(),
        )
    })
    .collect()
}

/// Draws one ratio: Normal(mean, std) resampled until it reaches the
/// floor. A non-positive floor disables truncation. Gives up after 1000
/// attempts (only reachable with a floor far in the upper tail).
pub fn sample_ratio(dist: &RatioDistribution, stream: &mut Stream) -> Result<f64, EtcError> {
    if dist.floor <= 0.0 {
        return Ok(stream.normal(dist.mean, dist.std));
    }
    for _ in 0..1000 {
        let draw = stream.normal(dist.mean, dist.std);
        if draw >= dist.floor {
            return Ok(draw);
        }
    }
    Err(EtcError::Degenerate(dist.vm_type.clone()))
}

/// Expected transcoding seconds per (task, VM type).
#[derive(Debug, Clone, PartialEq)]
pub struct EtcMatrix {
    task_ids: Vec<u64>,
    vm_types: Vec<String>,
    /// Row-major `task x vm` grid.
    times_s: Vec<f64>,
    row_of: BTreeMap<u64, usize>,
}

impl EtcMatrix {
    pub fn new(task_ids: Vec<u64>, vm_types: Vec<String>, times_s: Vec<f64>) -> Result<Self, EtcError> {
        if times_s.len() != task_ids.len() * vm_types.len() {
            return Err(EtcError::DimensionMismatch);
        }
        if times_s.iter().any(|&t| !(t > 0.0)) {
            return Err(EtcError::NonPositiveEntry);
        }
        let mut row_of = BTreeMap::new();
        for (i, &tid) in task_ids.iter().enumerate() {
            if row_of.insert(tid, i).is_some() {
                return Err(EtcError::DuplicateTask(tid));
            }
        }
        Ok(Self { task_ids, vm_types, times_s, row_of })
    }

    pub fn task_ids(&self) -> &[u64] {
        &self.task_ids
    }

    pub fn vm_types(&self) -> &[String] {
        &self.vm_types
    }

    pub fn vm_index(&self, vm_type: &str) -> Option<usize> {
        self.vm_types.iter().position(|v| v == vm_type)
    }

    pub fn n_tasks(&self) -> usize {
        self.task_ids.len()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.vm_types.len();
        &self.times_s[row * w..(row + 1) * w]
    }

    pub fn row_for_task(&self, task_id: u64) -> Option<&[f64]> {
        self.row_of.get(&task_id).map(|&i| self.row(i))
    }

    pub fn time(&self, task_id: u64, vm_index: usize) -> Option<f64> {
        self.row_for_task(task_id).map(|r| r[vm_index])
    }
}

/// Builds the ETC matrix for a workload. The baseline (`gpu`) column is
/// the clamped regression prediction; every other column multiplies the
/// baseline by a ratio drawn from that VM's distribution on a stream
/// keyed by `(seed, task_id, vm_index)`, so entries do not depend on
/// iteration order.
pub fn build_etc(
    workload: &Workload,
    base_fit: &QuadraticFit<f64>,
    ratio_dists: &BTreeMap<String, RatioDistribution>,
    catalog: &Catalog,
    seed: u64,
    time_floor_s: f64,
) -> Result<EtcMatrix, EtcError> {
    let baseline_idx = catalog
        .index_of(BASELINE_VM)
        .ok_or_else(|| EtcError::MissingDistribution(BASELINE_VM.into()))?;
    for (idx, vm) in catalog.as_slice().iter().enumerate() {
        if idx != baseline_idx && !ratio_dists.contains_key(&vm.name) {
            return Err(EtcError::MissingDistribution(vm.name.clone()));
        }
    }
    let width = catalog.len();
    let mut task_ids = Vec::with_capacity(workload.len());
    let mut times = vec![0.0; workload.len() * width];
    for (row, task) in workload.tasks().iter().enumerate() {
        let x = match base_fit.predictor {
            Predictor::FrameCount => f64::from(task.frame_count),
            Predictor::GopSizeMb => task.gop_size_mb,
        };
        let t_base = base_fit.predict_time(x, time_floor_s);
        for (vm_idx, vm) in catalog.as_slice().iter().enumerate() {
            times[row * width + vm_idx] = if vm_idx == baseline_idx {
                t_base
            } else {
                let mut stream =
                    Stream::derived(seed, tag::ETC, &[task.task_id, vm_idx as u64]);
                t_base * sample_ratio(&ratio_dists[&vm.name], &mut stream)?
            };
        }
        task_ids.push(task.task_id);
    }
    EtcMatrix::new(task_ids, catalog.names().map(String::from).collect(), times)
}

/// Serializes an ETC matrix: `task_id` plus one column per VM type,
/// seconds with 6 decimals.
pub fn serialize_etc(etc: &EtcMatrix) -> String {
    let mut out = String::new();
    out.push_str("task_id");
    for vm in etc.vm_types() {
        out.push(',');
        out.push_str(vm);
    }
    out.push('\n');
    for (i, &tid) in etc.task_ids().iter().enumerate() {
        out.push_str(&tid.to_string());
        for &t in etc.row(i) {
            out.push_str(&format!(",{t:.6}"));
        }
        out.push('\n');
    }
    out
}

/// Parses an ETC CSV; the header must list the catalog's VM types in
/// catalog order.
pub fn parse_etc(text: &str, catalog: &Catalog) -> Result<EtcMatrix, TraceParseError> {
    let expected_header = {
        let mut h = String::from("task_id");
        for name in catalog.names() {
            h.push(',');
            h.push_str(name);
        }
        h
    };
    let header = text.split('\n').next().unwrap_or("");
    if header != expected_header {
        return Err(TraceParseError::MissingHeader { expected: "task_id,<catalog vm types>" });
    }
    let width = catalog.len();
    let mut task_ids = Vec::new();
    let mut times = Vec::new();
    for (line, raw) in text.split('\n').enumerate().skip(1).filter(|(_, l)| !l.is_empty()) {
        let line = line + 1;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != width + 1 {
            return Err(TraceParseError::BadColumnCount {
                line,
                found: fields.len(),
                expected: width + 1,
            });
        }
        let tid = fields[0].parse::<u64>().map_err(|_| TraceParseError::InvalidNumber {
            line,
            column: "task_id",
            value: fields[0].to_string(),
        })?;
        task_ids.push(tid);
        for &field in &fields[1..] {
            let t = field.parse::<f64>().map_err(|_| TraceParseError::InvalidNumber {
                line,
                column: "time",
                value: field.to_string(),
            })?;
            if !(t > 0.0) {
                return Err(TraceParseError::NonPositiveValue { line, column: "time" });
            }
            times.push(t);
        }
    }
    EtcMatrix::new(task_ids, catalog.names().map(String::from).collect(), times)
        .map_err(|e| TraceParseError::InvalidStructure(e.to_string()))
}

/// ETC construction errors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EtcError {
    #[error("MissingDistribution: {0}")]
    MissingDistribution(String),
    #[error("BadDistribution: {0}")]
    BadDistribution(String),
    #[error("Degenerate: ratio floor unreachable for {0}")]
    Degenerate(String),
    #[error("DimensionMismatch: times grid does not match id lists")]
    DimensionMismatch,
    #[error("NonPositiveEntry: ETC entries must be > 0")]
    NonPositiveEntry,
    #[error("DuplicateTask: {0}")]
    DuplicateTask(u64),
}
