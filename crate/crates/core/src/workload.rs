//! Task and VM domain model, benchmark trace ingestion, and workload synthesis.
//!
//! A workload is a set of GOP transcoding tasks grouped into video streams.
//! Tasks either come from a benchmark trace CSV or are synthesized from
//! content-type profiles (slow motion GOPs carry many frames and more
//! megabytes than fast motion ones).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::rng::{tag, Stream};

/// Exact header of the trace CSV interface.
pub const TRACE_HEADER: &str =
    "video_id,gop_index,operation,vm_type,content_type,gop_size_mb,frame_count,transcode_time_s";

/// Exact header of the workload CSV interface.
pub const WORKLOAD_HEADER: &str =
    "task_id,video_id,gop_index,gop_size_mb,frame_count,fps,content_type,arrival_time_s";

/// Motion class of a video's content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContentType {
    Slow,
    Fast,
    Mixed,
}

impl ContentType {
    pub const ALL: [ContentType; 3] = [ContentType::Slow, ContentType::Fast, ContentType::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            ContentType::Slow => "slow",
            ContentType::Fast => "fast",
            ContentType::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<ContentType> {
        match s {
            "slow" => Some(ContentType::Slow),
            "fast" => Some(ContentType::Fast),
            "mixed" => Some(ContentType::Mixed),
            _ => None,
        }
    }
}

impl fmt::Display for ContentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Transcoding operation recorded in a benchmark trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    Codec,
    Bitrate,
    Framerate,
    Resolution,
}

impl Operation {
    pub const ALL: [Operation; 4] = [
        Operation::Codec,
        Operation::Bitrate,
        Operation::Framerate,
        Operation::Resolution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Codec => "codec",
            Operation::Bitrate => "bitrate",
            Operation::Framerate => "framerate",
            Operation::Resolution => "resolution",
        }
    }

    pub fn parse(s: &str) -> Option<Operation> {
        match s {
            "codec" => Some(Operation::Codec),
            "bitrate" => Some(Operation::Bitrate),
            "framerate" => Some(Operation::Framerate),
            "resolution" => Some(Operation::Resolution),
            _ => None,
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One VM type: capacity description plus the hourly dollar rate.
#[derive(Debug, Clone, PartialEq)]
pub struct VmTypeSpec {
    pub name: String,
    pub vcpu: u32,
    pub memory_gb: f64,
    pub hourly_cost: f64,
}

impl VmTypeSpec {
    pub fn new(
        name: impl Into<String>,
        vcpu: u32,
        memory_gb: f64,
        hourly_cost: f64,
    ) -> Result<Self, WorkloadError> {
        let name = name.into();
        if name.is_empty() {
            return Err(WorkloadError::BadVmSpec("empty name".into()));
        }
        if vcpu < 1 {
            return Err(WorkloadError::BadVmSpec(format!("{name}: vcpu must be >= 1")));
        }
        if !(memory_gb > 0.0) {
            return Err(WorkloadError::BadVmSpec(format!("{name}: memory_gb must be > 0")));
        }
        if !(hourly_cost > 0.0) {
            return Err(WorkloadError::BadVmSpec(format!("{name}: hourly_cost must be > 0")));
        }
        Ok(Self { name, vcpu, memory_gb, hourly_cost })
    }
}

/// Ordered collection of VM types with unique names.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    vms: Vec<VmTypeSpec>,
}

impl Catalog {
    pub fn new(vms: Vec<VmTypeSpec>) -> Result<Self, WorkloadError> {
        if vms.is_empty() {
            return Err(WorkloadError::BadVmSpec("catalog is empty".into()));
        }
        for (i, vm) in vms.iter().enumerate() {
            if vms[..i].iter().any(|other| other.name == vm.name) {
                return Err(WorkloadError::BadVmSpec(format!("duplicate vm type {}", vm.name)));
            }
        }
        Ok(Self { vms })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vms.iter().position(|vm| vm.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vms.iter().map(|vm| vm.name.as_str())
    }

    pub fn as_slice(&self) -> &[VmTypeSpec] {
        &self.vms
    }

    pub fn len(&self) -> usize {
        self.vms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vms.is_empty()
    }
}

impl std::ops::Index<usize> for Catalog {
    type Output = VmTypeSpec;
    fn index(&self, i: usize) -> &VmTypeSpec {
        &self.vms[i]
    }
}

/// Name of the baseline VM type used for performance gaps and ratios.
pub const BASELINE_VM: &str = "gpu";

/// The four-entry Amazon EC2 catalog used throughout: general-purpose
/// m4.large, CPU-optimized c4.xlarge, memory-optimized r3.xlarge and
/// GPU g2.xlarge, at their published hourly rates.
pub fn default_vm_catalog() -> Catalog {
    Catalog::new(vec![
        VmTypeSpec::new("general", 2, 8.0, 0.15).unwrap(),
        VmTypeSpec::new("cpu_opt", 4, 7.5, 0.20).unwrap(),
        VmTypeSpec::new("mem_opt", 4, 30.5, 0.33).unwrap(),
        VmTypeSpec::new("gpu", 8, 15.0, 0.65).unwrap(),
    ])
    .expect("default catalog is valid")
}

/// One GOP transcoding job.
#[derive(Debug, Clone, PartialEq)]
pub struct GopTask {
    pub task_id: u64,
    pub video_id: String,
    pub gop_index: u32,
    pub gop_size_mb: f64,
    pub frame_count: u32,
    pub fps: f64,
    pub content_type: ContentType,
    pub arrival_time_s: f64,
}

impl GopTask {
    fn validate(&self) -> Result<(), WorkloadError> {
        if self.video_id.is_empty() {
            return Err(WorkloadError::BadTask(self.task_id, "empty video_id".into()));
        }
        if !(self.gop_size_mb > 0.0) {
            return Err(WorkloadError::BadTask(self.task_id, "gop_size_mb must be > 0".into()));
        }
        if self.frame_count < 1 {
            return Err(WorkloadError::BadTask(self.task_id, "frame_count must be >= 1".into()));
        }
        if !(self.fps > 0.0) {
            return Err(WorkloadError::BadTask(self.task_id, "fps must be > 0".into()));
        }
        if !(self.arrival_time_s >= 0.0) {
            return Err(WorkloadError::BadTask(self.task_id, "arrival_time_s must be >= 0".into()));
        }
        Ok(())
    }
}

/// One row of a benchmark trace: a measured transcoding run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub video_id: String,
    pub gop_index: u32,
    pub operation: Operation,
    pub vm_type: String,
    pub content_type: ContentType,
    pub gop_size_mb: f64,
    pub frame_count: u32,
    pub transcode_time_s: f64,
}

/// A video stream's per-GOP structure, derived from the task list.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoStream {
    pub video_id: String,
    pub fps: f64,
    /// `(task_id, frame_count)` ordered by gop index `0..k`.
    pub gops: Vec<(u64, u32)>,
    /// Arrival of the stream: the arrival time of its gop 0 task.
    pub arrival_time_s: f64,
}

impl VideoStream {
    /// Playback offset of a GOP: summed durations of the GOPs before it.
    pub fn playback_offset_s(&self, gop_index: u32) -> f64 {
        self.gops[..gop_index as usize]
            .iter()
            .map(|&(_, frames)| f64::from(frames) / self.fps)
            .sum()
    }
}

/// An ordered task list plus the per-video stream view.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    tasks: Vec<GopTask>,
    videos: BTreeMap<String, VideoStream>,
    window_s: f64,
}

impl Workload {
    /// Builds a workload, sorting tasks by `(arrival_time_s, task_id)` and
    /// checking every task and stream invariant.
    pub fn new(mut tasks: Vec<GopTask>, window_s: f64) -> Result<Self, WorkloadError> {
        if !(window_s > 0.0) {
            return Err(WorkloadError::BadWindow(window_s));
        }
        for task in &tasks {
            task.validate()?;
            if task.arrival_time_s > window_s {
                return Err(WorkloadError::ArrivalPastWindow(task.task_id));
            }
        }
        tasks.sort_by(|a, b| {
            a.arrival_time_s
                .total_cmp(&b.arrival_time_s)
                .then(a.task_id.cmp(&b.task_id))
        });
        for (i, task) in tasks.iter().enumerate() {
            if tasks[..i].iter().any(|other| other.task_id == task.task_id) {
                return Err(WorkloadError::DuplicateTaskId(task.task_id));
            }
        }

        let mut videos: BTreeMap<String, Vec<&GopTask>> = BTreeMap::new();
        for task in &tasks {
            videos.entry(task.video_id.clone()).or_default().push(task);
        }
        let mut streams = BTreeMap::new();
        for (video_id, mut group) in videos {
            group.sort_by_key(|t| t.gop_index);
            let fps = group[0].fps;
            let mut gops = Vec::with_capacity(group.len());
            for (expect, task) in group.iter().enumerate() {
                if task.gop_index as usize != expect {
                    return Err(WorkloadError::GopIndexGap(video_id.clone(), expect as u32));
                }
                if task.fps != fps {
                    return Err(WorkloadError::InconsistentFps(video_id.clone()));
                }
                gops.push((task.task_id, task.frame_count));
            }
            let arrival_time_s = group[0].arrival_time_s;
            streams.insert(
                video_id.clone(),
                VideoStream { video_id, fps, gops, arrival_time_s },
            );
        }
        Ok(Self { tasks, videos: streams, window_s })
    }

    /// Builds a workload with the window set to the last arrival.
    pub fn from_tasks(tasks: Vec<GopTask>) -> Result<Self, WorkloadError> {
        let window = tasks
            .iter()
            .map(|t| t.arrival_time_s)
            .fold(0.0_f64, f64::max)
            .max(1.0);
        Self::new(tasks, window)
    }

    /// Empty workload (no tasks, unit window).
    pub fn empty() -> Self {
        Self { tasks: Vec::new(), videos: BTreeMap::new(), window_s: 1.0 }
    }

    pub fn tasks(&self) -> &[GopTask] {
        &self.tasks
    }

    pub fn videos(&self) -> &BTreeMap<String, VideoStream> {
        &self.videos
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoStream> {
        self.videos.get(video_id)
    }

    pub fn window_s(&self) -> f64 {
        self.window_s
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

/// Lognormal profile for one content type's frame count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentProfile {
    pub frame_count_median: f64,
    pub frame_count_sigma: f64,
}

/// How stream arrivals are placed inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalProcess {
    /// Independent uniform draws over `[0, window_s]`.
    Uniform,
    /// Exponential inter-arrivals at rate `streams/window_s`, clamped to
    /// the window end.
    Poisson,
}

/// Parameters for synthetic workload generation. All knobs are plain
/// fields so callers can tune the invented profile constants.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub n_tasks: usize,
    pub mix: BTreeMap<ContentType, f64>,
    pub window_s: f64,
    pub seed: u64,
    /// GOPs per synthesized video; 1 makes every task its own stream.
    pub gops_per_video: usize,
    pub fps: f64,
    pub arrival: ArrivalProcess,
    pub slow: ContentProfile,
    pub fast: ContentProfile,
    /// Probability that a GOP of a mixed-motion video uses the slow profile.
    pub mixed_slow_prob: f64,
    /// Median MB per frame and lognormal sigma for GOP size.
    pub mb_per_frame_median: f64,
    pub mb_per_frame_sigma: f64,
}

impl GenerateConfig {
    pub fn new(n_tasks: usize, mix: BTreeMap<ContentType, f64>, window_s: f64, seed: u64) -> Self {
        Self {
            n_tasks,
            mix,
            window_s,
            seed,
            gops_per_video: 1,
            fps: 30.0,
            arrival: ArrivalProcess::Uniform,
            slow: ContentProfile { frame_count_median: 240.0, frame_count_sigma: 0.4 },
            fast: ContentProfile { frame_count_median: 36.0, frame_count_sigma: 0.4 },
            mixed_slow_prob: 0.5,
            mb_per_frame_median: 0.010,
            mb_per_frame_sigma: 0.3,
        }
    }

    fn validate(&self) -> Result<(), WorkloadError> {
        if self.n_tasks == 0 {
            return Err(WorkloadError::BadMix("n_tasks must be >= 1".into()));
        }
        if self.mix.is_empty() {
            return Err(WorkloadError::BadMix("mix is empty".into()));
        }
        let mut sum = 0.0;
        for (ct, frac) in &self.mix {
            if !(*frac >= 0.0) {
                return Err(WorkloadError::BadMix(format!("negative fraction for {ct}")));
            }
            sum += frac;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(WorkloadError::BadMix(format!("fractions sum to {sum}, expected 1")));
        }
        if !(self.window_s > 0.0) {
            return Err(WorkloadError::BadWindow(self.window_s));
        }
        if self.gops_per_video == 0 {
            return Err(WorkloadError::BadMix("gops_per_video must be >= 1".into()));
        }
        if !(self.fps > 0.0) {
            return Err(WorkloadError::BadMix("fps must be > 0".into()));
        }
        Ok(())
    }
}

/// Synthesizes a workload: one stream per `gops_per_video` tasks, stream
/// content type drawn from the mix, one arrival per stream, and per-GOP
/// frame counts / sizes drawn from the content profile. Deterministic in
/// the config (including the seed).
pub fn generate_workload(config: &GenerateConfig) -> Result<Workload, WorkloadError> {
    config.validate()?;
    let mut stream = Stream::derived(config.seed, tag::WORKLOAD, &[]);

    let n_videos = config.n_tasks.div_ceil(config.gops_per_video);
    let mut tasks = Vec::with_capacity(config.n_tasks);
    let mut task_id: u64 = 0;
    let mut last_arrival = 0.0_f64;
    for video_idx in 0..n_videos {
        let video_id = format!("v{video_idx}");
        let content = draw_content(&config.mix, &mut stream);
        let arrival = match config.arrival {
            ArrivalProcess::Uniform => stream.uniform(0.0, config.window_s),
            ArrivalProcess::Poisson => {
                let rate = n_videos as f64 / config.window_s;
                last_arrival += -stream.unit().max(f64::MIN_POSITIVE).ln() / rate;
                last_arrival.min(config.window_s)
            }
        };
        let gops_here = config
            .gops_per_video
            .min(config.n_tasks - video_idx * config.gops_per_video);
        for gop_index in 0..gops_here {
            let profile = match content {
                ContentType::Slow => config.slow,
                ContentType::Fast => config.fast,
                ContentType::Mixed => {
                    if stream.coin(config.mixed_slow_prob) {
                        config.slow
                    } else {
                        config.fast
                    }
                }
            };
            let frame_count = stream
                .lognormal_median(profile.frame_count_median, profile.frame_count_sigma)
                .round()
                .max(1.0) as u32;
            let mb_per_frame =
                stream.lognormal_median(config.mb_per_frame_median, config.mb_per_frame_sigma);
            let gop_size_mb = f64::from(frame_count) * mb_per_frame;
            tasks.push(GopTask {
                task_id,
                video_id: video_id.clone(),
                gop_index: gop_index as u32,
                gop_size_mb,
                frame_count,
                fps: config.fps,
                content_type: content,
                arrival_time_s: arrival,
            });
            task_id += 1;
        }
    }
    Workload::new(tasks, config.window_s)
}

/// Redraws one uniform arrival per stream over `[0, window_s]`, keeping
/// every other task attribute. Streams are visited in video-id order, so
/// the result depends only on the workload and the seed.
pub fn resample_arrivals(workload: &Workload, seed: u64) -> Result<Workload, WorkloadError> {
    let mut stream = Stream::derived(seed, tag::WORKLOAD, &[u64::from(u32::MAX)]);
    let window = workload.window_s();
    let mut arrival_of: BTreeMap<&str, f64> = BTreeMap::new();
    for video_id in workload.videos().keys() {
        arrival_of.insert(video_id, stream.uniform(0.0, window));
    }
    let tasks = workload
        .tasks()
        .iter()
        .map(|t| GopTask { arrival_time_s: arrival_of[t.video_id.as_str()], ..t.clone() })
        .collect();
    Workload::new(tasks, window)
}

fn draw_content(mix: &BTreeMap<ContentType, f64>, stream: &mut Stream) -> ContentType {
    let u = stream.unit();
    let mut acc = 0.0;
    let mut last = ContentType::Slow;
    for (&ct, &frac) in mix {
        acc += frac;
        last = ct;
        if u < acc {
            return ct;
        }
    }
    last
}

/// Errors raised by trace parsing. Each names the first offending
/// 1-based line (the header is line 1).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("MissingHeader: expected `{expected}`")]
    MissingHeader { expected: &'static str },
    #[error("BadColumnCount: line {line} has {found} columns, expected {expected}")]
    BadColumnCount { line: usize, found: usize, expected: usize },
    #[error("UnknownEnum: line {line}, column {column}: `{value}`")]
    UnknownEnum { line: usize, column: &'static str, value: String },
    #[error("NonPositiveValue: line {line}, column {column}")]
    NonPositiveValue { line: usize, column: &'static str },
    #[error("InvalidNumber: line {line}, column {column}: `{value}`")]
    InvalidNumber { line: usize, column: &'static str, value: String },
    #[error("EmptyField: line {line}, column {column}")]
    EmptyField { line: usize, column: &'static str },
    #[error("{0}")]
    InvalidStructure(String),
}

fn parse_f64(
    field: &str,
    line: usize,
    column: &'static str,
) -> Result<f64, TraceParseError> {
    field.parse::<f64>().map_err(|_| TraceParseError::InvalidNumber {
        line,
        column,
        value: field.to_string(),
    })
}

fn parse_u64(
    field: &str,
    line: usize,
    column: &'static str,
) -> Result<u64, TraceParseError> {
    field.parse::<u64>().map_err(|_| TraceParseError::InvalidNumber {
        line,
        column,
        value: field.to_string(),
    })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l))
}

/// Parses the trace CSV format. The header is validated byte-exactly and
/// `vm_type` must name a catalog entry.
pub fn parse_trace(text: &str, catalog: &Catalog) -> Result<Vec<TraceRecord>, TraceParseError> {
    let header = text.split('\n').next().unwrap_or("");
    if header != TRACE_HEADER {
        return Err(TraceParseError::MissingHeader { expected: TRACE_HEADER });
    }
    let mut records = Vec::new();
    for (line, raw) in data_lines(text) {
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 8 {
            return Err(TraceParseError::BadColumnCount { line, found: fields.len(), expected: 8 });
        }
        if fields[0].is_empty() {
            return Err(TraceParseError::EmptyField { line, column: "video_id" });
        }
        let gop_index = parse_u64(fields[1], line, "gop_index")? as u32;
        let operation = Operation::parse(fields[2]).ok_or_else(|| TraceParseError::UnknownEnum {
            line,
            column: "operation",
            value: fields[2].to_string(),
        })?;
        if catalog.index_of(fields[3]).is_none() {
            return Err(TraceParseError::UnknownEnum {
                line,
                column: "vm_type",
                value: fields[3].to_string(),
            });
        }
        let content_type =
            ContentType::parse(fields[4]).ok_or_else(|| TraceParseError::UnknownEnum {
                line,
                column: "content_type",
                value: fields[4].to_string(),
            })?;
        let gop_size_mb = parse_f64(fields[5], line, "gop_size_mb")?;
        if !(gop_size_mb > 0.0) {
            return Err(TraceParseError::NonPositiveValue { line, column: "gop_size_mb" });
        }
        let frame_count = parse_u64(fields[6], line, "frame_count")?;
        if frame_count < 1 {
            return Err(TraceParseError::NonPositiveValue { line, column: "frame_count" });
        }
        let transcode_time_s = parse_f64(fields[7], line, "transcode_time_s")?;
        if !(transcode_time_s > 0.0) {
            return Err(TraceParseError::NonPositiveValue { line, column: "transcode_time_s" });
        }
        records.push(TraceRecord {
            video_id: fields[0].to_string(),
            gop_index,
            operation,
            vm_type: fields[3].to_string(),
            content_type,
            gop_size_mb,
            frame_count: frame_count as u32,
            transcode_time_s,
        });
    }
    Ok(records)
}

/// Serializes trace records in file order, reals with 6 decimals.
pub fn serialize_trace(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{},{:.6}\n",
            r.video_id,
            r.gop_index,
            r.operation,
            r.vm_type,
            r.content_type,
            r.gop_size_mb,
            r.frame_count,
            r.transcode_time_s
        ));
    }
    out
}

/// Parses the workload CSV format; the window is set to the last arrival.
pub fn parse_workload(text: &str) -> Result<Workload, TraceParseError> {
    let header = text.split('\n').next().unwrap_or("");
    if header != WORKLOAD_HEADER {
        return Err(TraceParseError::MissingHeader { expected: WORKLOAD_HEADER });
    }
    let mut tasks = Vec::new();
    for (line, raw) in data_lines(text) {
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 8 {
            return Err(TraceParseError::BadColumnCount { line, found: fields.len(), expected: 8 });
        }
        let task_id = parse_u64(fields[0], line, "task_id")?;
        if fields[1].is_empty() {
            return Err(TraceParseError::EmptyField { line, column: "video_id" });
        }
        let gop_index = parse_u64(fields[2], line, "gop_index")? as u32;
        let gop_size_mb = parse_f64(fields[3], line, "gop_size_mb")?;
        if !(gop_size_mb > 0.0) {
            return Err(TraceParseError::NonPositiveValue { line, column: "gop_size_mb" });
        }
        let frame_count = parse_u64(fields[4], line, "frame_count")?;
        if frame_count < 1 {
            return Err(TraceParseError::NonPositiveValue { line, column: "frame_count" });
        }
        let fps = parse_f64(fields[5], line, "fps")?;
        if !(fps > 0.0) {
            return Err(TraceParseError::NonPositiveValue { line, column: "fps" });
        }
        let content_type =
            ContentType::parse(fields[6]).ok_or_else(|| TraceParseError::UnknownEnum {
                line,
                column: "content_type",
                value: fields[6].to_string(),
            })?;
        let arrival_time_s = parse_f64(fields[7], line, "arrival_time_s")?;
        if arrival_time_s < 0.0 {
            return Err(TraceParseError::NonPositiveValue { line, column: "arrival_time_s" });
        }
        tasks.push(GopTask {
            task_id,
            video_id: fields[1].to_string(),
            gop_index,
            gop_size_mb,
            frame_count: frame_count as u32,
            fps,
            content_type,
            arrival_time_s,
        });
    }
    Workload::from_tasks(tasks).map_err(|e| TraceParseError::InvalidStructure(e.to_string()))
}

/// Serializes a workload's tasks, reals with 6 decimals.
pub fn serialize_workload(workload: &Workload) -> String {
    let mut out = String::with_capacity(64 * (workload.len() + 1));
    out.push_str(WORKLOAD_HEADER);
    out.push('\n');
    for t in workload.tasks() {
        out.push_str(&format!(
            "{},{},{},{:.6},{},{:.6},{},{:.6}\n",
            t.task_id,
            t.video_id,
            t.gop_index,
            t.gop_size_mb,
            t.frame_count,
            t.fps,
            t.content_type,
            t.arrival_time_s
        ));
    }
    out
}

/// Workload construction and generation errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("BadMix: {0}")]
    BadMix(String),
    #[error("BadVmSpec: {0}")]
    BadVmSpec(String),
    #[error("BadTask: task {0}: {1}")]
    BadTask(u64, String),
    #[error("BadWindow: window_s {0} must be > 0")]
    BadWindow(f64),
    #[error("DuplicateTaskId: {0}")]
    DuplicateTaskId(u64),
    #[error("GopIndexGap: video {0} missing gop_index {1}")]
    GopIndexGap(String, u32),
    #[error("InconsistentFps: video {0}")]
    InconsistentFps(String),
    #[error("ArrivalPastWindow: task {0}")]
    ArrivalPastWindow(u64),
}
