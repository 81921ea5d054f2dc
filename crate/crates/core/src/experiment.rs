//! Experiment runners: repeated classification, the injected-noise grid and
//! the label-fraction sweep, with their CSV outputs.
//!
//! Configuration is a flat `key = value` file (`#` starts a comment). Every
//! key can also be set programmatically through [`ExperimentConfig::set`],
//! which is what command-line overrides use. Jobs (repeats, grid cells,
//! fractions) run on a pool of `workers` threads; rows are sorted before
//! they are written, so outputs do not depend on completion order.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_equal_weights, baseline_perf_weights, baseline_tss};
use crate::cv::{select_hyperparameters, CrossValidator, CvMetric, HyperGrid};
use crate::dual::DualConfig;
use crate::error::{Error, Result};
use crate::graph::{LabelVector, MultiGraph};
use crate::io::{read_labels, read_manifest};
use crate::metrics::{average_precision_on, precision_recall_curve};
use crate::noise::{inject, Intensity, NoiseModel, NoiseSpec};
use crate::params::{temperature_range, PenaltyScheme, TemperatureRange, DEFAULT_PENALTY_STRENGTH};
use crate::robust::{robust_multi_sc_grid, RobustConfig, DEFAULT_CV_REPEATS, DEFAULT_FOLDS};
use crate::search::{GraphSet, SearchConfig, SearchRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Robust,
    Tss,
    Eql,
    Perf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Robust, Method::Tss, Method::Eql, Method::Perf];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Robust => "robust",
            Method::Tss => "tss",
            Method::Eql => "eql",
            Method::Perf => "perf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "robust" | "robustmultisc" => Ok(Method::Robust),
            "tss" => Ok(Method::Tss),
            "eql" | "eql-wght" | "equal" => Ok(Method::Eql),
            "perf" | "perf-wght" => Ok(Method::Perf),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected robust, tss, eql or perf)"
            ))),
        }
    }
}

/// Annealing temperature: a fixed value, or a per-run draw from a
/// calibrated interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemperatureSetting {
    Fixed(f64),
    Calibrated(TemperatureRange),
}

impl Default for TemperatureSetting {
    fn default() -> Self {
        TemperatureSetting::Calibrated(temperature_range(-0.1, 0.01, 5, 10).expect("valid default range"))
    }
}

impl TemperatureSetting {
    /// The temperature for one run; calibrated draws are seeded.
    pub fn resolve(&self, seed: u64) -> f64 {
        match self {
            TemperatureSetting::Fixed(t) => *t,
            TemperatureSetting::Calibrated(range) => range.sample(&mut ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

impl fmt::Display for TemperatureSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemperatureSetting::Fixed(t) => write!(f, "{t}"),
            TemperatureSetting::Calibrated(r) => {
                write!(f, "calibrated:{},{},{},{}", r.d_thresh, r.p_thresh, r.m_l, r.m_u)
            }
        }
    }
}

impl FromStr for TemperatureSetting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("calibrated:") {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(Error::Config(format!(
                    "temperature {s:?}: expected calibrated:d_thresh,p_thresh,m_l,m_u"
                )));
            }
            let range = temperature_range(
                parse_value("temperature d_thresh", parts[0])?,
                parse_value("temperature p_thresh", parts[1])?,
                parse_value("temperature m_l", parts[2])?,
                parse_value("temperature m_u", parts[3])?,
            )?;
            return Ok(TemperatureSetting::Calibrated(range));
        }
        let t: f64 = parse_value("temperature", s)?;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Config(format!("temperature {t} outside (0, 1]")));
        }
        Ok(TemperatureSetting::Fixed(t))
    }
}

/// Subset of the noise grid to run.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    pub models: Vec<NoiseModel>,
    pub intensities: Vec<Intensity>,
    pub counts: Vec<usize>,
}

impl Default for NoiseGrid {
    fn default() -> Self {
        NoiseGrid {
            models: NoiseModel::ALL.to_vec(),
            intensities: Intensity::ALL.to_vec(),
            counts: vec![2, 4, 6],
        }
    }
}

impl NoiseGrid {
    pub fn cells(&self) -> Vec<(NoiseModel, Intensity, usize)> {
        let mut out = Vec::new();
        for &model in &self.models {
            for &intensity in &self.intensities {
                for &count in &self.counts {
                    out.push((model, intensity, count));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifest_path: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub label_fraction: f64,
    /// Fractions for the label sweep.
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    pub folds: usize,
    /// Independent fold partitions per cross-validated score.
    pub cv_repeats: usize,
    /// Noise injected before a classify run.
    pub noise: Option<NoiseSpec>,
    /// Cells visited by the noise test.
    pub noise_grid: NoiseGrid,
    /// Class-penalty constant; 0 gives the identity penalty.
    pub penalty_const: f64,
    pub temperature: TemperatureSetting,
    pub hyper_grid: HyperGrid,
    /// Optional cap on how many graphs the search may remove.
    pub max_removed: Option<usize>,
    /// Per-graph score used by the perf baseline.
    pub perf_metric: CvMetric,
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifest_path: None,
            labels_path: None,
            methods: Method::ALL.to_vec(),
            label_fraction: 0.3,
            fractions: Vec::new(),
            repeats: 10,
            seed: 0,
            folds: DEFAULT_FOLDS,
            cv_repeats: DEFAULT_CV_REPEATS,
            noise: None,
            noise_grid: NoiseGrid::default(),
            penalty_const: DEFAULT_PENALTY_STRENGTH,
            temperature: TemperatureSetting::default(),
            hyper_grid: HyperGrid::default(),
            max_removed: None,
            perf_metric: CvMetric::AveragePrecision,
            workers: 1,
            output_dir: PathBuf::from("results"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_noise(value: &str) -> Result<Option<NoiseSpec>> {
    let value = value.trim();
    if value.eq_ignore_ascii_case("none") || value.is_empty() {
        return Ok(None);
    }
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::Config(format!(
            "noise {value:?}: expected model,intensity,count,seed (e.g. AV,high,6,1) or none"
        )));
    }
    Ok(Some(NoiseSpec {
        model: parts[0].parse()?,
        intensity: parts[1].parse()?,
        count: parse_value("noise count", parts[2])?,
        seed: parse_value("noise seed", parts[3])?,
    }))
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 22] = [
        "manifest",
        "labels",
        "methods",
        "label_fraction",
        "fractions",
        "repeats",
        "seed",
        "folds",
        "cv_repeats",
        "noise",
        "noise_models",
        "noise_intensities",
        "noise_counts",
        "penalty_const",
        "temperature",
        "hyper_c",
        "hyper_c0",
        "max_removed",
        "perf_metric",
        "workers",
        "output_dir",
        "method",
    ];

    /// Sets one key. Paths are taken verbatim.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "manifest" => self.manifest_path = Some(PathBuf::from(value)),
            "labels" => self.labels_path = Some(PathBuf::from(value)),
            "methods" | "method" => self.methods = parse_list(key, value)?,
            "label_fraction" => self.label_fraction = parse_value(key, value)?,
            "fractions" => self.fractions = parse_list(key, value)?,
            "repeats" => self.repeats = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "folds" => self.folds = parse_value(key, value)?,
            "cv_repeats" => self.cv_repeats = parse_value(key, value)?,
            "noise" => self.noise = parse_noise(value)?,
            "noise_models" => self.noise_grid.models = parse_list(key, value)?,
            "noise_intensities" => self.noise_grid.intensities = parse_list(key, value)?,
            "noise_counts" => self.noise_grid.counts = parse_list(key, value)?,
            "penalty_const" => self.penalty_const = parse_value(key, value)?,
            "temperature" => self.temperature = value.parse()?,
            "hyper_c" => self.hyper_grid.c = parse_list(key, value)?,
            "hyper_c0" => self.hyper_grid.c0 = parse_list(key, value)?,
            "max_removed" => {
                self.max_removed = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(parse_value(key, value)?)
                }
            }
            "perf_metric" => {
                self.perf_metric = match value.to_ascii_lowercase().as_str() {
                    "ap" => CvMetric::AveragePrecision,
                    "accuracy" => CvMetric::Accuracy,
                    other => return Err(Error::Config(format!("perf_metric: unknown metric {other:?}"))),
                }
            }
            "workers" => self.workers = parse_value(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            other => {
                return Err(Error::Config(format!(
                    "unknown config key {other:?}; known keys: {}",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            cfg.set(key, value).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text)
    }

    /// The full configuration as `key = value` lines; parses back to an
    /// equal config.
    pub fn to_kv_string(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let mut lines = Vec::new();
        if let Some(p) = path(&self.manifest_path) {
            lines.push(format!("manifest = {p}"));
        }
        if let Some(p) = path(&self.labels_path) {
            lines.push(format!("labels = {p}"));
        }
        lines.push(format!("methods = {}", join(&self.methods)));
        lines.push(format!("label_fraction = {}", self.label_fraction));
        lines.push(format!("fractions = {}", join(&self.fractions)));
        lines.push(format!("repeats = {}", self.repeats));
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("folds = {}", self.folds));
        lines.push(format!("cv_repeats = {}", self.cv_repeats));
        lines.push(format!(
            "noise = {}",
            match &self.noise {
                Some(s) => format!("{},{},{},{}", s.model, s.intensity, s.count, s.seed),
                None => "none".into(),
            }
        ));
        lines.push(format!("noise_models = {}", join(&self.noise_grid.models)));
        lines.push(format!("noise_intensities = {}", join(&self.noise_grid.intensities)));
        lines.push(format!("noise_counts = {}", join(&self.noise_grid.counts)));
        lines.push(format!("penalty_const = {}", self.penalty_const));
        lines.push(format!("temperature = {}", self.temperature));
        lines.push(format!("hyper_c = {}", join(&self.hyper_grid.c)));
        lines.push(format!("hyper_c0 = {}", join(&self.hyper_grid.c0)));
        lines.push(format!(
            "max_removed = {}",
            self.max_removed.map_or("none".to_string(), |k| k.to_string())
        ));
        lines.push(format!(
            "perf_metric = {}",
            match self.perf_metric {
                CvMetric::AveragePrecision => "ap",
                CvMetric::Accuracy => "accuracy",
            }
        ));
        lines.push(format!("workers = {}", self.workers));
        lines.push(format!("output_dir = {}", self.output_dir.display()));
        lines.join("\n") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.label_fraction > 0.0 && self.label_fraction < 1.0) {
            return bad(format!("label_fraction {} outside (0, 1)", self.label_fraction));
        }
        if self.repeats < 1 {
            return bad("repeats must be at least 1".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.cv_repeats < 1 {
            return bad("cv_repeats must be at least 1".into());
        }
        if self.workers < 1 {
            return bad("workers must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods configured".into());
        }
        if !(0.0..1.0).contains(&self.penalty_const) {
            return bad(format!("penalty_const {} outside [0, 1)", self.penalty_const));
        }
        if self.hyper_grid.is_empty() {
            return bad("hyper-parameter grid is empty".into());
        }
        if self.hyper_grid.c.iter().chain(&self.hyper_grid.c0).any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("hyper-parameter grid values must be positive".into());
        }
        if let TemperatureSetting::Fixed(t) = self.temperature {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("temperature {t} outside (0, 1]"));
            }
        }
        Ok(())
    }

    pub fn penalty(&self) -> PenaltyScheme {
        if self.penalty_const == 0.0 {
            PenaltyScheme::Identity
        } else {
            PenaltyScheme::ClassBalanced {
                strength: self.penalty_const,
            }
        }
    }

    /// Reads the manifest and the ground-truth labels.
    pub fn load_dataset(&self) -> Result<(MultiGraph, LabelVector)> {
        let manifest = self
            .manifest_path
            .as_ref()
            .ok_or_else(|| Error::Config("no manifest configured (set `manifest`)".into()))?;
        let labels = self
            .labels_path
            .as_ref()
            .ok_or_else(|| Error::Config("no ground-truth labels configured (set `labels`)".into()))?;
        let graph = read_manifest(manifest)?;
        let truth = read_labels(labels, graph.n())?;
        truth.require_both_classes()?;
        Ok((graph, truth))
    }
}

/// Everything a method needs beyond the graph and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSettings {
    pub penalty: PenaltyScheme,
    pub folds: usize,
    pub cv_repeats: usize,
    pub grid: HyperGrid,
    /// Solver and optimizer settings; `c` and `c0` come from `grid`.
    pub dual: DualConfig,
    pub temperature: f64,
    pub max_removed: Option<usize>,
    pub perf_metric: CvMetric,
    /// Seeds fold assignment and the search's acceptance draws.
    pub seed: u64,
}

impl MethodSettings {
    pub fn from_config(cfg: &ExperimentConfig, seed: u64) -> Self {
        MethodSettings {
            penalty: cfg.penalty(),
            folds: cfg.folds,
            cv_repeats: cfg.cv_repeats,
            grid: cfg.hyper_grid.clone(),
            dual: DualConfig::default(),
            temperature: cfg.temperature.resolve(mix(seed, 3)),
            max_removed: cfg.max_removed,
            perf_metric: cfg.perf_metric,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutput {
    pub estimate: Vec<f64>,
    /// Length-`m` weights.
    pub weights: Vec<f64>,
    /// Selected `(c, c0)` for methods that use the dual.
    pub hyper: Option<(f64, f64)>,
    /// Selected graph-set (robust only).
    pub set: Option<GraphSet>,
    /// Search log (robust only).
    pub records: Vec<SearchRecord>,
}

/// Runs one method on one labeled sample.
pub fn run_method(
    method: Method,
    graph: &MultiGraph,
    labels: &LabelVector,
    s: &MethodSettings,
) -> Result<MethodOutput> {
    let plain = |estimate, weights| MethodOutput {
        estimate,
        weights,
        hyper: None,
        set: None,
        records: Vec::new(),
    };
    match method {
        Method::Robust => {
            let cfg = RobustConfig {
                penalty: s.penalty,
                dual: s.dual,
                folds: s.folds,
                cv_repeats: s.cv_repeats,
                cv_seed: s.seed,
                search: SearchConfig {
                    temperature: s.temperature,
                    max_removed: s.max_removed,
                    workers: 1,
                    seed: s.seed,
                },
            };
            let (sol, dual) = robust_multi_sc_grid(graph, labels, &cfg, &s.grid)?;
            Ok(MethodOutput {
                estimate: sol.estimate,
                weights: sol.weights,
                hyper: Some((dual.c, dual.c0)),
                set: Some(sol.set),
                records: sol.records,
            })
        }
        Method::Tss => {
            let cv = CrossValidator::repeated(graph, labels, s.folds, s.cv_repeats, s.seed, s.penalty)?;
            let (dual, _) = select_hyperparameters(&cv, &GraphSet::full(graph.m()), &s.dual, &s.grid)?;
            let fit = baseline_tss(graph, labels, &s.penalty.diagonal(labels)?, &dual)?;
            Ok(MethodOutput {
                hyper: Some((dual.c, dual.c0)),
                ..plain(fit.estimate, fit.weights)
            })
        }
        Method::Eql => {
            let fit = baseline_equal_weights(graph, labels, &s.penalty.diagonal(labels)?)?;
            Ok(plain(fit.estimate, fit.weights))
        }
        Method::Perf => {
            let fit = baseline_perf_weights(graph, labels, s.penalty, s.folds, s.cv_repeats, s.seed, s.perf_metric)?;
            Ok(plain(fit.estimate, fit.weights))
        }
    }
}

/// Nodes that carry ground truth but were not in the labeled sample.
pub fn evaluation_nodes(truth: &LabelVector, labels: &LabelVector) -> Vec<usize> {
    (0..truth.len())
        .filter(|&i| truth.get(i) != 0 && labels.get(i) == 0)
        .collect()
}

/// AP of `estimate` over [`evaluation_nodes`].
pub fn held_out_ap(estimate: &[f64], truth: &LabelVector, labels: &LabelVector) -> Result<f64> {
    average_precision_on(estimate, truth.values(), &evaluation_nodes(truth, labels))
}

/// Order-sensitive FNV-1a hash of the labeled nodes and their labels.
pub fn sample_hash(labels: &LabelVector) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for i in labels.labeled_set() {
        for b in (i as u64).to_le_bytes().into_iter().chain([labels.get(i) as u8]) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// SplitMix64-style combination of two seeds.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const NOISE_SALT: u64 = 0x6E6F_6973_6500_0000;

/// Seed of the labeled sample (and all per-repeat randomness) for `repeat`.
pub fn repeat_seed(seed: u64, repeat: usize) -> u64 {
    mix(seed, repeat as u64)
}

/// Seed of injected noise for `repeat`; shared by every grid cell, so
/// larger injected counts extend smaller ones.
pub fn noise_seed(seed: u64, repeat: usize) -> u64 {
    mix(seed ^ NOISE_SALT, repeat as u64)
}

/// One method on one sample in one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    /// `none` for the uninjected data.
    pub noise_model: String,
    pub intensity: String,
    pub injected: usize,
    pub label_fraction: f64,
    pub repeat: usize,
    pub sample_hash: String,
    /// Missing when the run failed.
    pub ap: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn sort_key(&self) -> (&str, &str, usize, u64, &str, usize) {
        (
            &self.noise_model,
            &self.intensity,
            self.injected,
            self.label_fraction.to_bits(),
            &self.method,
            self.repeat,
        )
    }
}

/// Mean and sample standard deviation of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: String,
    pub noise_model: String,
    pub intensity: String,
    pub injected: usize,
    pub label_fraction: f64,
    pub runs: usize,
    pub failures: usize,
    pub mean_ap: Option<f64>,
    pub std_ap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Csv(csv::Error::from(std::io::Error::other(format!("{other:?}")))),
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

impl ResultsTable {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }

    /// One summary per `(setting, fraction, method)`, in row order.
    pub fn summaries(&self) -> Vec<CellSummary> {
        let mut sorted = self.clone();
        sorted.sort();
        let mut out: Vec<CellSummary> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for r in &sorted.rows {
            let same = out.last().is_some_and(|s| {
                s.method == r.method
                    && s.noise_model == r.noise_model
                    && s.intensity == r.intensity
                    && s.injected == r.injected
                    && s.label_fraction.to_bits() == r.label_fraction.to_bits()
            });
            if !same {
                out.push(CellSummary {
                    method: r.method.clone(),
                    noise_model: r.noise_model.clone(),
                    intensity: r.intensity.clone(),
                    injected: r.injected,
                    label_fraction: r.label_fraction,
                    runs: 0,
                    failures: 0,
                    mean_ap: None,
                    std_ap: None,
                });
                values.push(Vec::new());
            }
            let s = out.last_mut().expect("pushed above");
            s.runs += 1;
            match r.ap {
                Some(ap) => values.last_mut().expect("pushed above").push(ap),
                None => s.failures += 1,
            }
        }
        for (s, v) in out.iter_mut().zip(&values) {
            if let Some((m, sd)) = mean_std(v) {
                s.mean_ap = Some(m);
                s.std_ap = Some(sd);
            }
        }
        out
    }

    /// Mean AP of `method` in the cell `(noise_model, intensity, injected)`.
    pub fn mean_ap(&self, method: &str, noise_model: &str, intensity: &str, injected: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| {
                r.method == method && r.noise_model == noise_model && r.intensity == intensity && r.injected == injected
            })
            .filter_map(|r| r.ap)
            .collect();
        mean_std(&v).map(|(m, _)| m)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_rows(path.as_ref(), &self.rows)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(ResultsTable { rows })
    }

    pub fn write_summary_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_rows(path.as_ref(), &self.summaries())
    }

    /// Wide table: one row per noise setting, a mean and std column per
    /// method.
    pub fn write_wide_csv(&self, path: impl AsRef<Path>, methods: &[Method]) -> Result<()> {
        let path = path.as_ref();
        let summaries = self.summaries();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        let mut header = vec!["noise_model".to_string(), "intensity".into(), "injected".into()];
        for m in methods {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_std"));
        }
        w.write_record(&header)?;
        let mut settings: Vec<(String, String, usize)> = summaries
            .iter()
            .map(|s| (s.noise_model.clone(), s.intensity.clone(), s.injected))
            .collect();
        settings.dedup();
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
        for (model, intensity, injected) in settings {
            let mut rec = vec![model.clone(), intensity.clone(), injected.to_string()];
            for m in methods {
                let s = summaries.iter().find(|s| {
                    s.method == m.name() && s.noise_model == model && s.intensity == intensity && s.injected == injected
                });
                rec.push(fmt(s.and_then(|s| s.mean_ap)));
                rec.push(fmt(s.and_then(|s| s.std_ap)));
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub method: String,
    pub repeat: usize,
    pub graph_id: usize,
    pub weight: f64,
    pub normalized_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalRow {
    pub repeat: usize,
    pub step: usize,
    pub graph_set: String,
    pub parent_set: String,
    pub removed_graph_id: Option<usize>,
    pub cv_score: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub method: String,
    pub repeat: usize,
    pub node: usize,
    pub score: f64,
    pub truth: i8,
    pub labeled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrRow {
    pub method: String,
    pub repeat: usize,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub method: String,
    pub repeat: usize,
    pub c: Option<f64>,
    pub c0: Option<f64>,
    pub temperature: Option<f64>,
    pub graph_set: String,
}

/// In-memory outputs of [`classify`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassifyOutput {
    pub table: ResultsTable,
    pub weights: Vec<WeightRow>,
    pub removals: Vec<RemovalRow>,
    pub scores: Vec<ScoreRow>,
    pub pr_curves: Vec<PrRow>,
    pub selections: Vec<SelectionRow>,
}

impl ClassifyOutput {
    fn append(&mut self, other: ClassifyOutput) {
        self.table.rows.extend(other.table.rows);
        self.weights.extend(other.weights);
        self.removals.extend(other.removals);
        self.scores.extend(other.scores);
        self.pr_curves.extend(other.pr_curves);
        self.selections.extend(other.selections);
    }

    /// Writes `results.csv`, `summary.csv`, `weights.csv`,
    /// `removal_log.csv`, `scores.csv`, `pr_curves.csv` and
    /// `selection.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.table.write_csv(dir.join("results.csv"))?;
        self.table.write_summary_csv(dir.join("summary.csv"))?;
        write_rows(&dir.join("weights.csv"), &self.weights)?;
        write_rows(&dir.join("removal_log.csv"), &self.removals)?;
        write_rows(&dir.join("scores.csv"), &self.scores)?;
        write_rows(&dir.join("pr_curves.csv"), &self.pr_curves)?;
        write_rows(&dir.join("selection.csv"), &self.selections)
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn failed_row(method: Method, setting: &Setting, fraction: f64, repeat: usize, hash: &str, err: &Error) -> ResultRow {
    ResultRow {
        method: method.name().into(),
        noise_model: setting.model.clone(),
        intensity: setting.intensity.clone(),
        injected: setting.injected,
        label_fraction: fraction,
        repeat,
        sample_hash: hash.into(),
        ap: None,
        error: Some(err.to_string()),
    }
}

#[derive(Debug, Clone)]
struct Setting {
    model: String,
    intensity: String,
    injected: usize,
}

impl Setting {
    fn clean() -> Self {
        Setting {
            model: "none".into(),
            intensity: "none".into(),
            injected: 0,
        }
    }

    fn of(spec: &NoiseSpec) -> Self {
        Setting {
            model: spec.model.to_string(),
            intensity: spec.intensity.to_string(),
            injected: spec.count,
        }
    }
}

/// Runs every configured method on one sampled labeled set.
fn run_repeat(
    cfg: &ExperimentConfig,
    graph: &MultiGraph,
    truth: &LabelVector,
    setting: &Setting,
    fraction: f64,
    repeat: usize,
    detail: bool,
) -> ClassifyOutput {
    let mut out = ClassifyOutput::default();
    let seed = repeat_seed(cfg.seed, repeat);
    let labels = match crate::sampling::sample_labeled_set(truth, fraction, seed) {
        Ok(l) => l,
        Err(e) => {
            for &m in &cfg.methods {
                out.table.rows.push(failed_row(m, setting, fraction, repeat, "", &e));
            }
            return out;
        }
    };
    let hash = sample_hash(&labels);
    let settings = MethodSettings::from_config(cfg, seed);
    for &method in &cfg.methods {
        let result = run_method(method, graph, &labels, &settings)
            .and_then(|fit| held_out_ap(&fit.estimate, truth, &labels).map(|ap| (fit, ap)));
        let (fit, ap) = match result {
            Ok(v) => v,
            Err(e) => {
                out.table.rows.push(failed_row(method, setting, fraction, repeat, &hash, &e));
                continue;
            }
        };
        out.table.rows.push(ResultRow {
            method: method.name().into(),
            noise_model: setting.model.clone(),
            intensity: setting.intensity.clone(),
            injected: setting.injected,
            label_fraction: fraction,
            repeat,
            sample_hash: hash.clone(),
            ap: Some(ap),
            error: None,
        });
        if !detail {
            continue;
        }
        let total: f64 = fit.weights.iter().sum();
        for (k, &w) in fit.weights.iter().enumerate() {
            out.weights.push(WeightRow {
                method: method.name().into(),
                repeat,
                graph_id: k,
                weight: w,
                normalized_weight: if total > 0.0 { w / total } else { 0.0 },
            });
        }
        for r in &fit.records {
            out.removals.push(RemovalRow {
                repeat,
                step: r.step,
                graph_set: r.set.to_string(),
                parent_set: r.parent.as_ref().map_or(String::new(), ToString::to_string),
                removed_graph_id: r.removed_graph,
                cv_score: r.cv_score,
                accepted: r.accepted,
            });
        }
        for (i, &score) in fit.estimate.iter().enumerate() {
            out.scores.push(ScoreRow {
                method: method.name().into(),
                repeat,
                node: i,
                score,
                truth: truth.get(i),
                labeled: labels.get(i) != 0,
            });
        }
        let nodes = evaluation_nodes(truth, &labels);
        let scores: Vec<f64> = nodes.iter().map(|&i| fit.estimate[i]).collect();
        let tr: Vec<i8> = nodes.iter().map(|&i| truth.get(i)).collect();
        if let Ok(curve) = precision_recall_curve(&scores, &tr) {
            out.pr_curves.extend(curve.into_iter().map(|p| PrRow {
                method: method.name().into(),
                repeat,
                recall: p.recall,
                precision: p.precision,
            }));
        }
        out.selections.push(SelectionRow {
            method: method.name().into(),
            repeat,
            c: fit.hyper.map(|h| h.0),
            c0: fit.hyper.map(|h| h.1),
            temperature: (method == Method::Robust).then_some(settings.temperature),
            graph_set: fit.set.as_ref().map_or(String::new(), ToString::to_string),
        });
    }
    out
}

fn sort_detail(out: &mut ClassifyOutput) {
    out.table.sort();
    out.weights.sort_by(|a, b| (&a.method, a.repeat, a.graph_id).cmp(&(&b.method, b.repeat, b.graph_id)));
    out.removals.sort_by_key(|r| (r.repeat, r.step));
    out.scores.sort_by(|a, b| (&a.method, a.repeat, a.node).cmp(&(&b.method, b.repeat, b.node)));
    // PR points keep curve order within a (method, repeat) group.
    out.pr_curves.sort_by(|a, b| (&a.method, a.repeat).cmp(&(&b.method, b.repeat)));
    out.selections.sort_by(|a, b| (&a.method, a.repeat).cmp(&(&b.method, b.repeat)));
}

/// Repeated classification on in-memory data. `cfg.noise`, if set, is
/// injected once before the repeats.
pub fn classify(cfg: &ExperimentConfig, graph: &MultiGraph, truth: &LabelVector) -> Result<ClassifyOutput> {
    cfg.validate()?;
    let (graph, setting) = match &cfg.noise {
        Some(spec) => (inject(graph, spec, truth)?, Setting::of(spec)),
        None => (graph.clone(), Setting::clean()),
    };
    let parts: Vec<ClassifyOutput> = pool(cfg.workers)?.install(|| {
        (0..cfg.repeats)
            .into_par_iter()
            .map(|r| run_repeat(cfg, &graph, truth, &setting, cfg.label_fraction, r, true))
            .collect()
    });
    let mut out = ClassifyOutput::default();
    for p in parts {
        out.append(p);
    }
    sort_detail(&mut out);
    Ok(out)
}

fn write_snapshot(cfg: &ExperimentConfig) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join("config.txt");
    fs::write(&p, cfg.to_kv_string()).map_err(|e| Error::io(&p, e))
}

/// Loads the configured dataset, runs [`classify`] and writes its outputs
/// plus `config.txt` into `cfg.output_dir`.
pub fn run_classify(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let (graph, truth) = cfg.load_dataset()?;
    let out = classify(cfg, &graph, &truth)?;
    write_snapshot(cfg)?;
    out.write(&cfg.output_dir)?;
    Ok(out.table)
}

/// The uninjected setting plus every cell of `cfg.noise_grid`, with one
/// shared labeled sample per repeat.
pub fn noise_test(cfg: &ExperimentConfig, graph: &MultiGraph, truth: &LabelVector) -> Result<ResultsTable> {
    cfg.validate()?;
    let mut cells: Vec<Option<(NoiseModel, Intensity, usize)>> = vec![None];
    cells.extend(cfg.noise_grid.cells().into_iter().map(Some));
    let jobs: Vec<(usize, Option<(NoiseModel, Intensity, usize)>)> = (0..cfg.repeats)
        .flat_map(|r| cells.iter().map(move |&c| (r, c)))
        .collect();
    let parts: Vec<Result<ClassifyOutput>> = pool(cfg.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(r, cell)| {
                let (g, setting) = match cell {
                    None => (graph.clone(), Setting::clean()),
                    Some((model, intensity, count)) => {
                        let spec = NoiseSpec {
                            model,
                            intensity,
                            count,
                            seed: noise_seed(cfg.seed, r),
                        };
                        (inject(graph, &spec, truth)?, Setting::of(&spec))
                    }
                };
                Ok(run_repeat(cfg, &g, truth, &setting, cfg.label_fraction, r, false))
            })
            .collect()
    });
    let mut table = ResultsTable::default();
    for p in parts {
        table.rows.extend(p?.table.rows);
    }
    table.sort();
    Ok(table)
}

/// Loads the dataset, runs [`noise_test`] and writes `results.csv` (long
/// format), `summary.csv`, `table.csv` (one row per setting) and
/// `config.txt`.
pub fn run_noise_test(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let (graph, truth) = cfg.load_dataset()?;
    let table = noise_test(cfg, &graph, &truth)?;
    write_snapshot(cfg)?;
    table.write_csv(cfg.output_dir.join("results.csv"))?;
    table.write_summary_csv(cfg.output_dir.join("summary.csv"))?;
    table.write_wide_csv(cfg.output_dir.join("table.csv"), &cfg.methods)?;
    Ok(table)
}

/// Classification at every fraction in `cfg.fractions`.
pub fn label_sweep(cfg: &ExperimentConfig, graph: &MultiGraph, truth: &LabelVector) -> Result<ResultsTable> {
    cfg.validate()?;
    if cfg.fractions.is_empty() {
        return Err(Error::Config("label sweep needs at least one fraction".into()));
    }
    if let Some(f) = cfg.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
        return Err(Error::Config(format!("sweep fraction {f} outside (0, 1)")));
    }
    let (graph, setting) = match &cfg.noise {
        Some(spec) => (inject(graph, spec, truth)?, Setting::of(spec)),
        None => (graph.clone(), Setting::clean()),
    };
    let jobs: Vec<(f64, usize)> = cfg
        .fractions
        .iter()
        .flat_map(|&f| (0..cfg.repeats).map(move |r| (f, r)))
        .collect();
    let parts: Vec<ClassifyOutput> = pool(cfg.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(f, r)| run_repeat(cfg, &graph, truth, &setting, f, r, false))
            .collect()
    });
    let mut table = ResultsTable::default();
    for p in parts {
        table.rows.extend(p.table.rows);
    }
    table.sort();
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label_fraction: f64,
    pub method: String,
    pub runs: usize,
    pub mean_ap: Option<f64>,
    pub std_ap: Option<f64>,
}

/// Loads the dataset, runs [`label_sweep`] and writes `results.csv`,
/// `sweep.csv` (fraction-indexed means) and `config.txt`.
pub fn run_label_sweep(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    if cfg.fractions.is_empty() {
        return Err(Error::Config("label sweep needs at least one fraction".into()));
    }
    let (graph, truth) = cfg.load_dataset()?;
    let table = label_sweep(cfg, &graph, &truth)?;
    write_snapshot(cfg)?;
    table.write_csv(cfg.output_dir.join("results.csv"))?;
    let mut sweep: Vec<SweepRow> = table
        .summaries()
        .into_iter()
        .map(|s| SweepRow {
            label_fraction: s.label_fraction,
            method: s.method,
            runs: s.runs,
            mean_ap: s.mean_ap,
            std_ap: s.std_ap,
        })
        .collect();
    sweep.sort_by(|a, b| {
        a.label_fraction
            .total_cmp(&b.label_fraction)
            .then_with(|| a.method.cmp(&b.method))
    });
    write_rows(&cfg.output_dir.join("sweep.csv"), &sweep)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_text() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("methods", "robust,eql").unwrap();
        cfg.set("noise", "AV,high,6,3").unwrap();
        cfg.set("temperature", "0.6").unwrap();
        cfg.set("fractions", "0.1,0.3").unwrap();
        cfg.set("manifest", "data/m.txt").unwrap();
        cfg.set("max_removed", "4").unwrap();
        let back = ExperimentConfig::from_kv_str(&cfg.to_kv_string()).unwrap();
        assert_eq!(back, cfg);
        let default_back = ExperimentConfig::from_kv_str(&ExperimentConfig::default().to_kv_string()).unwrap();
        assert_eq!(default_back, ExperimentConfig::default());
    }

    #[test]
    fn config_errors_name_the_line() {
        let err = ExperimentConfig::from_kv_str("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(ExperimentConfig::from_kv_str("repeats = x").is_err());
        assert!(ExperimentConfig::from_kv_str("just words").is_err());
    }

    #[test]
    fn validation_bounds() {
        let ok = ExperimentConfig::default();
        assert!(ok.validate().is_ok());
        for (k, v) in [("label_fraction", "1"), ("label_fraction", "0"), ("repeats", "0"), ("folds", "1"), ("workers", "0")] {
            let mut cfg = ExperimentConfig::default();
            cfg.set(k, v).unwrap();
            assert!(cfg.validate().is_err(), "{k} = {v}");
        }
    }

    #[test]
    fn temperature_setting_parses_both_forms() {
        assert_eq!("0.5".parse::<TemperatureSetting>().unwrap(), TemperatureSetting::Fixed(0.5));
        let t: TemperatureSetting = "calibrated:-0.1,0.01,5,10".parse().unwrap();
        let v = t.resolve(7);
        assert!((0.465..=0.683).contains(&v));
        assert_eq!(t.resolve(7), v);
        assert!("1.5".parse::<TemperatureSetting>().is_err());
    }

    #[test]
    fn summaries_match_rows() {
        let row = |method: &str, repeat, ap| ResultRow {
            method: method.into(),
            noise_model: "none".into(),
            intensity: "none".into(),
            injected: 0,
            label_fraction: 0.3,
            repeat,
            sample_hash: "x".into(),
            ap,
            error: ap.is_none().then(|| "boom".to_string()),
        };
        let table = ResultsTable {
            rows: vec![row("eql", 0, Some(0.5)), row("eql", 1, Some(0.7)), row("eql", 2, None), row("tss", 0, Some(0.4))],
        };
        let s = table.summaries();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].runs, 3);
        assert_eq!(s[0].failures, 1);
        assert!((s[0].mean_ap.unwrap() - 0.6).abs() < 1e-15);
        assert!((s[0].std_ap.unwrap() - 0.02f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[1].std_ap, Some(0.0));
    }

    #[test]
    fn mix_spreads_seeds() {
        assert_ne!(repeat_seed(0, 0), repeat_seed(0, 1));
        assert_ne!(repeat_seed(0, 1), repeat_seed(1, 0));
        assert_ne!(noise_seed(0, 0), repeat_seed(0, 0));
    }
}
