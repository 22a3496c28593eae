//! Evaluation criteria for relative-pose predictions.
//!
//! Besides the usual mean/median translation and rotation errors this
//! module provides error measures that are normalized by the size of the
//! regression problem, so that models evaluated on pair sets of different
//! spatial extent can be compared:
//!
//! * MAPE: per-pair error divided by the ground-truth magnitude;
//! * MASE: total error divided by the total error of a naive predictor
//!   that always answers the mean relative pose;
//! * MAPSE: MAPE divided by the naive predictor's MAPE;
//! * R-MAPE: MAPE over Euler angles.
//!
//! All sums use [`pairwise_sum`] so results do not depend on scheduling.

mod curve;
mod report;

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{DatasetError, PairRecord, PairSet, Prediction, PredictionSet};
use crate::geometry::{
    rotation_error, to_euler, translation_error, wrap_degrees, GeometryError, Norm, Quaternion,
    RelativePose, RigidTransform, Translation, Vec3,
};
use crate::numeric::{mean, median, pairwise_sum};
use crate::pairgen::{subspace_stats, PairGenError};

pub use curve::{bin_samples, error_curve, trapezoid_auc, Auc, CurveBin, CurveStat, ErrorCurve};
pub use report::MetricReport;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no pairs to evaluate")]
    NoPairs,
    #[error("{count} pair(s) without a prediction, e.g. {sample}")]
    MissingPredictions { count: usize, sample: String },
    #[error("{count} prediction(s) for unknown pairs, e.g. {sample}")]
    UnknownPredictions { count: usize, sample: String },
    #[error("{count} duplicated prediction key(s), e.g. {sample}")]
    DuplicatePredictions { count: usize, sample: String },
    #[error("{metric} undefined: {reason}")]
    Undefined { metric: &'static str, reason: String },
    #[error("gimbal-locked rotation in pair {key}")]
    GimbalLock { key: String },
    #[error("predicted quaternion has zero norm")]
    ZeroQuaternion,
    #[error("naive source '{0}' requested but no source pairs given")]
    MissingNaiveSource(NaiveSource),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    PairGen(#[from] PairGenError),
    #[error("{0}")]
    Config(String),
}

/// Selectable report entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistic {
    Mean,
    Median,
    Mape,
    Mase,
    Mapse,
    RMape,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::Mean,
        Statistic::Median,
        Statistic::Mape,
        Statistic::Mase,
        Statistic::Mapse,
        Statistic::RMape,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Median => "median",
            Statistic::Mape => "mape",
            Statistic::Mase => "mase",
            Statistic::Mapse => "mapse",
            Statistic::RMape => "rmape",
        }
    }

    /// Parses a comma-separated list, keeping canonical order.
    pub fn parse_list(s: &str) -> Result<Vec<Statistic>, String> {
        let mut out: Vec<Statistic> =
            s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect::<Result<_, _>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err("empty statistics list".into());
        }
        Ok(out)
    }

    pub fn list_string(list: &[Statistic]) -> String {
        list.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",")
    }
}

impl std::str::FromStr for Statistic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Statistic::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown statistic '{s}' (expected mean, median, mape, mase, mapse, rmape)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GimbalPolicy {
    #[default]
    Exclude,
    Error,
}

impl GimbalPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            GimbalPolicy::Exclude => "exclude",
            GimbalPolicy::Error => "error",
        }
    }
}

impl std::str::FromStr for GimbalPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exclude" => Ok(GimbalPolicy::Exclude),
            "error" => Ok(GimbalPolicy::Error),
            _ => Err(format!("unknown gimbal policy '{s}' (expected exclude or error)")),
        }
    }
}

/// Where the naive predictor's mean comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NaiveSource {
    TrainPairs,
    #[default]
    EvalPairs,
}

impl NaiveSource {
    pub fn as_str(self) -> &'static str {
        match self {
            NaiveSource::TrainPairs => "train_pairs",
            NaiveSource::EvalPairs => "eval_pairs",
        }
    }
}

impl fmt::Display for NaiveSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NaiveSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train_pairs" | "train" => Ok(NaiveSource::TrainPairs),
            "eval_pairs" | "eval" => Ok(NaiveSource::EvalPairs),
            _ => Err(format!("unknown naive source '{s}' (expected train_pairs or eval_pairs)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    /// Norm of the percentage and scaled errors. Mean/median translation
    /// errors are always Euclidean.
    pub norm: Norm,
    pub statistics: Vec<Statistic>,
    pub gimbal: GimbalPolicy,
    pub naive_source: NaiveSource,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            norm: Norm::L1,
            statistics: Statistic::ALL.to_vec(),
            gimbal: GimbalPolicy::Exclude,
            naive_source: NaiveSource::EvalPairs,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.statistics.is_empty() {
            return Err(MetricsError::Config("statistics must not be empty".into()));
        }
        Ok(())
    }

    pub fn wants(&self, s: Statistic) -> bool {
        self.statistics.contains(&s)
    }
}

/// Ground truth and estimate of one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub truth: RelativePose,
    pub estimate: RelativePose,
    pub overlap: f64,
}

impl ErrorSample {
    pub fn translation_error(&self, norm: Norm) -> f64 {
        translation_error(self.truth.translation, self.estimate.translation, norm)
    }

    pub fn rotation_error(&self) -> f64 {
        rotation_error(&self.truth.rotation, &self.estimate.rotation)
    }
}

fn key_string(a: &str, q: &str) -> String {
    format!("{a}->{q}")
}

fn sample_keys(keys: &[String]) -> String {
    const SHOW: usize = 5;
    let mut s = keys.iter().take(SHOW).cloned().collect::<Vec<_>>().join(", ");
    if keys.len() > SHOW {
        s.push_str(", ...");
    }
    s
}

/// Joins predictions to pairs. Every pair needs exactly one prediction and
/// every prediction must name an existing pair.
pub fn match_predictions(
    pairs: &[PairRecord],
    predictions: &[Prediction],
) -> Result<Vec<ErrorSample>, MetricsError> {
    let mut by_key: HashMap<(&str, &str), &Prediction> = HashMap::with_capacity(predictions.len());
    let mut duplicates = Vec::new();
    for p in predictions {
        if by_key.insert(p.key(), p).is_some() {
            duplicates.push(key_string(&p.anchor_id, &p.query_id));
        }
    }
    if !duplicates.is_empty() {
        return Err(MetricsError::DuplicatePredictions { count: duplicates.len(), sample: sample_keys(&duplicates) });
    }
    let mut missing = Vec::new();
    let mut samples = Vec::with_capacity(pairs.len());
    for r in pairs {
        match by_key.remove(&r.key()) {
            Some(p) => samples.push(ErrorSample { truth: r.rel, estimate: p.rel_hat, overlap: r.overlap }),
            None => missing.push(key_string(&r.anchor_id, &r.query_id)),
        }
    }
    if !missing.is_empty() {
        return Err(MetricsError::MissingPredictions { count: missing.len(), sample: sample_keys(&missing) });
    }
    if !by_key.is_empty() {
        let mut extra: Vec<String> = by_key.keys().map(|(a, q)| key_string(a, q)).collect();
        extra.sort();
        return Err(MetricsError::UnknownPredictions { count: extra.len(), sample: sample_keys(&extra) });
    }
    Ok(samples)
}

/// Mean and median of the Euclidean translation error (meters) and the
/// rotation error (degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardErrors {
    pub t_mean: f64,
    pub t_median: f64,
    pub q_mean: f64,
    pub q_median: f64,
}

pub fn standard_errors(samples: &[ErrorSample]) -> Result<StandardErrors, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let (t, q): (Vec<f64>, Vec<f64>) =
        samples.par_iter().map(|s| (s.translation_error(Norm::L2), s.rotation_error())).unzip();
    Ok(StandardErrors {
        t_mean: mean(&t).expect("non-empty"),
        t_median: median(&t).expect("non-empty"),
        q_mean: mean(&q).expect("non-empty"),
        q_median: median(&q).expect("non-empty"),
    })
}

/// A normalized error together with how many pairs it averaged over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio {
    pub value: f64,
    pub used: usize,
    /// Pairs left out because their normalizer was zero (or gimbal locked).
    pub excluded: usize,
}

/// `(1/N) Σ ‖t - t̂‖ / ‖t‖`; pairs with `t = 0` are excluded and counted.
pub fn mape_translation(samples: &[ErrorSample], norm: Norm) -> Result<Ratio, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let terms: Vec<f64> = samples
        .iter()
        .filter_map(|s| {
            let d = norm.of(s.truth.translation);
            (d != 0.0).then(|| s.translation_error(norm) / d)
        })
        .collect();
    let excluded = samples.len() - terms.len();
    let value = mean(&terms).ok_or_else(|| MetricsError::Undefined {
        metric: "MAPE",
        reason: "every ground-truth translation is zero".into(),
    })?;
    Ok(Ratio { value, used: terms.len(), excluded })
}

/// `Σ ‖t - t̂‖ / Σ ‖t - t̄‖` where `t̄` is the naive mean translation.
pub fn mase_translation(samples: &[ErrorSample], naive_mean: Translation, norm: Norm) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let num: Vec<f64> = samples.iter().map(|s| s.translation_error(norm)).collect();
    let den: Vec<f64> = samples.iter().map(|s| norm.of(s.truth.translation - naive_mean)).collect();
    let den = pairwise_sum(&den);
    if den == 0.0 {
        return Err(MetricsError::Undefined {
            metric: "MASE",
            reason: "every ground truth equals the naive mean".into(),
        });
    }
    Ok(pairwise_sum(&num) / den)
}

/// `Σ (‖t - t̂‖ / ‖t‖) / Σ (‖t - t̄‖ / ‖t‖)`: the predictor's percentage
/// error relative to the naive predictor's. Pairs with `t = 0` are left out
/// of both sums.
pub fn mapse_translation(samples: &[ErrorSample], naive_mean: Translation, norm: Norm) -> Result<Ratio, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let mut num = Vec::with_capacity(samples.len());
    let mut den = Vec::with_capacity(samples.len());
    for s in samples {
        let d = norm.of(s.truth.translation);
        if d != 0.0 {
            num.push(s.translation_error(norm) / d);
            den.push(norm.of(s.truth.translation - naive_mean) / d);
        }
    }
    let excluded = samples.len() - num.len();
    let den_sum = pairwise_sum(&den);
    if num.is_empty() || den_sum == 0.0 {
        return Err(MetricsError::Undefined {
            metric: "MAPSE",
            reason: "naive percentage error is zero".into(),
        });
    }
    Ok(Ratio { value: pairwise_sum(&num) / den_sum, used: num.len(), excluded })
}

/// Rotation MAPE over intrinsic Z-Y-X Euler angles:
/// `(1/N) Σ |wrap(r - r̂)|₁ / |r|₁`.
///
/// Angle differences are wrapped into `(-180°, 180°]`. Pairs whose ground
/// truth is the identity are excluded; gimbal-locked pairs follow `policy`.
pub fn mape_rotation(samples: &[ErrorSample], policy: GimbalPolicy) -> Result<Ratio, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let mut terms = Vec::with_capacity(samples.len());
    let mut gimbal = 0usize;
    for (i, s) in samples.iter().enumerate() {
        let (r, r_hat) = match (to_euler(&s.truth.rotation), to_euler(&s.estimate.rotation)) {
            (Ok(r), Ok(h)) => (r, h),
            (Err(e), _) | (_, Err(e)) => {
                debug_assert!(matches!(e, GeometryError::GimbalLock { .. }));
                if policy == GimbalPolicy::Error {
                    return Err(MetricsError::GimbalLock { key: format!("#{i}") });
                }
                gimbal += 1;
                continue;
            }
        };
        let den: f64 = r.to_array().iter().map(|a| a.abs()).sum();
        if den == 0.0 {
            continue;
        }
        let num: f64 = r
            .to_array()
            .iter()
            .zip(r_hat.to_array())
            .map(|(a, b)| wrap_degrees(a - b).abs())
            .sum();
        terms.push(num / den);
    }
    let excluded = samples.len() - terms.len();
    let value = mean(&terms).ok_or_else(|| MetricsError::Undefined {
        metric: "R-MAPE",
        reason: format!("all pairs excluded ({gimbal} gimbal locked)"),
    })?;
    Ok(Ratio { value, used: terms.len(), excluded })
}

/// Predictor that always answers the mean relative pose of its source pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaivePredictor {
    pub mean: RelativePose,
    pub source_count: usize,
}

impl NaivePredictor {
    /// Componentwise mean translation; quaternions are flipped onto the
    /// first one's hemisphere, averaged componentwise and renormalized.
    pub fn from_truths(truths: &[RelativePose]) -> Result<Self, MetricsError> {
        let first = truths.first().ok_or(MetricsError::NoPairs)?;
        let n = truths.len() as f64;
        let axis = |f: fn(&RelativePose) -> f64| pairwise_sum(&truths.iter().map(f).collect::<Vec<_>>()) / n;
        let translation = Vec3::new(axis(|t| t.translation.x), axis(|t| t.translation.y), axis(|t| t.translation.z));
        let reference = first.rotation;
        let aligned: Vec<[f64; 4]> = truths
            .iter()
            .map(|t| {
                let c = t.rotation.components();
                if t.rotation.dot(&reference) < 0.0 { c.map(|v| -v) } else { c }
            })
            .collect();
        let comp = |k: usize| pairwise_sum(&aligned.iter().map(|c| c[k]).collect::<Vec<_>>());
        let rotation = Quaternion::new(comp(0), comp(1), comp(2), comp(3))
            .map_err(|e| MetricsError::Undefined { metric: "naive rotation", reason: e.to_string() })?;
        Ok(Self { mean: RigidTransform::new(rotation, translation), source_count: truths.len() })
    }

    pub fn from_pairs(pairs: &[PairRecord]) -> Result<Self, MetricsError> {
        Self::from_truths(&pairs.iter().map(|p| p.rel).collect::<Vec<_>>())
    }

    pub fn predict(&self, pairs: &[PairRecord]) -> Vec<Prediction> {
        pairs
            .iter()
            .map(|p| Prediction { anchor_id: p.anchor_id.clone(), query_id: p.query_id.clone(), rel_hat: self.mean })
            .collect()
    }
}

/// Weights of the combined translation/rotation loss.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

/// `α² + β² + e^(−α²)·‖t − t̂‖₂ + e^(−β²)·‖q − q̂/‖q̂‖‖₂` for a raw
/// (possibly unnormalized) predicted quaternion `[w, x, y, z]`.
pub fn combined_loss(
    truth: &RelativePose,
    q_hat: [f64; 4],
    t_hat: Translation,
    weights: LossWeights,
) -> Result<f64, MetricsError> {
    let n = q_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(MetricsError::ZeroQuaternion);
    }
    let q = truth.rotation.components();
    let l_q = q.iter().zip(q_hat).map(|(a, b)| (a - b / n).powi(2)).sum::<f64>().sqrt();
    let l_t = (truth.translation - t_hat).norm();
    let (a2, b2) = (weights.alpha * weights.alpha, weights.beta * weights.beta);
    Ok(a2 + b2 + (-a2).exp() * l_t + (-b2).exp() * l_q)
}

/// Values of every requested criterion on one sample set. `None` marks a
/// criterion that was not requested; requested but undefined criteria are
/// `None` with a note in `undefined`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricValues {
    pub t_mean: Option<f64>,
    pub t_median: Option<f64>,
    pub q_mean: Option<f64>,
    pub q_median: Option<f64>,
    pub t_mape: Option<f64>,
    pub t_mase: Option<f64>,
    pub t_mapse: Option<f64>,
    pub r_mape: Option<f64>,
    pub t_mape_excluded: usize,
    pub t_mapse_excluded: usize,
    pub r_mape_excluded: usize,
    pub undefined: Vec<(String, String)>,
}

fn defined<T>(name: &str, r: Result<T, MetricsError>, undefined: &mut Vec<(String, String)>) -> Result<Option<T>, MetricsError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(MetricsError::Undefined { reason, .. }) => {
            undefined.push((name.to_string(), reason));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Computes the criteria selected in `cfg` against the given naive mean.
pub fn compute_metrics(
    samples: &[ErrorSample],
    naive_mean: Translation,
    cfg: &MetricConfig,
) -> Result<MetricValues, MetricsError> {
    cfg.validate()?;
    let std = standard_errors(samples)?;
    let mut v = MetricValues::default();
    if cfg.wants(Statistic::Mean) {
        v.t_mean = Some(std.t_mean);
        v.q_mean = Some(std.q_mean);
    }
    if cfg.wants(Statistic::Median) {
        v.t_median = Some(std.t_median);
        v.q_median = Some(std.q_median);
    }
    let mut undefined = Vec::new();
    if cfg.wants(Statistic::Mape) {
        if let Some(r) = defined("t_mape", mape_translation(samples, cfg.norm), &mut undefined)? {
            v.t_mape = Some(r.value);
            v.t_mape_excluded = r.excluded;
        }
    }
    if cfg.wants(Statistic::Mase) {
        v.t_mase = defined("t_mase", mase_translation(samples, naive_mean, cfg.norm), &mut undefined)?;
    }
    if cfg.wants(Statistic::Mapse) {
        if let Some(r) = defined("t_mapse", mapse_translation(samples, naive_mean, cfg.norm), &mut undefined)? {
            v.t_mapse = Some(r.value);
            v.t_mapse_excluded = r.excluded;
        }
    }
    if cfg.wants(Statistic::RMape) {
        if let Some(r) = defined("r_mape", mape_rotation(samples, cfg.gimbal), &mut undefined)? {
            v.r_mape = Some(r.value);
            v.r_mape_excluded = r.excluded;
        }
    }
    v.undefined = undefined;
    Ok(v)
}

/// Full evaluation of a prediction file against its pair file.
///
/// `naive_pairs` supplies the naive predictor's source set when
/// `cfg.naive_source` is [`NaiveSource::TrainPairs`].
pub fn evaluate(
    pairs: &PairSet,
    predictions: &PredictionSet,
    naive_pairs: Option<&PairSet>,
    cfg: &MetricConfig,
) -> Result<MetricReport, MetricsError> {
    predictions.check_digest(pairs)?;
    let samples = match_predictions(pairs.records(), predictions.records())?;
    if samples.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let naive = match cfg.naive_source {
        NaiveSource::EvalPairs => NaivePredictor::from_pairs(pairs.records())?,
        NaiveSource::TrainPairs => {
            let src = naive_pairs.ok_or(MetricsError::MissingNaiveSource(cfg.naive_source))?;
            NaivePredictor::from_pairs(src.records())?
        }
    };
    let values = compute_metrics(&samples, naive.mean.translation, cfg)?;
    let subspace = subspace_stats(pairs.records(), 0.0)?;
    Ok(MetricReport {
        config: cfg.clone(),
        config_digest: pairs.config_digest(),
        predictor: predictions.meta.predictor.clone(),
        n_pairs: samples.len(),
        naive,
        values,
        subspace,
    })
}
