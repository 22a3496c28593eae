//! Pose stores, pair and prediction records, and their on-disk formats.

mod cambridge;
mod io;
mod sevenscenes;
pub mod text;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::frustum::OverlapConfig;
use crate::geometry::{Pose, RelativePose};

pub use cambridge::{parse_cambridge, parse_cambridge_str};
pub use io::{
    pair_meta_from_header, pair_meta_header, read_pairs, read_poses, read_predictions,
    write_pairs, write_poses, write_poses_with, write_predictions,
};
pub use sevenscenes::{parse_pose_matrix, parse_sevenscenes, parse_sevenscenes_split};

pub const POSE_CONVENTION: &str = "camera-to-world";
pub const QUATERNION_ORDER: &str = "wxyz";
pub const RELATIVE_CONVENTION: &str = "inverse(anchor)*query";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: {reason}")]
    Malformed { location: String, reason: String },
    #[error("unsupported format version '{found}' (this toolkit reads v1)")]
    Version { found: String },
    #[error("expected a '{expected}' file, found '{found}'")]
    Kind { expected: String, found: String },
    #[error("missing header key '{0}'")]
    MissingHeader(String),
    #[error("bad header value {key}={value}")]
    BadHeader { key: String, value: String },
    #[error("duplicate frame id '{0}'")]
    DuplicateId(String),
    #[error("invalid frame id '{0}' (must be non-empty, without commas or line breaks)")]
    InvalidId(String),
    #[error("config digest mismatch: pairs {pairs} vs predictions {predictions}")]
    DigestMismatch { pairs: String, predictions: String },
    #[error("header digest {stored} does not match its own configuration ({computed})")]
    CorruptDigest { stored: String, computed: String },
    #[error("duplicate record {anchor} -> {query}")]
    DuplicateRecord { anchor: String, query: String },
    #[error("{0}")]
    Rejected(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Split {
    #[default]
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(format!("unknown split '{s}' (expected train or test)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SourceFormat {
    SevenScenes,
    Cambridge,
    Synthetic,
    #[default]
    Canonical,
}

impl SourceFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceFormat::SevenScenes => "7scenes",
            SourceFormat::Cambridge => "cambridge",
            SourceFormat::Synthetic => "synthetic",
            SourceFormat::Canonical => "canonical",
        }
    }
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SourceFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "7scenes" => Ok(SourceFormat::SevenScenes),
            "cambridge" => Ok(SourceFormat::Cambridge),
            "synthetic" => Ok(SourceFormat::Synthetic),
            "canonical" => Ok(SourceFormat::Canonical),
            _ => Err(format!("unknown source format '{s}'")),
        }
    }
}

pub(crate) fn validate_id(id: &str) -> Result<(), DatasetError> {
    if id.is_empty() || id.contains([',', '\n', '\r']) || id.starts_with('#') || id.trim() != id {
        return Err(DatasetError::InvalidId(id.to_string()));
    }
    Ok(())
}

/// Ordered collection of camera-to-world poses from one scene split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseSet {
    pub scene_name: String,
    pub split: Split,
    pub source_format: SourceFormat,
    pub convention_note: String,
    poses: Vec<Pose>,
}

impl PoseSet {
    /// Fails on invalid or repeated frame ids.
    pub fn new(
        scene_name: impl Into<String>,
        split: Split,
        source_format: SourceFormat,
        convention_note: impl Into<String>,
        poses: Vec<Pose>,
    ) -> Result<Self, DatasetError> {
        let mut seen = std::collections::HashSet::with_capacity(poses.len());
        for p in &poses {
            validate_id(&p.frame_id)?;
            if !seen.insert(p.frame_id.as_str()) {
                return Err(DatasetError::DuplicateId(p.frame_id.clone()));
            }
        }
        let scene_name = scene_name.into();
        let convention_note = convention_note.into();
        for v in [&scene_name, &convention_note] {
            if v.contains(['\n', '\r']) {
                return Err(DatasetError::InvalidId(v.clone()));
            }
        }
        Ok(Self { scene_name, split, source_format, convention_note, poses })
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn index(&self) -> HashMap<&str, &Pose> {
        self.poses.iter().map(|p| (p.frame_id.as_str(), p)).collect()
    }
}

/// A frame that a parser could not turn into a pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub source: String,
    pub reason: String,
}

/// Parser output: every input record is either a pose or a rejection.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingest {
    pub set: PoseSet,
    pub rejected: Vec<Rejection>,
    pub warnings: Vec<String>,
}

impl Ingest {
    pub fn input_records(&self) -> usize {
        self.set.len() + self.rejected.len()
    }

    /// Turns any rejection into an error.
    pub fn strict(self) -> Result<PoseSet, DatasetError> {
        match self.rejected.first() {
            None => Ok(self.set),
            Some(r) => Err(DatasetError::Rejected(format!(
                "{} of {} records rejected; first: {}: {}",
                self.rejected.len(),
                self.input_records(),
                r.source,
                r.reason
            ))),
        }
    }
}

/// Whether pairs are kept in both directions or once per unordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PairOrdering {
    #[default]
    Ordered,
    Unordered,
}

impl PairOrdering {
    pub fn as_str(self) -> &'static str {
        match self {
            PairOrdering::Ordered => "ordered",
            PairOrdering::Unordered => "unordered",
        }
    }
}

impl std::str::FromStr for PairOrdering {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ordered" => Ok(PairOrdering::Ordered),
            "unordered" => Ok(PairOrdering::Unordered),
            _ => Err(format!("unknown pair ordering '{s}'")),
        }
    }
}

/// Hash of everything that determines overlap values and relative-pose
/// labels: the overlap configuration, the pair ordering and the pose
/// conventions.
pub fn config_digest(cfg: &OverlapConfig, ordering: PairOrdering) -> String {
    let f = &cfg.frustum;
    let canonical = format!(
        "frustoval-overlap/v1;hfov={:?};vfov={:?};near={:?};far={:?};grid={};eps={:?};\
         max_rot={:?};symmetric={};ordering={};pose={};quat={};relative={}",
        f.hfov_deg,
        f.vfov_deg,
        f.near,
        f.far,
        f.grid,
        f.boundary_epsilon,
        cfg.max_relative_rotation_deg,
        cfg.symmetric,
        ordering.as_str(),
        POSE_CONVENTION,
        QUATERNION_ORDER,
        RELATIVE_CONVENTION,
    );
    let digest = Sha256::digest(canonical.as_bytes());
    hex::encode(&digest[..16])
}

/// Provenance of a pair set.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMeta {
    pub scene_name: String,
    pub split: Split,
    pub config: OverlapConfig,
    pub ordering: PairOrdering,
    /// Exclusive lower bound on overlap.
    pub min_overlap: f64,
    /// Inclusive upper bound on overlap.
    pub max_overlap: f64,
    pub pose_count: usize,
}

impl PairMeta {
    pub fn config_digest(&self) -> String {
        config_digest(&self.config, self.ordering)
    }
}

/// Ground-truth pair label.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub anchor_id: String,
    pub query_id: String,
    pub overlap: f64,
    pub rel: RelativePose,
}

impl PairRecord {
    pub fn key(&self) -> (&str, &str) {
        (&self.anchor_id, &self.query_id)
    }
}

/// Pair records sorted by `(anchor_id, query_id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub meta: PairMeta,
    records: Vec<PairRecord>,
}

fn sorted_unique<T>(
    mut records: Vec<T>,
    key: impl Fn(&T) -> (&str, &str),
) -> Result<Vec<T>, DatasetError> {
    records.sort_by(|a, b| key(a).cmp(&key(b)));
    if let Some(w) = records.windows(2).find(|w| key(&w[0]) == key(&w[1])) {
        let (a, q) = key(&w[0]);
        return Err(DatasetError::DuplicateRecord { anchor: a.into(), query: q.into() });
    }
    Ok(records)
}

impl PairSet {
    /// Sorts the records; fails on repeated keys, self pairs or bad ids.
    pub fn new(meta: PairMeta, records: Vec<PairRecord>) -> Result<Self, DatasetError> {
        for r in &records {
            validate_id(&r.anchor_id)?;
            validate_id(&r.query_id)?;
            if r.anchor_id == r.query_id {
                return Err(DatasetError::Malformed {
                    location: r.anchor_id.clone(),
                    reason: "pair of a frame with itself".into(),
                });
            }
        }
        let records = sorted_unique(records, PairRecord::key)?;
        Ok(Self { meta, records })
    }

    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn config_digest(&self) -> String {
        self.meta.config_digest()
    }

    /// Records with `lo < overlap <= hi`, same metadata with narrowed bounds.
    pub fn filter_overlap(&self, lo: f64, hi: f64) -> PairSet {
        let records =
            self.records.iter().filter(|r| r.overlap > lo && r.overlap <= hi).cloned().collect();
        PairSet {
            meta: PairMeta {
                min_overlap: lo.max(self.meta.min_overlap),
                max_overlap: hi.min(self.meta.max_overlap),
                ..self.meta.clone()
            },
            records,
        }
    }
}

/// A predictor's estimate for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub anchor_id: String,
    pub query_id: String,
    pub rel_hat: RelativePose,
}

impl Prediction {
    pub fn key(&self) -> (&str, &str) {
        (&self.anchor_id, &self.query_id)
    }
}

/// Provenance of a prediction set: the pair set it answers plus the
/// predictor description.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMeta {
    pub pairs: PairMeta,
    pub predictor: String,
    pub params: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub meta: PredictionMeta,
    records: Vec<Prediction>,
}

impl PredictionSet {
    /// Sorts the records; fails on repeated keys.
    pub fn new(meta: PredictionMeta, records: Vec<Prediction>) -> Result<Self, DatasetError> {
        for r in &records {
            validate_id(&r.anchor_id)?;
            validate_id(&r.query_id)?;
        }
        let records = sorted_unique(records, Prediction::key)?;
        Ok(Self { meta, records })
    }

    pub fn records(&self) -> &[Prediction] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn config_digest(&self) -> String {
        self.meta.pairs.config_digest()
    }

    /// Refuses when the predictions were made for differently configured pairs.
    pub fn check_digest(&self, pairs: &PairSet) -> Result<(), DatasetError> {
        let (p, q) = (pairs.config_digest(), self.config_digest());
        if p != q {
            return Err(DatasetError::DigestMismatch { pairs: p, predictions: q });
        }
        Ok(())
    }
}
