//! All-pairs overlap scoring over a pose set, overlap histograms and
//! subspace statistics.
//!
//! Work is spread over the current rayon pool. Each candidate pair is
//! scored independently and the output is sorted by frame ids, so the
//! result does not depend on the number of threads.

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{DatasetError, PairMeta, PairOrdering, PairRecord, PairSet, PoseSet};
use crate::frustum::{overlap_score_prepared, CameraFrustum, FrustumError, OverlapConfig};
use crate::geometry::{relative, rotation_error};
use crate::numeric::{mean, population_std};

#[derive(Debug, Error)]
pub enum PairGenError {
    #[error(transparent)]
    Config(#[from] FrustumError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("overlap range must satisfy 0 <= min < max <= 1, got ({min}, {max}]")]
    Range { min: f64, max: f64 },
    #[error("invalid bin edges: {0}")]
    Binning(String),
    #[error("no pairs with overlap >= {threshold}: subspace diameter undefined")]
    EmptySubspace { threshold: f64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Ascending bin edges in `[0, 1]`. Bins are `(lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapBinning {
    edges: Vec<f64>,
}

impl Default for OverlapBinning {
    /// `(0, 0.1], (0.1, 0.2], ..., (0.9, 1.0]`.
    fn default() -> Self {
        Self { edges: (0..=10).map(|k| k as f64 / 10.0).collect() }
    }
}

impl OverlapBinning {
    pub fn new(edges: Vec<f64>) -> Result<Self, PairGenError> {
        if edges.len() < 2 {
            return Err(PairGenError::Binning("need at least two edges".into()));
        }
        if edges.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(PairGenError::Binning(format!("edges must lie in [0, 1]: {edges:?}")));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PairGenError::Binning(format!("edges must strictly ascend: {edges:?}")));
        }
        Ok(Self { edges })
    }

    /// Edges `lo, lo + step, ..., hi`. Values are snapped to a 1e-9 grid so
    /// that e.g. `0.1:0.9:0.1` yields exactly `0.3` rather than
    /// `0.30000000000000004`.
    pub fn from_range(lo: f64, hi: f64, step: f64) -> Result<Self, PairGenError> {
        if !(step > 0.0) || !(hi > lo) {
            return Err(PairGenError::Binning(format!("bad range {lo}:{hi}:{step}")));
        }
        let n = ((hi - lo) / step).round();
        if (lo + n * step - hi).abs() > 1e-9 {
            return Err(PairGenError::Binning(format!("step {step} does not divide [{lo}, {hi}]")));
        }
        let snap = |v: f64| (v * 1e9).round();
        let (lo_i, step_i) = (snap(lo), snap(step));
        Self::new((0..=n as i64).map(|k| (lo_i + k as f64 * step_i) / 1e9).collect())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges.windows(2).map(|w| (w[0], w[1]))
    }

    /// Index of the `(lo, hi]` bin holding `x`.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x > self.edges[0] && x <= *self.edges.last().unwrap()) {
            return None;
        }
        // First edge >= x closes the bin.
        let k = self.edges.partition_point(|e| *e < x);
        Some(k - 1)
    }
}

/// `lo:hi:step` or a comma-separated edge list.
impl std::str::FromStr for OverlapBinning {
    type Err = PairGenError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| PairGenError::Binning(format!("not a number: '{t}'")));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [lo, hi, step] => Self::from_range(num(lo)?, num(hi)?, num(step)?),
            [list] => Self::new(list.split(',').map(num).collect::<Result<_, _>>()?),
            _ => Err(PairGenError::Binning(format!("expected lo:hi:step or a comma list, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGenOptions {
    pub ordering: PairOrdering,
    /// Bounding-sphere reject before point tests. Never changes scores.
    pub early_reject: bool,
}

impl Default for PairGenOptions {
    fn default() -> Self {
        Self { ordering: PairOrdering::Ordered, early_reject: true }
    }
}

/// Counters describing where candidate pairs were decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairGenStats {
    pub candidates: u64,
    pub rotation_gated: u64,
    /// Zero-scored without point tests (sphere reject or gate).
    pub early_zero: u64,
    pub point_tested: u64,
}

impl PairGenStats {
    fn merge(self, o: Self) -> Self {
        Self {
            candidates: self.candidates + o.candidates,
            rotation_gated: self.rotation_gated + o.rotation_gated,
            early_zero: self.early_zero + o.early_zero,
            point_tested: self.point_tested + o.point_tested,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub pairs: PairSet,
    pub stats: PairGenStats,
    pub warnings: Vec<String>,
}

/// Scores every candidate pair and keeps those with
/// `min_overlap < overlap <= max_overlap`.
///
/// Ordered mode scores `anchor <- query` for all `i != j` with the
/// configured (directional unless `cfg.symmetric`) score. Unordered mode
/// keeps `i < j` only and always uses the symmetric score; the stored
/// configuration reflects that.
pub fn generate_pairs(
    poses: &PoseSet,
    cfg: &OverlapConfig,
    min_overlap: f64,
    max_overlap: f64,
    opts: PairGenOptions,
) -> Result<Generated, PairGenError> {
    cfg.validate()?;
    if !(0.0 <= min_overlap && min_overlap < max_overlap && max_overlap <= 1.0) {
        return Err(PairGenError::Range { min: min_overlap, max: max_overlap });
    }
    let cfg = match opts.ordering {
        PairOrdering::Ordered => *cfg,
        PairOrdering::Unordered => OverlapConfig { symmetric: true, ..*cfg },
    };
    let meta = PairMeta {
        scene_name: poses.scene_name.clone(),
        split: poses.split,
        config: cfg,
        ordering: opts.ordering,
        min_overlap,
        max_overlap,
        pose_count: poses.len(),
    };
    let mut warnings = Vec::new();
    if poses.len() < 2 {
        warnings.push(format!("pose set has {} pose(s); no pairs generated", poses.len()));
        return Ok(Generated { pairs: PairSet::new(meta, Vec::new())?, stats: PairGenStats::default(), warnings });
    }

    let list = poses.poses();
    let frustums: Vec<CameraFrustum> =
        list.par_iter().map(|p| CameraFrustum::new(p, &cfg.frustum)).collect();

    let per_anchor: Vec<(Vec<PairRecord>, PairGenStats)> = (0..list.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let mut stats = PairGenStats::default();
            let start = match opts.ordering {
                PairOrdering::Ordered => 0,
                PairOrdering::Unordered => i + 1,
            };
            for j in start..list.len() {
                if i == j {
                    continue;
                }
                stats.candidates += 1;
                let (a, b) = (&frustums[i], &frustums[j]);
                let gated = rotation_error(&a.rotation, &b.rotation) > cfg.max_relative_rotation_deg;
                let overlap = if gated {
                    stats.rotation_gated += 1;
                    stats.early_zero += 1;
                    0.0
                } else if opts.early_reject && !a.sphere.intersects(&b.sphere) {
                    stats.early_zero += 1;
                    0.0
                } else {
                    stats.point_tested += 1;
                    overlap_score_prepared(a, b, &cfg, false)
                };
                if overlap > min_overlap && overlap <= max_overlap {
                    out.push(PairRecord {
                        anchor_id: list[i].frame_id.clone(),
                        query_id: list[j].frame_id.clone(),
                        overlap,
                        rel: relative(&list[i].transform, &list[j].transform),
                    });
                }
            }
            (out, stats)
        })
        .collect();

    let mut stats = PairGenStats::default();
    let mut records = Vec::new();
    for (r, s) in per_anchor {
        records.extend(r);
        stats = stats.merge(s);
    }
    Ok(Generated { pairs: PairSet::new(meta, records)?, stats, warnings })
}

/// Runs [`generate_pairs`] on a dedicated pool of `threads` workers.
pub fn generate_pairs_with_threads(
    poses: &PoseSet,
    cfg: &OverlapConfig,
    min_overlap: f64,
    max_overlap: f64,
    opts: PairGenOptions,
    threads: usize,
) -> Result<Generated, PairGenError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PairGenError::ThreadPool(e.to_string()))?;
    pool.install(|| generate_pairs(poses, cfg, min_overlap, max_overlap, opts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<(f64, f64, usize)>,
    /// Pairs outside every bin (e.g. zero overlap).
    pub unbinned: usize,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.2).sum::<usize>() + self.unbinned
    }
}

pub fn bin_histogram(pairs: &[PairRecord], binning: &OverlapBinning) -> Histogram {
    let mut counts = vec![0usize; binning.len()];
    let mut unbinned = 0;
    for p in pairs {
        match binning.bin_of(p.overlap) {
            Some(k) => counts[k] += 1,
            None => unbinned += 1,
        }
    }
    let bins = binning.bins().zip(counts).map(|((lo, hi), n)| (lo, hi, n)).collect();
    Histogram { bins, unbinned }
}

/// Spread of the relative translations admitted at an overlap threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceStats {
    /// `mean_norm + 2 * std_norm`.
    pub diameter: f64,
    pub mean_norm: f64,
    /// Population standard deviation.
    pub std_norm: f64,
    pub count: usize,
    pub threshold: f64,
}

/// Statistics of `‖t_rel‖` over pairs with `overlap >= threshold`.
pub fn subspace_stats(pairs: &[PairRecord], threshold: f64) -> Result<SubspaceStats, PairGenError> {
    let norms: Vec<f64> =
        pairs.iter().filter(|p| p.overlap >= threshold).map(|p| p.rel.translation.norm()).collect();
    let (Some(mean_norm), Some(std_norm)) = (mean(&norms), population_std(&norms)) else {
        return Err(PairGenError::EmptySubspace { threshold });
    };
    Ok(SubspaceStats {
        diameter: mean_norm + 2.0 * std_norm,
        mean_norm,
        std_norm,
        count: norms.len(),
        threshold,
    })
}
