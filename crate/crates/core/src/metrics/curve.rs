//! Error as a function of overlap, and its area.

use crate::dataset::text::{fmt_num, fmt_opt, write_document, Header, TOOLKIT};
use crate::numeric::{mean, median, pairwise_sum};
use crate::pairgen::OverlapBinning;

use super::ErrorSample;
use crate::geometry::Norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurveStat {
    #[default]
    Median,
    Mean,
}

impl CurveStat {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveStat::Median => "median",
            CurveStat::Mean => "mean",
        }
    }

    fn apply(self, v: &[f64]) -> Option<f64> {
        match self {
            CurveStat::Median => median(v),
            CurveStat::Mean => mean(v),
        }
    }
}

impl std::str::FromStr for CurveStat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(CurveStat::Median),
            "mean" => Ok(CurveStat::Mean),
            _ => Err(format!("unknown curve statistic '{s}' (expected median or mean)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveBin {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
    pub count: usize,
    /// `None` for an absent (empty) bin.
    pub t_error: Option<f64>,
    pub q_error: Option<f64>,
}

/// Area under a curve; lower is better for error curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Auc {
    /// Raw area divided by the x span. A single point has no span, so its
    /// normalized value is the point's y.
    pub normalized: f64,
    pub raw: f64,
}

/// Trapezoid rule over `(x, y)` points sorted by `x`.
pub fn trapezoid_auc(points: &[(f64, f64)]) -> Option<Auc> {
    let (first, last) = (points.first()?, points.last()?);
    if points.len() == 1 {
        return Some(Auc { normalized: first.1, raw: 0.0 });
    }
    let pieces: Vec<f64> = points.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).collect();
    let raw = pairwise_sum(&pieces);
    Some(Auc { normalized: raw / (last.0 - first.0), raw })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub stat: CurveStat,
    pub bins: Vec<CurveBin>,
    /// Samples whose overlap fell outside every bin.
    pub unbinned: usize,
    pub auc_t: Option<Auc>,
    pub auc_q: Option<Auc>,
}

/// Groups samples by overlap bin; the second value counts unbinned samples.
pub fn bin_samples(samples: &[ErrorSample], binning: &OverlapBinning) -> (Vec<Vec<ErrorSample>>, usize) {
    let mut groups = vec![Vec::new(); binning.len()];
    let mut unbinned = 0;
    for s in samples {
        match binning.bin_of(s.overlap) {
            Some(b) => groups[b].push(*s),
            None => unbinned += 1,
        }
    }
    (groups, unbinned)
}

/// Per-bin statistic of the Euclidean translation error and the rotation
/// error. Empty bins are absent and skipped by the integration.
pub fn error_curve(samples: &[ErrorSample], binning: &OverlapBinning, stat: CurveStat) -> ErrorCurve {
    let (groups, unbinned) = bin_samples(samples, binning);
    let bins: Vec<CurveBin> = binning
        .bins()
        .zip(&groups)
        .map(|((lo, hi), g)| {
            let t: Vec<f64> = g.iter().map(|s| s.translation_error(Norm::L2)).collect();
            let q: Vec<f64> = g.iter().map(ErrorSample::rotation_error).collect();
            CurveBin { lo, hi, mid: 0.5 * (lo + hi), count: g.len(), t_error: stat.apply(&t), q_error: stat.apply(&q) }
        })
        .collect();
    let points = |f: fn(&CurveBin) -> Option<f64>| -> Vec<(f64, f64)> {
        bins.iter().filter_map(|b| f(b).map(|y| (b.mid, y))).collect()
    };
    let auc_t = trapezoid_auc(&points(|b| b.t_error));
    let auc_q = trapezoid_auc(&points(|b| b.q_error));
    ErrorCurve { stat, bins, unbinned, auc_t, auc_q }
}

impl ErrorCurve {
    pub fn absent_bins(&self) -> Vec<usize> {
        self.bins.iter().enumerate().filter(|(_, b)| b.count == 0).map(|(i, _)| i).collect()
    }

    /// Plot-ready CSV in the canonical text format. `extra` lines are
    /// appended to the header.
    pub fn to_csv(&self, extra: &[(String, String)]) -> String {
        let auc = |a: Option<Auc>, raw: bool| fmt_opt(a.map(|a| if raw { a.raw } else { a.normalized }));
        let absent = self.absent_bins();
        let mut h = Header::new();
        h.push("toolkit", TOOLKIT)
            .push("stat", self.stat.as_str())
            .push("translation_norm", Norm::L2)
            .push("bin_count", self.bins.len())
            .push("auc_t", auc(self.auc_t, false))
            .push("auc_q", auc(self.auc_q, false))
            .push("auc_t_raw", auc(self.auc_t, true))
            .push("auc_q_raw", auc(self.auc_q, true))
            .push("absent_bins", if absent.is_empty() {
                "none".to_string()
            } else {
                absent.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
            })
            .push("unbinned", self.unbinned);
        h.extend(extra.iter().cloned());
        let rows: Vec<Vec<String>> = self
            .bins
            .iter()
            .map(|b| {
                vec![fmt_num(b.lo), fmt_num(b.mid), fmt_num(b.hi), fmt_opt(b.t_error), fmt_opt(b.q_error), b.count.to_string()]
            })
            .collect();
        write_document("curve", &h, &["bin_lo", "bin_mid", "bin_hi", "t_stat", "q_stat", "n"], &rows)
    }
}
