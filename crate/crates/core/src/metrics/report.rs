//! Serialized evaluation results.

use crate::dataset::text::{
    fmt_num, fmt_opt, fmt_quaternion, fmt_vec3, parse_document, parse_opt, write_document, Header, TOOLKIT,
};
use crate::dataset::DatasetError;
use crate::geometry::{Norm, Quaternion, RigidTransform, Vec3};
use crate::pairgen::SubspaceStats;

use super::{GimbalPolicy, MetricConfig, MetricValues, NaivePredictor, Statistic};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub config: MetricConfig,
    pub config_digest: String,
    pub predictor: String,
    pub n_pairs: usize,
    pub naive: NaivePredictor,
    pub values: MetricValues,
    /// Spread of the evaluated relative translations.
    pub subspace: SubspaceStats,
}

const NAIVE_KEYS: [&str; 7] = ["naive.qw", "naive.qx", "naive.qy", "naive.qz", "naive.tx", "naive.ty", "naive.tz"];

impl MetricReport {
    fn rows(&self) -> Vec<(&'static str, String)> {
        let v = &self.values;
        let c = &self.config;
        let mut rows = Vec::new();
        if c.wants(Statistic::Mean) {
            rows.push(("t_mean", fmt_opt(v.t_mean)));
            rows.push(("q_mean", fmt_opt(v.q_mean)));
        }
        if c.wants(Statistic::Median) {
            rows.push(("t_median", fmt_opt(v.t_median)));
            rows.push(("q_median", fmt_opt(v.q_median)));
        }
        if c.wants(Statistic::Mape) {
            rows.push(("t_mape", fmt_opt(v.t_mape)));
            rows.push(("t_mape_excluded", v.t_mape_excluded.to_string()));
        }
        if c.wants(Statistic::Mase) {
            rows.push(("t_mase", fmt_opt(v.t_mase)));
        }
        if c.wants(Statistic::Mapse) {
            rows.push(("t_mapse", fmt_opt(v.t_mapse)));
            rows.push(("t_mapse_excluded", v.t_mapse_excluded.to_string()));
        }
        if c.wants(Statistic::RMape) {
            rows.push(("r_mape", fmt_opt(v.r_mape)));
            rows.push(("r_mape_excluded", v.r_mape_excluded.to_string()));
        }
        let s = &self.subspace;
        rows.push(("subspace_diameter", fmt_num(s.diameter)));
        rows.push(("subspace_mean_norm", fmt_num(s.mean_norm)));
        rows.push(("subspace_std_norm", fmt_num(s.std_norm)));
        rows
    }

    fn header(&self, extra: &[(String, String)]) -> Header {
        let c = &self.config;
        let mut h = Header::new();
        h.push("toolkit", TOOLKIT);
        h.extend(extra.iter().cloned());
        h.push("predictor", &self.predictor)
            .push("config_digest", &self.config_digest)
            .push("n_pairs", self.n_pairs)
            .push("norm", c.norm)
            .push("denominator_norm", c.norm)
            .push("translation_error_norm", Norm::L2)
            .push("stats", Statistic::list_string(&c.statistics))
            .push("gimbal", c.gimbal.as_str())
            .push("naive-source", c.naive_source)
            .push("naive.count", self.naive.source_count);
        let m = &self.naive.mean;
        let fields = fmt_quaternion(&m.rotation).into_iter().chain(fmt_vec3(m.translation));
        h.extend(NAIVE_KEYS.iter().map(|k| k.to_string()).zip(fields));
        h.push("subspace_count", self.subspace.count);
        h.extend(self.values.undefined.iter().map(|(k, r)| (format!("undefined.{k}"), r.clone())));
        h
    }

    /// Canonical text form. `extra` entries are echoed after the toolkit line.
    pub fn to_text(&self, extra: &[(String, String)]) -> String {
        let rows: Vec<Vec<String>> = self.rows().into_iter().map(|(k, v)| vec![k.to_string(), v]).collect();
        write_document("report", &self.header(extra), &["metric", "value"], &rows)
    }

    /// Flat `key=value` lines with the same values as [`MetricReport::to_text`].
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.header(&[]).entries() {
            out.push_str(&format!("{k}={v}\n"));
        }
        for (k, v) in self.rows() {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DatasetError> {
        let doc = parse_document(text, "report")?;
        let h = &doc.header;
        let bad = |key: &str, value: &str| DatasetError::BadHeader { key: key.into(), value: value.into() };
        let stats = h.require("stats")?;
        let config = MetricConfig {
            norm: h.require_parsed("norm")?,
            statistics: Statistic::parse_list(stats).map_err(|_| bad("stats", stats))?,
            gimbal: h.require_parsed::<GimbalPolicy>("gimbal")?,
            naive_source: h.require_parsed("naive-source")?,
        };
        let mut naive = [0.0; 7];
        for (slot, k) in naive.iter_mut().zip(NAIVE_KEYS) {
            *slot = h.require_num(k)?;
        }
        let rotation = Quaternion::new(naive[0], naive[1], naive[2], naive[3])
            .map_err(|_| bad("naive.qw", h.get("naive.qw").unwrap_or("")))?;
        let naive = NaivePredictor {
            mean: RigidTransform::new(rotation, Vec3::new(naive[4], naive[5], naive[6])),
            source_count: h.require_parsed("naive.count")?,
        };

        let get = |key: &str| -> Result<Option<&str>, DatasetError> {
            Ok(doc.rows.iter().find(|r| r[0] == key).map(|r| r[1].as_str()))
        };
        let opt = |key: &str| -> Result<Option<f64>, DatasetError> {
            match get(key)? {
                None => Ok(None),
                Some(v) => parse_opt(v).ok_or_else(|| bad(key, v)),
            }
        };
        let count = |key: &str| -> Result<usize, DatasetError> {
            match get(key)? {
                None => Ok(0),
                Some(v) => v.parse().map_err(|_| bad(key, v)),
            }
        };
        let num = |key: &str| -> Result<f64, DatasetError> {
            opt(key)?.ok_or_else(|| DatasetError::MissingHeader(key.into()))
        };
        let values = MetricValues {
            t_mean: opt("t_mean")?,
            t_median: opt("t_median")?,
            q_mean: opt("q_mean")?,
            q_median: opt("q_median")?,
            t_mape: opt("t_mape")?,
            t_mase: opt("t_mase")?,
            t_mapse: opt("t_mapse")?,
            r_mape: opt("r_mape")?,
            t_mape_excluded: count("t_mape_excluded")?,
            t_mapse_excluded: count("t_mapse_excluded")?,
            r_mape_excluded: count("r_mape_excluded")?,
            undefined: h
                .entries()
                .iter()
                .filter_map(|(k, v)| k.strip_prefix("undefined.").map(|k| (k.to_string(), v.clone())))
                .collect(),
        };
        let subspace = SubspaceStats {
            diameter: num("subspace_diameter")?,
            mean_norm: num("subspace_mean_norm")?,
            std_norm: num("subspace_std_norm")?,
            count: h.require_parsed("subspace_count")?,
            threshold: 0.0,
        };
        Ok(Self {
            config,
            config_digest: h.require("config_digest")?.to_string(),
            predictor: h.require("predictor")?.to_string(),
            n_pairs: h.require_parsed("n_pairs")?,
            naive,
            values,
            subspace,
        })
    }
}
