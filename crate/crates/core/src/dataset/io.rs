use crate::frustum::{FrustumSpec, Grid, OverlapConfig};
use crate::geometry::{Pose, Quaternion, RigidTransform, Vec3};

use super::text::{
    fmt_exact, fmt_num, fmt_quaternion, fmt_vec3, parse_document, parse_fields, write_document, Document,
    Header, TOOLKIT,
};
use super::{
    DatasetError, PairMeta, PairOrdering, PairRecord, PairSet, PoseSet, Prediction,
    PredictionMeta, PredictionSet, POSE_CONVENTION, QUATERNION_ORDER, RELATIVE_CONVENTION,
};

const POSE_COLUMNS: [&str; 8] = ["frame_id", "qw", "qx", "qy", "qz", "tx", "ty", "tz"];
const PAIR_COLUMNS: [&str; 10] =
    ["anchor_id", "query_id", "overlap", "qw", "qx", "qy", "qz", "tx", "ty", "tz"];
const PREDICTION_COLUMNS: [&str; 9] =
    ["anchor_id", "query_id", "qw", "qx", "qy", "qz", "tx", "ty", "tz"];

fn transform_fields(t: &RigidTransform) -> impl Iterator<Item = String> {
    fmt_quaternion(&t.rotation).into_iter().chain(fmt_vec3(t.translation))
}

fn parse_transform(fields: &[String], source: &str) -> Result<RigidTransform, DatasetError> {
    let [w, x, y, z, tx, ty, tz] = parse_fields::<7>(fields, source)?;
    let rotation = Quaternion::new(w, x, y, z).map_err(|e| DatasetError::Malformed {
        location: source.into(),
        reason: e.to_string(),
    })?;
    Ok(RigidTransform::new(rotation, Vec3::new(tx, ty, tz)))
}

fn convention_header(h: &mut Header) {
    h.push("pose_convention", POSE_CONVENTION)
        .push("quaternion_order", QUATERNION_ORDER)
        .push("relative_pose", RELATIVE_CONVENTION);
}

fn check_conventions(h: &Header) -> Result<(), DatasetError> {
    for (key, expected) in [
        ("pose_convention", POSE_CONVENTION),
        ("quaternion_order", QUATERNION_ORDER),
        ("relative_pose", RELATIVE_CONVENTION),
    ] {
        if let Some(v) = h.get(key) {
            if v != expected {
                return Err(DatasetError::BadHeader { key: key.into(), value: v.into() });
            }
        }
    }
    Ok(())
}

pub fn write_poses(set: &PoseSet) -> String {
    write_poses_with(set, &[])
}

/// [`write_poses`] with `extra` entries echoed after the toolkit line.
pub fn write_poses_with(set: &PoseSet, extra: &[(String, String)]) -> String {
    let mut h = Header::new();
    h.push("toolkit", TOOLKIT);
    h.extend(extra.iter().cloned());
    h.push("scene", &set.scene_name)
        .push("split", set.split)
        .push("source_format", set.source_format)
        .push("note", &set.convention_note);
    h.push("pose_convention", POSE_CONVENTION).push("quaternion_order", QUATERNION_ORDER);
    h.push("count", set.len());
    let rows: Vec<Vec<String>> = set
        .poses()
        .iter()
        .map(|p| std::iter::once(p.frame_id.clone()).chain(transform_fields(&p.transform)).collect())
        .collect();
    write_document("poses", &h, &POSE_COLUMNS, &rows)
}

fn check_count(doc: &Document) -> Result<(), DatasetError> {
    let n: usize = doc.header.require_parsed("count")?;
    if n != doc.rows.len() {
        return Err(DatasetError::Malformed {
            location: "document".into(),
            reason: format!("header count={n} but {} records present", doc.rows.len()),
        });
    }
    Ok(())
}

pub fn read_poses(text: &str) -> Result<PoseSet, DatasetError> {
    let doc = parse_document(text, "poses")?;
    check_conventions(&doc.header)?;
    check_count(&doc)?;
    let h = &doc.header;
    let poses = doc
        .rows
        .iter()
        .zip(&doc.row_lines)
        .map(|(row, line)| {
            let t = parse_transform(&row[1..], &format!("line {line}"))?;
            Ok(Pose::new(row[0].clone(), t))
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    PoseSet::new(
        h.require("scene")?,
        h.require_parsed("split")?,
        h.require_parsed("source_format")?,
        h.get("note").unwrap_or_default(),
        poses,
    )
}

/// Header entries describing a pair set. Keys double as CLI flag names.
pub fn pair_meta_header(meta: &PairMeta, h: &mut Header) {
    let f = &meta.config.frustum;
    h.push("scene", &meta.scene_name)
        .push("split", meta.split)
        .push("pose-count", meta.pose_count);
    convention_header(h);
    h.push("hfov", fmt_exact(f.hfov_deg))
        .push("vfov", fmt_exact(f.vfov_deg))
        .push("near", fmt_exact(f.near))
        .push("far", fmt_exact(f.far))
        .push("grid", f.grid)
        .push("boundary-eps", fmt_exact(f.boundary_epsilon))
        .push("max-rot", fmt_exact(meta.config.max_relative_rotation_deg))
        .push("symmetric", meta.config.symmetric)
        .push("unordered", meta.ordering == PairOrdering::Unordered)
        .push("min-overlap", fmt_exact(meta.min_overlap))
        .push("max-overlap", fmt_exact(meta.max_overlap))
        .push("overlap_interval", "(min-overlap, max-overlap]")
        .push("config_digest", meta.config_digest());
}

fn parse_bool(h: &Header, key: &str) -> Result<bool, DatasetError> {
    h.require_parsed(key)
}

/// Inverse of [`pair_meta_header`]; verifies the stored digest.
pub fn pair_meta_from_header(h: &Header) -> Result<PairMeta, DatasetError> {
    check_conventions(h)?;
    let grid: Grid = h.require_parsed("grid")?;
    let config = OverlapConfig {
        frustum: FrustumSpec {
            hfov_deg: h.require_num("hfov")?,
            vfov_deg: h.require_num("vfov")?,
            near: h.require_num("near")?,
            far: h.require_num("far")?,
            grid,
            boundary_epsilon: h.require_num("boundary-eps")?,
        },
        max_relative_rotation_deg: h.require_num("max-rot")?,
        symmetric: parse_bool(h, "symmetric")?,
    };
    let ordering =
        if parse_bool(h, "unordered")? { PairOrdering::Unordered } else { PairOrdering::Ordered };
    let meta = PairMeta {
        scene_name: h.require("scene")?.to_string(),
        split: h.require_parsed("split")?,
        config,
        ordering,
        min_overlap: h.require_num("min-overlap")?,
        max_overlap: h.require_num("max-overlap")?,
        pose_count: h.require_parsed("pose-count")?,
    };
    let stored = h.require("config_digest")?;
    let computed = meta.config_digest();
    if stored != computed {
        return Err(DatasetError::CorruptDigest { stored: stored.into(), computed });
    }
    Ok(meta)
}

/// `extra` entries (e.g. input file names) are echoed after the toolkit line.
pub fn write_pairs(set: &PairSet, extra: &[(String, String)]) -> String {
    let mut h = Header::new();
    h.push("toolkit", TOOLKIT);
    h.extend(extra.iter().cloned());
    pair_meta_header(&set.meta, &mut h);
    h.push("count", set.len());
    let rows: Vec<Vec<String>> = set
        .records()
        .iter()
        .map(|r| {
            [r.anchor_id.clone(), r.query_id.clone(), fmt_num(r.overlap)]
                .into_iter()
                .chain(transform_fields(&r.rel))
                .collect()
        })
        .collect();
    write_document("pairs", &h, &PAIR_COLUMNS, &rows)
}

pub fn read_pairs(text: &str) -> Result<PairSet, DatasetError> {
    let doc = parse_document(text, "pairs")?;
    check_count(&doc)?;
    let meta = pair_meta_from_header(&doc.header)?;
    let records = doc
        .rows
        .iter()
        .zip(&doc.row_lines)
        .map(|(row, line)| {
            let source = format!("line {line}");
            let [overlap] = parse_fields::<1>(&row[2..3], &source)?;
            if !(0.0..=1.0).contains(&overlap) {
                return Err(DatasetError::Malformed { location: source, reason: format!("overlap {overlap} outside [0, 1]") });
            }
            Ok(PairRecord {
                anchor_id: row[0].clone(),
                query_id: row[1].clone(),
                overlap,
                rel: parse_transform(&row[3..], &source)?,
            })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    PairSet::new(meta, records)
}

pub fn write_predictions(set: &PredictionSet, extra: &[(String, String)]) -> String {
    let mut h = Header::new();
    h.push("toolkit", TOOLKIT);
    h.extend(extra.iter().cloned());
    h.push("predictor", &set.meta.predictor);
    h.extend(set.meta.params.iter().map(|(k, v)| (format!("predictor.{k}"), v.clone())));
    pair_meta_header(&set.meta.pairs, &mut h);
    h.push("count", set.len());
    let rows: Vec<Vec<String>> = set
        .records()
        .iter()
        .map(|r| {
            [r.anchor_id.clone(), r.query_id.clone()]
                .into_iter()
                .chain(transform_fields(&r.rel_hat))
                .collect()
        })
        .collect();
    write_document("predictions", &h, &PREDICTION_COLUMNS, &rows)
}

pub fn read_predictions(text: &str) -> Result<PredictionSet, DatasetError> {
    let doc = parse_document(text, "predictions")?;
    check_count(&doc)?;
    let h = &doc.header;
    let pairs = pair_meta_from_header(h)?;
    let params = h
        .entries()
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("predictor.").map(|k| (k.to_string(), v.clone())))
        .collect();
    let meta = PredictionMeta { pairs, predictor: h.require("predictor")?.to_string(), params };
    let records = doc
        .rows
        .iter()
        .zip(&doc.row_lines)
        .map(|(row, line)| {
            Ok(Prediction {
                anchor_id: row[0].clone(),
                query_id: row[1].clone(),
                rel_hat: parse_transform(&row[2..], &format!("line {line}"))?,
            })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    PredictionSet::new(meta, records)
}
