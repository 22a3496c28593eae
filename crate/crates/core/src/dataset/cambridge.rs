//! Cambridge Landmarks `dataset_{train,test}.txt`: three header lines, then
//! `image_path x y z w p q r` per frame, where `x y z` is the camera center
//! and `w p q r` the world-to-camera rotation.

use std::fs;
use std::path::Path;

use crate::geometry::{Pose, Quaternion, RigidTransform, Vec3};

use super::{DatasetError, Ingest, PoseSet, Rejection, SourceFormat, Split};

/// Quaternions whose norm differs from 1 by more than this produce a warning.
pub const UNIT_NORM_WARNING: f64 = 1e-3;

const HEADER_LINES: usize = 3;
const NOTE: &str = "Cambridge camera centers with world-to-camera quaternions, inverted to camera-to-world at ingest";

pub fn parse_cambridge(path: &Path, scene: &str, split: Split) -> Result<Ingest, DatasetError> {
    let text = fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    parse_cambridge_str(&text, &path.display().to_string(), scene, split)
}

/// `source` is used in diagnostics only.
pub fn parse_cambridge_str(
    text: &str,
    source: &str,
    scene: &str,
    split: Split,
) -> Result<Ingest, DatasetError> {
    let mut poses = Vec::new();
    let mut rejected = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in text.lines().enumerate().skip(HEADER_LINES) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let at = format!("{source}:{}", i + 1);
        match parse_line(line) {
            Ok((id, pose, norm)) => {
                if (norm - 1.0).abs() > UNIT_NORM_WARNING {
                    warnings.push(format!("{at}: quaternion norm {norm:.6} renormalized"));
                }
                poses.push(Pose::new(id, pose));
            }
            Err(reason) => rejected.push(Rejection { source: at, reason }),
        }
    }
    let set = PoseSet::new(scene, split, SourceFormat::Cambridge, NOTE, poses)?;
    Ok(Ingest { set, rejected, warnings })
}

fn parse_line(line: &str) -> Result<(String, RigidTransform, f64), String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 8 {
        return Err(format!("expected 8 fields, found {}", tokens.len()));
    }
    let mut v = [0.0; 7];
    for (slot, t) in v.iter_mut().zip(&tokens[1..]) {
        *slot = t.parse::<f64>().map_err(|_| format!("not a number: '{t}'"))?;
        if !slot.is_finite() {
            return Err(format!("non-finite value '{t}'"));
        }
    }
    let [x, y, z, w, p, q, r] = v;
    let norm = (w * w + p * p + q * q + r * r).sqrt();
    let world_to_camera = Quaternion::new(w, p, q, r).map_err(|e| e.to_string())?;
    let transform = RigidTransform::new(world_to_camera.conjugate(), Vec3::new(x, y, z));
    Ok((tokens[0].to_string(), transform, norm))
}
