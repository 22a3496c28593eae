//! 7-Scenes pose files: one `frame-NNNNNN.pose.txt` per frame holding a
//! row-major 4x4 camera-to-world matrix.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix3;

use crate::geometry::{Pose, Quaternion, RigidTransform, Vec3};

use super::{DatasetError, Ingest, PoseSet, Rejection, SourceFormat, Split};

/// Frobenius distance between a rotation block and its nearest rotation
/// above which the frame is rejected.
pub const MAX_ORTHOGONALITY_DEVIATION: f64 = 1e-2;

const NOTE: &str = "7-Scenes camera-to-world matrices; rotation orthonormalized by polar decomposition";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Parses the text of one pose file.
pub fn parse_pose_matrix(text: &str) -> Result<RigidTransform, String> {
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: '{t}'")))
        .collect::<Result<_, _>>()?;
    if values.len() != 16 {
        return Err(format!("expected 16 matrix entries, found {}", values.len()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(format!("non-finite entry {v}"));
    }
    let m = |r: usize, c: usize| values[r * 4 + c];
    let bottom = [m(3, 0), m(3, 1), m(3, 2), m(3, 3)];
    if bottom.iter().zip([0.0, 0.0, 0.0, 1.0]).any(|(a, b)| (a - b).abs() > 1e-6) {
        return Err(format!("last row {bottom:?} is not [0 0 0 1]"));
    }
    let block = Matrix3::from_fn(&m);
    let rotation = nearest_rotation(&block)?;
    let deviation = (block - rotation).norm();
    if deviation > MAX_ORTHOGONALITY_DEVIATION {
        return Err(format!(
            "rotation block deviates from orthogonal by {deviation:.3e} (Frobenius) > {MAX_ORTHOGONALITY_DEVIATION}"
        ));
    }
    let rows = [0, 1, 2].map(|r| [rotation[(r, 0)], rotation[(r, 1)], rotation[(r, 2)]]);
    let q = Quaternion::from_matrix(&rows).map_err(|e| e.to_string())?;
    Ok(RigidTransform::new(q, Vec3::new(m(0, 3), m(1, 3), m(2, 3))))
}

/// Orthogonal polar factor `U Vᵀ`; reflections are refused.
fn nearest_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>, String> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.ok_or("SVD failed")?, svd.v_t.ok_or("SVD failed")?);
    let r = u * v_t;
    if r.determinant() < 0.0 {
        return Err("rotation block is a reflection (negative determinant)".into());
    }
    Ok(r)
}

fn frame_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, DatasetError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".pose.txt") {
            if stem.starts_with("frame-") {
                out.push((stem.to_string(), entry.path()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn parse_frames(
    files: Vec<(String, PathBuf)>,
    id_prefix: &str,
    poses: &mut Vec<Pose>,
    rejected: &mut Vec<Rejection>,
) -> Result<(), DatasetError> {
    for (stem, path) in files {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        match parse_pose_matrix(&text) {
            Ok(t) => poses.push(Pose::new(format!("{id_prefix}{stem}"), t)),
            Err(reason) => rejected.push(Rejection { source: path.display().to_string(), reason }),
        }
    }
    Ok(())
}

/// Parses every `frame-*.pose.txt` directly inside `dir`, ordered by name.
pub fn parse_sevenscenes(dir: &Path, scene: &str, split: Split) -> Result<Ingest, DatasetError> {
    let mut poses = Vec::new();
    let mut rejected = Vec::new();
    parse_frames(frame_files(dir)?, "", &mut poses, &mut rejected)?;
    let set = PoseSet::new(scene, split, SourceFormat::SevenScenes, NOTE, poses)?;
    Ok(Ingest { set, rejected, warnings: Vec::new() })
}

/// Parses one split of a scene directory using its `TrainSplit.txt` or
/// `TestSplit.txt`, whose lines name sequences (`sequence1` -> `seq-01`).
/// Frame ids are `seq-XX/frame-NNNNNN`.
pub fn parse_sevenscenes_split(scene_dir: &Path, split: Split) -> Result<Ingest, DatasetError> {
    let list = scene_dir.join(match split {
        Split::Train => "TrainSplit.txt",
        Split::Test => "TestSplit.txt",
    });
    let text = fs::read_to_string(&list).map_err(io_err(&list))?;
    let scene = scene_dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    let mut poses = Vec::new();
    let mut rejected = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let number: u32 = line
            .trim_start_matches("sequence")
            .parse()
            .map_err(|_| DatasetError::Malformed {
                location: list.display().to_string(),
                reason: format!("cannot read sequence name '{line}'"),
            })?;
        let seq = format!("seq-{number:02}");
        parse_frames(frame_files(&scene_dir.join(&seq))?, &format!("{seq}/"), &mut poses, &mut rejected)?;
    }
    let set = PoseSet::new(scene, split, SourceFormat::SevenScenes, NOTE, poses)?;
    Ok(Ingest { set, rejected, warnings: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const IDENTITY: &str = "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n";

    #[test]
    fn identity_matrix() {
        assert_eq!(parse_pose_matrix(IDENTITY).unwrap(), RigidTransform::IDENTITY);
    }

    #[test]
    fn translation_column() {
        let t = parse_pose_matrix("1 0 0 1\n0 1 0 2\n0 0 1 3\n0 0 0 1").unwrap();
        assert_eq!(t.translation, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(t.rotation, Quaternion::IDENTITY);
    }

    #[test]
    fn noisy_rotation_is_orthonormalized() {
        // 90° about z with limited-precision entries.
        let t = parse_pose_matrix("0.0001 -1.0002 0 0\n0.9999 0.0003 0 0\n0 0 1.0001 0\n0 0 0 1").unwrap();
        let expect = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2).unwrap();
        assert!(crate::geometry::rotation_error(&t.rotation, &expect) < 0.05);
        let n: f64 = t.rotation.components().iter().map(|c| c * c).sum();
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn malformed_matrices() {
        assert!(parse_pose_matrix("1 0 0\n0 1 0").unwrap_err().contains("16"));
        assert!(parse_pose_matrix(&IDENTITY.replace("1 0 0 0\n", "nan 0 0 0\n")).is_err());
        assert!(parse_pose_matrix(&IDENTITY.replace("1 0 0 0\n", "abc 0 0 0\n")).is_err());
        let skew = "1.2 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1";
        assert!(parse_pose_matrix(skew).unwrap_err().contains("orthogonal"));
        let mirror = "-1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1";
        assert!(parse_pose_matrix(mirror).unwrap_err().contains("reflection"));
    }
}
