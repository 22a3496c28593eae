//! Seeded synthetic trajectories and predictors.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64`, consumed in
//! one sequential stream, so output depends only on the seed and the inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::dataset::text::fmt_exact;
use crate::dataset::{DatasetError, PairSet, PoseSet, Prediction, PredictionMeta, PredictionSet, SourceFormat, Split};
use crate::geometry::{Pose, Quaternion, RelativePose, RigidTransform, Vec3};
use crate::metrics::{MetricsError, NaivePredictor};

/// Description of the random stream, echoed into generated files.
pub const RNG_DESCRIPTION: &str = "chacha8 seed_from_u64, single sequential stream";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    /// Box side lengths in meters along x, y, z. The box is centered at the
    /// origin.
    pub extents: [f64; 3],
    pub n_poses: usize,
    /// Half-angle of the cone around world +z that holds every optical
    /// axis; also bounds the roll about the optical axis.
    pub max_tilt_deg: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { extents: [3.0, 2.0, 1.0], n_poses: 500, max_tilt_deg: 30.0, seed: 0 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.extents.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(SynthError::Config(format!("extents must be finite and non-negative, got {:?}", self.extents)));
        }
        if self.n_poses < 2 {
            return Err(SynthError::Config(format!("n_poses must be at least 2, got {}", self.n_poses)));
        }
        if !(0.0..=180.0).contains(&self.max_tilt_deg) {
            return Err(SynthError::Config(format!("max_tilt must lie in [0, 180], got {}", self.max_tilt_deg)));
        }
        Ok(())
    }

    pub fn note(&self) -> String {
        format!(
            "synthetic box {}x{}x{} m, {} poses, tilt {} deg, seed {}; rng {RNG_DESCRIPTION}; per pose x y z cos_tilt azimuth roll",
            fmt_exact(self.extents[0]),
            fmt_exact(self.extents[1]),
            fmt_exact(self.extents[2]),
            self.n_poses,
            fmt_exact(self.max_tilt_deg),
            self.seed
        )
    }
}

/// Rotation taking camera +z to `dir` (unit), followed by `roll` about the
/// optical axis.
fn look_rotation(dir: Vec3, roll_rad: f64) -> Quaternion {
    let z = Vec3::new(0.0, 0.0, 1.0);
    let axis = z.cross(dir);
    let s = axis.norm();
    let align = if s < 1e-15 {
        if dir.z > 0.0 { Quaternion::IDENTITY } else { Quaternion::from_rotation_vector(Vec3::new(std::f64::consts::PI, 0.0, 0.0)) }
    } else {
        Quaternion::from_rotation_vector(axis.scale(s.atan2(dir.z) / s))
    };
    align * Quaternion::from_rotation_vector(Vec3::new(0.0, 0.0, roll_rad))
}

pub fn generate_trajectory(cfg: &SynthConfig) -> Result<PoseSet, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tilt = cfg.max_tilt_deg.to_radians();
    let cos_min = tilt.cos();
    let mut poses = Vec::with_capacity(cfg.n_poses);
    for i in 0..cfg.n_poses {
        // Adding 0.0 folds -0.0 from a zero extent into +0.0.
        let mut axis = |e: f64| (rng.random::<f64>() - 0.5) * e + 0.0;
        let position = Vec3::new(axis(cfg.extents[0]), axis(cfg.extents[1]), axis(cfg.extents[2]));
        let cos_t = 1.0 - rng.random::<f64>() * (1.0 - cos_min);
        let azimuth = rng.random::<f64>() * std::f64::consts::TAU;
        let roll = (2.0 * rng.random::<f64>() - 1.0) * tilt;
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        let dir = Vec3::new(sin_t * azimuth.cos(), sin_t * azimuth.sin(), cos_t);
        poses.push(Pose::new(format!("synth-{i:06}"), RigidTransform::new(look_rotation(dir, roll), position)));
    }
    Ok(PoseSet::new("synthetic", Split::Test, SourceFormat::Synthetic, cfg.note(), poses)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthPredictor {
    Perfect,
    /// Mean relative pose of the pairs being predicted.
    Naive,
    /// Ground truth plus Gaussian noise: `σ_t` meters per translation axis
    /// and `σ_q` degrees per rotation-vector axis.
    Noisy { sigma_t: f64, sigma_q_deg: f64 },
    Constant(RelativePose),
    /// Noise proportional to the ground truth: `frac_t·‖t‖` meters per
    /// translation axis and `frac_q·angle(q)` per rotation-vector axis.
    Proportional { frac_t: f64, frac_q: f64 },
}

impl SynthPredictor {
    pub fn name(&self) -> &'static str {
        match self {
            SynthPredictor::Perfect => "perfect",
            SynthPredictor::Naive => "naive",
            SynthPredictor::Noisy { .. } => "noisy",
            SynthPredictor::Constant(_) => "constant",
            SynthPredictor::Proportional { .. } => "proportional",
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match *self {
            SynthPredictor::Noisy { sigma_t, sigma_q_deg } if !(ok(sigma_t) && ok(sigma_q_deg)) => {
                Err(SynthError::Config("noise scales must be finite and non-negative".into()))
            }
            SynthPredictor::Proportional { frac_t, frac_q } if !(ok(frac_t) && ok(frac_q)) => {
                Err(SynthError::Config("noise fractions must be finite and non-negative".into()))
            }
            _ => Ok(()),
        }
    }

    /// Parameters echoed into prediction headers.
    pub fn params(&self) -> Vec<(String, String)> {
        let kv = |k: &str, v: f64| (k.to_string(), fmt_exact(v));
        match *self {
            SynthPredictor::Perfect | SynthPredictor::Naive => Vec::new(),
            SynthPredictor::Noisy { sigma_t, sigma_q_deg } => vec![kv("sigma-t", sigma_t), kv("sigma-q", sigma_q_deg)],
            SynthPredictor::Proportional { frac_t, frac_q } => vec![kv("frac-t", frac_t), kv("frac-q", frac_q)],
            SynthPredictor::Constant(p) => {
                let [w, x, y, z] = p.rotation.components();
                let t = p.translation;
                [("qw", w), ("qx", x), ("qy", y), ("qz", z), ("tx", t.x), ("ty", t.y), ("tz", t.z)]
                    .into_iter()
                    .map(|(k, v)| kv(k, v))
                    .collect()
            }
        }
    }
}

fn gaussian3(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3 {
    let mut g = || sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    Vec3::new(g(), g(), g())
}

fn perturb(rng: &mut ChaCha8Rng, truth: &RelativePose, sigma_t: f64, sigma_q_rad: f64) -> RelativePose {
    let translation = truth.translation + gaussian3(rng, sigma_t);
    let rotation = truth.rotation * Quaternion::from_rotation_vector(gaussian3(rng, sigma_q_rad));
    RigidTransform::new(rotation, translation)
}

/// Predictions for `pairs` in their stored order.
pub fn synth_predict(pairs: &PairSet, predictor: &SynthPredictor, seed: u64) -> Result<Vec<Prediction>, SynthError> {
    predictor.validate()?;
    let records = pairs.records();
    if *predictor == SynthPredictor::Naive {
        if records.is_empty() {
            return Ok(Vec::new());
        }
        return Ok(NaivePredictor::from_pairs(records)?.predict(records));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(records
        .iter()
        .map(|r| {
            let rel_hat = match *predictor {
                SynthPredictor::Perfect => r.rel,
                SynthPredictor::Constant(p) => p,
                SynthPredictor::Noisy { sigma_t, sigma_q_deg } => perturb(&mut rng, &r.rel, sigma_t, sigma_q_deg.to_radians()),
                SynthPredictor::Proportional { frac_t, frac_q } => {
                    let (t, a) = (r.rel.translation.norm(), r.rel.rotation.angle_deg().to_radians());
                    perturb(&mut rng, &r.rel, frac_t * t, frac_q * a)
                }
                SynthPredictor::Naive => unreachable!(),
            };
            Prediction { anchor_id: r.anchor_id.clone(), query_id: r.query_id.clone(), rel_hat }
        })
        .collect())
}

/// [`synth_predict`] wrapped with provenance for the predictions file.
pub fn synth_prediction_set(pairs: &PairSet, predictor: &SynthPredictor, seed: u64) -> Result<PredictionSet, SynthError> {
    let records = synth_predict(pairs, predictor, seed)?;
    let mut params = predictor.params();
    if !matches!(predictor, SynthPredictor::Perfect | SynthPredictor::Naive | SynthPredictor::Constant(_)) {
        params.push(("seed".into(), seed.to_string()));
        params.push(("rng".into(), RNG_DESCRIPTION.into()));
    }
    let meta = PredictionMeta { pairs: pairs.meta.clone(), predictor: predictor.name().into(), params };
    Ok(PredictionSet::new(meta, records)?)
}
