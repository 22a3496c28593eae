use frustoval::dataset::{write_poses, PairSet};
use frustoval::frustum::OverlapConfig;
use frustoval::geometry::{rotation_error, Norm, Vec3};
use frustoval::metrics::{match_predictions, mase_translation, standard_errors, NaivePredictor};
use frustoval::pairgen::{generate_pairs, PairGenOptions};
use frustoval::synth::{generate_trajectory, synth_predict, synth_prediction_set, SynthConfig, SynthPredictor};

fn pairs(seed: u64) -> PairSet {
    let poses = generate_trajectory(&SynthConfig { n_poses: 150, seed, ..SynthConfig::default() }).unwrap();
    generate_pairs(&poses, &OverlapConfig::default(), 0.0, 1.0, PairGenOptions::default()).unwrap().pairs
}

#[test]
fn trajectory_stays_in_the_box_and_tilt_cone() {
    let cfg = SynthConfig { extents: [4.0, 2.0, 1.0], n_poses: 300, max_tilt_deg: 20.0, seed: 3 };
    let set = generate_trajectory(&cfg).unwrap();
    assert_eq!(set.len(), 300);
    for p in set.poses() {
        let c = p.center();
        assert!(c.x.abs() <= 2.0 && c.y.abs() <= 1.0 && c.z.abs() <= 0.5);
        let axis = p.rotation().rotate(Vec3::new(0.0, 0.0, 1.0));
        assert!(axis.z >= 20f64.to_radians().cos() - 1e-12);
    }
}

#[test]
fn seeds_are_reproducible_and_distinct() {
    let cfg = SynthConfig { n_poses: 50, ..SynthConfig::default() };
    let a = write_poses(&generate_trajectory(&cfg).unwrap());
    assert_eq!(a, write_poses(&generate_trajectory(&cfg).unwrap()));
    assert_ne!(a, write_poses(&generate_trajectory(&SynthConfig { seed: 1, ..cfg }).unwrap()));

    let p = pairs(4);
    let noisy = SynthPredictor::Noisy { sigma_t: 0.1, sigma_q_deg: 2.0 };
    assert_eq!(synth_predict(&p, &noisy, 9).unwrap(), synth_predict(&p, &noisy, 9).unwrap());
    assert_ne!(synth_predict(&p, &noisy, 9).unwrap(), synth_predict(&p, &noisy, 10).unwrap());
}

#[test]
fn noisy_error_grows_with_sigma() {
    let p = pairs(5);
    let mut previous = (0.0, 0.0);
    for sigma in [0.01, 0.05, 0.1] {
        let preds = synth_predict(&p, &SynthPredictor::Noisy { sigma_t: sigma, sigma_q_deg: 100.0 * sigma }, 1).unwrap();
        let e = standard_errors(&match_predictions(p.records(), &preds).unwrap()).unwrap();
        assert!(e.t_mean > previous.0 && e.q_mean > previous.1, "sigma {sigma}: {e:?}");
        // Mean of |N(0, σ²I₃)| is σ·2·sqrt(2/π).
        let expect = sigma * 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((e.t_mean - expect).abs() < 0.1 * expect);
        previous = (e.t_mean, e.q_mean);
    }
}

#[test]
fn perfect_and_naive_predictors() {
    let p = pairs(6);
    let perfect = synth_predict(&p, &SynthPredictor::Perfect, 0).unwrap();
    let e = standard_errors(&match_predictions(p.records(), &perfect).unwrap()).unwrap();
    assert_eq!((e.t_mean, e.q_mean), (0.0, 0.0));

    let naive = NaivePredictor::from_pairs(p.records()).unwrap();
    let preds = synth_predict(&p, &SynthPredictor::Naive, 0).unwrap();
    assert!(preds.iter().all(|x| x.rel_hat == naive.mean));
    let constant = synth_predict(&p, &SynthPredictor::Constant(naive.mean), 0).unwrap();
    assert_eq!(constant, preds);
    let s = match_predictions(p.records(), &constant).unwrap();
    assert!((mase_translation(&s, naive.mean.translation, Norm::L1).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn proportional_noise_scales_with_the_truth() {
    let p = pairs(7);
    let preds = synth_predict(&p, &SynthPredictor::Proportional { frac_t: 0.2, frac_q: 0.2 }, 2).unwrap();
    let s = match_predictions(p.records(), &preds).unwrap();
    let ratio: Vec<f64> = s
        .iter()
        .filter(|x| x.truth.translation.norm() > 0.0)
        .map(|x| x.translation_error(Norm::L2) / x.truth.translation.norm())
        .collect();
    let mean = ratio.iter().sum::<f64>() / ratio.len() as f64;
    let expect = 0.2 * 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((mean - expect).abs() < 0.1 * expect, "{mean} vs {expect}");
    for x in &s {
        let truth_angle = x.truth.rotation.angle_deg();
        assert!(rotation_error(&x.truth.rotation, &x.estimate.rotation) <= truth_angle * 2.0 + 1e-9 || truth_angle < 1.0);
    }
}

#[test]
fn prediction_sets_record_predictor_and_seed() {
    let p = pairs(8);
    let set = synth_prediction_set(&p, &SynthPredictor::Noisy { sigma_t: 0.1, sigma_q_deg: 1.0 }, 12).unwrap();
    assert_eq!(set.meta.predictor, "noisy");
    assert!(set.meta.params.iter().any(|(k, v)| k == "seed" && v == "12"));
    set.check_digest(&p).unwrap();
    assert!(synth_predict(&p, &SynthPredictor::Noisy { sigma_t: -1.0, sigma_q_deg: 0.0 }, 0).is_err());
    assert!(generate_trajectory(&SynthConfig { n_poses: 0, ..SynthConfig::default() }).is_err());
}
