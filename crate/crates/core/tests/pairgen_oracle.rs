mod common;

use common::{nearby, oracle_overlap, pose, random_transform, rng};
use frustoval::dataset::{write_pairs, PairOrdering, PoseSet, SourceFormat, Split};
use frustoval::frustum::OverlapConfig;
use frustoval::geometry::{relative, Pose, RigidTransform};
use frustoval::pairgen::{
    bin_histogram, generate_pairs, generate_pairs_with_threads, subspace_stats, OverlapBinning, PairGenError,
    PairGenOptions,
};
use frustoval::synth::{generate_trajectory, SynthConfig};

/// A walk of poses close enough together that many pairs overlap.
fn walk(seed: u64, n: usize) -> PoseSet {
    let mut r = rng(seed);
    let mut t = random_transform(&mut r, 1.0);
    let poses: Vec<Pose> = (0..n)
        .map(|i| {
            t = nearby(&mut r, &t, 0.4, 20.0);
            pose(&format!("frame-{i:03}"), t)
        })
        .collect();
    PoseSet::new("walk", Split::Train, SourceFormat::Canonical, "", poses).unwrap()
}

fn opts(ordering: PairOrdering, early_reject: bool) -> PairGenOptions {
    PairGenOptions { ordering, early_reject }
}

#[test]
fn ordered_pairs_match_a_sequential_brute_force() {
    let poses = walk(41, 20);
    let cfg = OverlapConfig::default();
    let got = generate_pairs(&poses, &cfg, 0.0, 1.0, PairGenOptions::default()).unwrap();
    let list = poses.poses();
    let mut expect = Vec::new();
    for a in list {
        for b in list {
            if a.frame_id != b.frame_id {
                let o = oracle_overlap(&a.transform, &b.transform, &cfg);
                if o > 0.0 {
                    expect.push((a.frame_id.clone(), b.frame_id.clone(), o, relative(&a.transform, &b.transform)));
                }
            }
        }
    }
    expect.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
    assert!(expect.len() > 50);
    assert_eq!(got.pairs.len(), expect.len());
    for (r, (a, q, o, rel)) in got.pairs.records().iter().zip(&expect) {
        assert_eq!((r.anchor_id.as_str(), r.query_id.as_str()), (a.as_str(), q.as_str()));
        assert_eq!(r.overlap, *o);
        assert_eq!(r.rel, *rel);
    }
    assert_eq!(got.stats.candidates, 20 * 19);
}

#[test]
fn unordered_pairs_are_symmetric_and_half_as_many() {
    let poses = walk(42, 20);
    let cfg = OverlapConfig::default();
    let ordered_sym =
        generate_pairs(&poses, &OverlapConfig { symmetric: true, ..cfg }, 0.0, 1.0, PairGenOptions::default()).unwrap();
    let unordered = generate_pairs(&poses, &cfg, 0.0, 1.0, opts(PairOrdering::Unordered, true)).unwrap();
    assert!(unordered.pairs.meta.config.symmetric);
    assert_eq!(unordered.pairs.meta.ordering, PairOrdering::Unordered);
    assert_eq!(2 * unordered.pairs.len(), ordered_sym.pairs.len());
    for r in unordered.pairs.records() {
        assert!(r.anchor_id < r.query_id);
        let twin = ordered_sym.pairs.records().iter().find(|o| o.key() == r.key()).unwrap();
        assert_eq!(twin.overlap, r.overlap);
    }
    assert_ne!(unordered.pairs.config_digest(), ordered_sym.pairs.config_digest());
}

#[test]
fn overlap_interval_is_open_below_closed_above() {
    let poses = walk(43, 20);
    let cfg = OverlapConfig::default();
    let all = generate_pairs(&poses, &cfg, 0.0, 1.0, PairGenOptions::default()).unwrap().pairs;
    let pick = all.records()[all.len() / 2].overlap;
    let band = generate_pairs(&poses, &cfg, pick, 1.0, PairGenOptions::default()).unwrap().pairs;
    assert!(band.records().iter().all(|r| r.overlap > pick));
    let below = generate_pairs(&poses, &cfg, 0.0, pick, PairGenOptions::default()).unwrap().pairs;
    assert!(below.records().iter().any(|r| r.overlap == pick));
    assert_eq!(band.len() + below.len(), all.len());
    assert_eq!(all.filter_overlap(pick, 1.0).records(), band.records());
}

#[test]
fn raising_the_threshold_only_removes_pairs() {
    let poses = walk(44, 25);
    let cfg = OverlapConfig::default();
    let mut previous: Option<Vec<(String, String)>> = None;
    for lo in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9] {
        let keys: Vec<(String, String)> = generate_pairs(&poses, &cfg, lo, 1.0, PairGenOptions::default())
            .unwrap()
            .pairs
            .records()
            .iter()
            .map(|r| (r.anchor_id.clone(), r.query_id.clone()))
            .collect();
        if let Some(prev) = &previous {
            assert!(keys.iter().all(|k| prev.contains(k)));
        }
        previous = Some(keys);
    }
}

#[test]
fn early_reject_and_thread_count_do_not_change_output() {
    let poses = generate_trajectory(&SynthConfig { n_poses: 120, seed: 5, ..SynthConfig::default() }).unwrap();
    let cfg = OverlapConfig::default();
    let reference = generate_pairs_with_threads(&poses, &cfg, 0.0, 1.0, opts(PairOrdering::Ordered, false), 1).unwrap();
    let text = write_pairs(&reference.pairs, &[]);
    for threads in [1, 2, 3, 8] {
        let g = generate_pairs_with_threads(&poses, &cfg, 0.0, 1.0, PairGenOptions::default(), threads).unwrap();
        assert_eq!(write_pairs(&g.pairs, &[]), text);
        assert!(g.stats.early_zero >= g.stats.rotation_gated);
        assert_eq!(g.stats.candidates, g.stats.early_zero + g.stats.point_tested);
    }
    assert_eq!(reference.stats.point_tested + reference.stats.rotation_gated, reference.stats.candidates);
}

#[test]
fn degenerate_inputs() {
    let one = PoseSet::new("s", Split::Train, SourceFormat::Canonical, "", vec![pose("a", RigidTransform::IDENTITY)]).unwrap();
    let g = generate_pairs(&one, &OverlapConfig::default(), 0.0, 1.0, PairGenOptions::default()).unwrap();
    assert!(g.pairs.is_empty());
    assert_eq!(g.warnings.len(), 1);
    let two = walk(45, 2);
    for (lo, hi) in [(0.5, 0.5), (-0.1, 1.0), (0.0, 1.5)] {
        assert!(matches!(
            generate_pairs(&two, &OverlapConfig::default(), lo, hi, PairGenOptions::default()),
            Err(PairGenError::Range { .. })
        ));
    }
    let bad = OverlapConfig { max_relative_rotation_deg: 0.0, ..Default::default() };
    assert!(generate_pairs(&two, &bad, 0.0, 1.0, PairGenOptions::default()).is_err());
}

#[test]
fn histogram_and_subspace_statistics() {
    let poses = walk(46, 20);
    let pairs = generate_pairs(&poses, &OverlapConfig::default(), 0.0, 1.0, PairGenOptions::default()).unwrap().pairs;
    let binning = OverlapBinning::default();
    let h = bin_histogram(pairs.records(), &binning);
    assert_eq!(h.total(), pairs.len());
    for (lo, hi, n) in &h.bins {
        let expect = pairs.records().iter().filter(|r| r.overlap > *lo && r.overlap <= *hi).count();
        assert_eq!(*n, expect, "bin {lo}..{hi}");
    }

    let s = subspace_stats(pairs.records(), 0.3).unwrap();
    let norms: Vec<f64> =
        pairs.records().iter().filter(|r| r.overlap >= 0.3).map(|r| r.rel.translation.norm()).collect();
    let n = norms.len() as f64;
    let mean = norms.iter().sum::<f64>() / n;
    let std = (norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert_eq!(s.count, norms.len());
    assert!((s.mean_norm - mean).abs() < 1e-12);
    assert!((s.std_norm - std).abs() < 1e-12);
    assert!((s.diameter - (mean + 2.0 * std)).abs() < 1e-12);
    assert!(matches!(subspace_stats(pairs.records(), 1.1), Err(PairGenError::EmptySubspace { .. })));
}
