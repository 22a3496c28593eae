use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::Context as _;
use frustoval::dataset::text::{fmt_exact, fmt_num, write_document, Header, TOOLKIT};
use frustoval::dataset::{
    parse_cambridge, parse_sevenscenes, parse_sevenscenes_split, read_pairs, read_poses, read_predictions,
    write_pairs, write_poses_with, write_predictions, Ingest, PairOrdering, PairSet, PredictionMeta,
    PredictionSet, SourceFormat, Split,
};
use frustoval::frustum::{FrustumSpec, OverlapConfig};
use frustoval::geometry::{Quaternion, RigidTransform, Vec3};
use frustoval::metrics::{
    error_curve, evaluate, match_predictions, MetricConfig, NaivePredictor, NaiveSource, Statistic,
};
use frustoval::pairgen::{bin_histogram, generate_pairs, subspace_stats, OverlapBinning, PairGenError, PairGenOptions};
use frustoval::synth::{generate_trajectory, synth_prediction_set, SynthConfig, SynthPredictor};

use crate::{
    usage, Cli, Command, Common, CurveArgs, DiameterArgs, EvalArgs, Failure, HistogramArgs, IngestArgs,
    NaiveArgs, PairsArgs, SynthArgs,
};

type Extra = Vec<(String, String)>;

pub fn run(cli: Cli) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads)
        .build()
        .map_err(|e| usage(format!("cannot start {} threads: {e}", cli.common.threads)))?;
    pool.install(|| match &cli.command {
        Command::Ingest(a) => ingest(a, &cli.common),
        Command::Pairs(a) => pairs(a, &cli.common),
        Command::Histogram(a) => histogram(a, &cli.common),
        Command::Diameter(a) => diameter(a, &cli.common),
        Command::Naive(a) => naive(a, &cli.common),
        Command::Synth(a) => synth(a, &cli.common),
        Command::Eval(a) => eval(a, &cli.common),
        Command::Curve(a) => curve(a, &cli.common),
    })
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn read(path: &Path) -> Result<String, Failure> {
    Ok(fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?)
}

fn read_pair_file(path: &Path) -> Result<PairSet, Failure> {
    Ok(read_pairs(&read(path)?).with_context(|| format!("in {}", path.display()))?)
}

fn read_prediction_file(path: &Path) -> Result<PredictionSet, Failure> {
    Ok(read_predictions(&read(path)?).with_context(|| format!("in {}", path.display()))?)
}

/// Writes to `--out` through a temporary file in the same directory, or
/// to standard output.
fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    let Some(out) = &common.out else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes()).context("writing standard output")?;
        return Ok(());
    };
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes()).context("writing output")?;
    tmp.persist(out).with_context(|| format!("cannot write {}", out.display()))?;
    Ok(())
}

fn binning(spec: &str) -> Result<OverlapBinning, Failure> {
    spec.parse().map_err(|e: PairGenError| usage(format!("--bins: {e}")))
}

fn ingest(a: &IngestArgs, common: &Common) -> Result<(), Failure> {
    let dir_name = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned());
    let split_file = match a.split {
        Split::Train => "TrainSplit.txt",
        Split::Test => "TestSplit.txt",
    };
    let mut result = match a.format {
        SourceFormat::SevenScenes => {
            if a.input.join(split_file).is_file() {
                parse_sevenscenes_split(&a.input, a.split)?
            } else {
                let scene = dir_name(&a.input).unwrap_or_else(|| "scene".into());
                parse_sevenscenes(&a.input, &scene, a.split)?
            }
        }
        SourceFormat::Cambridge => {
            let (file, scene_dir) = if a.input.is_dir() {
                (a.input.join(format!("dataset_{}.txt", a.split)), a.input.clone())
            } else {
                (a.input.clone(), a.input.parent().map(Path::to_path_buf).unwrap_or_default())
            };
            parse_cambridge(&file, &dir_name(&scene_dir).unwrap_or_else(|| "scene".into()), a.split)?
        }
        SourceFormat::Canonical => {
            let set = read_poses(&read(&a.input)?).with_context(|| format!("in {}", a.input.display()))?;
            Ingest { set, rejected: Vec::new(), warnings: Vec::new() }
        }
        SourceFormat::Synthetic => return Err(usage("synthetic poses come from the synth subcommand")),
    };
    if let Some(scene) = &a.scene {
        result.set.scene_name = scene.clone();
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    for r in &result.rejected {
        eprintln!("rejected: {}: {}", r.source, r.reason);
    }
    eprintln!(
        "ingested {} of {} records ({} rejected)",
        result.set.len(),
        result.input_records(),
        result.rejected.len()
    );
    let set = if a.strict { result.strict()? } else { result.set };
    let extra: Extra = vec![("format".into(), a.format.to_string()), ("input".into(), path_str(&a.input))];
    emit(common, &write_poses_with(&set, &extra))
}

fn pairs(a: &PairsArgs, common: &Common) -> Result<(), Failure> {
    let cfg = OverlapConfig {
        frustum: FrustumSpec {
            hfov_deg: a.hfov,
            vfov_deg: a.vfov,
            near: a.near,
            far: a.far,
            grid: a.grid,
            boundary_epsilon: a.boundary_eps,
        },
        max_relative_rotation_deg: a.max_rot,
        symmetric: a.symmetric,
    };
    cfg.validate().map_err(usage)?;
    if !(0.0 <= a.min_overlap && a.min_overlap < a.max_overlap && a.max_overlap <= 1.0) {
        return Err(usage(PairGenError::Range { min: a.min_overlap, max: a.max_overlap }));
    }
    let poses = read_poses(&read(&a.poses)?).with_context(|| format!("in {}", a.poses.display()))?;
    let ordering = if a.unordered { PairOrdering::Unordered } else { PairOrdering::Ordered };
    let opts = PairGenOptions { ordering, early_reject: a.early_reject };
    let generated = generate_pairs(&poses, &cfg, a.min_overlap, a.max_overlap, opts)?;
    for w in &generated.warnings {
        eprintln!("warning: {w}");
    }
    let s = generated.stats;
    eprintln!(
        "{} candidates: {} rotation gated, {} early zero, {} point tested; {} pairs kept",
        s.candidates,
        s.rotation_gated,
        s.early_zero,
        s.point_tested,
        generated.pairs.len()
    );
    let extra: Extra = vec![("poses".into(), path_str(&a.poses)), ("early-reject".into(), a.early_reject.to_string())];
    emit(common, &write_pairs(&generated.pairs, &extra))
}

fn histogram(a: &HistogramArgs, common: &Common) -> Result<(), Failure> {
    let b = binning(&a.bins)?;
    let set = read_pair_file(&a.pairs)?;
    let hist = bin_histogram(set.records(), &b);
    let mut h = Header::new();
    h.push("toolkit", TOOLKIT)
        .push("pairs", path_str(&a.pairs))
        .push("bins", &a.bins)
        .push("config_digest", set.config_digest())
        .push("total", hist.total())
        .push("unbinned", hist.unbinned);
    let rows: Vec<Vec<String>> =
        hist.bins.iter().map(|(lo, hi, n)| vec![fmt_num(*lo), fmt_num(*hi), n.to_string()]).collect();
    emit(common, &write_document("histogram", &h, &["bin_lo", "bin_hi", "count"], &rows))
}

fn diameter(a: &DiameterArgs, common: &Common) -> Result<(), Failure> {
    let thresholds: Vec<f64> = a
        .thresholds
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("--thresholds: not a number: '{t}'"))))
        .collect::<Result<_, _>>()?;
    let set = read_pair_file(&a.pairs)?;
    let mut rows = Vec::new();
    for th in thresholds {
        let row = match subspace_stats(set.records(), th) {
            Ok(s) => vec![fmt_num(th), fmt_num(s.diameter), fmt_num(s.mean_norm), fmt_num(s.std_norm), s.count.to_string()],
            Err(PairGenError::EmptySubspace { .. }) => {
                eprintln!("warning: no pairs with overlap >= {th}");
                vec![fmt_num(th), "undefined".into(), "undefined".into(), "undefined".into(), "0".into()]
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }
    let mut h = Header::new();
    h.push("toolkit", TOOLKIT)
        .push("pairs", path_str(&a.pairs))
        .push("thresholds", &a.thresholds)
        .push("config_digest", set.config_digest())
        .push("diameter", "mean + 2 * std of |t_rel| over pairs with overlap >= threshold");
    emit(common, &write_document("diameter", &h, &["threshold", "diameter", "mean_norm", "std_norm", "count"], &rows))
}

fn naive(a: &NaiveArgs, common: &Common) -> Result<(), Failure> {
    let set = read_pair_file(&a.pairs)?;
    let (predictor, source) = match &a.source {
        Some(p) => {
            let src = read_pair_file(p)?;
            if src.config_digest() != set.config_digest() {
                eprintln!("warning: source pairs were generated with a different configuration");
            }
            (NaivePredictor::from_pairs(src.records())?, format!("train_pairs:{}", path_str(p)))
        }
        None => (NaivePredictor::from_pairs(set.records())?, NaiveSource::EvalPairs.to_string()),
    };
    let meta = PredictionMeta {
        pairs: set.meta.clone(),
        predictor: "naive".into(),
        params: vec![("source".into(), source), ("source_count".into(), predictor.source_count.to_string())],
    };
    let preds = PredictionSet::new(meta, predictor.predict(set.records()))?;
    let extra: Extra = vec![("pairs".into(), path_str(&a.pairs))];
    emit(common, &write_predictions(&preds, &extra))
}

fn parse_numbers(s: &str, n: usize, flag: &str) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = s
        .split([',', 'x'])
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("--{flag}: not a number: '{t}'"))))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(usage(format!("--{flag}: expected {n} values, got {}", v.len())));
    }
    Ok(v)
}

fn synth_predictor(a: &SynthArgs) -> Result<SynthPredictor, Failure> {
    Ok(match a.predictor.as_str() {
        "perfect" => SynthPredictor::Perfect,
        "naive" => SynthPredictor::Naive,
        "noisy" => SynthPredictor::Noisy { sigma_t: a.sigma_t, sigma_q_deg: a.sigma_q },
        "proportional" => SynthPredictor::Proportional { frac_t: a.frac_t, frac_q: a.frac_q },
        "constant" => {
            let spec = a.constant.as_deref().ok_or_else(|| usage("--predictor constant needs --constant"))?;
            let v = parse_numbers(spec, 7, "constant")?;
            let q = Quaternion::new(v[0], v[1], v[2], v[3]).map_err(|e| usage(format!("--constant: {e}")))?;
            SynthPredictor::Constant(RigidTransform::new(q, Vec3::new(v[4], v[5], v[6])))
        }
        other => {
            return Err(usage(format!(
                "unknown predictor '{other}' (expected perfect, naive, noisy, constant or proportional)"
            )))
        }
    })
}

fn synth(a: &SynthArgs, common: &Common) -> Result<(), Failure> {
    if let Some(pairs_path) = &a.pairs {
        let predictor = synth_predictor(a)?;
        predictor.validate().map_err(usage)?;
        let set = read_pair_file(pairs_path)?;
        let preds = synth_prediction_set(&set, &predictor, common.seed)?;
        let extra: Extra = vec![("pairs".into(), path_str(pairs_path))];
        return emit(common, &write_predictions(&preds, &extra));
    }
    let e = parse_numbers(&a.extents, 3, "extents")?;
    let cfg = SynthConfig { extents: [e[0], e[1], e[2]], n_poses: a.n_poses, max_tilt_deg: a.max_tilt, seed: common.seed };
    cfg.validate().map_err(usage)?;
    let set = generate_trajectory(&cfg)?;
    let extra: Extra = vec![
        ("extents".into(), e.iter().map(|v| fmt_exact(*v)).collect::<Vec<_>>().join(",")),
        ("n-poses".into(), cfg.n_poses.to_string()),
        ("max-tilt".into(), fmt_exact(cfg.max_tilt_deg)),
        ("seed".into(), cfg.seed.to_string()),
    ];
    emit(common, &write_poses_with(&set, &extra))
}

fn eval(a: &EvalArgs, common: &Common) -> Result<(), Failure> {
    let statistics = Statistic::parse_list(&a.stats).map_err(|e| usage(format!("--stats: {e}")))?;
    if !matches!(a.format.as_str(), "text" | "kv") {
        return Err(usage(format!("--format: expected text or kv, got '{}'", a.format)));
    }
    if a.naive_source == NaiveSource::TrainPairs && a.train_pairs.is_none() {
        return Err(usage("--naive-source train_pairs needs --train-pairs"));
    }
    let cfg = MetricConfig { norm: a.norm, statistics, gimbal: a.gimbal, naive_source: a.naive_source };
    let pairs = read_pair_file(&a.pairs)?;
    let preds = read_prediction_file(&a.pred)?;
    let train = a.train_pairs.as_deref().map(read_pair_file).transpose()?;
    let report = evaluate(&pairs, &preds, train.as_ref(), &cfg)?;
    for (k, reason) in &report.values.undefined {
        eprintln!("warning: {k} undefined: {reason}");
    }
    let text = if a.format == "kv" {
        report.to_key_values()
    } else {
        let mut extra: Extra = vec![("pairs".into(), path_str(&a.pairs)), ("pred".into(), path_str(&a.pred))];
        if let Some(t) = &a.train_pairs {
            extra.push(("train-pairs".into(), path_str(t)));
        }
        report.to_text(&extra)
    };
    emit(common, &text)
}

fn curve(a: &CurveArgs, common: &Common) -> Result<(), Failure> {
    let b = binning(&a.bins)?;
    let preds = read_prediction_file(&a.pred)?;
    let (pairs, input) = match (&a.pairs, &a.poses) {
        (Some(p), _) => (read_pair_file(p)?, ("pairs".to_string(), path_str(p))),
        (None, Some(p)) => {
            let poses = read_poses(&read(p)?).with_context(|| format!("in {}", p.display()))?;
            let m = &preds.meta.pairs;
            let opts = PairGenOptions { ordering: m.ordering, early_reject: true };
            let generated = generate_pairs(&poses, &m.config, m.min_overlap, m.max_overlap, opts)?;
            (generated.pairs, ("poses".to_string(), path_str(p)))
        }
        (None, None) => return Err(usage("curve needs --pairs or --poses")),
    };
    preds.check_digest(&pairs)?;
    let samples = match_predictions(pairs.records(), preds.records())?;
    let curve = error_curve(&samples, &b, a.stat);
    for i in curve.absent_bins() {
        let bin = &curve.bins[i];
        eprintln!("warning: bin ({}, {}] is empty and left out of the AUC", fmt_num(bin.lo), fmt_num(bin.hi));
    }
    let extra: Extra = vec![
        input,
        ("pred".into(), path_str(&a.pred)),
        ("bins".into(), a.bins.clone()),
        ("predictor".into(), preds.meta.predictor.clone()),
        ("config_digest".into(), pairs.config_digest()),
    ];
    emit(common, &curve.to_csv(&extra))
}
