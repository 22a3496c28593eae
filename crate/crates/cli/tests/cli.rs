use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frustoval::dataset::{read_pairs, read_predictions};
use frustoval::metrics::{error_curve, match_predictions, CurveStat, MetricReport};
use frustoval::pairgen::OverlapBinning;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frustoval"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

struct Work {
    dir: tempfile::TempDir,
}

impl Work {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }

    /// Synthetic poses, pairs and noisy predictions.
    fn pipeline(&self, n: &str) -> (String, String, String) {
        let (poses, pairs, pred) = (self.path("poses.txt"), self.path("pairs.txt"), self.path("pred.txt"));
        ok(&["synth", "--n-poses", n, "--seed", "3", "--out", &poses]);
        ok(&["pairs", "--poses", &poses, "--out", &pairs]);
        ok(&["synth", "--pairs", &pairs, "--predictor", "noisy", "--sigma-t", "0.1", "--sigma-q", "2", "--seed", "1", "--out", &pred]);
        (poses, pairs, pred)
    }
}

fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let prefix = format!("# {key}=");
    text.lines().find_map(|l| l.strip_prefix(prefix.as_str()))
}

#[test]
fn version_and_help_exit_zero() {
    let v = ok(&["--version"]);
    assert!(v.starts_with("frustoval 0.1.0"), "{v}");
    assert!(v.contains("format v1"));
    assert!(ok(&["--help"]).contains("pairs"));
    assert_eq!(code(&["pairs", "--help"]), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&["pairs", "--no-such-flag"]), 1);
    assert_eq!(code(&[]), 1);
    let w = Work::new();
    let (poses, _, _) = w.pipeline("20");
    assert_eq!(code(&["pairs", "--poses", &poses, "--hfov", "0"]), 1);
    assert_eq!(code(&["pairs", "--poses", &poses, "--min-overlap", "0.5", "--max-overlap", "0.5"]), 1);
    assert_eq!(code(&["histogram", "--pairs", &poses, "--bins", "1:0:0.1"]), 1);
    assert_eq!(code(&["eval", "--pairs", &poses, "--pred", &poses, "--stats", "bogus"]), 1);
}

#[test]
fn data_errors_exit_two() {
    let w = Work::new();
    let (poses, pairs, pred) = w.pipeline("30");
    assert_eq!(code(&["pairs", "--poses", &w.path("missing.txt")]), 2);
    // A pose file where a pair file is expected.
    assert_eq!(code(&["eval", "--pairs", &poses, "--pred", &pred]), 2);
    // Pairs scored with another configuration.
    let other = w.path("other.txt");
    ok(&["pairs", "--poses", &poses, "--hfov", "60", "--out", &other]);
    let out = run(&["eval", "--pairs", &other, "--pred", &pred]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("digest"));
    // Predictions that name pairs outside the pair file.
    let narrow = w.path("narrow.txt");
    ok(&["pairs", "--poses", &poses, "--min-overlap", "0.5", "--out", &narrow]);
    assert_eq!(code(&["eval", "--pairs", &narrow, "--pred", &pred]), 2);
    assert_eq!(code(&["eval", "--pairs", &pairs, "--pred", &pred]), 0);
}

#[test]
fn pairs_header_echoes_every_scoring_flag() {
    let w = Work::new();
    let (poses, _, _) = w.pipeline("20");
    let text = ok(&[
        "pairs", "--poses", &poses, "--hfov", "62.5", "--vfov", "40", "--near", "0.2", "--far", "5", "--grid", "4x5x6",
        "--boundary-eps", "1e-7", "--max-rot", "90", "--symmetric", "true", "--min-overlap", "0.05", "--max-overlap", "0.95",
        "--early-reject", "false",
    ]);
    for (k, v) in [
        ("hfov", "62.5"),
        ("vfov", "40"),
        ("near", "0.2"),
        ("far", "5"),
        ("grid", "4x5x6"),
        ("boundary-eps", "1e-7"),
        ("max-rot", "90"),
        ("symmetric", "true"),
        ("unordered", "false"),
        ("min-overlap", "0.05"),
        ("max-overlap", "0.95"),
        ("early-reject", "false"),
    ] {
        assert_eq!(header_value(&text, k), Some(v), "{k}");
    }
    assert!(header_value(&text, "config_digest").is_some());
}

#[test]
fn thread_count_does_not_change_output() {
    let w = Work::new();
    let (poses, _, _) = w.pipeline("80");
    let one = ok(&["pairs", "--poses", &poses, "--threads", "1"]);
    for t in ["2", "4", "0"] {
        assert_eq!(ok(&["pairs", "--poses", &poses, "--threads", t]), one);
    }
    assert_eq!(ok(&["pairs", "--poses", &poses, "--early-reject", "false"]).replace("early-reject=false", "early-reject=true"), one);
}

#[test]
fn output_file_matches_stdout() {
    let w = Work::new();
    let (poses, pairs, _) = w.pipeline("30");
    assert_eq!(fs::read_to_string(&pairs).unwrap(), ok(&["pairs", "--poses", &poses]));
}

#[test]
fn eval_report_reads_back_and_reruns_from_its_header() {
    let w = Work::new();
    let (_, pairs, pred) = w.pipeline("40");
    let report_path = w.path("report.txt");
    ok(&["eval", "--pairs", &pairs, "--pred", &pred, "--norm", "l2", "--stats", "mase,mapse,mean", "--out", &report_path]);
    let text = fs::read_to_string(&report_path).unwrap();
    let report = MetricReport::from_text(&text).unwrap();
    assert_eq!(report.predictor, "noisy");
    assert!(report.values.t_mase.is_some() && report.values.t_median.is_none());
    assert_eq!(ok(&["eval", "--config", &report_path]), text);
    let kv = ok(&["eval", "--pairs", &pairs, "--pred", &pred, "--format", "kv"]);
    assert!(kv.lines().any(|l| l.starts_with("t_mase=")));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let w = Work::new();
    let (poses, _, _) = w.pipeline("30");
    let cfg = w.path("cfg.txt");
    fs::write(&cfg, format!("poses={poses}\nhfov=50\ngrid=4x4x4\n")).unwrap();
    let text = ok(&["pairs", "--config", &cfg, "--grid", "5x5x5"]);
    assert_eq!(header_value(&text, "hfov"), Some("50"));
    assert_eq!(header_value(&text, "grid"), Some("5x5x5"));
    fs::write(&cfg, "bogus=1\n").unwrap();
    assert_eq!(code(&["pairs", "--config", &cfg]), 1);
    // Rerunning from an output header reproduces it.
    let pairs_path = w.path("p.txt");
    fs::write(&cfg, format!("poses={poses}\nhfov=50\n")).unwrap();
    ok(&["pairs", "--config", &cfg, "--out", &pairs_path]);
    assert_eq!(ok(&["pairs", "--config", &pairs_path]), fs::read_to_string(&pairs_path).unwrap());
}

#[test]
fn curve_matches_library_output() {
    let w = Work::new();
    let (poses, pairs, pred) = w.pipeline("60");
    let cli = ok(&["curve", "--pairs", &pairs, "--pred", &pred, "--bins", "0.1:0.9:0.1"]);
    let set = read_pairs(&fs::read_to_string(&pairs).unwrap()).unwrap();
    let preds = read_predictions(&fs::read_to_string(&pred).unwrap()).unwrap();
    let samples = match_predictions(set.records(), preds.records()).unwrap();
    let curve = error_curve(&samples, &OverlapBinning::from_range(0.1, 0.9, 0.1).unwrap(), CurveStat::Median);
    let extra = vec![
        ("pairs".to_string(), pairs.clone()),
        ("pred".to_string(), pred.clone()),
        ("bins".to_string(), "0.1:0.9:0.1".to_string()),
        ("predictor".to_string(), "noisy".to_string()),
        ("config_digest".to_string(), set.config_digest()),
    ];
    assert_eq!(cli, curve.to_csv(&extra));
    // Regenerated pairs carry full-precision relative poses, while the pair
    // file stores nine digits, so statistics agree closely but not exactly.
    let from_poses = ok(&["curve", "--poses", &poses, "--pred", &pred, "--bins", "0.1:0.9:0.1"]);
    assert_eq!(header_value(&from_poses, "poses"), Some(poses.as_str()));
    let rows = |s: &str| -> Vec<Vec<String>> {
        s.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
    };
    let (a, b) = (rows(&from_poses), rows(&cli));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[5], y[5]);
        for k in [3, 4] {
            match (x[k].parse::<f64>(), y[k].parse::<f64>()) {
                (Ok(u), Ok(v)) => assert!((u - v).abs() <= 1e-6 * v.abs().max(1.0)),
                _ => assert_eq!(x[k], y[k]),
            }
        }
    }
}

#[test]
fn histogram_diameter_and_naive() {
    let w = Work::new();
    let (_, pairs, _) = w.pipeline("60");
    let h = ok(&["histogram", "--pairs", &pairs, "--bins", "0:1:0.25"]);
    assert_eq!(h.lines().filter(|l| !l.starts_with('#')).count(), 5);
    let total: usize = header_value(&h, "total").unwrap().parse().unwrap();
    assert_eq!(total, read_pairs(&fs::read_to_string(&pairs).unwrap()).unwrap().len());
    let d = ok(&["diameter", "--pairs", &pairs, "--thresholds", "0.2,2"]);
    assert!(d.lines().any(|l| l.starts_with("2,undefined")));
    let naive = w.path("naive.txt");
    ok(&["naive", "--pairs", &pairs, "--out", &naive]);
    let r = ok(&["eval", "--pairs", &pairs, "--pred", &naive, "--format", "kv"]);
    let mase: f64 = r.lines().find_map(|l| l.strip_prefix("t_mase=")).unwrap().parse().unwrap();
    assert!((mase - 1.0).abs() < 1e-8);
}

#[test]
fn ingest_fixtures() {
    let chess = fixtures().join("7scenes/chess");
    let text = ok(&["ingest", "--format", "7scenes", "--input", chess.to_str().unwrap(), "--split", "test"]);
    assert_eq!(header_value(&text, "scene"), Some("chess"));
    assert_eq!(header_value(&text, "split"), Some("test"));
    assert_eq!(text.lines().filter(|l| l.starts_with("seq-02/")).count(), 3);
    let seq = fixtures().join("7scenes/chess/seq-01");
    let text = ok(&["ingest", "--format", "7scenes", "--input", seq.to_str().unwrap(), "--scene", "chess"]);
    assert_eq!(text.lines().filter(|l| l.starts_with("frame-")).count(), 3);
    let kings = fixtures().join("cambridge/KingsCollege");
    let text = ok(&["ingest", "--format", "cambridge", "--input", kings.to_str().unwrap()]);
    assert_eq!(header_value(&text, "scene"), Some("KingsCollege"));
    assert_eq!(text.lines().filter(|l| l.starts_with("seq1/")).count(), 3);
}

#[test]
fn strict_ingest_refuses_bad_records() {
    let w = Work::new();
    let list = w.path("dataset_train.txt");
    fs::write(&list, "h\nh\n\na.png 0 0 0 1 0 0 0\nb.png 0 0 0 0 0 0 0\n").unwrap();
    let lenient = run(&["ingest", "--format", "cambridge", "--input", &list]);
    assert!(lenient.status.success());
    assert!(String::from_utf8_lossy(&lenient.stderr).contains("1 rejected"));
    assert_eq!(code(&["ingest", "--format", "cambridge", "--input", &list, "--strict", "true"]), 2);
    assert!(!Path::new(&w.path("out.txt")).exists());
}
