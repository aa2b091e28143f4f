//! End-to-end checks of the command-line tool and the artifacts it writes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use confidence_align::analysis::ReportSource;
use confidence_align::env::{write_replay, ReplayLog};
use confidence_align::experiment::{
    curve_path, read_alignment_json, read_curve_csv, read_manifest, read_trace_csv, trace_path,
    CURVE_HEADER, TRACE_HEADER,
};
use confidence_align::Observation;

fn confalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confalign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = confalign(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8")
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path)
        .expect("readable")
        .lines()
        .next()
        .unwrap_or_default()
        .to_string()
}

fn run_small(out: &Path, extra: &[&str]) {
    let out = out.to_str().expect("utf-8 path");
    let mut args = vec![
        "run",
        "--T",
        "300",
        "--seeds",
        "4",
        "--out",
        out,
        "--learner",
        "aligned",
        "--learner",
        "aligned-ell",
        "--learner",
        "vanilla",
    ];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn one_step_run_has_one_trace_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    ok(&[
        "run",
        "--T",
        "1",
        "--seeds",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let trace = read_trace_csv(&trace_path(&out, "aligned", 0), "aligned", 0).unwrap();
    assert_eq!(trace.len(), 1);
    let curve = read_curve_csv(&curve_path(&out, "vanilla"), "vanilla").unwrap();
    assert_eq!(curve.horizon(), 1);
    assert!(!curve.ci_defined);
}

#[test]
fn layout_and_golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_small(&out, &[]);
    for l in ["aligned", "aligned-ell", "vanilla"] {
        for k in 0..4 {
            assert_eq!(first_line(&trace_path(&out, l, k)), TRACE_HEADER);
        }
        assert_eq!(first_line(&curve_path(&out, l)), CURVE_HEADER);
    }
    assert_eq!(TRACE_HEADER, "t,h,b,y,action,inst_regret,cum_regret");
    assert_eq!(CURVE_HEADER, "t,mean_cum_regret,ci_halfwidth,n_seeds");
    let alignment = read_alignment_json(&out.join("alignment.json")).unwrap();
    assert_eq!(alignment.source, ReportSource::Instance);
    assert_eq!((alignment.mae, alignment.eae), (0.0, 0.0));
    let manifest = read_manifest(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.config.horizon, Some(300));
    assert!(manifest.version.starts_with('v'));
}

#[test]
fn emitted_files_round_trip_and_curves_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_small(&out, &[]);
    for l in ["aligned", "aligned-ell", "vanilla"] {
        let traces: Vec<_> = (0..4)
            .map(|k| read_trace_csv(&trace_path(&out, l, k), l, k as u64).unwrap())
            .collect();
        let curve = read_curve_csv(&curve_path(&out, l), l).unwrap();
        let recomputed = confidence_align::analysis::aggregate_curves(&traces).unwrap();
        assert_eq!(curve.mean, recomputed.mean);
        assert_eq!(curve.ci_halfwidth, recomputed.ci_halfwidth);
        // regret against the exact instance never decreases
        assert!(curve.mean.windows(2).all(|w| w[0] <= w[1]));

        // rewriting what was read reproduces the file byte for byte
        let copy = dir.path().join(format!("{l}-curve.csv"));
        confidence_align::experiment::write_curve_csv(&copy, &curve).unwrap();
        assert_eq!(
            fs::read(&copy).unwrap(),
            fs::read(curve_path(&out, l)).unwrap()
        );
        let copy = dir.path().join(format!("{l}-seed.csv"));
        confidence_align::experiment::write_trace_csv(&copy, &traces[2]).unwrap();
        assert_eq!(
            fs::read(&copy).unwrap(),
            fs::read(trace_path(&out, l, 2)).unwrap()
        );
    }
    // both formulations take identical decisions on identical streams
    for k in 0..4 {
        assert_eq!(
            fs::read(trace_path(&out, "aligned", k)).unwrap(),
            fs::read(trace_path(&out, "aligned-ell", k)).unwrap()
        );
    }
}

fn all_files(root: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    files.sort();
    files
}

#[test]
fn identical_configs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_small(&a, &["--aligned.joint", "product", "--aligned.seed", "9"]);
    run_small(&b, &["--aligned.joint", "product", "--aligned.seed", "9"]);
    let files = all_files(&a);
    assert_eq!(files, all_files(&b));
    for f in files
        .iter()
        .filter(|f| f.file_name().unwrap() != "manifest.json")
    {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f:?}"
        );
    }
}

#[test]
fn rerunning_from_a_manifest_reproduces_curves() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    run_small(&first, &["--base_seed", "17", "--aligned.link.kappa", "9"]);
    let second = dir.path().join("second");
    ok(&[
        "run",
        "--config",
        first.join("manifest.json").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    for l in ["aligned", "aligned-ell", "vanilla"] {
        assert_eq!(
            fs::read(curve_path(&first, l)).unwrap(),
            fs::read(curve_path(&second, l)).unwrap()
        );
    }
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"mode": "synthetic-hard", "T": 50, "seeds": 2, "learners": ["vanilla"],
            "hard": {"n_human": 1, "n_ai": 4, "epsilon": 0.2}}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--hard.n_ai=2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let m = read_manifest(&out.join("manifest.json")).unwrap();
    let hard = m.config.hard.unwrap();
    assert_eq!((hard.n_human, hard.n_ai, hard.epsilon), (1, 2, Some(0.2)));
    assert!(out.join("vanilla").join("seed-1.csv").exists());
    assert!(!out.join("aligned").exists());
}

#[test]
fn group_a_shaped_run_orders_learners() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    ok(&[
        "run",
        "--T",
        "2040",
        "--seeds",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    let aligned = read_curve_csv(&curve_path(&out, "aligned"), "aligned").unwrap();
    let vanilla = read_curve_csv(&curve_path(&out, "vanilla"), "vanilla").unwrap();
    assert_eq!(aligned.n_seeds, 100);
    assert!(aligned.final_mean() < vanilla.final_mean());
}

fn write_log(path: &Path, obs: &[(f64, f64, u8)]) {
    let log = ReplayLog::from_observations(obs.iter().map(|&(h, b, y)| Observation { h, b, y }));
    write_replay(fs::File::create(path).unwrap(), &log).unwrap();
}

#[test]
fn report_on_aligned_dump_and_hand_table() {
    let dir = tempfile::tempdir().unwrap();
    // deterministic labels that rise with both confidences
    let mut obs = Vec::new();
    for h in [0.2, 0.5, 0.8] {
        for b in [0.1, 0.4, 0.6, 0.9] {
            let y = u8::from(h + b > 1.0);
            obs.push((h, b, y));
            obs.push((h, b, y));
        }
    }
    let aligned = dir.path().join("aligned.csv");
    write_log(&aligned, &obs);
    let report_dir = dir.path().join("rep");
    ok(&[
        "report",
        "--dataset",
        aligned.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    let r = read_alignment_json(&report_dir.join("alignment.json")).unwrap();
    assert_eq!((r.mae, r.eae), (0.0, 0.0));
    assert!(r.violations.is_empty());
    assert_eq!(r.source, ReportSource::Data);

    let mut hand = Vec::new();
    for (h, b, ones) in [(0.2, 0.3, 6), (0.2, 0.8, 4), (0.7, 0.3, 5), (0.7, 0.8, 7)] {
        for k in 0..10 {
            hand.push((h, b, u8::from(k < ones)));
        }
    }
    let hand_path = dir.path().join("hand.csv");
    write_log(&hand_path, &hand);
    let text = ok(&["report", "--dataset", hand_path.to_str().unwrap()]);
    let r: confidence_align::analysis::AlignmentReport = serde_json::from_str(&text).unwrap();
    assert!((r.mae - 0.2).abs() < 1e-12);
    assert!((r.eae - 0.075).abs() < 1e-12);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.cells.len(), 4);
}

#[test]
fn replay_run_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let mut obs = Vec::new();
    for i in 0..200u32 {
        let h = [0.25, 0.75][(i % 2) as usize];
        let b = [0.1, 0.5, 0.9][(i % 3) as usize];
        obs.push((h, b, u8::from((i * 7919) % 10 < (b * 10.0) as u32)));
    }
    let data = dir.path().join("log.csv");
    write_log(&data, &obs);
    let out = dir.path().join("o");
    ok(&[
        "run",
        "--dataset",
        data.to_str().unwrap(),
        "--seeds",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let m = read_manifest(&out.join("manifest.json")).unwrap();
    assert_eq!(m.config.horizon, Some(200));
    let trace = read_trace_csv(&trace_path(&out, "aligned", 1), "aligned", 1).unwrap();
    assert_eq!(trace.len(), 200);
    let r = read_alignment_json(&out.join("alignment.json")).unwrap();
    assert_eq!(r.n_observations, 200);

    let text = ok(&["bound", "--dataset", data.to_str().unwrap()]);
    let b: serde_json::Value = serde_json::from_str(&text).unwrap();
    let gap = b["plug_in_gap"].as_f64().unwrap();
    assert!(gap <= b["bound"].as_f64().unwrap() + 1e-12);
    assert!((b["mae"].as_f64().unwrap() - r.mae).abs() < 1e-15);
}

#[test]
fn coverage_verb_reports_every_cell() {
    let text = ok(&[
        "coverage", "--n", "50,200", "--eps", "0.1,1.5", "--trials", "200",
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r["eps"].as_f64().unwrap() >= 1.0) {
        assert_eq!(r["exceedances"].as_u64().unwrap(), 0);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    for args in [
        vec!["run", "--T", "0", "--out", out],
        vec!["run", "--T", "5", "--learner", "greedy", "--out", out],
        vec!["run", "--T", "5", "--seeds", "0", "--out", out],
        vec!["run", "--mode", "replay"],
        vec!["run", "--T", "5", "--utility", "0,1,0,1", "--out", out],
        vec!["run", "--T", "5", "--no.such.key", "1", "--out", out],
        vec!["run"],
    ] {
        assert_eq!(confalign(&args).status.code(), Some(2), "{args:?}");
    }
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "h,b,y\n0.5,0.5,1\n0.5,0.5,2\n").unwrap();
    assert_eq!(
        confalign(&["report", "--dataset", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let garbled = dir.path().join("garbled.csv");
    fs::write(&garbled, "h,b,y\n0.5,abc,1\n").unwrap();
    assert_eq!(
        confalign(&["report", "--dataset", garbled.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );

    // output path below a regular file cannot be created
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let under = blocker.join("o");
    let status = confalign(&["run", "--T", "5", "--out", under.to_str().unwrap()]).status;
    assert!(!status.success());
}
