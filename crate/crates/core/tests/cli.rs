use std::path::{Path, PathBuf};
use std::process::Command;

use aggmin::minimizer::Outcome;
use aggmin::runner::{run, Command as Cmd, RunOptions, SweepRow};

const SMALL: &str = r#"{
    "grid": {"d": 2, "radius": 10, "cells": 96},
    "kernel": {"shape": "exponential", "c": 1, "a": 1},
    "entropy": {"form": "quadratic", "chi0": 1},
    "flow": {"scheme": "projected_descent", "widths": [1.0, 2.0]},
    "criticality": {"ensemble": 10, "deltas": [1.0]},
    "probe": {"levels": 4}
}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn aggmin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_aggmin")).args(args).output().unwrap()
}

fn read_kv(path: &Path) -> Vec<(String, String)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn value(kv: &[(String, String)], key: &str) -> String {
    kv.iter().find(|(k, _)| k == key).unwrap().1.clone()
}

#[test]
fn identical_config_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    for out in ["a", "b"] {
        let opts = RunOptions {
            out: dir.path().join(out),
            jobs: Some(1),
            seed: None,
        };
        for c in [Cmd::Minimize, Cmd::Probe, Cmd::Classify, Cmd::Energy] {
            run(c, &cfg, &opts).unwrap();
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 9);
    for n in names {
        let a = std::fs::read(dir.path().join("a").join(&n)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&n)).unwrap();
        assert_eq!(a, b, "{n:?} differs");
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("aggmin 0.1.0"), "{n:?} lacks the version line");
        assert!(text.contains("config_sha256 "), "{n:?} lacks the config hash");
    }
}

#[test]
fn seed_override_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let first = |seed| {
        let out = dir.path().join(format!("s{seed}"));
        run(
            Cmd::Energy,
            &cfg,
            &RunOptions {
                out: out.clone(),
                jobs: None,
                seed: Some(seed),
            },
        )
        .unwrap();
        std::fs::read_to_string(out.join("energy.txt"))
            .unwrap()
            .lines()
            .nth(1)
            .unwrap()
            .to_string()
    };
    assert_ne!(first(1), first(2));
}

#[test]
fn zero_profile_has_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("\"probe\"", "\"profile\": {\"kind\": \"zero\"}, \"probe\"");
    let cfg = write_config(dir.path(), "z.json", &text);
    let out = dir.path().join("o");
    let o = aggmin(&["energy", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let kv = read_kv(&out.join("energy.txt"));
    assert_eq!(value(&kv, "free_energy"), "0");
}

#[test]
fn minimized_profile_round_trips_through_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("m");
    let o = aggmin(&[
        "minimize",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_kv(&out.join("summary.txt"));
    assert_eq!(value(&summary, "outcome"), "stationary");
    let f: f64 = value(&summary, "free_energy").parse().unwrap();
    assert!(f < 0.0);

    let text = SMALL.replace(
        "\"probe\"",
        "\"profile\": {\"kind\": \"csv\", \"path\": \"m/profile.csv\"}, \"probe\"",
    );
    let cfg = write_config(dir.path(), "e.json", &text);
    let out = dir.path().join("e");
    let o = aggmin(&["energy", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g: f64 = value(&read_kv(&out.join("energy.txt")), "free_energy").parse().unwrap();
    assert!((f - g).abs() <= 1e-12 * f.abs());
}

#[test]
fn single_point_sweep_matches_minimize() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "\"probe\"",
        "\"sweep\": {\"parameter\": \"kernel_amplitude\", \"values\": [1.0]}, \"probe\"",
    );
    let cfg = write_config(dir.path(), "s.json", &text);
    let opts = RunOptions {
        out: dir.path().join("o"),
        jobs: Some(1),
        seed: None,
    };
    run(Cmd::Sweep, &cfg, &opts).unwrap();
    run(Cmd::Minimize, &cfg, &opts).unwrap();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(opts.out.join("sweep.csv"))
        .unwrap();
    let rows: Vec<SweepRow> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    let summary = read_kv(&opts.out.join("summary.txt"));
    assert_eq!(rows[0].outcome, Outcome::Stationary);
    assert_eq!(value(&summary, "outcome"), "stationary");
    assert_eq!(
        rows[0].infimum_estimate,
        value(&summary, "infimum_estimate").parse::<f64>().unwrap()
    );
    assert_eq!(rows[0].final_sup, value(&summary, "sup").parse::<f64>().unwrap());
}

#[test]
fn probe_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "\"entropy\": {\"form\": \"quadratic\", \"chi0\": 1}",
        "\"entropy\": {\"form\": \"power\", \"m\": 3}",
    );
    let cfg = write_config(dir.path(), "p.json", &text);
    let out = dir.path().join("o");
    let o = aggmin(&["probe", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("probe.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 6);
    let svg = std::fs::read_to_string(out.join("probe.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("config_sha256"));
}

#[test]
fn classify_reports_a_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("o");
    let o = aggmin(&["classify", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        value(&read_kv(&out.join("classify.txt")), "regime"),
        "existence_chi_positive"
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let missing = aggmin(&["energy", dir.path().join("nope.json").to_str().unwrap(), "--out", out]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(!missing.stderr.is_empty());

    let typo = write_config(
        dir.path(),
        "t.json",
        &SMALL.replace("\"grid\"", "\"gird\": 1, \"grid\""),
    );
    assert_eq!(
        aggmin(&["energy", typo.to_str().unwrap(), "--out", out]).status.code(),
        Some(1)
    );

    let empty = write_config(
        dir.path(),
        "e.json",
        &SMALL.replace(
            "\"probe\"",
            "\"sweep\": {\"parameter\": \"mass\", \"values\": []}, \"probe\"",
        ),
    );
    assert_eq!(
        aggmin(&["sweep", empty.to_str().unwrap(), "--out", out]).status.code(),
        Some(1)
    );

    let no_sweep = write_config(dir.path(), "n.json", SMALL);
    assert_eq!(
        aggmin(&["sweep", no_sweep.to_str().unwrap(), "--out", out])
            .status
            .code(),
        Some(1)
    );

    assert_eq!(aggmin(&["fit", no_sweep.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(
        aggmin(&["energy", no_sweep.to_str().unwrap(), "--jobs", "0", "--out", out])
            .status
            .code(),
        Some(1)
    );

    let bad_csv = dir.path().join("bad.csv");
    std::fs::write(&bad_csv, "not a profile\n").unwrap();
    let text = SMALL.replace(
        "\"probe\"",
        "\"profile\": {\"kind\": \"csv\", \"path\": \"bad.csv\"}, \"probe\"",
    );
    let cfg = write_config(dir.path(), "b.json", &text);
    assert_eq!(
        aggmin(&["energy", cfg.to_str().unwrap(), "--out", out]).status.code(),
        Some(3)
    );

    let overflow = write_config(
        dir.path(),
        "x.json",
        &SMALL.replace("\"probe\": {\"levels\": 4}", "\"probe\": {\"lambdas\": [1.5]}"),
    );
    assert_eq!(
        aggmin(&["probe", overflow.to_str().unwrap(), "--out", out])
            .status
            .code(),
        Some(1)
    );
}
