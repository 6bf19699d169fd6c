use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use plunge_cli::{run, EXIT_INPUT, EXIT_OK, EXIT_USAGE};
use tempfile::TempDir;

struct Outcome {
    code: u8,
    stdout: String,
    stderr: String,
}

fn plunge(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("plunge").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

/// Synthetic panel in `<tmp>/syn`.
fn synth_fixture(tmp: &TempDir, seed: u64) -> PathBuf {
    let dir = tmp.path().join("syn");
    let r = plunge(&["synth", "--seed", &seed.to_string(), "--out", p(&dir)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    dir
}

#[test]
fn synth_writes_three_files_deterministically() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        assert_eq!(
            plunge(&["synth", "--seed", "17", "--out", p(d)]).code,
            EXIT_OK
        );
    }
    let ta = tree(&a);
    assert_eq!(
        ta.keys().map(|k| k.to_str().unwrap()).collect::<Vec<_>>(),
        ["pe.csv", "prices.csv", "regimes.json"]
    );
    assert_eq!(ta, tree(&b));
    let c = tmp.path().join("c");
    plunge(&["synth", "--seed", "18", "--out", p(&c)]);
    assert_ne!(
        ta[Path::new("prices.csv")],
        tree(&c)[Path::new("prices.csv")]
    );
}

#[test]
fn synth_month_count_follows_config() {
    let tmp = TempDir::new().unwrap();
    let months = vec!["\"normal\""; 24].join(", ");
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, format!("[synth]\nmonths = [{months}]\n")).unwrap();
    let out = tmp.path().join("o");
    assert_eq!(
        plunge(&["synth", "--config", p(&cfg), "--out", p(&out)]).code,
        EXIT_OK
    );
    let pe = fs::read_to_string(out.join("pe.csv")).unwrap();
    assert_eq!(pe.lines().count(), 25);
    assert_eq!(pe.lines().nth(24).unwrap(), "2007-12,15");
}

#[test]
fn synth_rejects_one_day_months() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let r = plunge(&["synth", "--days-per-month", "1", "--out", p(&out)]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("days_per_month"));
    assert!(!out.exists());
}

#[test]
fn analyze_is_idempotent_and_complete() {
    let tmp = TempDir::new().unwrap();
    let syn = synth_fixture(&tmp, 3);
    let run_once = |name: &str| {
        let out = tmp.path().join(name);
        let r = plunge(&[
            "analyze",
            "--prices",
            p(&syn.join("prices.csv")),
            "--pe",
            p(&syn.join("pe.csv")),
            "--threshold",
            "0.9",
            "--threshold",
            "0.8",
            "--graphs",
            "--out",
            p(&out),
        ]);
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
        assert!(r.stderr.is_empty());
        tree(&out)
    };
    let a = run_once("a");
    assert_eq!(a, run_once("b"));
    for f in [
        "metrics.csv",
        "volatility.csv",
        "connectedness.csv",
        "eigenvalues.csv",
        "spectrum.csv",
        "parameter_space.csv",
        "report.json",
        "graphs/2006-05_t0.9.dot",
        "graphs/2006-05_t0.8.dot",
    ] {
        assert!(a.contains_key(Path::new(f)), "missing {f}");
    }
    // 48 months x 2 thresholds
    let conn = String::from_utf8(a[Path::new("connectedness.csv")].clone()).unwrap();
    assert_eq!(conn.lines().count(), 1 + 96);
    let eig = String::from_utf8(a[Path::new("eigenvalues.csv")].clone()).unwrap();
    assert_eq!(eig.lines().count(), 1 + 48 * 13);
    let report: serde_json::Value = serde_json::from_slice(&a[Path::new("report.json")]).unwrap();
    assert_eq!(report["months"].as_array().unwrap().len(), 48);
    assert_eq!(report["connectedness_threshold"], 0.9);
}

#[test]
fn analyze_recovers_planted_regimes_with_calibrated_lecm() {
    let tmp = TempDir::new().unwrap();
    let syn = synth_fixture(&tmp, 99);
    let out = tmp.path().join("o");
    let r = plunge(&[
        "analyze",
        "--prices",
        p(&syn.join("prices.csv")),
        "--pe",
        p(&syn.join("pe.csv")),
        "--lecm-min",
        &plunge_core::synth::SCENARIO_LECM_MIN.to_string(),
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(syn.join("regimes.json")).unwrap()).unwrap();
    let planted: Vec<&str> = truth["months"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["regime"] == "crisis")
        .map(|m| m["month"].as_str().unwrap())
        .collect();
    let crashed: Vec<&str> = report["months"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["label"] == "Crash")
        .map(|m| m["month"].as_str().unwrap())
        .collect();
    assert_eq!(crashed, planted);
    let starts: Vec<&str> = report["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["start"].as_str().unwrap())
        .collect();
    assert_eq!(
        starts,
        ["2006-05", "2007-07", "2008-02", "2008-08", "2009-09"]
    );
}

#[test]
fn analyze_without_pe_warns_and_never_crashes() {
    let tmp = TempDir::new().unwrap();
    let syn = synth_fixture(&tmp, 4);
    let out = tmp.path().join("o");
    let r = plunge(&[
        "analyze",
        "--prices",
        p(&syn.join("prices.csv")),
        "--lecm-min",
        "6.89",
        "--format",
        "csv",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, EXIT_OK);
    assert!(
        r.stderr.starts_with("warning: no PE series"),
        "{}",
        r.stderr
    );
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let labels: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(labels.len(), 48);
    assert!(labels.iter().all(|l| *l == "Normal" || *l == "Crisis"));
    assert!(labels.contains(&"Crisis"));
    assert_eq!(
        fs::read_to_string(out.join("parameter_space.csv")).unwrap(),
        "month,lecm,pe,label\n"
    );
}

#[test]
fn unreadable_prices_leave_no_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let r = plunge(&[
        "analyze",
        "--prices",
        p(&tmp.path().join("absent.csv")),
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, EXIT_INPUT);
    assert_eq!(r.stderr.lines().count(), 1);
    assert!(r.stderr.starts_with("error: "));
    assert!(!out.exists());
    assert_eq!(
        fs::read_dir(tmp.path()).unwrap().count(),
        0,
        "staging directory left behind"
    );
}

#[test]
fn malformed_prices_fail_without_touching_existing_outputs() {
    let tmp = TempDir::new().unwrap();
    let syn = synth_fixture(&tmp, 6);
    let out = tmp.path().join("o");
    plunge(&[
        "analyze",
        "--prices",
        p(&syn.join("prices.csv")),
        "--out",
        p(&out),
    ]);
    let before = tree(&out);
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "date,A,B\n2006-01-02,1,-3\n").unwrap();
    let r = plunge(&[
        "analyze",
        "--prices",
        p(&bad),
        "--missing",
        "fail",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, EXIT_INPUT);
    assert!(r.stderr.contains("non-positive price"), "{}", r.stderr);
    assert_eq!(tree(&out), before);
}

#[test]
fn flags_override_config_file() {
    let tmp = TempDir::new().unwrap();
    synth_fixture(&tmp, 8);
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "prices = \"syn/prices.csv\"\npe = \"syn/pe.csv\"\nout = \"from-file\"\nformat = \"csv\"\nthresholds = [0.5]\n\n[indicator]\nlecm_min = 6.89\n",
    )
    .unwrap();
    let r = plunge(&["analyze", "--config", p(&cfg)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let from_file = tmp.path().join("from-file");
    assert!(from_file.join("report.csv").exists());
    let conn = fs::read_to_string(from_file.join("connectedness.csv")).unwrap();
    assert!(conn.lines().nth(1).unwrap().contains(",0.5,"));

    let flagged = tmp.path().join("from-flags");
    let r = plunge(&[
        "analyze",
        "--config",
        p(&cfg),
        "--threshold",
        "0.7",
        "--format",
        "json",
        "--out",
        p(&flagged),
    ]);
    assert_eq!(r.code, EXIT_OK);
    assert!(flagged.join("report.json").exists());
    let conn = fs::read_to_string(flagged.join("connectedness.csv")).unwrap();
    assert!(conn.lines().nth(1).unwrap().contains(",0.7,"));
}

#[test]
fn bad_configuration_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let syn = synth_fixture(&tmp, 9);
    let prices = syn.join("prices.csv");
    for args in [
        vec!["analyze", "--prices", p(&prices), "--threshold", "1.1"],
        vec!["analyze", "--prices", p(&prices), "--lecm-min", "14"],
        vec!["analyze", "--prices", p(&prices), "--pe-min", "0"],
        vec!["analyze", "--prices", p(&prices), "--no-benchmark-corr"],
        vec!["analyze", "--prices", p(&prices), "--benchmark", "NOPE"],
        vec!["analyze"],
        vec!["analyze", "--threshold", "abc"],
        vec!["frobnicate"],
    ] {
        let mut args = args;
        let out = tmp.path().join("never");
        args.extend(["--out", p(&out)]);
        let r = plunge(&args);
        assert_eq!(r.code, EXIT_USAGE, "{args:?}: {}", r.stderr);
        assert!(!out.exists());
    }
    let missing_cfg = plunge(&["synth", "--config", p(&tmp.path().join("none.toml"))]);
    assert_eq!(missing_cfg.code, EXIT_USAGE);
}

#[test]
fn benchmark_can_leave_the_correlation_matrix() {
    let tmp = TempDir::new().unwrap();
    let syn = synth_fixture(&tmp, 10);
    let out = tmp.path().join("o");
    let r = plunge(&[
        "analyze",
        "--prices",
        p(&syn.join("prices.csv")),
        "--benchmark",
        "S13",
        "--no-benchmark-corr",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(
        metrics.lines().nth(1).unwrap().split(',').nth(2),
        Some("12")
    );
    // volatility still reported for every column
    let vol = fs::read_to_string(out.join("volatility.csv")).unwrap();
    assert_eq!(vol.lines().count(), 1 + 48 * 13);
}

fn graph_density(prices: &Path, month: &str) -> f64 {
    let r = plunge(&[
        "graph",
        "--prices",
        p(prices),
        "--month",
        month,
        "--threshold",
        "0.9",
        "--format",
        "json",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let doc: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    let n = doc["nodes"].as_array().unwrap().len() as f64;
    doc["edges"].as_array().unwrap().len() as f64 / (n * (n - 1.0) / 2.0)
}

#[test]
fn graph_density_tracks_regime() {
    let tmp = TempDir::new().unwrap();
    // crisis months at population correlation 0.97, normal months at 0.3
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "[synth]\nmonths = [\"normal\", \"crisis\", \"normal\", \"crisis\"]\nbeta_normal = 0.6546536707079772\nbeta_crisis = 5.686240703077327\nseed = 12\n",
    )
    .unwrap();
    let out = tmp.path().join("syn");
    assert_eq!(
        plunge(&["synth", "--config", p(&cfg), "--out", p(&out)]).code,
        EXIT_OK
    );
    let prices = out.join("prices.csv");
    for crisis in ["2006-02", "2006-04"] {
        let d = graph_density(&prices, crisis);
        assert!(d > 0.5, "{crisis}: {d}");
    }
    for normal in ["2006-01", "2006-03"] {
        let d = graph_density(&prices, normal);
        assert!(d < 0.2, "{normal}: {d}");
    }
}

#[test]
fn graph_prints_dot_and_validates() {
    let tmp = TempDir::new().unwrap();
    let syn = synth_fixture(&tmp, 13);
    let prices = syn.join("prices.csv");
    let r = plunge(&[
        "graph",
        "--prices",
        p(&prices),
        "--month",
        "2006-05",
        "--threshold",
        "0.5",
    ]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.starts_with("graph {\n  \"S01\";\n"));
    assert!(r.stdout.contains(" -- "));
    assert!(r.stdout.ends_with("}\n"));

    let r = plunge(&[
        "graph",
        "--prices",
        p(&prices),
        "--month",
        "2006-05",
        "--threshold",
        "1.1",
    ]);
    assert_eq!(r.code, EXIT_USAGE);
    let r = plunge(&["graph", "--prices", p(&prices), "--month", "2030-01"]);
    assert_eq!(r.code, EXIT_INPUT);
    let r = plunge(&["graph", "--prices", p(&prices), "--month", "2006-13"]);
    assert_eq!(r.code, EXIT_USAGE);
}

#[test]
fn binary_exit_codes_and_env_out_dir() {
    let bin = env!("CARGO_BIN_EXE_plunge");
    let tmp = TempDir::new().unwrap();
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("Exit codes"));

    let env_out = tmp.path().join("via-env");
    let synth = Command::new(bin)
        .args(["synth", "--seed", "1"])
        .env("PLUNGE_OUT_DIR", &env_out)
        .output()
        .unwrap();
    assert_eq!(synth.status.code(), Some(0));
    assert!(env_out.join("prices.csv").exists());

    let bad = Command::new(bin)
        .args(["analyze", "--prices"])
        .arg(tmp.path().join("absent.csv"))
        .env("PLUNGE_OUT_DIR", tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!tmp.path().join("x").exists());

    let usage = Command::new(bin)
        .arg("analyze")
        .arg("--nope")
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(1));
}
