use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use skewlab::{parse_config, run};

fn skewlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewlab"))
        .args(args)
        .env_remove("SKEWLAB_OUT_DIR")
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn pmf_two_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let res = skewlab(&["pmf", "--alpha", "0.7", "--n", "2", "--output", out]);
    assert!(res.status.success(), "{res:?}");
    let header = fs::read_to_string(tmp.path().join("pmf.csv")).unwrap();
    assert!(header.starts_with("k,m,prob\n"));
    let rows = csv_rows(&tmp.path().join("pmf.csv"));
    let want = [(-2, 0.15), (0, 0.5), (2, 0.35)];
    assert_eq!(rows.len(), want.len());
    for (row, (m, p)) in rows.iter().zip(want) {
        assert_eq!(row[0], "2");
        assert_eq!(row[1].parse::<i64>().unwrap(), m);
        assert!((row[2].parse::<f64>().unwrap() - p).abs() < 1e-15);
    }
}

#[test]
fn symmetric_scan_stays_below_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let res = skewlab(&[
        "tightness-scan",
        "--alpha",
        "0.5",
        "--n",
        "8,32,128",
        "--replicates",
        "50",
        "--output",
        out,
    ]);
    assert!(res.status.success(), "{res:?}");
    let rows = csv_rows(&tmp.path().join("tightness_scan.csv"));
    assert_eq!(rows.len(), 3);
    for row in rows {
        let n: f64 = row[1].parse().unwrap();
        let ratio: f64 = row[5].parse().unwrap();
        assert!(ratio < 3.0);
        assert!((ratio - (3.0 - 2.0 / n)).abs() < 1e-12);
    }
    assert_eq!(csv_rows(&tmp.path().join("tightness_offgrid.csv")).len(), 3);
}

#[test]
fn repeated_runs_share_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--alpha",
        "0.3,0.8",
        "--n",
        "6",
        "--replicates",
        "20000",
        "--seed",
        "9",
    ];
    let mut digests = Vec::new();
    for i in 0..2 {
        let dir = tmp.path().join(i.to_string());
        let mut argv = args.to_vec();
        argv.extend(["--output", dir.to_str().unwrap()]);
        assert!(skewlab(&argv).status.success());
        digests.push(manifest(&dir)["files"].clone());
    }
    assert_eq!(digests[0], digests[1]);
    assert_eq!(digests[0].as_array().unwrap().len(), 2);
}

#[test]
fn manifest_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let argv = [
        "moments",
        "--alpha",
        "0.1,0.65",
        "--n",
        "6",
        "--horizon",
        "2",
        "--output",
        out,
    ];
    let cfg = parse_config(&argv).unwrap();
    let m = run(&cfg).unwrap();
    let echoed: Vec<String> = manifest(tmp.path())["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(echoed, m.argv);
    assert_eq!(parse_config(&echoed).unwrap(), cfg);
    // 12 grid points: 78 pairs for each alpha.
    assert_eq!(csv_rows(&tmp.path().join("moments.csv")).len(), 2 * 78);
}

#[test]
fn json_output_mirrors_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["converge", "--alpha", "0.4", "--n", "100,400"];
    let (csv_dir, json_dir) = (tmp.path().join("c"), tmp.path().join("j"));
    let mut a = base.to_vec();
    a.extend(["--output", csv_dir.to_str().unwrap()]);
    assert!(skewlab(&a).status.success());
    let mut b = base.to_vec();
    b.extend(["--output", json_dir.to_str().unwrap(), "--format", "json"]);
    assert!(skewlab(&b).status.success());
    let csv = csv_rows(&csv_dir.join("converge.csv"));
    let doc: Value =
        serde_json::from_str(&fs::read_to_string(json_dir.join("converge.json")).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), csv.len());
    for (r, c) in rows.iter().zip(&csv) {
        assert_eq!(r["n"].as_i64().unwrap().to_string(), c[1]);
        assert_eq!(
            r["ks_exact"].as_f64().unwrap(),
            c[3].parse::<f64>().unwrap()
        );
    }
    assert_eq!(doc["run"]["command"], "converge");
    assert_eq!(doc["columns"][3], "ks_exact");
}

#[test]
fn other_commands_write_expected_columns() {
    let tmp = tempfile::tempdir().unwrap();
    for (args, file, header) in [
        (
            vec!["convolution", "--n", "40"],
            "convolution.csv",
            "name,index,value,partial_sum",
        ),
        (
            vec!["tauberian", "--n", "10,100"],
            "tauberian.csv",
            "name,theta,slowly_varying,m,partial_sum,ratio",
        ),
        (
            vec!["simulate", "--n", "5", "--replicates", "1000"],
            "simulate_tests.csv",
            "alpha,k,comparison,statistic,dof,p_value",
        ),
    ] {
        let dir = tmp.path().join(file);
        let mut argv = args.clone();
        argv.extend(["--output", dir.to_str().unwrap()]);
        assert!(skewlab(&argv).status.success(), "{args:?}");
        let text = fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
    }
    let rows = csv_rows(&tmp.path().join("convolution.csv").join("convolution.csv"));
    assert_eq!(rows.len(), 3 * 41);
    let nu20: Vec<_> = rows
        .iter()
        .filter(|r| r[0] == "nu" && r[1] == "20")
        .collect();
    assert!((nu20[0][2].parse::<f64>().unwrap() - 11.0).abs() < 1e-12);
}

#[test]
fn exit_statuses() {
    let empty = skewlab(&[]);
    assert_eq!(empty.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("Usage"));

    let bad = skewlab(&["pmf", "--alpha", "1.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("alpha must lie in (0,1)"));

    assert_eq!(skewlab(&["pmf", "--n", "x"]).status.code(), Some(2));
    assert_eq!(
        skewlab(&["pmf", "--alpha", "0.2,0.4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        skewlab(&["converge", "--n", "10", "--horizon", "0.25"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(skewlab(&["moments", "--n", "1024"]).status.code(), Some(3));
    assert_eq!(skewlab(&["--help"]).status.code(), Some(0));

    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let res = skewlab(&["pmf", "--output", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(5));
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_skewlab"))
        .args(["pmf", "--n", "3"])
        .env("SKEWLAB_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(tmp.path().join("pmf.csv").exists());
    assert!(tmp.path().join("manifest.json").exists());
}
