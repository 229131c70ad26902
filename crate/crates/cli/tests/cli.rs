use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TOY: &str = "1 2 3\n1 2\n1 3\n2 3\n";

fn lshmine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lshmine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// 1000 transactions, `m` items each in 101 random transactions (item 0 in
/// 102). With theta = 0.1 every item is frequent and every pair far below
/// threshold: the last level is all infrequent candidates.
fn near_threshold_db(m: usize) -> String {
    let n = 1000;
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut rows = vec![Vec::new(); n];
    for item in 0..m {
        let mut slots: Vec<usize> = (0..n).collect();
        let take = if item == 0 { 102 } else { 101 };
        for k in 0..take {
            let j = k + (next() % (n - k) as u64) as usize;
            slots.swap(k, j);
            rows[slots[k]].push(item);
        }
    }
    rows.iter()
        .map(|r| r.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[test]
fn mine_toy_exact() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.dat", TOY);
    let doc = json(&lshmine(&["mine", "--input", &input, "--theta", "0.5", "--variant", "exact"]));
    assert_eq!(doc["schema_version"], "lshmine-report/1");
    let items: Vec<Vec<u64>> = doc["itemsets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["items"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect())
        .collect();
    assert_eq!(items, vec![vec![1], vec![2], vec![3], vec![1, 2], vec![1, 3], vec![2, 3]]);
}

#[test]
fn bad_theta_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.dat", TOY);
    let out = lshmine(&["mine", "--input", &input, "--theta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta must be in (0,1)"));
    assert!(out.stdout.is_empty());
}

#[test]
fn lsh_variant_needs_delta() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.dat", TOY);
    let out = lshmine(&["mine", "--input", &input, "--theta", "0.5", "--variant", "hamming", "--epsilon", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = lshmine(&["mine", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.dat");
    let out = lshmine(&["mine", "--input", missing.to_str().unwrap(), "--theta", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let bad = write(&dir, "bad.dat", "1 2\n3 x\n");
    let out = lshmine(&["mine", "--input", &bad, "--theta", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn compare_covering_toy_is_clean() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.dat", TOY);
    let doc = json(&lshmine(&[
        "compare", "--input", &input, "--theta", "0.5", "--variant", "covering", "--epsilon", "0.5", "--delta", "0.1",
    ]));
    assert_eq!(doc["comparison"]["missed"].as_array().unwrap().len(), 0);
    assert_eq!(doc["comparison"]["sub_threshold"].as_array().unwrap().len(), 0);
}

#[test]
fn compare_exact_has_empty_diff() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.dat", TOY);
    let doc = json(&lshmine(&["compare", "--input", &input, "--theta", "0.5"]));
    let cmp = &doc["comparison"];
    assert!(cmp["missed"].as_array().unwrap().is_empty());
    assert!(cmp["sub_threshold"].as_array().unwrap().is_empty());
    for acc in doc["accounting"].as_array().unwrap() {
        assert_eq!(acc["identity_holds"], true);
        assert_eq!(acc["savings"], 0);
    }
}

#[test]
fn compare_trials_reports_bound_next_to_rate() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.dat", TOY);
    let doc = json(&lshmine(&[
        "compare", "--input", &input, "--theta", "0.5", "--variant", "hamming", "--epsilon", "0.5", "--delta", "0.1",
        "--trials", "50",
    ]));
    let rates = doc["comparison"]["miss_rates"].as_array().unwrap();
    assert_eq!(rates.len(), 2);
    for r in rates {
        let l = r["level"].as_u64().unwrap() as i32;
        assert!((r["bound"].as_f64().unwrap() - 0.1 * 2f64.powi(l)).abs() < 1e-12);
        assert_eq!(r["trials"], 50);
    }
}

#[test]
fn bench_rows_and_ordering() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "near.dat", &near_threshold_db(100));
    let args = ["bench", "--input", &input, "--theta", "0.1", "--epsilon", "0.5", "--delta", "0.1"];
    let out = lshmine(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == header.len()));
    let reads = |variant: &str| -> u64 {
        rows.iter()
            .filter(|r| r[0] == variant)
            .map(|r| r[col("transactions_read")].parse::<u64>().unwrap())
            .sum()
    };
    assert!(rows.iter().filter(|r| r[0] == "exact").all(|r| r[col("hash_overhead")] == "0"));
    assert!(rows.iter().all(|r| r[col("fallback")].is_empty()), "{text}");
    assert!(reads("covering") <= reads("exact"), "{text}");
    // Same seed, same bytes.
    assert_eq!(lshmine(&args).stdout, out.stdout);
}

#[test]
fn generate_then_mine() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("gen.dat");
    let p = path.to_str().unwrap();
    let out = lshmine(&["generate", "--n", "50", "--m", "6", "--density", "0.5", "--seed", "3", "--output", p]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 50);
    let report = dir.path().join("r.json");
    let out = lshmine(&["mine", "--input", p, "--theta", "0.3", "--output", report.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(Path::new(&report)).unwrap()).unwrap();
    assert_eq!(doc["n"], 50);
}

#[test]
fn thread_count_does_not_change_report() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "near.dat", &near_threshold_db(40));
    let run = |threads: &str| {
        lshmine(&[
            "mine", "--input", &input, "--theta", "0.1", "--variant", "minhash", "--epsilon", "0.5", "--delta", "0.1",
            "--threads", threads,
        ])
        .stdout
    };
    assert_eq!(run("1"), run("8"));
}
