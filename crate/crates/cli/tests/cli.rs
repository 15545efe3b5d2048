use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn harmrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmrank"))
        .args(args)
        .env_remove("HARMRANK_OUT")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn sensitivity_run(out: &Path) -> Output {
    let input = fixture("aiaaic_aggregated.csv");
    harmrank(&[
        "sensitivity",
        "-i",
        path(&input),
        "--schema",
        "aggregated_triplets",
        "--seed",
        "17",
        "--trials",
        "20",
        "--out",
        path(out),
    ])
}

#[test]
fn compute_prints_the_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("aiaaic_aggregated.csv");
    let out = dir.path().join("out");
    let o = harmrank(&["compute", "-i", path(&input), "--schema", "aggregated_triplets", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let first = stdout.lines().next().unwrap();
    assert!(first.contains("Political & economic"), "{stdout}");
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("category,aih,ci,rank\n"), "{csv}");
}

#[test]
fn boundary_flag_adds_columns_only() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("aiaaic_aggregated.csv");
    let out = dir.path().join("out");
    let o = harmrank(&[
        "compute",
        "-i",
        path(&input),
        "--schema",
        "aggregated_triplets",
        "--boundary",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("category,aih,ci,rank,best_aih,worst_aih\n"), "{csv}");
    assert!(!out.join("scenarios").exists());
}

#[test]
fn sensitivity_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(sensitivity_run(&a).status.success());
    assert!(sensitivity_run(&b).status.success());
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert!(ta.iter().any(|(p, _)| p.ends_with(".svg")));
    assert_eq!(ta, tb);
}

#[test]
fn report_replays_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(sensitivity_run(&a).status.success());
    let manifest = a.join("run-manifest.json");
    let o = harmrank(&["report", "--manifest", path(&manifest), "--out", path(&b)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_tree(&a), read_tree(&b));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("aiaaic_aggregated.csv");
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_harmrank"))
        .args(["ingest", "-i", path(&input), "--schema", "aggregated_triplets"])
        .env("HARMRANK_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("ingest/table.json").exists());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("missing.csv");
    let o = harmrank(&["compute", "-i", path(&missing), "--schema", "aggregated_triplets", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert!(!out.exists());

    let mit = fixture("mit_ratings.csv");
    let o = harmrank(&["compute", "-i", path(&mit), "--schema", "mit_ratings", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2), "a rating schema needs an explicit ordering");
}

#[test]
fn computation_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("unmapped.csv");
    std::fs::write(&input, "category,unit,weight\nA,Robots,4\n").unwrap();
    let out = dir.path().join("out");
    let o = harmrank(&["compute", "-i", path(&input), "--schema", "aggregated_triplets", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn numeric_gini_with_labelled_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("aiaaic_aggregated.csv");
    let order = fixture("severity_labels_10_90.txt");
    let out = dir.path().join("out");
    let o = harmrank(&[
        "compute",
        "-i",
        path(&input),
        "--schema",
        "aggregated_triplets",
        "--severity-order",
        path(&order),
        "--numeric-gini",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("category,aih,ci,gini,rank\n"), "{csv}");
}
