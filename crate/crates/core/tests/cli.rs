use serde_json::Value;
use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siegel-km")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn coeff(doc: &Value, n4: i64, l4: i64, m4: i64) -> Option<String> {
    doc["coeffs"].as_array().unwrap().iter().find_map(|c| {
        let c = c.as_array().unwrap();
        (c[0] == n4 && c[1] == l4 && c[2] == m4).then(|| c[3].as_str().unwrap().to_string())
    })
}

#[test]
fn expand_j_rows() {
    let o = run(&["expand", "j", "--order", "3"]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["form"], "j");
    for (n, want) in [(0, "744"), (1, "196884"), (2, "21493760")] {
        assert_eq!(coeff(&doc, 4 * n, 0, 0).as_deref(), Some(want));
    }
}

#[test]
fn expand_delta5_theta_leading_coefficient() {
    let o = run(&["expand", "--form", "delta5.theta", "--order", "20"]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    // (1,1,1) in πi-indices is (2,2,2) in quarter units
    assert_eq!(coeff(&doc, 2, 2, 2).as_deref(), Some("1"));
}

#[test]
fn unknown_names_are_usage_errors() {
    assert_eq!(code(&run(&["expand", "unknown"])), 2);
    assert_eq!(code(&run(&["verify", "everything"])), 2);
    assert_eq!(code(&run(&["mult", "--algebra", "A2_0"])), 2);
    assert_eq!(code(&run(&["expand", "delta5.theta", "--order", "3"])), 2);
    assert_eq!(code(&run(&["verify", "hecke", "--order", "8"])), 2);
}

#[test]
fn verify_cartan_report() {
    let o = run(&["verify", "cartan"]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["suite"], "cartan");
    let checks = doc["checks"].as_array().unwrap();
    let per_matrix = checks.iter().filter(|c| c["name"].as_str().unwrap().contains(": ")).count();
    assert_eq!(per_matrix, 12 * 6);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
}

#[test]
fn mult_spot_values() {
    let o = run(&["mult", "--algebra", "A1_0", "--norm-bound", "2", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("2,true,,1,")));
    assert!(text.lines().any(|l| l.starts_with("0,false,,70,")));
    let o = run(&["mult", "--algebra", "A1_II"]);
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    let at = |norm: &str| rows.as_array().unwrap().iter().find(|r| r["norm"] == norm).unwrap()["multiplicity"].clone();
    assert_eq!(at("2"), "1");
    assert_eq!(at("0"), "10");
}

#[test]
fn humbert_counts() {
    let o = run(&["humbert", "--p", "2", "3", "--format", "csv"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "p,alpha,beta\n2,9,1\n3,16,1\n");
}

#[test]
fn warm_cache_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let cold = run(&["expand", "delta35.product", "--order", "12", "--cache", cache]);
    assert_eq!(code(&cold), 0);
    let warm = run(&["expand", "delta35.product", "--order", "12", "--cache", cache]);
    assert_eq!(cold.stdout, warm.stdout);
    // a smaller request is served from the larger entry
    let direct = run(&["expand", "delta35.product", "--order", "8"]);
    let served = run(&["expand", "delta35.product", "--order", "8", "--cache", cache]);
    assert_eq!(direct.stdout, served.stdout);
    let files: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 1, "{files:?}");
}

#[test]
fn corrupt_cache_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["expand", "E4", "--order", "5", "--cache", cache])), 0);
    let entry = fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
    let text = fs::read_to_string(&entry).unwrap().replace("\"240\"", "\"241\"");
    fs::write(&entry, text).unwrap();
    assert_eq!(code(&run(&["expand", "E4", "--order", "5", "--cache", cache])), 3);
}

#[test]
fn csv_and_json_agree() {
    let j: Value = serde_json::from_slice(&run(&["expand", "Delta12", "--order", "4"]).stdout).unwrap();
    let csv = String::from_utf8(run(&["expand", "Delta12", "--order", "4", "--format", "csv"]).stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n4,l4,m4,re,im"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows, ["4,0,0,1,0", "8,0,0,-24,0", "12,0,0,252,0"]);
    assert_eq!(j["coeffs"].as_array().unwrap().len(), 3);
}
