use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intertwine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

#[test]
fn hydrogen_verify_passes_with_per_level_rows() {
    let o = run(&["verify", "--model", "hydrogen", "--nmax", "8"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&o);
    let results = doc["results"].as_array().unwrap();
    for n in 0..=8u64 {
        assert!(results
            .iter()
            .any(|r| r["relation_id"] == "hydrogen.spectral-intertwining" && r["n"] == n));
    }
    assert!(results
        .iter()
        .all(|r| r["relation_id"].as_str().is_some_and(|s| !s.is_empty())));
    assert_eq!(doc["summary"]["failed"], 0);
    assert!(doc["timing"]["wall_time_s"].is_number());
}

#[test]
fn truncated_spectrum_is_noted() {
    let o = run(&[
        "verify", "--model", "rm-hyp", "--g", "9", "--l", "0", "--nmax", "5",
    ]);
    assert_eq!(code(&o), 0);
    let notes = json(&o)["summary"]["notes"].to_string();
    assert!(notes.contains("spectrum truncated at n=1"), "{notes}");
}

#[test]
fn unreachable_tolerance_fails() {
    let o = run(&[
        "verify",
        "--model",
        "hydrogen",
        "--nmax",
        "2",
        "--tol-relation",
        "1e-30",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn same_seed_gives_identical_output() {
    let args = ["verify", "--model", "cs", "--nmax", "3", "--seed", "7"];
    let (a, b) = (json(&run(&args)), json(&run(&args)));
    assert_eq!(
        serde_json::to_string(&a["results"]).unwrap(),
        serde_json::to_string(&b["results"]).unwrap()
    );
    assert_eq!(a["run_config"], b["run_config"]);
    assert_eq!(a["summary"], b["summary"]);
}

#[test]
fn csv_report_has_header_and_rows() {
    let o = run(&["verify", "--model", "ho", "--nmax", "1", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "relation_id");
    assert!(rdr.records().count() > 5);
}

#[test]
fn spectrum_table() {
    let o = run(&["spectrum", "--model", "hydrogen", "--nmax", "5"]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["n", "E_direct", "E_chain", "overlap"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let (d, c): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((d - c).abs() <= 1e-12 * d.abs());
    }
    let single = run(&["spectrum", "--model", "hydrogen", "--nmax", "0"]);
    assert_eq!(
        csv::Reader::from_reader(single.stdout.as_slice())
            .records()
            .count(),
        1
    );
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["spectrum", "--model", "bogus"],
        vec!["oracle", "--k", "0"],
        vec!["oracle", "--model", "ho", "--grid", "32", "--grid", "64"],
        vec!["verify", "--g", "2"],
        vec!["verify", "--model", "hydrogen", "--omega", "1"],
        vec!["verify", "--model", "hydrogen", "--l", "0.5"],
        vec!["verify", "--model", "ho", "--tol-relation", "-1"],
    ] {
        assert_eq!(code(&run(&args)), 2, "{args:?}");
    }
    let o = Command::new(env!("CARGO_BIN_EXE_intertwine"))
        .args(["verify", "--model", "ho", "--nmax", "0"])
        .env("INTERTWINE_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn oracle_convergence_column_near_two() {
    let o = run(&[
        "oracle", "--model", "ho", "--grid", "64", "--grid", "128", "--grid", "256",
    ]);
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let col = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "convergence_order")
        .unwrap();
    let mut seen = 0;
    for r in rdr.records().map(Result::unwrap) {
        let p: f64 = r[col].parse().unwrap();
        assert!((p - 2.0).abs() < 0.3, "order {p}");
        seen += 1;
    }
    assert!(seen > 0);
}

#[test]
fn default_oracle_matrix_passes() {
    let o = Command::new(env!("CARGO_BIN_EXE_intertwine"))
        .args(["oracle", "--format", "json"])
        .env("INTERTWINE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&o)["results"].as_array().unwrap().len() >= 15 * 2);
}
