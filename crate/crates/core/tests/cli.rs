use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multipole"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_prints_helium_ground_state() {
    let o = run(&["solve", "--z", "2", "--state", "1s2", "--level", "h0", "--format", "pretty"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let total = text.lines().find(|l| l.starts_with("total")).unwrap();
    assert!(total.contains("-2.9103"), "{total}");
}

#[test]
fn solve_json_round_trips() {
    let o = run(&["solve", "--z", "2", "--state", "2p2", "--level", "h4", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["state"], "2p2");
    assert_eq!(v["level"], "H4");
    let exc = v["excitation_ev"].as_f64().unwrap();
    assert!((exc - 59.2).abs() < 0.5);
}

#[test]
fn bessel_table_leading_term() {
    let o = run(&["bessel", "table", "--l", "1", "--terms", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "l,s,power,coefficient,exact\n1,0,1,0.5,1/2\n");
}

#[test]
fn tables_csv_is_long_format_and_deterministic() {
    let a = run(&["tables", "--id", "2", "--format", "csv"]);
    assert_eq!(a.status.code(), Some(0));
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "Z,state,level,computed,paper,deviation,grid_tag");
    assert_eq!(lines.len(), 37);
    let h0: Vec<f64> = lines[1..]
        .iter()
        .filter(|l| l.split(',').nth(2) == Some("H0"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    for (v, want) in h0.iter().zip([-0.2739, -2.9103, -8.7482, -18.000, -30.776, -47.148]) {
        assert!((v - want).abs() <= 5e-4, "{v} vs {want}");
    }
    let b = run(&["tables", "--id", "2", "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tables_pretty_has_one_row_per_charge() {
    let o = run(&["tables", "--id", "2", "--format", "pretty"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = text.lines().filter(|l| l.trim_start().chars().next().is_some_and(|c| c.is_ascii_digit()) && l.contains("1s2 ")).count();
    assert!(rows >= 6, "{text}");
    assert!(text.contains("Note:"));
}

#[test]
fn expand_compare_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let o = run(&[
        "expand", "compare", "--lmax", "10", "--smax", "5", "--grid-t", "0.2,0.5", "--grid-x", "-0.5,0.5",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,cos_theta,method,l_max,s_max,value,direct,rel_error\n"));
    // 4 points × 4 methods.
    assert_eq!(text.lines().count(), 1 + 16);
}

#[test]
fn expand_oracle_table() {
    let o = run(&["expand", "oracle", "--lmax", "2", "--grid-t", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("l,t,s_max,series,oracle,discrepancy\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_file_is_applied_and_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# beryllium\nz = 4\nlevel = h0\nchi = off\n").unwrap();
    let cfg = path.to_str().unwrap();
    let o = run(&["solve", "--config", cfg, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["total"].as_f64().unwrap() + 18.0).abs() < 1e-6);
    let o = run(&["solve", "--config", cfg, "--z", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["z"], 2);

    std::fs::write(&path, "basis.knots = 3\n").unwrap();
    let o = run(&["solve", "--config", cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["solve", "--z", "0"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--level", "h7"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let o = run(&["solve", "--state", "1s2s"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1s2s"));
    let o = run(&["solve", "--state", "2p2", "--level", "h3", "--r-first", "1e-4"]);
    assert_eq!(o.status.code(), Some(1));
}
