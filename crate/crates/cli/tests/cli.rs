use std::process::Command;

fn igamg(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_igamg")).args(args).output().expect("binary runs")
}

fn iteration_column(csv: &str) -> Vec<String> {
    csv.lines().skip(1).map(|l| l.split(',').nth(7).unwrap().to_string()).collect()
}

#[test]
fn csv_sweep_has_header_and_one_row_per_cell() {
    let out = igamg(&["--p", "2,3", "--levels", "3..4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scenario,p,level,cycle,smoother,nu,tau,iterations,rate,seconds"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn markdown_table_rows_are_levels() {
    let out = igamg(&["--p", "2..3", "--levels", "3..4", "--format", "markdown", "--mode", "pcg"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[2].starts_with("| 3 |"));
    assert!(rows[3].starts_with("| 4 |"));
}

#[test]
fn exported_square_reproduces_iteration_counts() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("square.geo");
    let f = file.to_str().unwrap();
    assert!(igamg(&["--export-geometry", f]).status.success());
    let builtin = igamg(&["--p", "2,3", "--levels", "4"]);
    let loaded = igamg(&["--geometry", f, "--p", "2,3", "--levels", "4"]);
    assert!(loaded.status.success(), "{}", String::from_utf8_lossy(&loaded.stderr));
    assert_eq!(
        iteration_column(&String::from_utf8(builtin.stdout).unwrap()),
        iteration_column(&String::from_utf8(loaded.stdout).unwrap())
    );
}

#[test]
fn degenerate_geometry_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.geo");
    std::fs::write(
        &file,
        "patches 1\npatch\ndegree 1 1\nknots_u 0 0 1 1\nknots_v 0 0 1 1\ncontrol 2 2\n0 0 1 0\n0 0 1 0\nend\n",
    )
    .unwrap();
    let out = igamg(&["--geometry", file.to_str().unwrap(), "--p", "2", "--levels", "3"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 9"), "{err}");
}

#[test]
fn divergence_sets_nonzero_exit() {
    let out = igamg(&["--p", "2", "--levels", "4", "--tau", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains(",div,"));
}

#[test]
fn unknown_scenario_fails() {
    assert!(!igamg(&["--scenario", "moon"]).status.success());
}
