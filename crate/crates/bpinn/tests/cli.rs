use std::path::Path;
use std::process::{Command, Output};

fn bpinn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpinn")).args(args).output().unwrap()
}

fn quick(command: &str, input: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        command,
        "--input",
        input.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--epochs",
        "50",
        "--hmc-samples",
        "40",
        "--hmc-burnin",
        "10",
    ];
    args.extend_from_slice(extra);
    bpinn(&args)
}

#[test]
fn simulate_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let sim = bpinn(&["simulate", "--patients", "3", "--output", out.to_str().unwrap()]);
    assert!(sim.status.success());
    let cohort = std::fs::read_to_string(out.join("cohort.csv")).unwrap();
    assert_eq!(cohort.lines().count(), 1 + 3 * 3);

    let eval = quick("evaluate", &out.join("cohort.csv"), out, &["--methods", "proposed,pure_gp"]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let reports = std::fs::read_to_string(out.join("reports.csv")).unwrap();
    assert_eq!(reports.lines().count(), 1 + 3 * 2);
    assert!(out.join("results.json").exists());
}

#[test]
fn compare_restricted_to_two_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert!(bpinn(&["simulate", "--patients", "4", "--output", out.to_str().unwrap()]).status.success());
    let cmp = quick("compare", &out.join("cohort.csv"), out, &["--methods", "proposed,pure_gompertz"]);
    assert!(cmp.status.success(), "{}", String::from_utf8_lossy(&cmp.stderr));
    let table = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let paired = std::fs::read_to_string(out.join("paired_stats.csv")).unwrap();
    assert!(paired.lines().skip(1).all(|l| l.starts_with("pure_gompertz,")));
}

#[test]
fn loads_bundled_style_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    std::fs::write(
        &input,
        "# two patients\npatient_id,time_days,volume_mm3\nA,0,120\nA,300,180\nA,700,260\n\nB,0,80\nB,365,95\nB,730,130\n",
    )
    .unwrap();
    let out = quick("predict", &input, dir.path(), &["--methods", "pure_gompertz"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = std::fs::read_to_string(dir.path().join("trajectories/A_pure_gompertz.csv")).unwrap();
    assert!(traj.lines().count() > 2);
}

#[test]
fn errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = quick("evaluate", &missing, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let line = String::from_utf8(out.stderr).unwrap();
    let value: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(value["error"], "io");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "patient_id,time_days,volume_mm3\nA,0,-3\n").unwrap();
    let out = quick("evaluate", &bad, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let value: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(value["line"], 2);
}

#[test]
fn results_do_not_depend_on_row_order() {
    let dir = tempfile::tempdir().unwrap();
    let rows = ["A,0,120", "A,300,180", "A,700,260", "B,0,80", "B,365,95", "B,730,130"];
    let header = "patient_id,time_days,volume_mm3\n";
    let forward = dir.path().join("forward.csv");
    let reversed = dir.path().join("reversed.csv");
    std::fs::write(&forward, format!("{header}{}\n", rows.join("\n"))).unwrap();
    std::fs::write(&reversed, format!("{header}{}\n{}\n", rows[3..].join("\n"), rows[..3].join("\n"))).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (input, out) in [(&forward, &a), (&reversed, &b)] {
        assert!(quick("evaluate", input, out, &["--methods", "proposed,bayesian_gp"]).status.success());
    }
    let sorted = |p: &Path| {
        let text = std::fs::read_to_string(p.join("reports.csv")).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines.sort();
        lines
    };
    assert_eq!(sorted(&a), sorted(&b));
}
