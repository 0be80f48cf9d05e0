use std::path::Path;
use std::process::{Command, Output};

fn flito(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flito"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn coeffs_writes_cache_once() {
    let dir = tempfile::tempdir().unwrap();
    let first = flito(dir.path(), &["coeffs", "--k", "3", "--q", "6", "--table2"]);
    assert!(first.status.success());
    let text = stdout(&first);
    assert!(text.contains("status: written"));
    assert!(text.contains("-74/45045") && text.contains("122/765765"));
    let cache = std::fs::read_to_string(dir.path().join("coeffs_k3_q6.flc")).unwrap();
    assert!(cache.starts_with("FLC 1 k=3 q=6\n"));
    assert!(cache.ends_with("END 343\n"));

    let again = flito(dir.path(), &["coeffs", "--k", "3", "--q", "6"]);
    let again = stdout(&again);
    assert!(again.contains("status: unchanged"));
    let checksum = |s: &str| s.lines().find(|l| l.starts_with("checksum")).unwrap().to_string();
    assert_eq!(checksum(&text), checksum(&again));
}

#[test]
fn coeffs_order_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = flito(dir.path(), &["coeffs", "--k", "2", "--q", "1", "--out", "c.flc"]);
    assert!(o.status.success());
    let cache = std::fs::read_to_string(dir.path().join("c.flc")).unwrap();
    assert_eq!(cache, "FLC 1 k=2 q=1\n0 0 2/1\n0 1 -2/3\n1 0 2/3\n1 1 0/1\nEND 4\n");
}

#[test]
fn errors_are_categorised() {
    let dir = tempfile::tempdir().unwrap();
    let o = flito(dir.path(), &["coeffs", "--k", "4"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[argument]"));

    let o = flito(dir.path(), &["--set", "colour=blue", "minimal-q"]);
    assert_eq!(o.status.code(), Some(7));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[config]"));

    let o = flito(dir.path(), &["coeffs", "--out", "missing/dir/c.flc"]);
    assert_eq!(o.status.code(), Some(8));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[io]"));
}

#[test]
fn minimal_q_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = flito(dir.path(), &["minimal-q"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "step,q,q1,residual_q,residual_q1,threshold,boundary_q,boundary_q1");
    assert_eq!(rows.len(), 5);
    assert!(rows[4].starts_with("0.01956,327,6,"));

    let one = stdout(&flito(dir.path(), &["minimal-q", "--step", "1"]));
    assert!(one.contains("\n1.0,0,0,0.25,"));
}

#[test]
fn show_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let shown = stdout(&flito(dir.path(), &["--set", "m=4", "--seed", "99", "--show-config"]));
    assert!(shown.contains("m = 4\n") && shown.contains("seed = 99\n") && shown.contains("q1 = auto\n"));
    std::fs::write(dir.path().join("run.cfg"), &shown).unwrap();
    let again = stdout(&flito(dir.path(), &["--config", "run.cfg", "--show-config"]));
    assert_eq!(shown, again);
}

#[test]
fn solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "5", "solve", "--step", "0.05", "--model", "mixing", "--set", "m=3"];
    let a = flito(dir.path(), &args);
    let b = flito(dir.path(), &args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# q: 50\n") && text.contains("# q1: 3\n") && text.contains("# tensor_checksum: "));
    assert_eq!(body(&text).lines().count(), 12);

    let c = stdout(&flito(dir.path(), &["--seed", "6", "solve", "--step", "0.05", "--model", "mixing", "--set", "m=3"]));
    assert_ne!(body(&text), body(&c));
}

#[test]
fn noise_free_solve_matches_semigroup() {
    let dir = tempfile::tempdir().unwrap();
    let o = flito(
        dir.path(),
        &["solve", "--model", "noise-free", "--scheme", "milstein", "--set", "kappa=0", "--set", "snapshot_every=0"],
    );
    let text = stdout(&o);
    let last = body(&text).lines().last().unwrap().to_string();
    let vals: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    let t = vals[1];
    for (k, v) in vals[2..].iter().enumerate() {
        let kk = (k + 1) as f64;
        let exact = (-0.02 * std::f64::consts::PI.powi(2) * kk * kk * t).exp() * 0.5 / kk;
        assert!((v - exact).abs() < 1e-12);
    }
}

#[test]
fn simulate_integrals_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = flito(dir.path(), &["simulate-integrals", "--paths", "2000", "--out", "r.csv"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(text.contains("# q: 2\n") && text.contains("# q1: 0\n"));
    assert!(text.contains("\nidentity_violations,0,"));
}

#[test]
fn convergence_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "convergence",
        "--paths",
        "100",
        "--step",
        "0.125,0.0625",
        "--set",
        "step_ref=0.015625",
        "--set",
        "horizon=0.25",
        "--set",
        "m=2",
        "--out",
        "conv.csv",
    ];
    let o = flito(dir.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("conv.csv")).unwrap();
    assert!(text.contains("# m: 2\n# q: 1\n# q1: 1\n"));
    assert!(text.contains("# slope_milstein: ") && text.contains("# slope_wagner_platen: "));
    assert_eq!(body(&text).lines().count(), 5);
    let svg = std::fs::read_to_string(dir.path().join("conv.svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    let again = flito(dir.path(), &args);
    assert!(again.status.success());
    let text2 = std::fs::read_to_string(dir.path().join("conv.csv")).unwrap();
    assert_eq!(body(&text), body(&text2));
}
