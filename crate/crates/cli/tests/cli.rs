use afde::fit::fit_power_law;
use afde::verify::ExperimentReport;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn afde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afde")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    v.sort();
    v
}

#[test]
fn similarity_table() {
    let o = afde(&["similarity", "--m", "0.8,0.4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("alpha = 1.666666666667"), "{s}");
    let rows: Vec<Vec<f64>> = s
        .lines()
        .skip(3)
        .map(|l| l.split_whitespace().map(|w| w.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][2] - 0.4).abs() < 1e-10 && (rows[1][2] - 0.6).abs() < 1e-10, "{s}");
}

#[test]
fn similarity_json() {
    let o = afde(&["similarity", "--m", "0.5", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // alpha = N / (N (m - 1) + 2) with N = 1
    assert!((v["alpha"].as_f64().unwrap() - 1.0 / 1.5).abs() < 1e-14);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let o = afde(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    assert_eq!(afde(&["--help"]).status.code(), Some(0));
    assert_eq!(afde(&["--version"]).status.code(), Some(0));
}

#[test]
fn invalid_exponents_exit_1() {
    let o = afde(&["similarity", "--m", "0.1,0.2,0.3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exponents"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[exponents]\nn = 1\nn = 1\nm = [0.5]\n").unwrap();
    let o = afde(&["--config", path.to_str().unwrap(), "similarity"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
}

#[test]
fn eval_barenblatt_at_origin() {
    let o = afde(&["eval", "barenblatt-1d", "--m", "0.5", "--point", "0", "--point", "-1.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "x1,value");
    let v: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(v, 1.0);
    assert_eq!(lines.len(), 3);
}

#[test]
fn eval_rejects_wrong_dimension() {
    let o = afde(&["eval", "gauge", "--m", "0.8,0.4", "--point", "1,2,3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_report_round_trips_and_hash_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[exponents]\nn = 2\nm = [0.8, 0.4]\n[grid]\nhalf = [4.0, 4.0]\nn = [16, 16]\n[solver]\nt_end = 0.05\nsnapshots = [0.01]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let args = ["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json", "--format", "csv", "run"];
    let o = afde(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = json_files(&out);
    assert_eq!(first.len(), 1);
    assert!(first[0].starts_with("run-"));
    assert!(out.join(first[0].replace(".json", "-snapshot1.csv")).exists());

    // same content, same hash
    assert!(afde(&args).status.success());
    assert_eq!(json_files(&out), first);

    let text = fs::read_to_string(out.join(&first[0])).unwrap();
    let rep: ExperimentReport = serde_json::from_str(&text).unwrap();
    let again: ExperimentReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(rep, again);
    assert_eq!(rep.labels["config_hash"], first[0].trim_start_matches("run-").trim_end_matches(".json"));
    let mass = rep.series.iter().find(|s| s.name == "mass").unwrap();
    assert!(mass.y.iter().all(|&m| (m - 1.0).abs() < 1e-12));
}

#[test]
fn report_renders_one_svg_with_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let t: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    let sup: Vec<f64> = t.iter().map(|t| t.powf(-5.0 / 3.0)).collect();
    let mut rep = ExperimentReport::new("smoothing_and_spread", &[0.8, 0.4]);
    rep.series("sup", &t, &sup);
    let fit = fit_power_law(&t, &sup, (1.0, 10.0)).unwrap();
    rep.fit("sup", fit.clone(), Some(-5.0 / 3.0));
    rep.exponent_verdict("smoothing.sup_slope", &fit, -5.0 / 3.0, 0.05);
    let path = dir.path().join("smoothing.json");
    fs::write(&path, serde_json::to_string(&rep).unwrap()).unwrap();

    let o = afde(&["report", path.to_str().unwrap(), "--format", "svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS smoothing.sup_slope"));
    let svgs: Vec<_> = fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).collect();
    assert_eq!(svgs.len(), 1);
    let body = fs::read_to_string(svgs[0].as_ref().unwrap().path()).unwrap();
    assert!(body.starts_with("<svg") && body.contains("slope -1.6667") && body.contains("+/- 5%"), "{body}");
}

#[test]
fn verify_ghp_with_delayed_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ghp.toml");
    fs::write(
        &cfg,
        "[exponents]\nn = 2\nm = [0.8, 0.4]\n[grid]\nn = [64, 64]\n[experiment]\ndata = \"delayed\"\nsamples = 6\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = afde(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "verify", "ghp"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let files = json_files(&out);
    let rep: ExperimentReport = serde_json::from_str(&fs::read_to_string(out.join(&files[0])).unwrap()).unwrap();
    for name in ["delayed.c1", "delayed.c2"] {
        let s = rep.series.iter().find(|s| s.name == name).unwrap_or_else(|| panic!("{name} missing"));
        assert_eq!(s.x.len(), 6);
    }
}
