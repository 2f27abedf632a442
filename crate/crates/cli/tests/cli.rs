use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isacperf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn figure_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["figures", "--out", out]).status.code(), Some(0));
    let header = |name: &str| {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        text.lines().next().unwrap().to_string()
    };
    assert_eq!(
        header("fig2a.csv"),
        "p_c_db,op_near_slot1,op_near_slot5,op_far_slot1,op_far_slot5,op_group_slot1,op_group_slot5,\
         op_floor,op_group_asym_slot1,op_group_asym_slot5"
    );
    assert_eq!(header("fig3.csv"), "p_s_db,rate_waterfill,rate_orthogonal,rate_high_snr");
    assert_eq!(header("fig4a.csv"), "series,label,comm_rate,sens_rate");
    assert_eq!(header("fig4b.csv"), "beta,label,comm_rate,sens_rate");
    assert!(header("fig2b.csv").starts_with("p_c_db,ecr_near_slot1,ecr_near_slot5,ecr_far_slot1"));
}

#[test]
fn figures_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["figures", "--trials", "2000", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["fig2a.csv", "fig2b.csv", "fig3.csv", "fig4a.csv", "fig4b.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let fig2a = fs::read_to_string(a.path().join("fig2a.csv")).unwrap();
    assert!(fig2a.lines().next().unwrap().contains("mc_"));
}

#[test]
fn sensing_json_has_expected_rate() {
    let o = run(&["sensing", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v.as_array().unwrap();
    let at10 = rows.iter().find(|r| r["p_s_db"] == 10.0).unwrap();
    assert!((at10["rate_waterfill"].as_f64().unwrap() - 7.541_075).abs() < 1e-5);
}

#[test]
fn region_lists_isac_corner() {
    let o = run(&["region"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let isac = text.lines().find(|l| l.contains(",isac,")).unwrap();
    let fields: Vec<&str> = isac.split(',').collect();
    let comm: f64 = fields[2].parse().unwrap();
    assert!((comm - 6.017_04).abs() < 1e-4, "{isac}");
}

#[test]
fn slot_filter_limits_columns() {
    let o = run(&["outage", "--slot", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let header = stdout(&o).lines().next().unwrap().to_string();
    assert!(header.contains("op_near_slot5") && !header.contains("slot1"), "{header}");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "N = 4\nbogus = 1\n");
    let o = run(&["sensing", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn inconsistent_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "N = 2\nK = 2\n");
    assert_eq!(run(&["outage", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn zero_trials_exits_2() {
    assert_eq!(run(&["validate", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let o = run(&["sensing", "--out", "/nonexistent-dir/x/y.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let o = run(&["validate", "--trials", "10000", "--seed", "1", "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "metric,group,slot,p_c_db,analytical,empirical,std_error,tolerance,verdict"
    );
    assert!(lines.all(|l| l.ends_with(",pass")));
}
