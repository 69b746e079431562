use std::process::{Command, Output};

use nearfield_crb::config::ExperimentConfig;
use nearfield_crb::extended;
use nearfield_crb::output::read_csv;
use nearfield_crb::sweep::run_point;

fn nfcrb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfcrb")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const FIG3_INLINE: [&str; 17] = [
    "crb", "--K", "3", "--M", "125", "--spacings", "90,0,90", "--freq-ghz", "60", "--snr-db", "0", "--r",
    "30", "--theta-deg", "60", "--models", "all",
];

#[test]
fn crb_table_matches_library() {
    let o = nfcrb(&FIG3_INLINE);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);

    let mut cfg = ExperimentConfig::new(3, 125, vec![90, 0, 90]);
    cfg.r = Some(30.0);
    cfg.theta_deg = 60.0;
    for rec in run_point(&cfg).unwrap() {
        let row = rows.iter().find(|l| l.split_whitespace().next() == Some(rec.model.name())).unwrap();
        let cols: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(cols[1], extended::format(rec.crb_r));
        assert_eq!(cols[2], extended::format(rec.crb_theta));
        assert_eq!(cols[3], rec.flags.to_string());
    }
}

#[test]
fn regions_on_fig3() {
    let o = nfcrb(&["regions", "--preset", "fig3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("subarray_farfield_bound_m 38.4400"), "{text}");
    assert!(text.contains("array_rayleigh_m          761.7600"), "{text}");
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(nfcrb(&["crb", "--nope"]).status.code(), Some(2));
    assert_eq!(nfcrb(&["crb", "--K", "3"]).status.code(), Some(2));
    assert_eq!(nfcrb(&["crb", "--K", "4", "--M", "3"]).status.code(), Some(2));
    assert_eq!(nfcrb(&["crb", "--preset", "fig9"]).status.code(), Some(2));
    let o = nfcrb(&["crb", "--K", "3", "--M", "5", "--spacings", "1,0,1", "--r", "5", "--models", "XYZ"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "K = 3\nM = 5\nspacings = [1, 0, 1]\nbogus = 1\n").unwrap();
    let o = nfcrb(&["crb", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn strict_mode_flags_degenerate_information() {
    let args = ["crb", "--K", "1", "--M", "1", "--spacings", "0", "--r", "3"];
    assert_eq!(nfcrb(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(nfcrb(&strict).status.code(), Some(3));
    let mut fine = FIG3_INLINE.to_vec();
    fine.push("--strict");
    assert_eq!(nfcrb(&fine).status.code(), Some(0));
}

#[test]
fn sweep_range_writes_csv_json_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig3.csv");
    let json = dir.path().join("fig3.json");
    let plot = dir.path().join("fig3.py");
    let o = Command::new(env!("CARGO_BIN_EXE_nfcrb"))
        .args(["sweep-range", "--preset", "fig3", "--r-points", "8", "--out"])
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .arg("--plot")
        .arg(&plot)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = read_csv(&csv).unwrap();
    assert_eq!(recs.len(), 32);
    assert!(recs.iter().filter(|r| r.model.name() == "PWM").all(|r| r.crb_r.is_infinite()));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("sweep_var,sweep_value,model,crb_r_m2,crb_theta_rad2,flags\n"));
    assert!(text.contains(",PWM,inf,"));
    let js: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(js.as_array().unwrap().len(), 32);
    assert!(std::fs::read_to_string(&plot).unwrap().contains("\"fig3.csv\""));
}

#[test]
fn sweep_to_stdout_and_layout_sweep() {
    let o = nfcrb(&["sweep-layout", "--preset", "fig4-c2", "--models", "HSPM_DIST,SWM"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 95 * 2);
    assert!(text.lines().nth(1).unwrap().starts_with("gamma,1.0000000000000000e0,"));
    let bad = nfcrb(&["sweep-layout", "--preset", "fig4-c2", "--gamma-max", "150"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_reports_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("v.json");
    let o = Command::new(env!("CARGO_BIN_EXE_nfcrb"))
        .args(["verify", "--cases", "25", "--seed", "5", "--sequential", "--json"])
        .arg(&json)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.starts_with("verify: 25 cases, 100 evaluations"), "{last}");
    assert!(last.ends_with("PASS"));
    let js: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(js["reports"].as_array().unwrap().len(), 100);
    assert_eq!(js["summary"]["analytic_failures"], 0);
}
