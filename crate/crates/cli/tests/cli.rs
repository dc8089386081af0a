use std::path::Path;
use std::process::{Command, Output};

use polex_cli::config::{parse_override, OUTPUT_ROOT_ENV};
use polex_cli::{run, sweep, CliError, Experiment, ExperimentConfig};
use toml::{Table, Value};

fn polex(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polex")).args(args).env(OUTPUT_ROOT_ENV, root).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn config(experiment: Experiment, dir: &Path, sets: &[&str]) -> ExperimentConfig {
    let mut user: Table = sets.iter().map(|s| parse_override(s).unwrap()).collect();
    user.insert("output_dir".into(), Value::String(dir.display().to_string()));
    ExperimentConfig::new(experiment, &user).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn rate_calc_prints_the_unit_exchange_rate() {
    let root = tempfile::tempdir().unwrap();
    let out = polex(root.path(), &["run", "--experiment", "rate_calc"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("L^-1 = 1.8e-7 cm^-1"), "{}", stdout(&out));
    let dir = root.path().join("rate_calc");
    assert!(read(dir.join("summary.csv")).contains("inverse_exchange_length,1.8e-7,cm^-1"));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["experiment"], "rate_calc");
    assert_eq!(manifest["scalars"]["inverse_exchange_length"], 1.8e-7);
}

#[test]
fn oracle_check_at_two_photons_passes() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&config(Experiment::OracleCheck, dir.path(), &["n_list=[2]"])).unwrap();
    assert!(m.passed());
    assert_eq!(m.checks.len(), 6);
    assert!(m.scalars["max_deviation"] < 1e-8);
}

#[test]
fn break_time_smoke_run_orders_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&config(Experiment::Fig3Breaktime, dir.path(), &["n_list=[8, 16]", "t_end=1.5", "dt=0.01"])).unwrap();
    assert!(m.passed(), "{:?}", m.checks);
    assert!(m.scalars["first_crossing_N16"] > m.scalars["first_crossing_N8"]);
    assert!(m.checks.iter().any(|c| c.name == "crossing_increases_with_n" && c.passed));
}

#[test]
fn manifest_lists_every_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&config(Experiment::Fig8Pulse, dir.path(), &["nz=101", "t_max=1.2"])).unwrap();
    assert!(m.passed(), "{:?}", m.checks);
    let mut listed: Vec<String> = m.files.clone();
    listed.sort();
    let mut on_disk = Vec::new();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type().unwrap().is_dir() {
            for sub in std::fs::read_dir(entry.path()).unwrap() {
                on_disk.push(format!("{name}/{}", sub.unwrap().file_name().to_string_lossy()));
            }
        } else if name != "manifest.json" {
            on_disk.push(name);
        }
    }
    on_disk.sort();
    assert_eq!(listed, on_disk);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("manifest.json"))).unwrap();
    for c in manifest["checks"].as_array().unwrap() {
        assert!(c["passed"].is_boolean());
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sets = ["n_list=[6, 10]", "t_end=1.0", "dt=0.05"];
    for e in [Experiment::Fig5Entropy, Experiment::Fig2MftAngles] {
        let sets: &[&str] = if e == Experiment::Fig2MftAngles { &["t_end=5.0"] } else { &sets };
        let ma = run(&config(e, a.path(), sets)).unwrap();
        let mb = run(&config(e, b.path(), sets)).unwrap();
        assert_eq!(ma.files, mb.files);
        for f in &ma.files {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn angle_sweep_aggregates_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(Experiment::Fig2MftAngles, dir.path(), &["t_end=8.0"]);
    let values: Vec<Value> = [1e-1, 1e-3, 1e-5, 1e-7].into_iter().map(Value::Float).collect();
    let s = sweep(&c, "one_minus_cos_theta", &values).unwrap();
    assert_eq!(s.runs.len(), 4);
    assert_eq!(s.failed(), 0);
    let fit = s.fit.expect("angle sweeps are fitted");
    assert!(fit.slope > 0.0);
    assert!(fit.residual.unwrap() < 0.05 * fit.mean_spacing.unwrap());
    let agg = read(dir.path().join("aggregate.csv"));
    assert_eq!(agg.lines().count(), 5);
    assert!(agg.lines().next().unwrap().starts_with("index,one_minus_cos_theta,status,checks_passed,error,"));
    assert!(dir.path().join("one_minus_cos_theta_003/mft_00.csv").exists());
}

#[test]
fn sweep_records_failed_sub_runs_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(Experiment::Fig3Breaktime, dir.path(), &["t_end=1.5", "dt=0.01"]);
    let s = sweep(&c, "N", &[Value::Integer(0), Value::Integer(8), Value::Integer(16)]).unwrap();
    assert_eq!(s.failed(), 1);
    assert!(s.runs[0].error.is_some());
    assert!(s.fit.is_some());
    let agg = read(dir.path().join("aggregate.csv"));
    assert!(agg.lines().nth(1).unwrap().contains(",failed,"));
}

#[test]
fn empty_or_invalid_sweeps_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(Experiment::Fig3Breaktime, dir.path(), &[]);
    assert!(matches!(sweep(&c, "N", &[]), Err(CliError::Config(_))));
    assert!(matches!(sweep(&c, "cos_theta", &[Value::Float(0.5)]), Err(CliError::Config(_))));
    let out = polex(dir.path(), &["sweep", "--experiment", "fig3_breaktime", "--axis", "N", "--values", ""]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let root = tempfile::tempdir().unwrap();
    assert_eq!(polex(root.path(), &["run", "--experiment", "fig9"]).status.code(), Some(1));
    assert_eq!(polex(root.path(), &["run", "--experiment", "rate_calc", "--set", "bogus=1"]).status.code(), Some(1));
    assert_eq!(polex(root.path(), &["run", "--experiment", "rate_calc", "--set", "rho=-1"]).status.code(), Some(2));
    let cfg = root.path().join("run.toml");
    std::fs::write(&cfg, "experiment = \"oracle_check\"\n[parameters]\nn_list = [1]\nthetas = [0.3]\nt_end = 1.0\n")
        .unwrap();
    let out = polex(root.path(), &["run", cfg.to_str().unwrap(), "--set", "dt=0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read(root.path().join("oracle_check/manifest.json"));
    assert!(m.contains("\"dt\": 0.1"));
}
