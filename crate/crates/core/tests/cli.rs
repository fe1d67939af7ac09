use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmtc-qra"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

const SINGLE: &str = "\
scheme = packet
n_slots = 16
loading_factor = 1.0
packets_per_device = 4
reps = 6
seed = 99
";

#[test]
fn oracle_prints_expected_slots() {
    let out = run(&["oracle", "--n", "2", "--k", "2", "--scheme", "packet"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4.0");

    let out = run(&["oracle", "--n", "2", "--k", "2", "--scheme", "independent"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "6.0");
}

#[test]
fn invalid_learning_rate_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "scheme = independent\nlearning_rate = 0\n").unwrap();
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("learning_rate"), "{err}");
}

#[test]
fn run_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("single.cfg");
    fs::write(&cfg, SINGLE).unwrap();
    let mut outputs = Vec::new();
    for (name, workers) in [("a.csv", "1"), ("b.csv", "8"), ("c.csv", "1")] {
        let out_path = dir.path().join(name);
        let out = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(data_lines(&out_path));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let body = outputs[0].join("\n");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.len(), mmtc_qra::report::CSV_COLUMNS.len());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "packet");
    assert_eq!(&rows[0][3], "16");
    assert_eq!(&rows[0][10], "6");
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("single.cfg");
    fs::write(&cfg, SINGLE).unwrap();
    let a = run(&["run", "--config", cfg.to_str().unwrap()]);
    let b = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "100"]);
    let strip = |o: &Output| -> Vec<String> {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(str::to_owned)
            .collect()
    };
    assert_ne!(strip(&a), strip(&b));
}

#[test]
fn sweep_config_gives_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "schemes = independent, collaborative-b2, packet\n\
         n_slots = 10\npackets_per_device = 3\nreps = 4\n\
         sweep_axis = loading_factor\nsweep_grid = 0.5, 1.0\n",
    )
    .unwrap();
    let out_path = dir.path().join("out.csv");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&out_path);
    assert_eq!(lines.len(), 1 + 6);
    assert!(lines.iter().any(|l| l.starts_with("collaborative-b2,loading_factor,0.5,5,")));
}

#[test]
fn stalled_episodes_set_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stall.cfg");
    fs::write(
        &cfg,
        "scheme = independent\nn_slots = 1\nn_devices = 2\npackets_per_device = 1\n\
         max_frames = 50\nreps = 2\n",
    )
    .unwrap();
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let row = stdout.lines().last().unwrap();
    assert!(row.ends_with(",2,2"), "{row}");
}

#[test]
fn unknown_preset_fails() {
    let out = run(&["sweep", "--preset", "fig99"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig99"));
}
