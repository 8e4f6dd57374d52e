//! End-to-end runs of the `stablekm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stablekm::bench::{self, read_assignment, read_centers, read_report};
use stablekm::datasets::{self, DatasetSpec};
use stablekm::{kmeans, Clustering, Instance, Matrix};

fn stablekm(args: &[&str], data_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablekm"))
        .args(args)
        .env(datasets::DATA_DIR_ENV, data_dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

/// Three labeled blobs with some jitter, written as a headerless CSV.
fn blobs_csv(dir: &Path) -> PathBuf {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, (cx, cy)) in [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)].into_iter().enumerate() {
        for i in 0..12 {
            let a = i as f64 * 0.7;
            rows.push(vec![cx + 0.4 * a.cos() + 0.01 * i as f64, cy + 0.3 * a.sin()]);
            labels.push(c);
        }
    }
    let inst = Instance::new(Matrix::from_rows(&rows).unwrap(), Some(labels), "blobs").unwrap();
    let path = dir.join("blobs.csv");
    datasets::write_csv(&path, &inst).unwrap();
    path
}

fn load(path: &Path) -> Instance {
    datasets::load_csv(path, &DatasetSpec::adhoc(path)).unwrap()
}

#[test]
fn cluster_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = blobs_csv(dir.path());
    let out = dir.path().join("out");
    for algo in ["stable", "robust", "kmeanspp_lloyd", "lloyd", "stable_lloyd"] {
        let o = stablekm(
            &[
                "cluster",
                "--dataset",
                csv.to_str().unwrap(),
                "--algo",
                algo,
                "--trials",
                "4",
                "--out-dir",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{algo}: {}", String::from_utf8_lossy(&o.stderr));
        let report = read_report(&out.join("report.json")).unwrap();
        assert_eq!(report.schema_version, bench::SCHEMA_VERSION);
        let row = &report.rows[0];
        assert_eq!((row.n, row.d, row.k), (36, 2, 3));
        assert_eq!(row.recovery, Some(1.0), "{algo}");

        // the written assignment recosts to the reported objective
        let inst = load(&csv);
        let a = read_assignment(&out.join(row.assignment_file.as_ref().unwrap())).unwrap();
        let c = Clustering::from_assignment(&inst, a, row.k).unwrap();
        assert!((c.cost - row.cost).abs() <= 1e-9 * row.cost.max(1.0), "{algo}: {} vs {}", c.cost, row.cost);
        let centers = read_centers(&out.join(row.centers_file.as_ref().unwrap())).unwrap();
        assert_eq!(centers.rows(), 3);
        assert!((kmeans::cost(&inst, &centers).unwrap() - row.cost).abs() <= 1e-9 * row.cost.max(1.0));
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = blobs_csv(dir.path());
    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let o = stablekm(
            &[
                "cluster",
                "--dataset",
                csv.to_str().unwrap(),
                "--algo",
                "kmeanspp_lloyd",
                "--trials",
                "5",
                "--seed",
                "7",
                "--out-dir",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(o.status.success());
        let report = std::fs::read(out.join("report.json")).unwrap();
        let assignment = std::fs::read(out.join("blobs-kmeanspp_lloyd-assignment.csv")).unwrap();
        reports.push((strip_out_dir(&report, &out), assignment));
    }
    assert_eq!(reports[0], reports[1]);
}

/// The recorded command line contains the output directory, which differs per run.
fn strip_out_dir(report: &[u8], out: &Path) -> String {
    String::from_utf8(report.to_vec()).unwrap().replace(out.to_str().unwrap(), "<out>")
}

#[test]
fn stability_reports_every_requested_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = blobs_csv(dir.path());
    let out = dir.path().join("out");
    let o = stablekm(
        &[
            "stability",
            "--dataset",
            csv.to_str().unwrap(),
            "--eta",
            "0.05,0.1,0.2",
            "--eps",
            "0.1",
            "--out-dir",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_report(&out.join("report.json")).unwrap();
    let row = &report.stability[0];
    assert_eq!(row.profiles.len(), 3);
    assert!(row.eps.min > 0.0 && row.eps.min <= row.eps.max);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let code = |args: &[&str]| stablekm(args, dir.path()).status.code();

    assert_eq!(code(&["synth", "--suite", "separated", "--seeds", "3", "--out-dir", out]), Some(0));
    assert_eq!(code(&["synth", "--suite", "bogus", "--out-dir", out]), Some(bench::EXIT_VALIDATION));
    assert_eq!(code(&["cluster", "--dataset", "banknote", "--out-dir", out]), Some(bench::EXIT_MISSING_DATASET));
    assert_eq!(code(&["bench", "--out-dir", out]), Some(bench::EXIT_MISSING_DATASET));

    let csv = blobs_csv(dir.path());
    let csv = csv.to_str().unwrap();
    assert_eq!(code(&["cluster", "--dataset", csv, "--k", "99", "--out-dir", out]), Some(bench::EXIT_VALIDATION));
    assert_eq!(
        code(&["cluster", "--dataset", csv, "--algo", "robust", "--r", "1.0", "--out-dir", out]),
        Some(bench::EXIT_VALIDATION)
    );
    // clap usage errors
    assert_eq!(code(&["cluster", "--dataset", csv, "--algo", "nope"]), Some(2));
}

#[test]
fn config_output_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = stablekm(&["--lloyd-max-iter", "17", "--memory-mode", "external_sort:64", "config"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let cfg = stablekm::config::Config::from_toml_str(&text).unwrap();
    assert_eq!(cfg.lloyd_max_iter, 17);
    assert_eq!(cfg.sweep_memory_mode, stablekm::stable::MemoryMode::ExternalSort { chunk_edges: 64 });

    let file = dir.path().join("c.toml");
    std::fs::write(&file, "lloyd_max_iter = 5\nperceptron_budget = 2\n").unwrap();
    let o = stablekm(&["--config", file.to_str().unwrap(), "--budget", "4", "config"], dir.path());
    let cfg = stablekm::config::Config::from_toml_str(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!((cfg.lloyd_max_iter, cfg.perceptron_budget), (5, 4));

    std::fs::write(&file, "no_such_key = 1\n").unwrap();
    let o = stablekm(&["--config", file.to_str().unwrap(), "config"], dir.path());
    assert_eq!(o.status.code(), Some(bench::EXIT_VALIDATION));
}

#[test]
fn datasets_lists_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let o = stablekm(&["datasets"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["iris", "wine", "banknote", "letter"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.contains("missing"));
}
