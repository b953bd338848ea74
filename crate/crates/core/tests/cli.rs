use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinmetro"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn every_subcommand_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases: [(&[&str], &[&str]); 7] = [
        (&["state", "tetrahedron"], &["state.json", "constellation.json", "report.json"]),
        (&["qcrb"], &["strategies.csv"]),
        (&["simulate"], &["density.json", "ledger.csv", "summary.json"]),
        (&["tomo", "--resamples", "4"], &["counts.csv", "counts.json", "reconstruction.json"]),
        (&["figures", "fig3"], &["fig3_map.csv", "fig3_map.json", "fig3_vertex3.csv"]),
        (&["figures", "fig4"], &["fig4_scan.csv"]),
        (&["figures", "fig5"], &["fig5_strategies.csv"]),
    ];
    for (args, files) in cases {
        let o = run(d, args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).expect("JSON summary on stdout");
        for f in files {
            assert!(d.join(f).exists(), "{args:?} did not write {f}");
        }
    }
    let o = run(d, &["qcrb", "--n-max", "4", "--state", d.join("density.json").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(d.join("points.json").exists());
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["state", "pentagon"]).status.code(), Some(2));
    assert_eq!(run(d, &["--nmax", "4", "simulate"]).status.code(), Some(2));
    assert_eq!(run(d, &["--tol", "-1", "tomo"]).status.code(), Some(2));
    fs::write(d.join("bad.csv"), "basis_index,n_T,count\n0,7,3\n").unwrap();
    fs::write(d.join("bad.json"), "{\"bases\": [[0,0,1]], \"exposure\": [1.0], \"total_events\": 3}").unwrap();
    let o = run(d, &["tomo", "--counts", d.join("bad.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn non_convergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("run.toml");
    fs::write(&cfg, "[tomo]\nmax_iterations = 3\n").unwrap();
    let o = run(d, &["--config", cfg.to_str().unwrap(), "tomo"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        assert!(run(d, &["--seed", "9", "tomo", "--resamples", "6"]).status.success());
    }
    for f in ["counts.csv", "counts.json", "reconstruction.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
