use std::path::Path;
use std::process::{Command, Output};

fn freebound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freebound")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_config_file_exits_2() {
    let o = freebound(&["solve", "--config", "/nonexistent/experiment.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_2_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = freebound(&["solve", "--out", dir.path().to_str().unwrap(), "--grid.nz", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.nz"), "{}", stderr(&o));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[market]\nr = \"high\"\n").unwrap();
    let o = freebound(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("market.r"), "{}", stderr(&o));
}

#[test]
fn numerical_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // t0 below 10 dt is rejected by the Volterra solver
    let o = freebound(&["volterra", "--out", dir.path().to_str().unwrap(), "--grid.nx", "100", "--grid.nt", "100", "--diagnostics.volterra_t0", "0.01"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn overrides_round_trip_into_the_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = freebound(&["solve", "--out", dir.path().to_str().unwrap(), "--grid.nx", "200", "--grid.nt", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&dir.path().join("solve.json"));
    assert_eq!(report["config"]["grid"]["nx"], 200);
    assert_eq!(report["config"]["grid"]["nt"], 200);
    assert!(report["tool"].as_str().unwrap().starts_with("freebound "));
    for name in ["surface.csv", "boundary.csv", "boundary_smoothfit.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# tool: freebound "), "{name}");
        let cfg: serde_json::Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# config: ").unwrap()).unwrap();
        assert_eq!(cfg["grid"]["nx"], 200, "{name}");
    }
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("kou.toml");
    std::fs::write(&cfg, "seed = 7\n[jump]\nkind = \"kou\"\np = 0.4\neta1 = 10.0\neta2 = 5.0\n[grid]\nnx = 120\nnt = 60\n").unwrap();
    let out = dir.path().join("out");
    let o = freebound(&["diagnose", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--market.lambda", "0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&out.join("diagnostics.json"));
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(report["config"]["jump"]["kind"], "kou");
    assert_eq!(report["config"]["market"]["lambda"], 0.2);
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn every_subcommand_writes_reproducible_artifacts() {
    // same relative output directory, so the resolved configs are identical
    let run = |cwd: &Path| {
        for cmd in ["solve", "iterate", "diagnose", "volterra", "mc"] {
            let o = Command::new(env!("CARGO_BIN_EXE_freebound"))
                .current_dir(cwd)
                .args([cmd, "--out", "out", "--grid.nx", "120", "--grid.nt", "120", "--mc.paths", "2000", "--seed", "5"])
                .output()
                .unwrap();
            assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        }
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    let (a, b) = (a.path().join("out"), b.path().join("out"));
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 11, "{names:?}");
    for name in names {
        let (x, y) = (std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
        assert!(x == y, "{name:?} differs between identical runs");
    }
}

#[test]
fn help_documents_the_defaults() {
    let o = freebound(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for key in ["[market]", "[grid]", "[solver]", "[mc]", "seed"] {
        assert!(text.contains(key), "missing {key}");
    }
}
