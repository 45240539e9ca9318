use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

fn scratch(tag: &str) -> PathBuf {
    static N: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "sdde-cli-{}-{tag}-{}",
        std::process::id(),
        N.fetch_add(1, Ordering::SeqCst)
    ));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn sdde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdde"))
        .args(args)
        .env_remove("SDDE_SEED")
        .env_remove("SDDE_MODEL")
        .env_remove("SDDE_CONFIG")
        .env_remove("SDDE_OUT")
        .env_remove("SDDE_FORMAT")
        .env_remove("SDDE_WORKERS")
        .output()
        .unwrap()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_assumptions_on_example41_defaults() {
    let out = scratch("verify");
    let o = sdde(&["verify-assumptions", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a2 = read_json(out.join("a2.json"));
    assert_eq!(a2["schema_version"], 1);
    assert_eq!(a2["pass"], true);
    assert_eq!(a2["seed"], 0);
    assert!(a2["result"]["a2"]["worst_margin"].as_f64().unwrap() > 0.0);
    assert_eq!(read_json(out.join("alpha.json"))["pass"], true);
    let m = read_json(out.join("manifest.json"));
    assert_eq!(m["exit_code"], 0);
    assert!(m["started_unix"].as_u64().is_some() && m["wall_time_s"].as_f64().is_some());
    assert!(a2.get("started_unix").is_none());
}

#[test]
fn nonpositive_tolerance_is_a_usage_error() {
    let out = scratch("tol");
    let o = sdde(&[
        "simulate",
        "--set",
        "tol=-1e-8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("`tol`"), "{}", stderr(&o));

    let cfg = out.join("run.toml");
    std::fs::write(&cfg, "tol = 1e-9\ntolerence = 1e-9\n").unwrap();
    let o = sdde(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("tolerence"), "{}", stderr(&o));

    assert_eq!(
        sdde(&["simulate", "--workers", "many"]).status.code(),
        Some(3)
    );
    assert_eq!(
        sdde(&[
            "--model",
            "lorenz",
            "simulate",
            "--out",
            out.to_str().unwrap()
        ])
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn complex_extend_gates_on_disk_condition() {
    let out = scratch("gate");
    // 1 - g = 0.4 lies below l = 0.5
    let model = out.join("toy.toml");
    std::fs::write(&model, "model = \"toy-scalar\"\ng0 = 0.6\n").unwrap();
    let o = sdde(&[
        "complex-extend",
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("no Picard iteration"), "{}", stderr(&o));
    assert_eq!(read_json(out.join("a2.json"))["pass"], false);
    assert!(!out.join("complex_extend.json").exists());
    let m = read_json(out.join("manifest.json"));
    assert_eq!(m["status"], "ERROR");
    assert_eq!(m["exit_code"], 1);
}

#[test]
fn alpha_failure_exits_with_assumption_code() {
    let out = scratch("alpha");
    let model = out.join("m.toml");
    std::fs::write(&model, "model = \"example41\"\nh0 = 0.51\n").unwrap();
    for cmd in ["verify-assumptions", "simulate", "example41"] {
        let o = sdde(&[
            cmd,
            "--model",
            model.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(1), "{cmd}: {}", stderr(&o));
    }
}

#[test]
fn toy_complex_extend_is_deterministic() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for (dir, workers) in [(&a, "1"), (&b, "3")] {
        let o = sdde(&[
            "complex-extend",
            "--model",
            "toy-scalar",
            "--workers",
            workers,
            "--seed",
            "4",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in [
        "complex_extend.json",
        "a2.json",
        "taylor.csv",
        "real_slice.csv",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let rep = read_json(a.join("complex_extend.json"));
    assert_eq!(rep["seed"], 4);
    assert_eq!(rep["context"]["config"]["seed"], 4);
    assert_eq!(rep["result"]["taylor"]["pass"], true);
    let csv = std::fs::read_to_string(a.join("real_slice.csv")).unwrap();
    assert!(csv.starts_with("# sdde schema 1; stage complex-extend; seed 4\nt,x1,tau\n"));
}

#[test]
fn simulate_and_lift_outputs() {
    let out = scratch("sim");
    let o = sdde(&[
        "simulate",
        "--model",
        "toy-scalar",
        "--set",
        "samples=11",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!out.join("simulate.json").exists());
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 11);

    let out = scratch("lift");
    let o = sdde(&[
        "lift",
        "--model",
        "toy-scalar",
        "--set",
        "depth=8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lift = read_json(out.join("lift.json"));
    assert_eq!(lift["result"]["depth"], 8);
    assert!(lift["result"]["consistency"]["mismatch"].as_f64().unwrap() < 1e-6);
    assert_eq!(
        std::fs::read_to_string(out.join("lift.csv"))
            .unwrap()
            .lines()
            .count(),
        2 + 8
    );
}

#[test]
fn env_overrides_and_report() {
    let out = scratch("env");
    let o = Command::new(env!("CARGO_BIN_EXE_sdde"))
        .args(["verify-assumptions"])
        .env("SDDE_MODEL", "toy-scalar")
        .env("SDDE_SEED", "9")
        .env("SDDE_OUT", out.to_str().unwrap())
        .env_remove("SDDE_CONFIG")
        .env_remove("SDDE_FORMAT")
        .env_remove("SDDE_WORKERS")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = read_json(out.join("manifest.json"));
    assert_eq!(m["seed"], 9);
    assert_eq!(m["context"]["model"]["model"], "toy-scalar");

    let r = sdde(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(
        text.contains("verify-assumptions") && text.contains("a2.json: pass"),
        "{text}"
    );
    assert_eq!(
        sdde(&["report", scratch("empty").to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}
