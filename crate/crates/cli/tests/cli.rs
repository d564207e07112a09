use std::path::Path;
use std::process::{Command, Output};

fn oltr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oltr"))
        .args(args)
        .current_dir(dir)
        .env_remove("OLTR_WORKERS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, algorithm: &str) {
    std::fs::write(
        dir.join(format!("{name}.toml")),
        format!(
            r#"algorithm = "{algorithm}"
click_model = "perfect"
impressions = 200
repeats = 3
checkpoints = 4

[dataset]
kind = "letor"
train = "data/train.txt"
test = "data/test.txt"
"#
        ),
    )
    .unwrap();
}

#[test]
fn synth_run_plot_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let out = oltr(&["synth", "queries=30,docs=8,dim=5,seed=4", "data"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["train.txt", "test.txt", "weights.txt"] {
        assert!(dir.join("data").join(f).is_file(), "{f}");
    }

    write_config(dir, "pdgd", "pdgd");
    write_config(dir, "dbgd", "dbgd");
    for name in ["pdgd", "dbgd"] {
        let out = oltr(&["run", &format!("{name}.toml"), "--out", &format!("out/{name}"), "--workers", "2"], dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let trace = std::fs::read_to_string(dir.join("out").join(name).join("trace.csv")).unwrap();
        assert!(trace.starts_with("run_id,seed,impressions,ndcg10\n"));
        assert!(dir.join("out").join(name).join("summary.json").is_file());
        assert!(dir.join("out").join(name).join("curve.svg").is_file());
    }

    let out = oltr(&["plot", "out/pdgd", "out/dbgd", "--out", "both.svg"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.join("both.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="series""#).count(), 2);

    let out = oltr(&["compare", "out/pdgd", "out/dbgd"], dir);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("welch two-sided") && text.contains("p = "), "{text}");
}

#[test]
fn worker_override_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert!(oltr(&["synth", "queries=20,docs=6,dim=4,seed=2", "data"], dir).status.success());
    write_config(dir, "exp", "pdgd");
    for (out_dir, workers) in [("a", "1"), ("b", "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_oltr"))
            .args(["run", "exp.toml", "--out", out_dir])
            .env("OLTR_WORKERS", workers)
            .current_dir(dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("{workers} workers")));
    }
    for f in ["trace.csv", "summary.json", "curve.svg"] {
        assert_eq!(std::fs::read(dir.join("a").join(f)).unwrap(), std::fs::read(dir.join("b").join(f)).unwrap());
    }
    let bad = Command::new(env!("CARGO_BIN_EXE_oltr"))
        .args(["run", "exp.toml", "--out", "c"])
        .env("OLTR_WORKERS", "many")
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cases: &[&[&str]] = &[
        &["run", "missing.toml"],
        &["plot", "nowhere"],
        &["compare", "a", "b"],
        &["synth", "queries=ten", "x"],
        &["synth", "colour=3", "x"],
        &["synth", "queries=0", "x"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = oltr(args, dir);
        assert!(!out.status.success(), "{args:?} should fail");
    }
    std::fs::write(dir.join("bad.toml"), "algorithm = \"pdgd\"\nimpressions = 0\n").unwrap();
    let out = oltr(&["run", "bad.toml"], dir);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
