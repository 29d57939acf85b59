//! Runs the `fanet` binary end to end on short flume records.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fanet");

// 100 s gives 2001 rows, enough for every split to hold a 96-step window.
const SHORT: &str = "sim.duration=100\ntrain.max_epochs=1\ntrain.patience=1\n";

fn fanet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn fanet")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, cfg: &Path, out: &str, seed: &str) -> PathBuf {
    let out = dir.join(out);
    let o = fanet(&["simulate", "--config", s(cfg), "--out", s(&out), "--seed", seed]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "csv"))
        .expect("simulate wrote no csv")
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad.cfg", "sim.duration=10\nmooring.stifness=3\n");
    let o = fanet(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mooring.stifness"), "{}", stderr(&o));
}

#[test]
fn out_of_range_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad.cfg", "train.max_epochs=2\n");
    let o = fanet(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("patience"), "{}", stderr(&o));
}

#[test]
fn missing_channel_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.cfg", "sim.duration=10\n");
    let csv = simulate(dir.path(), &cfg, "sim", "0");
    // Drop the last column (pitch) from every row.
    let cut: String = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| format!("{}\n", &l[..l.rfind(',').unwrap()]))
        .collect();
    let broken = dir.path().join("nopitch.csv");
    fs::write(&broken, cut).unwrap();
    let o = fanet(&["train", "--out", s(&dir.path().join("t")), "--data", s(&broken)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("pitch"), "{}", stderr(&o));
}

#[test]
fn unstable_mooring_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "u.cfg", "sim.duration=10\nsim.cfl=50\n");
    let o = fanet(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn simulate_is_byte_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.cfg", "sim.duration=20\n");
    let a = fs::read(simulate(dir.path(), &cfg, "a", "5")).unwrap();
    let b = fs::read(simulate(dir.path(), &cfg, "b", "5")).unwrap();
    let c = fs::read(simulate(dir.path(), &cfg, "c", "6")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let resolved = fs::read_to_string(dir.path().join("a/config.resolved")).unwrap();
    assert!(resolved.starts_with("seed=5\n"));
    let meta = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "meta"))
        .unwrap();
    assert!(fs::read_to_string(meta).unwrap().contains("synthetic=true"));
}

#[test]
fn train_then_eval_then_finetune() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.cfg", SHORT);
    let data = simulate(dir.path(), &cfg, "sim", "1");
    let tr = dir.path().join("tr");
    let o = fanet(&["train", "--config", s(&cfg), "--out", s(&tr), "--data", s(&data), "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["model.ckpt", "loss_history.csv", "report.json", "config.resolved", "VERSION"] {
        assert!(tr.join(f).exists(), "missing {f}");
    }

    let ev = dir.path().join("ev");
    let o = fanet(&["eval", "--out", s(&ev), "--checkpoint", s(&tr.join("model.ckpt")), "--data", s(&data)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let train_report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tr.join("report.json")).unwrap()).unwrap();
    let eval_report: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("report.json")).unwrap()).unwrap();
    assert_eq!(train_report["test"], eval_report["model"]);
    assert_eq!(train_report["persistence"], eval_report["persistence"]);
    let heat = fs::read_to_string(ev.join("cross_attention.csv")).unwrap();
    assert_eq!(heat.lines().next(), Some("variate,surge,heave,pitch"));
    assert_eq!(heat.lines().count(), 10);
    assert!(fs::read_to_string(ev.join("predictions.csv")).unwrap().starts_with("window_index,gauge,step,measured,predicted\n"));

    let other = config(dir.path(), "o.cfg", &format!("{SHORT}wave.hs=0.12\n"));
    let data2 = simulate(dir.path(), &other, "sim2", "2");
    let ft = dir.path().join("ft");
    let o = fanet(&["finetune", "--config", s(&cfg), "--out", s(&ft), "--checkpoint", s(&tr.join("model.ckpt")), "--data", s(&data2)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(ft.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["frozen_identical"], true);

    let clash = config(dir.path(), "clash.cfg", &format!("{SHORT}model.n_layers=3\n"));
    let o = fanet(&["finetune", "--config", s(&clash), "--out", s(&dir.path().join("ft2")), "--checkpoint", s(&tr.join("model.ckpt")), "--data", s(&data2)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("n_layers"), "{}", stderr(&o));
}

#[test]
fn sweep_rejects_unknown_axis() {
    let dir = tempfile::tempdir().unwrap();
    let o = fanet(&["sweep", "--out", s(&dir.path().join("o")), "--data", "x.csv", "--axis", "width"]);
    assert_eq!(code(&o), 2);
}
