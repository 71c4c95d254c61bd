use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hcplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcplan")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const TINY: &str = "\
plot_window = 3
eval_repetitions = 1
[train]
total_steps = 1500
buffer_capacity = 400
learning_starts = 100
batch_size = 16
hidden = [8]
eps_decay_steps = 500
[planner]
m_eval = 4
";

#[test]
fn printed_config_round_trips() {
    let flag = hcplan(&["--print-config"]);
    assert!(flag.status.success());
    let sub = hcplan(&["print-config"]);
    assert_eq!(stdout(&flag), stdout(&sub));
    let text = stdout(&flag);
    for needle in ["alpha = 3.0", "delta = 0.1", "beta = 0.5", "reward_collision = -5.0", "reward_step = -0.1"] {
        assert!(text.contains(needle), "{needle}");
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    fs::write(&path, &text).unwrap();
    let again = hcplan(&["print-config", "--config", path.to_str().unwrap()]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn overrides_apply() {
    let out = hcplan(&["print-config", "--seed", "42", "--out", "elsewhere"]);
    let text = stdout(&out);
    assert!(text.contains("seed = 42"));
    assert!(text.contains("out_dir = \"elsewhere\""));
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[penalty]\nbeta = 3.0\n").unwrap();
    let out = hcplan(&["print-config", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));
}

fn run_pipeline(dir: &Path, cfg: &Path) {
    let d = dir.to_str().unwrap();
    let c = cfg.to_str().unwrap();
    assert!(hcplan(&["train", "--config", c, "--out", d, "--seed", "5"]).status.success());
    assert!(hcplan(&["train", "--config", c, "--out", d, "--seed", "5", "--no-buffer-init"]).status.success());
    let eval = hcplan(&["eval", "--config", c, "--out", d, "--seed", "5", "--m-eval", "6"]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    assert!(stdout(&eval).contains("h_init"));
    assert!(hcplan(&["plot", "--config", c, "--out", d]).status.success());
}

#[test]
fn train_eval_plot_reproduce() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("tiny.toml");
    fs::write(&cfg, TINY).unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    run_pipeline(&a, &cfg);
    run_pipeline(&b, &cfg);
    for name in [
        "train_log_init.csv",
        "train_log_noinit.csv",
        "curves_init.csv",
        "train_log_init_curves.csv",
        "eval_rows.csv",
        "eval_summary.csv",
    ] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let rows = fs::read_to_string(a.join("eval_rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 5 * 6);
}

#[test]
fn eval_names_the_missing_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = hcplan(&["eval", "--out", dir.path().to_str().unwrap(), "--controllers", "pi_star"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pi_star.ckpt"));
    let bad = hcplan(&["eval", "--out", dir.path().to_str().unwrap(), "--controllers", "pi_9"]);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("pi_9"));
}

#[test]
fn plot_rejects_an_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("empty.csv");
    fs::write(&log, "").unwrap();
    let out = hcplan(&["plot", "--out", dir.path().to_str().unwrap(), log.to_str().unwrap()]);
    assert!(!out.status.success());
}
