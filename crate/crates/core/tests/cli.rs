use std::path::{Path, PathBuf};
use std::process::Command;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("layerflow-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], config: &Path, out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_layerflow"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn kernels_table_and_summary() {
    let dir = scratch("kernels");
    let cfg = write_config(&dir, "");
    let (code, stdout) = run(&["verify-kernels"], &cfg, &dir.join("out"));
    assert_eq!(code, 0, "{stdout}");
    let csv = std::fs::read_to_string(dir.join("out/kernels.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("a,xi"), "{csv}");
    assert_eq!(csv.lines().count(), 26);
    let summary = std::fs::read_to_string(dir.join("out/summary.txt")).unwrap();
    assert!(summary.contains("CHECK kernel_identities PASS"), "{summary}");
}

#[test]
fn same_seed_gives_identical_tables() {
    let dir = scratch("seed");
    let cfg = write_config(&dir, "initial_data = random_solenoidal\nhorizon = 1\n");
    let (a, b) = (dir.join("a"), dir.join("b"));
    assert_eq!(run(&["semigroup-decay", "--seed", "7"], &cfg, &a).0, 0);
    assert_eq!(run(&["semigroup-decay", "--seed", "7"], &cfg, &b).0, 0);
    let read = |d: &Path| std::fs::read(d.join("decay.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let c = dir.join("c");
    run(&["semigroup-decay", "--seed", "8"], &cfg, &c);
    assert_ne!(read(&a), read(&c));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = scratch("bad");
    let cfg = write_config(&dir, "mu = -1\n");
    assert_eq!(run(&["helmholtz"], &cfg, &dir.join("out")).0, 2);
    let cfg = write_config(&dir, "colour = red\n");
    assert_eq!(run(&["helmholtz"], &cfg, &dir.join("out")).0, 2);
    let cfg = write_config(&dir, "");
    assert_eq!(run(&["no-such-scenario"], &cfg, &dir.join("out")).0, 2);
    assert_eq!(run(&["helmholtz"], &dir.join("missing.cfg"), &dir.join("out")).0, 2);
}

#[test]
fn global_solve_from_rest() {
    let dir = scratch("rest");
    let cfg = write_config(&dir, "initial_data = zero\nhorizon = 1\n");
    let (code, stdout) = run(&["global-solve"], &cfg, &dir.join("out"));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("CHECK converged PASS"), "{stdout}");
    assert!(dir.join("out/global-solve.csv").exists());
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut names = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        layerflow::config::Config::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let stem = path.file_stem().unwrap().to_str().unwrap().to_string();
        assert!(stem.parse::<layerflow::runner::Subcommand>().is_ok(), "{stem}");
        names.push(stem);
    }
    assert_eq!(names.len(), layerflow::runner::Subcommand::ALL.len());
}
