use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_diffraction-lab");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn run(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("DIFFRACTION_LAB_OUT");
    if let Some(dir) = env_out {
        cmd.env("DIFFRACTION_LAB_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"
name = "small"
[generator]
kind = "lattice"
a = 1.0
[boxes]
n = [20, 40]
[test_function]
half_width = [0.5]
[grid]
lo = [-1.5]
hi = [1.5]
"#;

#[test]
fn bad_probability_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("kind = \"lattice\"\na = 1.0", "kind = \"bernoulli_lattice\"\np = 1.5\nseed = 1"),
    );
    let out = run(&["generate", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[config]"));
}

#[test]
fn missing_section_and_unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&["perturb", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[output]\ncolour = 1\n"));
    let out = run(&["generate", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["generate", "--config", "/nonexistent/cfg.toml"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pair_limit_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[autocorr]\npair_limit = 10\n"));
    let out = run(&["autocorr", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn wide_displacement_is_rejected_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("kind = \"lattice\"\na = 1.0", "kind = \"random_displacement\"\neta = 0.7\nseed = 1"),
    );
    let out = run(&["generate", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn lag_beyond_range_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[autocorr]\nr_max = 3.0\nt = [[5.0]]\n"));
    let out = run(&["autocorr", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[numerical-precondition]"));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_do_not_depend_on_threads() {
    let cfg = configs().join("bernoulli.toml");
    let cfg = cfg.to_str().unwrap();
    for sub in ["generate", "autocorr", "diffract", "spectral"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for (dir, threads) in [(&a, "1"), (&b, "8")] {
            let out = run(&[sub, "--config", cfg, "--out", dir.path().to_str().unwrap(), "--threads", threads], None);
            assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
        assert!(!sa.is_empty());
        assert_eq!(sa, sb, "{sub}");
    }
}

#[test]
fn env_var_sets_the_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let target = dir.path().join("from_env");
    let out = run(&["generate", "--config", &cfg], Some(&target));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = fs::read_to_string(target.join("measure.tsv")).unwrap();
    assert!(written.starts_with("# config_hash="));

    // the flag wins over the environment
    let flag = dir.path().join("from_flag");
    let out = run(&["generate", "--config", &cfg, "--out", flag.to_str().unwrap()], Some(&target));
    assert!(out.status.success());
    assert!(flag.join("measure.tsv").exists());
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&["generate", "--config", &cfg, "--threads", "0", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}
