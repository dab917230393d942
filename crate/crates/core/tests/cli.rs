use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rheotome(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rheotome")).args(args).output().unwrap()
}

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes").join(name)
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn validate_accepts_packaged_scenes() {
    for name in ["deney1.json", "deney2.json", "deney3.json"] {
        let out = rheotome(&["validate", "--scene", scene(name).to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn invalid_field_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"lattice": {"thickness": -1.0}}"#).unwrap();
    let out = rheotome(&["validate", "--scene", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lattice.thickness"));
}

#[test]
fn missing_scene_exits_2() {
    let out = rheotome(&["run", "--scene", "/nonexistent/scene.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = rheotome(&[
        "run",
        "--scene",
        scene("deney1.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--threads",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_writes_only_its_products() {
    let dir = tempfile::tempdir().unwrap();
    let out = rheotome(&["generate", "--scene", scene("deney3.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("deck.obj").exists());
    assert!(dir.path().join("manifest.json").exists());
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn run_output_is_independent_of_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, n) in [(&a, "1"), (&b, "8")] {
        let out = rheotome(&[
            "run",
            "--scene",
            scene("deney1.json").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--threads",
            n,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(a.path().join("report.json").exists());
    assert_eq!(read_tree(a.path()), read_tree(b.path()));
}
