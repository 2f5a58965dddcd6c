use std::process::Command;

fn dgff(dir: &std::path::Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dgff")).current_dir(dir).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn resist_prints_resistance_and_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("net.txt"), "a b 1\nb c 2\na c 1\n").unwrap();
    std::fs::write(dir.path().join("src.txt"), "a\n").unwrap();
    let (code, out) = dgff(dir.path(), &["resist", "--net", "net.txt", "--src", "src.txt", "--dst", "c", "--decompose", "path"]);
    assert_eq!(code, 0);
    assert!(out.contains("R_eff 6.000000000000000e-1"), "{out}");
    assert!(out.contains("\"kind\": \"path\""), "{out}");
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("net.txt"), "a b 1\n").unwrap();
    assert_eq!(dgff(dir.path(), &["resist", "--net", "net.txt", "--src", "a", "--dst", "z"]).0, 2);
    assert_eq!(dgff(dir.path(), &["green", "--domain", "hexagon:4"]).0, 2);
    std::fs::write(dir.path().join("bad.txt"), "experiment = nope\n").unwrap();
    assert_eq!(dgff(dir.path(), &["--config", "bad.txt"]).0, 2);
}

#[test]
fn config_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.txt"), "experiment = brw-max\nsizes = 4,6\nreps = 30\nseed = 5\n").unwrap();
    let (c1, a) = dgff(dir.path(), &["--config", "c.txt", "--out-dir", "a"]);
    let (c2, b) = dgff(dir.path(), &["--config", "c.txt", "--out-dir", "b"]);
    assert_eq!((c1, c2), (0, 0));
    let hash = |s: &str| s.lines().find(|l| l.starts_with("content hash")).unwrap().to_string();
    assert_eq!(hash(&a), hash(&b));
    assert!(dir.path().join("a/manifest.json").is_file());
}

#[test]
fn subcommands_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(dgff(p, &["sample", "--domain", "box:8", "--reps", "2", "--out", "f.csv"]).0, 0);
    assert_eq!(std::fs::read_to_string(p.join("out/f.csv")).unwrap().lines().count(), 2);
    assert_eq!(dgff(p, &["sample", "--domain", "disc:8", "--reps", "2"]).0, 0);
    assert!(p.join("out/fields.bin").is_file());
    let (code, out) = dgff(p, &["green", "--domain", "box:3"]);
    assert_eq!(code, 0);
    assert!(out.contains("1.166666666666667"), "{out}");
    assert_eq!(dgff(p, &["chaos", "--levels", "3", "--reps", "5"]).0, 0);
    assert!(p.join("out/chaos_cells.csv").is_file());
    assert_eq!(dgff(p, &["walk", "--N", "4", "--reps", "2", "--beta", "0.3"]).0, 0);
    assert_eq!(std::fs::read_to_string(p.join("out/walks.csv")).unwrap().lines().count(), 3);
    assert_eq!(dgff(p, &["levelset", "--sizes", "8,16", "--reps", "10"]).0, 0);
    assert_eq!(dgff(p, &["maxstat", "--sizes", "8", "--reps", "10"]).0, 0);
    assert_eq!(dgff(p, &["brw", "--depths", "3,4", "--reps", "10"]).0, 0);
}

#[test]
fn suite_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = dgff(dir.path(), &["suite", "--criteria", "2,3,13"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().filter(|l| l.contains("PASS")).count(), 3);
}
