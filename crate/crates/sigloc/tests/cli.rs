use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sigloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigloc")).current_dir(dir).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const CHIRAL: &str = "[model]\nfamily = \"chiral1d\"\nmass = 0.5\n[dirac]\nradius = 40.5\n";

#[test]
fn index_reports_equal_pairing() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CHIRAL);
    let out = sigloc(dir.path(), &["index", "--config", "c.toml", "--practical", "--out", "i.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("odd pairing Sig/2 = 1, oracle 1: equal"), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("i.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"method") && header.contains(&"zero_tol"));
    assert!(csv.contains("practical"));
}

#[test]
fn uncertified_localizer_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CHIRAL);
    let out = sigloc(dir.path(), &["localize", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not certified"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.toml", "[model]\nfamily = \"qwz2d\"\nmass = 1.0\nheight = 2\n[dirac]\nn = 3\n");
    let out = sigloc(dir.path(), &["oracle", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown key model.height") && err.contains("weak directions exceed dimension"), "{err}");
    assert_eq!(sigloc(dir.path(), &["oracle", "--config", "missing.toml"]).status.code(), Some(2));
    assert_eq!(sigloc(dir.path(), &["weak"]).status.code(), Some(2));
    assert_eq!(sigloc(dir.path(), &["bogus"]).status.code(), Some(2));
}

#[test]
fn weak_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nfamily = \"stacked_chiral2d\"\nmass = 0.5\nt_perp = 0.2\ndisorder = 0.3\n\
               [dirac]\nradius = 6.5\n[weak]\nvolumes = [2, 4]\nsamples = 3\n[localizer]\nkappa = 0.05\n[run]\nseed = 11\n";
    write(dir.path(), "w.toml", cfg);
    let a = sigloc(dir.path(), &["weak", "--config", "w.toml", "--workers", "3", "--out", "a.csv"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = sigloc(dir.path(), &["weak", "--config", "w.toml", "--workers", "1", "--out", "b.csv"]);
    assert_eq!(b.status.code(), Some(0));
    let (a, b) = (fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("sample,")).count(), 6);
    let c = sigloc(dir.path(), &["weak", "--config", "w.toml", "--seed", "12", "--out", "c.csv"]);
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(fs::read(dir.path().join("c.csv")).unwrap(), text.into_bytes());
}

#[test]
fn saved_localizer_has_matching_inertia() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "q.toml", "[model]\nfamily = \"qwz2d\"\nmass = 1.0\n[dirac]\nradius = 4.5\n[localizer]\nkappa = 0.2\n[output]\nmatrix = \"l.bin\"\n");
    let out = sigloc(dir.path(), &["localize", "--config", "q.toml", "--practical"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = sigloc(dir.path(), &["sig", "l.bin", "--format", "json", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("s.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["method"], "eigencount");
    assert_eq!(rows[1]["method"], "factorization");
    assert_eq!(rows[0]["signature"], rows[1]["signature"]);
    assert_eq!(rows[0]["signature"], 2);
}

#[test]
fn sweep_signature_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", &format!("{CHIRAL}[sweep]\nkappas = [0.0125, 0.025, 0.05]\nradii = [20.5, 40.5]\n"));
    let out = sigloc(dir.path(), &["sweep", "--config", "c.toml", "--practical", "--workers", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("6 of 6 pairs certified; signature constant: true"));
}

#[test]
fn oracle_and_model_run() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "q.toml", "[model]\nfamily = \"qwz2d\"\nmass = -1.0\n[dirac]\nradius = 4.5\n");
    let out = sigloc(dir.path(), &["oracle", "--config", "q.toml"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("chern     1"));
    let out = sigloc(dir.path(), &["model", "--config", "q.toml"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("kappa_max"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigloc(dir.path(), &["selftest", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
