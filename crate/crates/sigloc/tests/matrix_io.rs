use std::path::Path;

use sigloc::matrix_io::{Encoding, MatrixFile, MAGIC};
use sigloc::CliError;
use sigloc_core::lattice::ORDERING;
use sigloc_core::sparse::SparseMatrix;
use sigloc_core::C64;

fn sample() -> MatrixFile {
    let t = [
        (0, 0, C64::new(1.0, 0.0)),
        (0, 3, C64::new(0.1, -1.0 / 3.0)),
        (3, 0, C64::new(0.1, 1.0 / 3.0)),
        (1, 2, C64::new(-2.5e-17, 7.0)),
        (2, 1, C64::new(-2.5e-17, -7.0)),
        (3, 3, C64::new(-std::f64::consts::PI, 0.0)),
    ];
    MatrixFile::new(SparseMatrix::from_triplets(4, 4, t), 2)
}

#[test]
fn encodings_follow_extension() {
    assert_eq!(Encoding::for_path(Path::new("a.bin")), Encoding::Binary);
    assert_eq!(Encoding::for_path(Path::new("a.json")), Encoding::Json);
    assert_eq!(Encoding::for_path(Path::new("a.txt")), Encoding::Text);
    assert_eq!(Encoding::for_path(Path::new("a")), Encoding::Text);
}

#[test]
fn round_trips_are_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let m = sample();
    assert!(m.hermitian);
    assert_eq!(m.ordering, ORDERING);
    for name in ["m.txt", "m.bin", "m.json"] {
        let path = dir.path().join(name);
        m.write(&path).unwrap();
        let back = MatrixFile::read(&path).unwrap();
        assert_eq!(back, m, "{name}");
    }
}

#[test]
fn text_layout() {
    let text = sample().to_text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "%%sigloc-matrix v1");
    assert_eq!(lines[1], "dim 4");
    assert_eq!(lines[2], "fiber 2");
    assert_eq!(lines[3], format!("ordering {ORDERING}"));
    assert_eq!(lines[4], "hermitian true");
    assert_eq!(lines[5], "nnz 6");
    assert_eq!(lines[6], "0 0 1 0");
    assert_eq!(lines.len(), 12);
}

#[test]
fn binary_layout() {
    let b = sample().to_binary();
    assert_eq!(&b[0..4], MAGIC);
    assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
    assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 4);
    assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 2);
    assert_eq!(b[24], 1);
    let k = u32::from_le_bytes(b[25..29].try_into().unwrap()) as usize;
    assert_eq!(&b[29..29 + k], ORDERING.as_bytes());
    assert_eq!(b.len(), 29 + k + 8 + 6 * 32);
}

#[test]
fn comments_and_blank_lines_are_skipped() {
    let text = "%%sigloc-matrix v1\n# generated\ndim 2\nfiber 1\n\nordering x\nhermitian false\nnnz 1\n0 1 2 0\n";
    let m = MatrixFile::from_text(text.as_bytes(), Path::new("t")).unwrap();
    assert_eq!(m.matrix.get(0, 1), C64::new(2.0, 0.0));
    assert!(!m.hermitian);
}

fn rejected(text: &str) -> String {
    match MatrixFile::from_text(text.as_bytes(), Path::new("t")) {
        Err(CliError::Config(e)) => e.join("\n"),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn malformed_text_is_rejected() {
    let head = "%%sigloc-matrix v1\ndim 2\nfiber 1\nordering x\nhermitian true\n";
    assert!(rejected("garbage\n").contains("first line"));
    assert!(rejected(&format!("{head}nnz 2\n0 0 1 0\n")).contains("end of file"));
    assert!(rejected(&format!("{head}nnz 1\n0 0 1 0\n1 1 1 0\n")).contains("more entries"));
    assert!(rejected(&format!("{head}nnz 1\n0 5 1 0\n")).contains("outside"));
    assert!(rejected(&format!("{head}nnz 1\n0 0 one 0\n")).contains("row col re im"));
    assert!(rejected("%%sigloc-matrix v1\ndim 3\nfiber 2\nordering x\nhermitian true\nnnz 0\n").contains("does not divide"));
}

#[test]
fn truncated_binary_is_rejected() {
    let b = sample().to_binary();
    for cut in [3, 20, b.len() - 1] {
        assert!(MatrixFile::from_binary(&b[..cut], Path::new("b")).is_err());
    }
    let mut extra = b.clone();
    extra.push(0);
    assert!(MatrixFile::from_binary(&extra, Path::new("b")).is_err());
}
