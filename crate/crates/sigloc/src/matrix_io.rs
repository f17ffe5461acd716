//! Matrix container in three encodings, picked by file extension.
//!
//! Text (any extension other than `.bin` and `.json`):
//!
//! ```text
//! %%sigloc-matrix v1
//! dim 4
//! fiber 2
//! ordering lex-axis0-major/site-major/orbital-minor
//! hermitian true
//! nnz 6
//! 0 0 1 0
//! 0 1 0.5 -0.25
//! ...
//! ```
//!
//! Each entry line is `row col re im` with zero-based indices. Floats are
//! written in shortest round-trip form, so text files reload bit-exactly.
//! Lines starting with `#` are ignored.
//!
//! Binary (`.bin`), all integers and floats little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `SLMX` |
//! | 4 | version, u32 = 1 |
//! | 8 | dim, u64 |
//! | 8 | fiber, u64 |
//! | 1 | hermitian flag, 0 or 1 |
//! | 4 + k | ordering length u32, then k UTF-8 bytes |
//! | 8 | nnz, u64 |
//! | 32 each | row u64, col u64, re f64, im f64 |
//!
//! JSON (`.json`): an object with keys `format` (`"sigloc-matrix"`),
//! `version`, `dim`, `fiber`, `ordering`, `hermitian` and `entries`, the
//! latter a list of `[row, col, re, im]`.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sigloc_core::lattice::ORDERING;
use sigloc_core::sparse::SparseMatrix;
use sigloc_core::C64;

use crate::error::{CliError, CliResult};

pub const TEXT_HEADER: &str = "%%sigloc-matrix v1";
pub const MAGIC: &[u8; 4] = b"SLMX";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixFile {
    pub fiber: usize,
    pub ordering: String,
    pub hermitian: bool,
    pub matrix: SparseMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Text,
    Binary,
    Json,
}

impl Encoding {
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => Encoding::Binary,
            Some("json") => Encoding::Json,
            _ => Encoding::Text,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    format: String,
    version: u32,
    dim: usize,
    fiber: usize,
    ordering: String,
    hermitian: bool,
    entries: Vec<(usize, usize, f64, f64)>,
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::config(format!("{}: {msg}", path.display()))
}

impl MatrixFile {
    /// Wrap a square matrix, recording whether it is Hermitian to rounding.
    pub fn new(matrix: SparseMatrix, fiber: usize) -> Self {
        let hermitian = matrix.hermitian_deviation() <= 1e-12 * matrix.max_abs().max(1.0);
        Self { fiber, ordering: ORDERING.to_string(), hermitian, matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let bytes = match Encoding::for_path(path) {
            Encoding::Text => self.to_text().into_bytes(),
            Encoding::Binary => self.to_binary(),
            Encoding::Json => self.to_json()?.into_bytes(),
        };
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let file = fs::File::open(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        match Encoding::for_path(path) {
            Encoding::Text => Self::from_text(BufReader::new(file), path),
            Encoding::Binary => {
                let mut bytes = Vec::new();
                BufReader::new(file).read_to_end(&mut bytes)?;
                Self::from_binary(&bytes, path)
            }
            Encoding::Json => {
                let j: JsonMatrix = serde_json::from_reader(BufReader::new(file)).map_err(|e| bad(path, e))?;
                if j.format != "sigloc-matrix" || j.version != VERSION {
                    return Err(bad(path, format!("unsupported container {} v{}", j.format, j.version)));
                }
                let entries = j.entries.into_iter().map(|(i, k, re, im)| (i, k, C64::new(re, im))).collect();
                Self::assemble(path, j.dim, j.fiber, j.ordering, j.hermitian, entries)
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(TEXT_HEADER);
        s.push('\n');
        s.push_str(&format!(
            "dim {}\nfiber {}\nordering {}\nhermitian {}\nnnz {}\n",
            self.dim(),
            self.fiber,
            self.ordering,
            self.hermitian,
            self.matrix.nnz()
        ));
        for (i, j, v) in self.matrix.triplets() {
            s.push_str(&format!("{i} {j} {} {}\n", v.re, v.im));
        }
        s
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 32 * self.matrix.nnz());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u64).to_le_bytes());
        out.extend_from_slice(&(self.fiber as u64).to_le_bytes());
        out.push(u8::from(self.hermitian));
        out.extend_from_slice(&(self.ordering.len() as u32).to_le_bytes());
        out.extend_from_slice(self.ordering.as_bytes());
        out.extend_from_slice(&(self.matrix.nnz() as u64).to_le_bytes());
        for (i, j, v) in self.matrix.triplets() {
            out.extend_from_slice(&(i as u64).to_le_bytes());
            out.extend_from_slice(&(j as u64).to_le_bytes());
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn to_json(&self) -> CliResult<String> {
        let j = JsonMatrix {
            format: "sigloc-matrix".into(),
            version: VERSION,
            dim: self.dim(),
            fiber: self.fiber,
            ordering: self.ordering.clone(),
            hermitian: self.hermitian,
            entries: self.matrix.triplets().map(|(i, k, v)| (i, k, v.re, v.im)).collect(),
        };
        Ok(serde_json::to_string(&j)?)
    }

    pub fn from_text<R: BufRead>(reader: R, path: &Path) -> CliResult<Self> {
        let mut lines = reader.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty() && !l.starts_with('#')));
        let mut next = |what: &str| -> CliResult<(usize, String)> {
            match lines.next() {
                Some((k, Ok(l))) => Ok((k + 1, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(bad(path, format!("unexpected end of file, expected {what}"))),
            }
        };
        let (_, header) = next("header")?;
        if header.trim() != TEXT_HEADER {
            return Err(bad(path, format!("first line must be `{TEXT_HEADER}`")));
        }
        let mut field = |key: &str| -> CliResult<String> {
            let (k, line) = next(key)?;
            match line.trim().split_once(' ') {
                Some((name, value)) if name == key => Ok(value.trim().to_string()),
                _ => Err(bad(path, format!("line {k}: expected `{key} <value>`"))),
            }
        };
        let int = |s: String, key: &str| s.parse::<usize>().map_err(|_| bad(path, format!("{key} must be a nonnegative integer")));
        let dim = int(field("dim")?, "dim")?;
        let fiber = int(field("fiber")?, "fiber")?;
        let ordering = field("ordering")?;
        let hermitian = match field("hermitian")?.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(bad(path, format!("hermitian must be true or false, found {other}"))),
        };
        let nnz = int(field("nnz")?, "nnz")?;
        let mut entries = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (k, line) = next("entry")?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [i, j, re, im] => (|| Some((i.parse().ok()?, j.parse().ok()?, C64::new(re.parse().ok()?, im.parse().ok()?))))(),
                _ => None,
            };
            entries.push(parsed.ok_or_else(|| bad(path, format!("line {k}: expected `row col re im`")))?);
        }
        if let Ok((k, _)) = next("end") {
            return Err(bad(path, format!("line {k}: more entries than nnz = {nnz}")));
        }
        Self::assemble(path, dim, fiber, ordering, hermitian, entries)
    }

    pub fn from_binary(bytes: &[u8], path: &Path) -> CliResult<Self> {
        let mut at = 0usize;
        let mut take = |n: usize| -> CliResult<&[u8]> {
            let s = bytes.get(at..at + n).ok_or_else(|| bad(path, "truncated binary matrix"))?;
            at += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(bad(path, "missing SLMX magic"));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
        let u64_at = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("8 bytes"));
        let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().expect("8 bytes"));
        let version = u32_at(take(4)?);
        if version != VERSION {
            return Err(bad(path, format!("unsupported version {version}")));
        }
        let dim = u64_at(take(8)?) as usize;
        let fiber = u64_at(take(8)?) as usize;
        let hermitian = match take(1)?[0] {
            0 => false,
            1 => true,
            b => return Err(bad(path, format!("invalid hermitian flag {b}"))),
        };
        let len = u32_at(take(4)?) as usize;
        let ordering = String::from_utf8(take(len)?.to_vec()).map_err(|_| bad(path, "ordering is not UTF-8"))?;
        let nnz = u64_at(take(8)?) as usize;
        let mut entries = Vec::with_capacity(nnz.min(bytes.len() / 32));
        for _ in 0..nnz {
            let e = take(32)?;
            entries.push((
                u64_at(&e[0..8]) as usize,
                u64_at(&e[8..16]) as usize,
                C64::new(f64_at(&e[16..24]), f64_at(&e[24..32])),
            ));
        }
        if at != bytes.len() {
            return Err(bad(path, "trailing bytes after the last entry"));
        }
        Self::assemble(path, dim, fiber, ordering, hermitian, entries)
    }

    fn assemble(path: &Path, dim: usize, fiber: usize, ordering: String, hermitian: bool, entries: Vec<(usize, usize, C64)>) -> CliResult<Self> {
        if fiber == 0 || dim % fiber != 0 {
            return Err(bad(path, format!("fiber {fiber} does not divide dim {dim}")));
        }
        if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= dim || j >= dim) {
            return Err(bad(path, format!("entry ({i}, {j}) outside a {dim} x {dim} matrix")));
        }
        if !entries.iter().all(|(_, _, v)| v.re.is_finite() && v.im.is_finite()) {
            return Err(bad(path, "non-finite entry"));
        }
        let matrix = SparseMatrix::from_triplets(dim, dim, entries);
        Ok(Self { fiber, ordering, hermitian, matrix })
    }
}
