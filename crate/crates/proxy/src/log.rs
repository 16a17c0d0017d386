//! Append-only consent log.
//!
//! One JSON record per line. `prevHash` is the SHA-256 of the previous line
//! (without its newline), 64 zeros for the first record. `hash` is the
//! SHA-256 of the line serialized with `hash` set to the empty string, so a
//! modified record is caught at its own index rather than at the next one.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use dp_core::rdf::sha256_hex;
use dp_core::Outcome;
use serde::{Deserialize, Serialize};

pub const GENESIS: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordSource {
    Auto,
    User,
    Negotiated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConsentRecord {
    pub ts: String,
    pub origin: String,
    pub cookie_names: Vec<String>,
    pub request_digest: String,
    pub agreement_digest: Option<String>,
    /// Canonical N-Triples of the agreement.
    pub agreement_turtle: Option<String>,
    pub source: RecordSource,
    pub outcome: Outcome,
    pub prev_hash: String,
    #[serde(default)]
    pub hash: String,
}

impl ConsentRecord {
    fn self_hash(&self) -> String {
        let mut r = self.clone();
        r.hash = String::new();
        sha256_hex(
            serde_json::to_string(&r)
                .expect("record serializes")
                .as_bytes(),
        )
    }

    fn line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("record links to {found}, log tail is {expected}")]
    ChainMismatch { expected: String, found: String },
    #[error(transparent)]
    Broken(#[from] ChainError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("record {index}: {reason}")]
pub struct ChainError {
    pub index: usize,
    pub reason: String,
}

/// Checks every line of a log. Returns the number of records.
pub fn verify_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<usize, ChainError> {
    let mut prev = GENESIS.to_string();
    let mut n = 0;
    for (index, line) in lines.into_iter().enumerate() {
        let fail = |reason: String| ChainError { index, reason };
        let r: ConsentRecord =
            serde_json::from_str(line).map_err(|e| fail(format!("not a record: {e}")))?;
        if r.prev_hash != prev {
            return Err(fail(format!(
                "prevHash {} does not match {prev}",
                r.prev_hash
            )));
        }
        if r.self_hash() != r.hash {
            return Err(fail("hash does not match the record".into()));
        }
        if r.line() != line {
            return Err(fail("line is not in canonical form".into()));
        }
        match (&r.agreement_turtle, &r.agreement_digest) {
            (Some(t), Some(d)) if sha256_hex(t.as_bytes()) != *d => {
                return Err(fail(
                    "agreementDigest does not match agreementTurtle".into(),
                ))
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(fail("agreement digest without bytes".into()))
            }
            _ => {}
        }
        prev = sha256_hex(line.as_bytes());
        n += 1;
    }
    Ok(n)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LogError + '_ {
    move |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, LogError> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    BufReader::new(f)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(io_err(path))
}

/// Verifies the log file at `path`; a missing file is an empty log.
pub fn verify_chain(path: &Path) -> Result<usize, LogError> {
    let lines = read_lines(path)?;
    Ok(verify_lines(lines.iter().map(String::as_str))?)
}

/// All records, oldest first.
pub fn read_records(path: &Path) -> Result<Vec<ConsentRecord>, LogError> {
    let lines = read_lines(path)?;
    verify_lines(lines.iter().map(String::as_str))?;
    Ok(lines
        .iter()
        .map(|l| serde_json::from_str(l).expect("verified"))
        .collect())
}

pub struct ConsentLog {
    path: PathBuf,
    file: File,
    tail: String,
    len: usize,
}

impl ConsentLog {
    /// Opens or creates the log, refusing a broken chain.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, LogError> {
        let path = path.into();
        let lines = read_lines(&path)?;
        let len = verify_lines(lines.iter().map(String::as_str))?;
        let tail = lines
            .last()
            .map_or(GENESIS.to_string(), |l| sha256_hex(l.as_bytes()));
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        Ok(ConsentLog {
            path,
            file,
            tail,
            len,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Hash the next record must carry as `prevHash`.
    pub fn tail(&self) -> &str {
        &self.tail
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends `r`, which must already link to [`ConsentLog::tail`]. The
    /// line is on disk when this returns.
    pub fn append(&mut self, mut r: ConsentRecord) -> Result<ConsentRecord, LogError> {
        if r.prev_hash != self.tail {
            return Err(LogError::ChainMismatch {
                expected: self.tail.clone(),
                found: r.prev_hash,
            });
        }
        r.hash = r.self_hash();
        let line = r.line();
        let mut buf = line.clone().into_bytes();
        buf.push(b'\n');
        self.file.write_all(&buf).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))?;
        self.tail = sha256_hex(line.as_bytes());
        self.len += 1;
        Ok(r)
    }

    /// Links `r` to the current tail and appends it.
    pub fn append_next(&mut self, mut r: ConsentRecord) -> Result<ConsentRecord, LogError> {
        r.prev_hash = self.tail.clone();
        self.append(r)
    }
}
