//! JSONL persistence for corpora, pairs and samples, plus the corpus manifest.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpusgen::{Corpus, TruthEntry};
use crate::error::{Error, Result};
use crate::toylang::{critic, TokenSeq};

pub const MANIFEST_VERSION: u32 = 1;
pub const CORPUS_FILES: [&str; 4] = ["good.jsonl", "bad_pool.jsonl", "bad_test.jsonl", "truth.jsonl"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqRecord {
    pub tokens: TokenSeq,
    pub id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: u32,
    pub n_good: usize,
    pub n_bad_pool: usize,
    pub n_bad_test: usize,
    pub seed: u64,
    /// SHA-256 over the four JSONL files in `CORPUS_FILES` order.
    pub hash: String,
}

fn jsonl_bytes<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn seq_records(seqs: &[TokenSeq], first_id: u64) -> impl Iterator<Item = SeqRecord> + '_ {
    seqs.iter().enumerate().map(move |(i, s)| SeqRecord {
        tokens: s.clone(),
        id: first_id + i as u64,
    })
}

/// File contents of a corpus, in `CORPUS_FILES` order.
fn corpus_files(corpus: &Corpus) -> Result<[Vec<u8>; 4]> {
    Ok([
        jsonl_bytes(seq_records(&corpus.good, 0))?,
        jsonl_bytes(seq_records(&corpus.bad_pool, corpus.bad_pool_first_id()))?,
        jsonl_bytes(seq_records(&corpus.bad_test, corpus.bad_test_first_id()))?,
        jsonl_bytes(corpus.truth())?,
    ])
}

fn hash_files(files: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for f in files {
        h.update((f.len() as u64).to_le_bytes());
        h.update(f);
    }
    hex::encode(h.finalize())
}

pub fn corpus_hash(corpus: &Corpus) -> Result<String> {
    Ok(hash_files(&corpus_files(corpus)?))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn save_corpus(dir: &Path, corpus: &Corpus) -> Result<CorpusManifest> {
    let files = corpus_files(corpus)?;
    for (name, bytes) in CORPUS_FILES.iter().zip(&files) {
        write_bytes(&dir.join(name), bytes)?;
    }
    let manifest = CorpusManifest {
        version: MANIFEST_VERSION,
        n_good: corpus.good.len(),
        n_bad_pool: corpus.bad_pool.len(),
        n_bad_test: corpus.bad_test.len(),
        seed: corpus.seed,
        hash: hash_files(&files),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<CorpusManifest> {
    let manifest: CorpusManifest = read_json(&dir.join("manifest.json"))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Version {
            what: "corpus manifest",
            found: manifest.version,
        });
    }
    Ok(manifest)
}

/// Loads a corpus and checks it against its manifest hash.
pub fn load_corpus(dir: &Path) -> Result<(Corpus, CorpusManifest)> {
    let manifest = read_manifest(dir)?;
    let mut files = Vec::with_capacity(4);
    for name in CORPUS_FILES {
        let path = dir.join(name);
        files.push(fs::read(&path).map_err(|e| Error::io(&path, e))?);
    }
    let found = hash_files(&files);
    if found != manifest.hash {
        return Err(Error::CorpusHashMismatch {
            expected: manifest.hash,
            found,
        });
    }
    let seqs = |i: usize| -> Result<Vec<TokenSeq>> {
        let records: Vec<SeqRecord> = parse_jsonl(&dir.join(CORPUS_FILES[i]), &files[i])?;
        Ok(records.into_iter().map(|r| r.tokens).collect())
    };
    let good = seqs(0)?;
    let bad_pool = seqs(1)?;
    let bad_test = seqs(2)?;
    let truth: Vec<TruthEntry> = parse_jsonl(&dir.join(CORPUS_FILES[3]), &files[3])?;
    let corpus = Corpus::from_parts(good, bad_pool, bad_test, truth, manifest.seed);
    Ok((corpus, manifest))
}

fn parse_jsonl<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        out.push(serde_json::from_slice(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a test set: either sequence records or plain `{"tokens": ...}`
/// lines. Inputs the critic accepts are dropped.
pub fn read_test_set(path: &Path) -> Result<Vec<TokenSeq>> {
    #[derive(Deserialize)]
    struct Line {
        tokens: TokenSeq,
    }
    let lines: Vec<Line> = read_jsonl(path)?;
    Ok(lines
        .into_iter()
        .map(|l| l.tokens)
        .filter(|s| critic(s).is_bad())
        .collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}
