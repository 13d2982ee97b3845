//! Corpus manifests: csv, jsonl and Kaldi `wav.scp` + `utt2spk` pairs.
//!
//! Relative audio paths are resolved against the directory holding the
//! manifest file.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utt_id: String,
    pub spk_id: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

/// Ordered utterance list with unique utterance ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.utt_id.as_str()) {
                return Err(Error::DuplicateUtterance(e.utt_id.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn speakers(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.spk_id.as_str()).collect()
    }

    pub fn speaker_count(&self) -> usize {
        self.speakers().len()
    }

    /// Writes `utt_id,spk_id,path[,duration_s]`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let with_duration = self.entries.iter().any(|e| e.duration_s.is_some());
        let mut out = String::from("utt_id,spk_id,path");
        if with_duration {
            out.push_str(",duration_s");
        }
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!("{},{},{}", e.utt_id, e.spk_id, e.path.display()));
            if with_duration {
                out.push(',');
                if let Some(d) = e.duration_s {
                    out.push_str(&d.to_string());
                }
            }
            out.push('\n');
        }
        fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestFormat {
    Csv,
    Jsonl,
    /// `wav.scp` and `utt2spk`. The path may name the directory holding both
    /// or the `wav.scp` file itself.
    KaldiPair,
}

pub fn load_manifest(path: impl AsRef<Path>, format: ManifestFormat) -> Result<Manifest> {
    let path = path.as_ref();
    match format {
        ManifestFormat::Csv => load_csv(path),
        ManifestFormat::Jsonl => load_jsonl(path),
        ManifestFormat::KaldiPair => load_kaldi(path),
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn load_csv(path: &Path) -> Result<Manifest> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (utt_col, spk_col, path_col) = match (column("utt_id"), column("spk_id"), column("path")) {
        (Some(u), Some(s), Some(p)) => (u, s, p),
        _ => {
            return Err(parse_err(
                path,
                1,
                "header must contain utt_id, spk_id and path",
            ))
        }
    };
    let dur_col = column("duration_s");
    let base = base_dir(path);

    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize, name: &str| {
            record
                .get(i)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| parse_err(path, line, format!("missing {name}")))
        };
        let duration_s = match dur_col.and_then(|i| record.get(i)).filter(|v| !v.is_empty()) {
            Some(v) => Some(
                v.parse::<f64>()
                    .map_err(|_| parse_err(path, line, format!("bad duration_s {v:?}")))?,
            ),
            None => None,
        };
        entries.push(ManifestEntry {
            utt_id: field(utt_col, "utt_id")?.to_string(),
            spk_id: field(spk_col, "spk_id")?.to_string(),
            path: resolve(&base, field(path_col, "path")?),
            duration_s,
        });
    }
    Manifest::new(entries)
}

fn load_jsonl(path: &Path) -> Result<Manifest> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = base_dir(path);
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut entry: ManifestEntry =
            serde_json::from_str(&line).map_err(|e| parse_err(path, line_no, e.to_string()))?;
        entry.path = resolve(&base, &entry.path.to_string_lossy());
        entries.push(entry);
    }
    Manifest::new(entries)
}

/// Reads `key value` lines, keeping the rest of the line after the first
/// whitespace run as the value.
fn read_kaldi_table(path: &Path) -> Result<Vec<(String, String)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(char::is_whitespace)
            .map(|(k, v)| (k, v.trim()))
            .filter(|(_, v)| !v.is_empty())
            .ok_or_else(|| parse_err(path, line_no, "expected `key value`"))?;
        if !seen.insert(key.to_string()) {
            return Err(Error::DuplicateUtterance(key.to_string()));
        }
        rows.push((key.to_string(), value.to_string()));
    }
    Ok(rows)
}

fn load_kaldi(path: &Path) -> Result<Manifest> {
    let (wav_scp, utt2spk) = if path.is_dir() {
        (path.join("wav.scp"), path.join("utt2spk"))
    } else {
        (path.to_path_buf(), base_dir(path).join("utt2spk"))
    };
    let base = base_dir(&wav_scp);
    let wavs = read_kaldi_table(&wav_scp)?;
    let speakers: BTreeMap<String, String> = read_kaldi_table(&utt2spk)?.into_iter().collect();

    let wav_keys: BTreeSet<&str> = wavs.iter().map(|(k, _)| k.as_str()).collect();
    let only_wav: Vec<&str> = wav_keys
        .iter()
        .copied()
        .filter(|k| !speakers.contains_key(*k))
        .collect();
    let only_spk: Vec<&str> = speakers
        .keys()
        .map(String::as_str)
        .filter(|k| !wav_keys.contains(k))
        .collect();
    if !only_wav.is_empty() || !only_spk.is_empty() {
        let mut parts = Vec::new();
        if !only_spk.is_empty() {
            parts.push(format!("in utt2spk only: {}", only_spk.join(" ")));
        }
        if !only_wav.is_empty() {
            parts.push(format!("in wav.scp only: {}", only_wav.join(" ")));
        }
        return Err(Error::KeyMismatch(parts.join("; ")));
    }

    let entries = wavs
        .into_iter()
        .map(|(utt_id, p)| ManifestEntry {
            spk_id: speakers[&utt_id].clone(),
            path: resolve(&base, &p),
            utt_id,
            duration_s: None,
        })
        .collect();
    Manifest::new(entries)
}
