//! Batch rendering of an expanded manifest.
//!
//! Each perturbed entry is written to `out_dir/<entry.path>` together with a
//! `<file>.json` sidecar that records the parameters it was rendered with.
//! An entry whose output decodes to the expected sample count and has
//! an identical sidecar is skipped, so interrupted jobs can be resumed.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{probe_wav, read_wav, write_wav, Encoding, CANONICAL_RATE_HZ};
use crate::corpus::manifest::Manifest;
use crate::corpus::plan::{AugmentedEntry, ExpandedManifest, Method};
use crate::dsp::StftParams;
use crate::error::{Error, Result};
use crate::speed::{speed_perturb, SpeedSpec};
use crate::vtlp::{vtlp_perturb, WarpParams, DEFAULT_F0_HZ, DEFAULT_FMAX_HZ};

/// Source audio path for every original utterance id.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    paths: HashMap<String, PathBuf>,
}

impl SourceMap {
    pub fn from_expanded(expanded: &ExpandedManifest) -> Self {
        let paths = expanded
            .entries
            .iter()
            .filter(|e| e.is_original())
            .map(|e| (e.utt_id.clone(), e.path.clone()))
            .collect();
        Self { paths }
    }

    pub fn from_manifest(manifest: &Manifest) -> Self {
        let mut map = Self::default();
        map.extend_from_manifest(manifest);
        map
    }

    pub fn extend_from_manifest(&mut self, manifest: &Manifest) {
        for e in manifest.entries() {
            self.paths
                .entry(e.utt_id.clone())
                .or_insert_with(|| e.path.clone());
        }
    }

    pub fn get(&self, utt_id: &str) -> Option<&Path> {
        self.paths.get(utt_id).map(PathBuf::as_path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub workers: usize,
    pub f0_hz: f64,
    pub fmax_hz: f64,
    pub strict_range: bool,
    pub encoding: Encoding,
    pub stft: StftParams,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            f0_hz: DEFAULT_F0_HZ,
            fmax_hz: DEFAULT_FMAX_HZ,
            strict_range: true,
            encoding: Encoding::Pcm16,
            stft: StftParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Rendered,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub utt_id: String,
    pub status: EntryStatus,
    /// Resampling ratio `p/q` realized by speed perturbation.
    pub realized_ratio: Option<String>,
    pub output_samples: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AugmentationReport {
    /// One record per perturbed entry, sorted by utterance id.
    pub records: Vec<EntryRecord>,
    pub wall_clock: Duration,
    pub workers: usize,
}

impl AugmentationReport {
    fn count(&self, status: EntryStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    pub fn rendered(&self) -> usize {
        self.count(EntryStatus::Rendered)
    }

    pub fn skipped(&self) -> usize {
        self.count(EntryStatus::Skipped)
    }

    pub fn failed(&self) -> usize {
        self.count(EntryStatus::Failed)
    }

    /// Entries whose output is present and current.
    pub fn success(&self) -> usize {
        self.rendered() + self.skipped()
    }

    /// One JSON record per line. Timing is left out so that the content only
    /// depends on the inputs.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::File::create(path)
            .and_then(|mut f| f.write_all(self.to_jsonl().as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RenderParams {
    method: Method,
    alpha: String,
    realized_ratio: Option<String>,
    f0_hz: Option<f64>,
    fmax_hz: Option<f64>,
    stft: Option<StftParams>,
    encoding: Encoding,
    source: PathBuf,
    source_samples: usize,
    output_samples: usize,
}

enum Perturbation {
    Speed(SpeedSpec),
    Warp(WarpParams),
}

fn sidecar_path(target: &Path) -> PathBuf {
    let mut name = target.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn render_entry(
    entry: &AugmentedEntry,
    method: Method,
    sources: &SourceMap,
    out_dir: &Path,
    opts: &RenderOptions,
) -> Result<(EntryStatus, Option<String>, usize)> {
    let source = sources
        .get(&entry.source_utt_id)
        .ok_or_else(|| Error::UnknownSource(entry.source_utt_id.clone()))?;
    let perturbation = match method {
        Method::Sp => Perturbation::Speed(SpeedSpec::with_range_check(
            entry.alpha,
            opts.strict_range,
        )?),
        Method::Vtlp => {
            if opts.strict_range {
                crate::speed::check_no_distortion(entry.alpha)?;
            }
            Perturbation::Warp(
                WarpParams::with_bounds(entry.alpha, opts.f0_hz, opts.fmax_hz)?
                    .with_stft(opts.stft),
            )
        }
    };

    let source_samples = probe_wav(source)?.resampled_len(CANONICAL_RATE_HZ);
    let (output_samples, realized_ratio) = match &perturbation {
        Perturbation::Speed(spec) => (
            spec.output_len(source_samples),
            Some(spec.realized_ratio().to_string()),
        ),
        Perturbation::Warp(_) => (source_samples, None),
    };
    let (f0_hz, fmax_hz, stft) = match &perturbation {
        Perturbation::Speed(_) => (None, None, None),
        Perturbation::Warp(p) => (Some(p.f0_hz()), Some(p.fmax_hz()), Some(*p.stft())),
    };
    let params = RenderParams {
        method,
        alpha: format!("{}", entry.alpha),
        realized_ratio: realized_ratio.clone(),
        f0_hz,
        fmax_hz,
        stft,
        encoding: opts.encoding,
        source: source.to_path_buf(),
        source_samples,
        output_samples,
    };

    let target = out_dir.join(&entry.path);
    let sidecar = sidecar_path(&target);
    if is_current(&target, &sidecar, &params) {
        return Ok((EntryStatus::Skipped, realized_ratio, output_samples));
    }

    let input = read_wav(source, CANONICAL_RATE_HZ)?;
    let output = match &perturbation {
        Perturbation::Speed(spec) => speed_perturb(&input, spec)?,
        Perturbation::Warp(p) => vtlp_perturb(&input, p)?,
    };
    debug_assert_eq!(output.len(), output_samples);
    if let Some(parent) = target.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_wav(&output, &target, opts.encoding)?;
    let json = serde_json::to_string_pretty(&params).expect("params serialize");
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))?;
    Ok((EntryStatus::Rendered, realized_ratio, output.len()))
}

fn is_current(target: &Path, sidecar: &Path, params: &RenderParams) -> bool {
    let Ok(text) = fs::read_to_string(sidecar) else {
        return false;
    };
    let Ok(recorded) = serde_json::from_str::<RenderParams>(&text) else {
        return false;
    };
    recorded == *params
        && read_wav(target, CANONICAL_RATE_HZ)
            .map(|audio| audio.len() == params.output_samples)
            .unwrap_or(false)
}

/// Renders every perturbed entry of `expanded` under `out_dir`.
///
/// Per-entry failures are recorded in the report; only an unusable output
/// directory is fatal. The report does not depend on `opts.workers`.
pub fn run_augmentation(
    expanded: &ExpandedManifest,
    sources: &SourceMap,
    out_dir: impl AsRef<Path>,
    opts: &RenderOptions,
) -> Result<AugmentationReport> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let probe = out_dir.join(".spkaug-write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(out_dir, e))?;
    let _ = fs::remove_file(&probe);

    let start = Instant::now();
    let workers = opts.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut records: Vec<EntryRecord> = pool.install(|| {
        expanded
            .entries
            .par_iter()
            .filter_map(|entry| entry.method.map(|m| (entry, m)))
            .map(|(entry, method)| {
                match render_entry(entry, method, sources, out_dir, opts) {
                    Ok((status, realized_ratio, n)) => EntryRecord {
                        utt_id: entry.utt_id.clone(),
                        status,
                        realized_ratio,
                        output_samples: Some(n),
                        error: None,
                    },
                    Err(e) => EntryRecord {
                        utt_id: entry.utt_id.clone(),
                        status: EntryStatus::Failed,
                        realized_ratio: None,
                        output_samples: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    records.sort_by(|a, b| a.utt_id.cmp(&b.utt_id));
    Ok(AugmentationReport {
        records,
        wall_clock: start.elapsed(),
        workers,
    })
}
