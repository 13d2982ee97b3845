//! Pseudo-speaker expansion of a manifest.
//!
//! Every (method, alpha) pair turns each original speaker into a new pseudo
//! speaker `"{spk}#{METHOD}{alpha:.2}"`, so a plan with `n` factors that keeps
//! the originals multiplies the speaker count by `n + 1`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::manifest::Manifest;
use crate::error::{Error, Result};
use crate::speed::check_no_distortion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SP")]
    Sp,
    #[serde(rename = "VTLP")]
    Vtlp,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sp => "SP",
            Method::Vtlp => "VTLP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(Method::Sp),
            "vtlp" => Ok(Method::Vtlp),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

/// Formats a perturbation factor the way it appears in ids and file names.
pub fn alpha_label(alpha: f64) -> String {
    format!("{alpha:.2}")
}

pub fn pseudo_speaker_id(spk_id: &str, method: Method, alpha: f64) -> String {
    format!("{spk_id}#{method}{}", alpha_label(alpha))
}

pub fn pseudo_utterance_id(utt_id: &str, method: Method, alpha: f64) -> String {
    format!("{utt_id}#{method}{}", alpha_label(alpha))
}

/// Relative output path of a perturbed copy of `utt_id`.
pub fn output_path(utt_id: &str, method: Method, alpha: f64) -> PathBuf {
    let file: String = utt_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    PathBuf::from(format!(
        "{}{}",
        method.as_str().to_ascii_lowercase(),
        alpha_label(alpha)
    ))
    .join(format!("{file}.wav"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub method: Method,
    pub alphas: Vec<f64>,
    pub keep_original: bool,
    /// Restrict factors to the no-distortion range `[0.8, 1.2]`.
    pub strict_range: bool,
}

impl AugmentationPlan {
    pub fn new(method: Method, alphas: Vec<f64>) -> Result<Self> {
        Self::with_range_check(method, alphas, true)
    }

    pub fn with_range_check(method: Method, alphas: Vec<f64>, strict_range: bool) -> Result<Self> {
        let plan = Self {
            method,
            alphas,
            keep_original: true,
            strict_range,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn keep_original(mut self, keep: bool) -> Self {
        self.keep_original = keep;
        self
    }

    pub fn strict_range(mut self, strict: bool) -> Result<Self> {
        self.strict_range = strict;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidPlan("no perturbation factors".into()));
        }
        let mut labels = HashSet::new();
        for &alpha in &self.alphas {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::InvalidPlan(format!("invalid factor {alpha}")));
            }
            if (alpha * 100.0 - (alpha * 100.0).round()).abs() > 1e-9 {
                return Err(Error::InvalidPlan(format!(
                    "factor {alpha} has more than two decimals"
                )));
            }
            if alpha_label(alpha) == alpha_label(1.0) {
                return Err(Error::InvalidPlan(
                    "factor 1.0 reproduces the original speaker".into(),
                ));
            }
            if self.strict_range {
                check_no_distortion(alpha).map_err(|e| Error::InvalidPlan(e.to_string()))?;
            }
            if !labels.insert(alpha_label(alpha)) {
                return Err(Error::InvalidPlan(format!("factor {alpha} listed twice")));
            }
        }
        Ok(())
    }

    /// Speaker multiplication factor of this plan on its own.
    pub fn speaker_factor(&self) -> usize {
        self.alphas.len() + usize::from(self.keep_original)
    }

    fn sorted_alphas(&self) -> Vec<f64> {
        let mut alphas = self.alphas.clone();
        alphas.sort_by(f64::total_cmp);
        alphas
    }
}

/// One row of an expanded manifest. Originals have `method == None` and
/// `alpha == 1.0`; for perturbed rows `path` is relative to the render
/// output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedEntry {
    pub utt_id: String,
    pub spk_id: String,
    pub path: PathBuf,
    pub source_utt_id: String,
    pub method: Option<Method>,
    pub alpha: f64,
}

impl AugmentedEntry {
    pub fn is_original(&self) -> bool {
        self.method.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpandedManifest {
    pub entries: Vec<AugmentedEntry>,
}

const EXPANDED_HEADER: &str = "utt_id,spk_id,path,source_utt_id,method,alpha";

impl ExpandedManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn speaker_count(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.spk_id.as_str())
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.entries.len() + 1));
        out.push_str(EXPANDED_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.utt_id,
                e.spk_id,
                e.path.display(),
                e.source_utt_id,
                e.method.map(|m| m.as_str()).unwrap_or("none"),
                alpha_label(e.alpha)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::File::create(path)
            .and_then(|mut f| f.write_all(self.to_csv_string().as_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line as u64,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == EXPANDED_HEADER => {}
            _ => return Err(err(1, format!("expected header `{EXPANDED_HEADER}`"))),
        }
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [utt_id, spk_id, p, source, method, alpha] = fields[..] else {
                return Err(err(line_no, format!("expected 6 fields, got {}", fields.len())));
            };
            let method = match method {
                "none" => None,
                m => Some(m.parse::<Method>().map_err(|e| err(line_no, e.to_string()))?),
            };
            let alpha = alpha
                .parse::<f64>()
                .map_err(|_| err(line_no, format!("bad alpha {alpha:?}")))?;
            if !seen.insert(utt_id.to_string()) {
                return Err(Error::DuplicateUtterance(utt_id.to_string()));
            }
            entries.push(AugmentedEntry {
                utt_id: utt_id.to_string(),
                spk_id: spk_id.to_string(),
                path: PathBuf::from(p),
                source_utt_id: source.to_string(),
                method,
                alpha,
            });
        }
        Ok(Self { entries })
    }
}

pub fn expand_manifest(m: &Manifest, plan: &AugmentationPlan) -> Result<ExpandedManifest> {
    expand_fused(m, std::slice::from_ref(plan))
}

/// Expands one manifest with several plans at once. Originals appear once,
/// first, if any plan keeps them; perturbed copies follow plan by plan in
/// ascending alpha, each block in source order.
pub fn expand_fused(m: &Manifest, plans: &[AugmentationPlan]) -> Result<ExpandedManifest> {
    if plans.is_empty() {
        return Err(Error::InvalidPlan("no plans given".into()));
    }
    for plan in plans {
        plan.validate()?;
    }
    let mut pairs = HashSet::new();
    for plan in plans {
        for &alpha in &plan.alphas {
            if !pairs.insert((plan.method, alpha_label(alpha))) {
                return Err(Error::InvalidPlan(format!(
                    "{} {} appears in more than one plan",
                    plan.method,
                    alpha_label(alpha)
                )));
            }
        }
    }

    let mut taken_spk: HashSet<String> = m.entries().iter().map(|e| e.spk_id.clone()).collect();
    let mut taken_utt: HashSet<String> = m.entries().iter().map(|e| e.utt_id.clone()).collect();
    let mut taken_paths = HashSet::new();
    let mut entries = Vec::new();

    if plans.iter().any(|p| p.keep_original) {
        entries.extend(m.entries().iter().map(|e| AugmentedEntry {
            utt_id: e.utt_id.clone(),
            spk_id: e.spk_id.clone(),
            path: e.path.clone(),
            source_utt_id: e.utt_id.clone(),
            method: None,
            alpha: 1.0,
        }));
    }

    for plan in plans {
        for alpha in plan.sorted_alphas() {
            let new_speakers: HashSet<String> = m
                .speakers()
                .into_iter()
                .map(|s| pseudo_speaker_id(s, plan.method, alpha))
                .collect();
            for spk in new_speakers {
                if !taken_spk.insert(spk.clone()) {
                    return Err(Error::IdCollision(spk));
                }
            }
            for e in m.entries() {
                let utt_id = pseudo_utterance_id(&e.utt_id, plan.method, alpha);
                if !taken_utt.insert(utt_id.clone()) {
                    return Err(Error::IdCollision(utt_id));
                }
                let path = output_path(&e.utt_id, plan.method, alpha);
                if !taken_paths.insert(path.clone()) {
                    return Err(Error::IdCollision(path.display().to_string()));
                }
                entries.push(AugmentedEntry {
                    utt_id,
                    spk_id: pseudo_speaker_id(&e.spk_id, plan.method, alpha),
                    path,
                    source_utt_id: e.utt_id.clone(),
                    method: Some(plan.method),
                    alpha,
                });
            }
        }
    }
    Ok(ExpandedManifest { entries })
}
