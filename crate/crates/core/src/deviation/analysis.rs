//! Cosine deviations between original and perturbed utterances, their
//! speaker-level aggregation, and the two derived curves: the per-alpha
//! distribution of speaker deviations and the mean deviation over an alpha
//! grid.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embedding::{baseline_embedding, EmbeddingVector};
use crate::audio::{read_wav, AudioBuffer, CANONICAL_RATE_HZ};
use crate::corpus::{alpha_label, pseudo_utterance_id, Manifest, Method};
use crate::dsp::StftParams;
use crate::error::{Error, Result};
use crate::speed::{speed_perturb, SpeedSpec, NO_DISTORTION_RANGE};
use crate::vtlp::{vtlp_perturb, WarpParams, DEFAULT_F0_HZ, DEFAULT_FMAX_HZ};

pub const DEFAULT_BIN_WIDTH: f64 = 0.01;
const GRID_EPS: f64 = 1e-9;

/// `1 − cos(e, ep)`, in `[0, 2]`.
pub fn cosine_deviation(e: &EmbeddingVector, ep: &EmbeddingVector) -> Result<f64> {
    if e.dim() != ep.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            e.dim(),
            ep.dim()
        )));
    }
    let (na, nb) = (e.norm(), ep.norm());
    if !(na > 0.0 && nb > 0.0) {
        return Err(Error::ZeroVector(None));
    }
    let dot: f64 = e.values().iter().zip(ep.values()).map(|(a, b)| a * b).sum();
    Ok((1.0 - dot / (na * nb)).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Sum,
}

impl Aggregation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Sum => "sum",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregation::Mean),
            "sum" => Ok(Aggregation::Sum),
            _ => Err(Error::InvalidArgument(format!("unknown aggregation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerDeviation {
    pub spk_id: String,
    pub utterance_deviations: Vec<f64>,
    pub aggregate: f64,
    pub aggregation: Aggregation,
}

pub fn speaker_deviation(
    spk_id: &str,
    pair_deviations: Vec<f64>,
    mode: Aggregation,
) -> Result<SpeakerDeviation> {
    if pair_deviations.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "speaker {spk_id:?} has no utterance deviations"
        )));
    }
    if let Some(bad) = pair_deviations.iter().find(|d| !(0.0..=2.0).contains(*d)) {
        return Err(Error::InvalidArgument(format!(
            "deviation {bad} outside [0, 2] for speaker {spk_id:?}"
        )));
    }
    let sum: f64 = pair_deviations.iter().sum();
    let aggregate = match mode {
        Aggregation::Mean => sum / pair_deviations.len() as f64,
        Aggregation::Sum => sum,
    };
    Ok(SpeakerDeviation {
        spk_id: spk_id.to_string(),
        utterance_deviations: pair_deviations,
        aggregate,
        aggregation: mode,
    })
}

fn round_to(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCurve {
    /// `proportions.len() + 1` ascending edges starting at 0.
    pub bin_edges: Vec<f64>,
    pub proportions: Vec<f64>,
    pub alpha: f64,
    pub method: Method,
    pub aggregation: Aggregation,
    pub bin_width: f64,
}

impl DistributionCurve {
    pub fn to_csv_string(&self) -> String {
        let mut out = format!(
            "# method={} alpha={} aggregation={} bin_width={}\nbin_left,bin_right,proportion\n",
            self.method,
            alpha_label(self.alpha),
            self.aggregation,
            self.bin_width
        );
        for (i, p) in self.proportions.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                p
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Histogram of speaker aggregates over `[0, max]` with bins of `bin_width`,
/// left-closed; the maximum falls inside the last bin.
pub fn deviation_distribution(
    devs: &[SpeakerDeviation],
    bin_width: f64,
    method: Method,
    alpha: f64,
) -> Result<DistributionCurve> {
    if devs.is_empty() {
        return Err(Error::InvalidArgument("no speaker deviations".into()));
    }
    if bin_width <= 0.0 || !bin_width.is_finite() {
        return Err(Error::InvalidArgument(format!("bin width {bin_width}")));
    }
    let aggregation = devs[0].aggregation;
    let max = devs.iter().map(|d| d.aggregate).fold(0.0, f64::max);
    let index = |v: f64| (v.max(0.0) / bin_width + GRID_EPS).floor() as usize;
    let n_bins = index(max) + 1;
    let mut counts = vec![0usize; n_bins];
    for d in devs {
        counts[index(d.aggregate).min(n_bins - 1)] += 1;
    }
    let total = devs.len() as f64;
    Ok(DistributionCurve {
        bin_edges: (0..=n_bins)
            .map(|i| round_to(i as f64 * bin_width, 12))
            .collect(),
        proportions: counts.into_iter().map(|c| c as f64 / total).collect(),
        alpha,
        method,
        aggregation,
        bin_width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCurvePoint {
    pub alpha: f64,
    pub mean_deviation: f64,
}

/// 0.80, 0.85, ..., 1.20.
pub fn default_alpha_grid() -> Vec<f64> {
    parse_grid("0.8:1.2:0.05").expect("default grid is valid")
}

/// Parses `lo:hi:step` into an inclusive, evenly spaced grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("grid {spec:?}: expected lo:hi:step"));
    let parts = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(bad)?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if step <= 0.0 || hi < lo {
        return Err(bad());
    }
    let steps = (hi - lo) / step;
    if (steps - steps.round()).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "grid {spec:?}: step does not divide the range"
        )));
    }
    Ok((0..=steps.round() as usize)
        .map(|i| round_to(lo + i as f64 * step, 9))
        .collect())
}

pub fn curve_to_csv(
    points: &[PerturbationCurvePoint],
    method: Method,
    grid: &str,
    source: &EmbeddingSource,
) -> String {
    let mut out = format!(
        "# method={method} grid={grid} embedding={}\nalpha,mean_deviation\n",
        source.describe()
    );
    for p in points {
        out.push_str(&format!("{},{}\n", p.alpha, p.mean_deviation));
    }
    out
}

#[derive(Debug, Clone)]
pub enum EmbeddingSource {
    /// The built-in cepstral baseline, computed from audio.
    Builtin,
    /// Precomputed vectors keyed by utterance id. Perturbed utterances are
    /// looked up by their pseudo-utterance id.
    Imported(BTreeMap<String, EmbeddingVector>),
}

impl EmbeddingSource {
    pub fn describe(&self) -> String {
        match self {
            EmbeddingSource::Builtin => "builtin".into(),
            EmbeddingSource::Imported(m) => format!(
                "imported(dim={})",
                m.values().next().map_or(0, EmbeddingVector::dim)
            ),
        }
    }

    fn lookup(&self, utt_id: &str) -> Result<&EmbeddingVector> {
        match self {
            EmbeddingSource::Imported(m) => m
                .get(utt_id)
                .ok_or_else(|| Error::MissingEmbedding(utt_id.to_string())),
            EmbeddingSource::Builtin => unreachable!("builtin embeddings are computed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub f0_hz: f64,
    pub fmax_hz: f64,
    pub stft: StftParams,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            f0_hz: DEFAULT_F0_HZ,
            fmax_hz: DEFAULT_FMAX_HZ,
            stft: StftParams::default(),
        }
    }
}

struct PreparedUtterance {
    spk_id: String,
    utt_id: String,
    audio: Option<AudioBuffer>,
    original: EmbeddingVector,
}

/// A manifest loaded once and reused across alphas. With the built-in
/// source, audio and original embeddings are held in memory.
pub struct DeviationAnalyzer<'a> {
    utterances: Vec<PreparedUtterance>,
    source: &'a EmbeddingSource,
    opts: AnalysisOptions,
}

fn check_alpha(alpha: f64) -> Result<()> {
    let (lo, hi) = NO_DISTORTION_RANGE;
    if alpha.is_finite() && alpha >= lo - GRID_EPS && alpha <= hi + GRID_EPS {
        Ok(())
    } else {
        Err(Error::AlphaOutsideNoDistortionRange(alpha))
    }
}

impl<'a> DeviationAnalyzer<'a> {
    /// Loads every utterance in parallel on the current rayon pool.
    pub fn prepare(
        manifest: &Manifest,
        source: &'a EmbeddingSource,
        opts: AnalysisOptions,
    ) -> Result<Self> {
        if manifest.is_empty() {
            return Err(Error::InvalidArgument("empty manifest".into()));
        }
        let mut utterances = manifest
            .entries()
            .par_iter()
            .map(|e| {
                let load = || -> Result<PreparedUtterance> {
                    let (audio, original) = match source {
                        EmbeddingSource::Builtin => {
                            let audio = read_wav(&e.path, CANONICAL_RATE_HZ)?;
                            let emb = baseline_embedding(&audio)?;
                            (Some(audio), emb)
                        }
                        EmbeddingSource::Imported(_) => (None, source.lookup(&e.utt_id)?.clone()),
                    };
                    Ok(PreparedUtterance {
                        spk_id: e.spk_id.clone(),
                        utt_id: e.utt_id.clone(),
                        audio,
                        original,
                    })
                };
                load().map_err(|err| err.for_utterance(&e.utt_id))
            })
            .collect::<Result<Vec<_>>>()?;
        utterances.sort_by(|a, b| (&a.spk_id, &a.utt_id).cmp(&(&b.spk_id, &b.utt_id)));
        Ok(Self {
            utterances,
            source,
            opts,
        })
    }

    fn perturbed_embedding(
        &self,
        u: &PreparedUtterance,
        method: Method,
        alpha: f64,
    ) -> Result<EmbeddingVector> {
        match (self.source, &u.audio) {
            (EmbeddingSource::Builtin, Some(audio)) => {
                let out = match method {
                    Method::Sp => speed_perturb(audio, &SpeedSpec::new(alpha)?)?,
                    Method::Vtlp => vtlp_perturb(
                        audio,
                        &WarpParams::with_bounds(alpha, self.opts.f0_hz, self.opts.fmax_hz)?
                            .with_stft(self.opts.stft),
                    )?,
                };
                baseline_embedding(&out)
            }
            _ if alpha_label(alpha) == "1.00" => Ok(u.original.clone()),
            _ => self
                .source
                .lookup(&pseudo_utterance_id(&u.utt_id, method, alpha))
                .cloned(),
        }
    }

    /// Speaker-level deviations for one alpha, sorted by speaker id.
    pub fn speaker_deviations(
        &self,
        method: Method,
        alpha: f64,
        mode: Aggregation,
    ) -> Result<Vec<SpeakerDeviation>> {
        check_alpha(alpha)?;
        let devs = self
            .utterances
            .par_iter()
            .map(|u| {
                self.perturbed_embedding(u, method, alpha)
                    .and_then(|ep| cosine_deviation(&u.original, &ep))
                    .map_err(|err| err.for_utterance(&u.utt_id))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut by_speaker: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (u, d) in self.utterances.iter().zip(devs) {
            by_speaker.entry(&u.spk_id).or_default().push(d);
        }
        by_speaker
            .into_iter()
            .map(|(spk, d)| speaker_deviation(spk, d, mode))
            .collect()
    }

    /// Mean of the speaker-level (mean-aggregated) deviations at each alpha.
    pub fn perturbation_curve(
        &self,
        method: Method,
        alpha_grid: &[f64],
    ) -> Result<Vec<PerturbationCurvePoint>> {
        if alpha_grid.is_empty() {
            return Err(Error::InvalidArgument("empty alpha grid".into()));
        }
        alpha_grid.iter().try_for_each(|&a| check_alpha(a))?;
        alpha_grid
            .iter()
            .map(|&alpha| {
                let speakers = self.speaker_deviations(method, alpha, Aggregation::Mean)?;
                let mean = speakers.iter().map(|s| s.aggregate).sum::<f64>()
                    / speakers.len() as f64;
                Ok(PerturbationCurvePoint {
                    alpha,
                    mean_deviation: mean,
                })
            })
            .collect()
    }
}

pub fn deviation_perturbation_curve(
    manifest: &Manifest,
    method: Method,
    alpha_grid: &[f64],
    embed: &EmbeddingSource,
) -> Result<Vec<PerturbationCurvePoint>> {
    DeviationAnalyzer::prepare(manifest, embed, AnalysisOptions::default())?
        .perturbation_curve(method, alpha_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::normalized(values.to_vec()).unwrap()
    }

    fn spk(agg: f64) -> SpeakerDeviation {
        speaker_deviation("s", vec![agg], Aggregation::Mean).unwrap()
    }

    #[test]
    fn cosine_examples() {
        let e = unit(&[1.0, 0.0, 0.0]);
        assert_eq!(cosine_deviation(&e, &e).unwrap(), 0.0);
        assert!((cosine_deviation(&e, &unit(&[0.0, 1.0, 0.0])).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_deviation(&e, &unit(&[-1.0, 0.0, 0.0])).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        let e = unit(&[1.0, 0.0]);
        assert!(matches!(
            cosine_deviation(&e, &unit(&[1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            cosine_deviation(&e, &EmbeddingVector::new(vec![0.0, 0.0])),
            Err(Error::ZeroVector(_))
        ));
    }

    #[test]
    fn speaker_aggregation() {
        let m = speaker_deviation("a", vec![0.1, 0.3], Aggregation::Mean).unwrap();
        assert!((m.aggregate - 0.2).abs() < 1e-15);
        let s = speaker_deviation("a", vec![0.1, 0.3], Aggregation::Sum).unwrap();
        assert!((s.aggregate - 0.4).abs() < 1e-15);
        for mode in [Aggregation::Mean, Aggregation::Sum] {
            assert_eq!(speaker_deviation("a", vec![0.5], mode).unwrap().aggregate, 0.5);
        }
        assert!(speaker_deviation("a", vec![], Aggregation::Mean).is_err());
        assert!(speaker_deviation("a", vec![2.5], Aggregation::Mean).is_err());
    }

    #[test]
    fn distribution_single_bin() {
        let devs = vec![spk(0.25); 4];
        let d = deviation_distribution(&devs, 0.01, Method::Vtlp, 0.9).unwrap();
        let nonzero: Vec<usize> = (0..d.proportions.len())
            .filter(|&i| d.proportions[i] > 0.0)
            .collect();
        assert_eq!(nonzero.len(), 1);
        let i = nonzero[0];
        assert_eq!((d.bin_edges[i], d.bin_edges[i + 1]), (0.25, 0.26));
        assert_eq!(d.proportions[i], 1.0);
    }

    #[test]
    fn distribution_hand_binned() {
        let d = deviation_distribution(&[spk(0.10), spk(0.19)], 0.1, Method::Sp, 1.1).unwrap();
        assert_eq!(d.bin_edges, vec![0.0, 0.1, 0.2]);
        assert_eq!(d.proportions, vec![0.0, 1.0]);
    }

    #[test]
    fn distribution_errors() {
        assert!(deviation_distribution(&[], 0.01, Method::Sp, 0.9).is_err());
        assert!(deviation_distribution(&[spk(0.1)], 0.0, Method::Sp, 0.9).is_err());
    }

    #[test]
    fn distribution_csv_layout() {
        let d = deviation_distribution(&[spk(0.10), spk(0.19)], 0.1, Method::Sp, 1.1).unwrap();
        assert_eq!(
            d.to_csv_string(),
            "# method=SP alpha=1.10 aggregation=mean bin_width=0.1\n\
             bin_left,bin_right,proportion\n0,0.1,0\n0.1,0.2,1\n"
        );
    }

    #[test]
    fn grids() {
        let g = default_alpha_grid();
        assert_eq!(g, vec![0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2]);
        assert_eq!(parse_grid("0.9:1.1:0.1").unwrap(), vec![0.9, 1.0, 1.1]);
        assert_eq!(parse_grid("1:1:0.1").unwrap(), vec![1.0]);
        for bad in ["0.8:1.2", "0.8:1.2:0", "1.2:0.8:0.05", "a:b:c", "0.8:1.2:0.07"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn imported_source_lookup() {
        let mut map = BTreeMap::new();
        map.insert("u1".to_string(), unit(&[1.0, 0.0]));
        map.insert(pseudo_utterance_id("u1", Method::Vtlp, 0.9), unit(&[1.0, 1.0]));
        map.insert("u2".to_string(), unit(&[0.0, 1.0]));
        map.insert(pseudo_utterance_id("u2", Method::Vtlp, 0.9), unit(&[0.0, 1.0]));
        let source = EmbeddingSource::Imported(map);
        let m = Manifest::new(vec![
            crate::corpus::ManifestEntry {
                utt_id: "u1".into(),
                spk_id: "a".into(),
                path: "u1.wav".into(),
                duration_s: None,
            },
            crate::corpus::ManifestEntry {
                utt_id: "u2".into(),
                spk_id: "a".into(),
                path: "u2.wav".into(),
                duration_s: None,
            },
        ])
        .unwrap();
        let a = DeviationAnalyzer::prepare(&m, &source, AnalysisOptions::default()).unwrap();
        let s = a.speaker_deviations(Method::Vtlp, 0.9, Aggregation::Sum).unwrap();
        let expected = 1.0 - 0.5f64.sqrt();
        assert!((s[0].aggregate - expected).abs() < 1e-12);
        assert_eq!(a.speaker_deviations(Method::Vtlp, 1.0, Aggregation::Mean).unwrap()[0].aggregate, 0.0);
        let err = a.speaker_deviations(Method::Sp, 0.9, Aggregation::Mean).unwrap_err();
        assert!(err.to_string().contains("u1"), "{err}");
        assert!(a.perturbation_curve(Method::Vtlp, &[0.7]).is_err());
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            a in prop::collection::vec(-1.0f64..1.0, 8),
            b in prop::collection::vec(-1.0f64..1.0, 8),
            c in 0.01f64..100.0,
        ) {
            let ea = EmbeddingVector::new(a);
            let eb = EmbeddingVector::new(b);
            prop_assume!(ea.norm() > 1e-3 && eb.norm() > 1e-3);
            let d = cosine_deviation(&ea, &eb).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            prop_assert!((d - cosine_deviation(&eb, &ea).unwrap()).abs() < 1e-9);
            prop_assert!((d - cosine_deviation(&ea.scaled(c), &eb).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn mean_aggregate_is_bounded(devs in prop::collection::vec(0.0f64..2.0, 1..20)) {
            let s = speaker_deviation("s", devs.clone(), Aggregation::Mean).unwrap();
            let lo = devs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = devs.iter().cloned().fold(0.0, f64::max);
            prop_assert!(s.aggregate >= lo - 1e-12 && s.aggregate <= hi + 1e-12);
        }

        #[test]
        fn proportions_sum_to_one(
            aggs in prop::collection::vec(0.0f64..2.0, 1..50),
            width in 0.001f64..0.5,
        ) {
            let devs: Vec<SpeakerDeviation> = aggs.iter().map(|&a| spk(a)).collect();
            let d = deviation_distribution(&devs, width, Method::Sp, 0.9).unwrap();
            prop_assert!((d.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(d.proportions.iter().all(|&p| p >= 0.0));
            prop_assert_eq!(d.bin_edges.len(), d.proportions.len() + 1);
            prop_assert!(d.bin_edges.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
