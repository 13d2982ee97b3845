use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use rayon::prelude::*;
use serde::Serialize;
use spkaug_core::corpus::{alpha_label, utterance_seed};
use spkaug_core::deviation::{
    curve_to_csv, parse_grid, AnalysisOptions, DeviationAnalyzer, EmbeddingSource,
};
use spkaug_core::{
    deviation_distribution, expand_fused, import_embeddings, load_manifest,
    mix_noise, read_wav, run_augmentation, write_wav, AugmentationPlan, Encoding, Error,
    ExpandedManifest, Manifest, ManifestEntry, Method, RenderOptions, SourceMap, WarpParams,
    CANONICAL_RATE_HZ,
};

use crate::{AugmentArgs, CurvesArgs, ExpandArgs, MixArgs, WarpArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

type CliResult = Result<ExitCode, CliError>;

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_alphas(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("invalid alpha {a:?} in {list:?}")))
        })
        .collect()
}

fn workers(requested: Option<usize>) -> Result<usize, CliError> {
    match requested {
        Some(0) => Err(usage("--workers must be at least 1")),
        Some(n) => Ok(n),
        None => Ok(thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| usage(format!("thread pool: {e}")))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Writes the resolved configuration of a run; worker count is left out so
/// the file does not vary with parallelism.
fn write_config(out: &Path, name: &str, config: &impl Serialize) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(config).expect("config serializes");
    write_file(&out.join(format!("{name}.config.json")), json + "\n")
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(path).map_err(|e| {
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

#[derive(Serialize)]
struct PlanConfig {
    method: Method,
    alphas: Vec<f64>,
    keep_original: bool,
}

#[derive(Serialize)]
struct ExpandConfig<'a> {
    manifest: &'a Path,
    format: spkaug_core::ManifestFormat,
    plans: Vec<PlanConfig>,
    strict_range: bool,
    expanded: PathBuf,
}

pub fn expand(args: ExpandArgs) -> CliResult {
    if args.method.len() != args.alphas.len() {
        return Err(usage(format!(
            "{} --method values but {} --alphas lists; give one list per method",
            args.method.len(),
            args.alphas.len()
        )));
    }
    let keep = !args.no_keep_original;
    let plans = args
        .method
        .iter()
        .zip(&args.alphas)
        .enumerate()
        .map(|(i, (&m, list))| {
            // originals are contributed once, by the first plan
            AugmentationPlan::with_range_check(m.into(), parse_alphas(list)?, args.range.strict())
                .map(|p| p.keep_original(keep && i == 0))
                .map_err(usage)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let manifest_path = absolute(&args.input.manifest)?;
    let format = args.input.format.into();
    let manifest = load_manifest(&manifest_path, format)?;
    let expanded = expand_fused(&manifest, &plans).map_err(|e| match e {
        Error::InvalidPlan(_) => usage(e),
        other => other.into(),
    })?;

    create_dir(&args.out)?;
    let target = args.out.join("expanded.csv");
    expanded.write_csv(&target)?;
    write_config(
        &args.out,
        "expand",
        &ExpandConfig {
            manifest: &manifest_path,
            format,
            plans: plans
                .iter()
                .map(|p| PlanConfig {
                    method: p.method,
                    alphas: p.alphas.clone(),
                    keep_original: p.keep_original,
                })
                .collect(),
            strict_range: args.range.strict(),
            expanded: target.clone(),
        },
    )?;
    println!(
        "speakers: {} → {}",
        manifest.speaker_count(),
        expanded.speaker_count()
    );
    println!("utterances: {} → {}", manifest.len(), expanded.len());
    println!("wrote {}", target.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AugmentConfig<'a> {
    manifest: &'a Path,
    sources: Option<&'a Path>,
    f0_hz: f64,
    fmax_hz: f64,
    strict_range: bool,
    encoding: Encoding,
    allow_partial: bool,
}

#[derive(Serialize)]
struct Timing {
    workers: usize,
    wall_clock_s: f64,
}

fn check_warp(warp: &WarpArgs) -> Result<(), CliError> {
    WarpParams::with_bounds(1.0, warp.f0_hz, warp.fmax_hz)
        .map(|_| ())
        .map_err(usage)
}

pub fn augment(args: AugmentArgs) -> CliResult {
    check_warp(&args.warp)?;
    let workers = workers(args.workers)?;
    let expanded = ExpandedManifest::read_csv(&args.manifest)?;
    let mut sources = SourceMap::from_expanded(&expanded);
    if let Some(path) = &args.sources {
        sources.extend_from_manifest(&load_manifest(path, args.format.into())?);
    }
    let opts = RenderOptions {
        workers,
        f0_hz: args.warp.f0_hz,
        fmax_hz: args.warp.fmax_hz,
        strict_range: args.range.strict(),
        ..RenderOptions::default()
    };
    let report = run_augmentation(&expanded, &sources, &args.out, &opts)?;
    report.write_jsonl(args.out.join("report.jsonl"))?;
    write_config(
        &args.out,
        "augment",
        &AugmentConfig {
            manifest: &args.manifest,
            sources: args.sources.as_deref(),
            f0_hz: opts.f0_hz,
            fmax_hz: opts.fmax_hz,
            strict_range: opts.strict_range,
            encoding: opts.encoding,
            allow_partial: args.allow_partial,
        },
    )?;
    let timing = Timing {
        workers,
        wall_clock_s: report.wall_clock.as_secs_f64(),
    };
    write_file(
        &args.out.join("timing.json"),
        serde_json::to_string_pretty(&timing).expect("timing serializes") + "\n",
    )?;

    println!(
        "rendered: {}, skipped: {}, failed: {}",
        report.rendered(),
        report.skipped(),
        report.failed()
    );
    for r in report.records.iter().filter(|r| r.error.is_some()) {
        eprintln!("failed {}: {}", r.utt_id, r.error.as_deref().unwrap_or(""));
    }
    if report.failed() > 0 && !args.allow_partial {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CurvesConfig<'a> {
    manifest: &'a Path,
    format: spkaug_core::ManifestFormat,
    method: Method,
    alphas: &'a [f64],
    grid: &'a str,
    bin_width: f64,
    aggregation: spkaug_core::Aggregation,
    embeddings: Option<&'a Path>,
    f0_hz: f64,
    fmax_hz: f64,
}

pub fn curves(args: CurvesArgs) -> CliResult {
    check_warp(&args.warp)?;
    let workers = workers(args.workers)?;
    let method: Method = args.method.into();
    let alphas = parse_alphas(&args.alphas)?;
    let grid = parse_grid(&args.grid).map_err(usage)?;
    if args.bin_width <= 0.0 || !args.bin_width.is_finite() {
        return Err(usage("--bin-width must be positive"));
    }
    let source = match &args.embeddings {
        Some(path) => EmbeddingSource::Imported(import_embeddings(path)?),
        None => EmbeddingSource::Builtin,
    };
    let format = args.input.format.into();
    let manifest = load_manifest(&args.input.manifest, format)?;
    let opts = AnalysisOptions {
        f0_hz: args.warp.f0_hz,
        fmax_hz: args.warp.fmax_hz,
        ..AnalysisOptions::default()
    };
    create_dir(&args.out)?;

    let method_tag = method.as_str().to_ascii_lowercase();
    pool(workers)?.install(|| -> Result<(), CliError> {
        let analyzer = DeviationAnalyzer::prepare(&manifest, &source, opts)?;
        for &alpha in &alphas {
            let devs = analyzer.speaker_deviations(method, alpha, args.agg.into())?;
            let dist = deviation_distribution(&devs, args.bin_width, method, alpha)?;
            dist.write_csv(args.out.join(format!(
                "distribution_{method_tag}_{}.csv",
                alpha_label(alpha)
            )))?;
        }
        let curve = analyzer.perturbation_curve(method, &grid)?;
        write_file(
            &args.out.join(format!("curve_{method_tag}.csv")),
            curve_to_csv(&curve, method, &args.grid, &source),
        )?;
        Ok(())
    })?;
    write_config(
        &args.out,
        "curves",
        &CurvesConfig {
            manifest: &args.input.manifest,
            format,
            method,
            alphas: &alphas,
            grid: &args.grid,
            bin_width: args.bin_width,
            aggregation: args.agg.into(),
            embeddings: args.embeddings.as_deref(),
            f0_hz: opts.f0_hz,
            fmax_hz: opts.fmax_hz,
        },
    )?;
    println!(
        "wrote {} distribution csv(s) and curve_{method_tag}.csv to {}",
        alphas.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct MixConfig<'a> {
    manifest: &'a Path,
    format: spkaug_core::ManifestFormat,
    noise: &'a Path,
    snr_db: f64,
    seed: u64,
}

fn file_stem(utt_id: &str) -> String {
    utt_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn mix(args: MixArgs) -> CliResult {
    if !args.snr.is_finite() {
        return Err(usage("--snr must be finite"));
    }
    let workers = workers(args.workers)?;
    let format = args.input.format.into();
    let manifest = load_manifest(&args.input.manifest, format)?;
    let noise = read_wav(&args.noise, CANONICAL_RATE_HZ)?;
    let noise_dir = args.out.join("noise");
    create_dir(&noise_dir)?;

    let entries = pool(workers)?.install(|| {
        manifest
            .entries()
            .par_iter()
            .map(|e| -> Result<ManifestEntry, Error> {
                let audio = read_wav(&e.path, CANONICAL_RATE_HZ)?;
                let mixed = mix_noise(&audio, &noise, args.snr, utterance_seed(args.seed, &e.utt_id))?;
                let path = noise_dir.join(format!("{}.wav", file_stem(&e.utt_id)));
                write_wav(&mixed, &path, Encoding::Pcm16)?;
                Ok(ManifestEntry {
                    utt_id: format!("{}#noise", e.utt_id),
                    spk_id: e.spk_id.clone(),
                    path,
                    duration_s: Some(mixed.duration_s()),
                })
            })
            .collect::<Result<Vec<_>, Error>>()
    })?;
    let mixed = Manifest::new(entries)?;
    mixed.write_csv(args.out.join("mixed.csv"))?;
    write_config(
        &args.out,
        "mix",
        &MixConfig {
            manifest: &args.input.manifest,
            format,
            noise: &args.noise,
            snr_db: args.snr,
            seed: args.seed,
        },
    )?;
    println!("mixed {} utterances at {} dB", mixed.len(), args.snr);
    Ok(ExitCode::SUCCESS)
}
