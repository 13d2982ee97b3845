use std::fs;
use std::path::Path;

use spkaug_core::corpus::EntryStatus;
use spkaug_core::*;

fn corpus(dir: &Path) -> Manifest {
    let cfg = SynthConfig {
        speakers: 2,
        utterances_per_speaker: 5,
        duration_s: 0.5,
        ..SynthConfig::default()
    };
    write_synthetic_corpus(dir, &cfg).unwrap()
}

fn opts(workers: usize) -> RenderOptions {
    RenderOptions {
        workers,
        ..RenderOptions::default()
    }
}

fn wav_count(dir: &Path) -> usize {
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            n += wav_count(&p);
        } else if p.extension().is_some_and(|x| x == "wav") {
            n += 1;
        }
    }
    n
}

#[test]
fn renders_every_perturbed_entry() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = corpus(src.path());
    let plan = AugmentationPlan::new(Method::Sp, vec![0.9, 1.1]).unwrap();
    let expanded = expand_manifest(&m, &plan).unwrap();
    assert_eq!(expanded.len(), 30);
    let report = run_augmentation(&expanded, &SourceMap::from_expanded(&expanded), out.path(), &opts(4)).unwrap();
    assert_eq!(report.success(), 20);
    assert_eq!(report.failed(), 0);
    assert_eq!(wav_count(out.path()), 20);
    assert!(report.records.iter().all(|r| r.realized_ratio.is_some()));
}

#[test]
fn rerun_is_idempotent() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = corpus(src.path());
    let plan = AugmentationPlan::new(Method::Vtlp, vec![0.9, 1.1]).unwrap();
    let expanded = expand_manifest(&m, &plan).unwrap();
    let sources = SourceMap::from_expanded(&expanded);
    let first = run_augmentation(&expanded, &sources, out.path(), &opts(2)).unwrap();
    assert_eq!(first.rendered(), 20);
    let second = run_augmentation(&expanded, &sources, out.path(), &opts(3)).unwrap();
    assert_eq!(second.rendered(), 0);
    assert_eq!(second.skipped(), 20);

    // a truncated output is re-rendered
    let victim = out.path().join(&expanded.entries.iter().find(|e| !e.is_original()).unwrap().path);
    let info = fs::metadata(&victim).unwrap().len();
    fs::write(&victim, &fs::read(&victim).unwrap()[..(info / 2) as usize]).unwrap();
    let third = run_augmentation(&expanded, &sources, out.path(), &opts(1)).unwrap();
    assert_eq!(third.rendered(), 1);
    assert_eq!(third.skipped(), 19);
}

#[test]
fn one_bad_source_is_isolated() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = corpus(src.path());
    fs::write(&m.entries()[3].path, b"not a wav").unwrap();
    let plan = AugmentationPlan::new(Method::Sp, vec![0.9]).unwrap();
    let expanded = expand_manifest(&m, &plan).unwrap();
    let report = run_augmentation(&expanded, &SourceMap::from_expanded(&expanded), out.path(), &opts(4)).unwrap();
    assert_eq!(report.failed(), 1);
    assert_eq!(report.success(), 9);
    let failed = report.records.iter().find(|r| r.status == EntryStatus::Failed).unwrap();
    assert!(failed.utt_id.starts_with(&m.entries()[3].utt_id));
    assert!(failed.error.as_deref().is_some_and(|e| !e.is_empty()));
}

#[test]
fn speed_output_length() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let s: Vec<f64> = (0..32000)
        .map(|n| 0.3 * (2.0 * std::f64::consts::PI * 440.0 * n as f64 / 16000.0).sin())
        .collect();
    let path = src.path().join("long.wav");
    write_wav(&AudioBuffer::from_f64(&s, 16000).unwrap(), &path, Encoding::Pcm16).unwrap();
    let m = Manifest::new(vec![ManifestEntry {
        utt_id: "long".into(),
        spk_id: "s".into(),
        path,
        duration_s: None,
    }])
    .unwrap();
    let expanded = expand_manifest(&m, &AugmentationPlan::new(Method::Sp, vec![0.9]).unwrap()).unwrap();
    let report = run_augmentation(&expanded, &SourceMap::from_expanded(&expanded), out.path(), &opts(1)).unwrap();
    assert_eq!(report.records[0].output_samples, Some(35556));
    assert_eq!(report.records[0].realized_ratio.as_deref(), Some("10/9"));
    let written = read_wav(out.path().join(&expanded.entries[1].path), 16000).unwrap();
    assert_eq!(written.len(), 35556);
}

#[test]
fn report_and_outputs_do_not_depend_on_workers() {
    let src = tempfile::tempdir().unwrap();
    let m = corpus(src.path());
    let plans = [
        AugmentationPlan::new(Method::Sp, vec![0.9, 1.1]).unwrap(),
        AugmentationPlan::new(Method::Vtlp, vec![0.9, 1.1]).unwrap(),
    ];
    let expanded = expand_fused(&m, &plans).unwrap();
    let sources = SourceMap::from_expanded(&expanded);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_augmentation(&expanded, &sources, a.path(), &opts(1)).unwrap();
    let rb = run_augmentation(&expanded, &sources, b.path(), &opts(8)).unwrap();
    assert_eq!(ra.to_jsonl(), rb.to_jsonl());
    for e in expanded.entries.iter().filter(|e| !e.is_original()) {
        assert_eq!(fs::read(a.path().join(&e.path)).unwrap(), fs::read(b.path().join(&e.path)).unwrap());
    }
}

#[test]
fn unwritable_out_dir_is_fatal() {
    let src = tempfile::tempdir().unwrap();
    let m = corpus(src.path());
    let expanded = expand_manifest(&m, &AugmentationPlan::new(Method::Sp, vec![0.9]).unwrap()).unwrap();
    let blocker = src.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    assert!(run_augmentation(&expanded, &SourceMap::from_expanded(&expanded), blocker.join("out"), &opts(1)).is_err());
}
