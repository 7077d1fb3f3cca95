mod support;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveunet::datapipe::{synth_corpus, write_wav, Manifest, Split, SynthSpec};
use waveunet::metrics::{
    composite, composite_unclamped, evaluate_corpus, llr, segment_snrs, ssnr, wss, FrameConfig, MetricsError, CBAK,
    COVL, CSIG,
};
use waveunet::AudioClip;

fn clip(samples: Vec<f64>) -> AudioClip {
    AudioClip::new("x", 16000, samples).unwrap()
}

fn noise(n: usize, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-amp..amp)).collect()
}

#[test]
fn identical_signal_hits_the_ceiling() {
    let cfg = FrameConfig::default();
    for seed in 0..5 {
        let x = clip(noise(4000 + 37 * seed as usize, 0.5, seed));
        assert_eq!(ssnr(&x, &x, &cfg).unwrap(), 35.0);
        assert_eq!(llr(&x, &x, &cfg).unwrap(), 0.0);
        assert!(wss(&x, &x, &cfg).unwrap().abs() < 1e-9);
    }
}

#[test]
fn constructed_ten_db_frames() {
    let a = 0.3;
    let b = a / 10f64.sqrt();
    let clean: Vec<f64> = vec![a; 8000];
    let test: Vec<f64> = (0..8000).map(|t| a + if t % 2 == 0 { b } else { -b }).collect();
    let v = ssnr(&clip(clean), &clip(test), &FrameConfig::default()).unwrap();
    assert!((v - 10.0).abs() < 0.1);
    assert!((v - 10.0).abs() < 1e-9);
}

#[test]
fn anti_signal_is_minus_six_db() {
    let c = noise(6000, 0.4, 2);
    let neg: Vec<f64> = c.iter().map(|v| -v).collect();
    let v = ssnr(&clip(c), &clip(neg), &FrameConfig::default()).unwrap();
    let expect = (10.0 * 0.25f64.log10()).max(-10.0);
    assert!((v - expect).abs() < 1e-2);
    assert!((expect + 6.0206).abs() < 1e-4);
}

#[test]
fn error_scaling_shifts_frame_snrs_by_twenty_db() {
    let cfg = FrameConfig {
        ssnr_floor: -1e9,
        ssnr_ceil: 1e9,
        ..FrameConfig::default()
    };
    let (clean, _) = support::synthetic_pair(8000, 4);
    let err = noise(8000, 0.004, 4);
    let test = clip(clean.samples.iter().zip(&err).map(|(c, e)| c + e).collect());
    let loud = clip(clean.samples.iter().zip(&err).map(|(c, e)| c + 10.0 * e).collect());
    let before = segment_snrs(&clean, &test, &cfg).unwrap();
    let after = segment_snrs(&clean, &loud, &cfg).unwrap();
    assert_eq!(before.len(), after.len());
    for (b, a) in before.iter().zip(&after) {
        assert!((b - a - 20.0).abs() < 1e-9, "{b} {a}");
    }
}

#[test]
fn silent_reference_is_rejected() {
    let z = clip(vec![0.0; 2000]);
    assert!(matches!(
        ssnr(&z, &clip(noise(2000, 0.1, 1)), &FrameConfig::default()),
        Err(MetricsError::AllSilent(_))
    ));
}

#[test]
fn ssnr_matches_loop_reference() {
    let (clean, test) = support::synthetic_pair(12000, 9);
    let got = ssnr(&clean, &test, &FrameConfig::default()).unwrap();
    let want = support::ssnr_oracle(&clean.samples, &test.samples, 480, 120);
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn llr_and_wss_match_straight_line_reimplementation() {
    let cfg = FrameConfig::default();
    let (clean, test) = support::synthetic_pair(8000, 1);
    let l = llr(&clean, &test, &cfg).unwrap();
    let w = wss(&clean, &test, &cfg).unwrap();
    let lo = support::llr_oracle(&clean.samples, &test.samples, 480, 120, 16);
    let wo = support::wss_oracle(&clean.samples, &test.samples, 480, 120, 16000.0);
    assert!(l > 0.05 && w > 1.0, "pair should be clearly distorted: {l} {w}");
    assert!((l - lo).abs() < 1e-9, "llr {l} vs {lo}");
    assert!((w - wo).abs() < 1e-9, "wss {w} vs {wo}");
}

#[test]
fn llr_and_wss_are_nonnegative_on_random_pairs() {
    let cfg = FrameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for i in 0..100 {
        let n = rng.gen_range(480..2400);
        let c = clip(noise(n, rng.gen_range(0.05..0.9), 2 * i));
        let t = clip(noise(n, rng.gen_range(0.05..0.9), 2 * i + 1));
        assert!(llr(&c, &t, &cfg).unwrap() >= 0.0);
        assert!(wss(&c, &t, &cfg).unwrap() >= 0.0);
    }
}

#[test]
fn composite_examples() {
    let c = composite_unclamped(2.40, 0.0, 0.0, 9.97);
    assert!((c.csig - 4.5402).abs() < 1e-12);
    let z = composite_unclamped(0.0, 0.0, 0.0, 0.0);
    assert_eq!((z.csig, z.cbak, z.covl), (3.093, 1.634, 1.594));
    let clamped = composite(4.5, 0.0, 0.0, 35.0);
    assert!(clamped.csig <= 5.0 && clamped.cbak == 5.0);
    assert_eq!(composite(-0.5, 2.0, 100.0, -10.0).csig, 1.0);
}

#[test]
fn composite_slopes_are_the_pinned_coefficients() {
    let base = [2.1, 0.7, 35.0, 6.0];
    let eval = |x: [f64; 4]| {
        let c = composite_unclamped(x[0], x[1], x[2], x[3]);
        [c.csig, c.cbak, c.covl]
    };
    let f0 = eval(base);
    let coeffs = [CSIG, CBAK, COVL];
    for arg in 0..4 {
        let mut x = base;
        x[arg] += 1.0;
        let f1 = eval(x);
        for m in 0..3 {
            assert!((f1[m] - f0[m] - coeffs[m][arg + 1]).abs() < 1e-12);
        }
    }
    let published = [
        [3.093, 0.603, -1.029, -0.009, 0.0],
        [1.634, 0.478, 0.0, -0.007, 0.063],
        [1.594, 0.805, -0.512, -0.007, 0.0],
    ];
    assert_eq!(coeffs, published);
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: std::path::PathBuf,
    manifest: Manifest,
}

fn corpus(copy: impl Fn(&AudioClip, &AudioClip) -> Vec<f64>) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    let spec = SynthSpec {
        train_clips: 4,
        validation_clips: 1,
        test_clips: 6,
        clip_seconds: 0.3,
        ..SynthSpec::default()
    };
    let c = synth_corpus(&spec, 12, &root).unwrap();
    let out = dir.path().join("enhanced");
    std::fs::create_dir_all(&out).unwrap();
    for entry in &c.manifest.entries {
        if entry.split == Split::Test {
            let clean = waveunet::datapipe::read_wav(root.join(&entry.clean)).unwrap();
            let noisy = waveunet::datapipe::read_wav(root.join(&entry.noisy)).unwrap();
            let e = AudioClip::new(entry.id(), 16000, copy(&clean, &noisy)).unwrap();
            write_wav(&e, out.join(format!("{}.wav", entry.id()))).unwrap();
        }
    }
    Fixture {
        _dir: dir,
        root,
        manifest: c.manifest,
    }
}

fn enhanced_dir(f: &Fixture) -> std::path::PathBuf {
    f.root.parent().unwrap().join("enhanced")
}

#[test]
fn perfect_enhancement_scores_ceiling() {
    let f = corpus(|c, _| c.samples.clone());
    let ev = evaluate_corpus(&f.manifest, &f.root, &enhanced_dir(&f), None, &FrameConfig::default()).unwrap();
    assert!(!ev.is_partial());
    assert_eq!(ev.report.per_file.len(), 6);
    assert_eq!(ev.report.ssnr, 35.0);
    assert_eq!(ev.report.llr, 0.0);
    assert!(ev.report.wss.abs() < 1e-9);
    assert!(ev.report.csig.is_none() && ev.report.pesq.is_none());
}

#[test]
fn means_recompute_and_ignore_order() {
    let f = corpus(|_, n| n.samples.clone());
    let cfg = FrameConfig::default();
    let pesq: HashMap<String, f64> = f
        .manifest
        .split(Split::Test)
        .enumerate()
        .map(|(i, e)| (e.id(), 1.5 + 0.25 * i as f64))
        .collect();
    let ev = evaluate_corpus(&f.manifest, &f.root, &enhanced_dir(&f), Some(&pesq), &cfg).unwrap();
    let r = &ev.report;
    let n = r.per_file.len() as f64;
    let col = |g: &dyn Fn(&waveunet::metrics::FileMetrics) -> f64| r.per_file.iter().map(g).sum::<f64>() / n;
    assert!((r.ssnr - col(&|m| m.ssnr)).abs() < 1e-12);
    assert!((r.llr - col(&|m| m.llr)).abs() < 1e-12);
    assert!((r.wss - col(&|m| m.wss)).abs() < 1e-12);
    assert!((r.pesq.unwrap() - col(&|m| m.pesq.unwrap())).abs() < 1e-12);
    assert!((r.csig.unwrap() - col(&|m| m.composite.unwrap().csig)).abs() < 1e-12);
    assert!((r.cbak.unwrap() - col(&|m| m.composite.unwrap().cbak)).abs() < 1e-12);
    assert!((r.covl.unwrap() - col(&|m| m.composite.unwrap().covl)).abs() < 1e-12);

    let mut shuffled = f.manifest.clone();
    shuffled.entries.reverse();
    let ev2 = evaluate_corpus(&shuffled, &f.root, &enhanced_dir(&f), Some(&pesq), &cfg).unwrap();
    assert!((ev2.report.ssnr - r.ssnr).abs() < 1e-12);
    assert!((ev2.report.csig.unwrap() - r.csig.unwrap()).abs() < 1e-12);

    let tsv = r.to_tsv();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "id\tpesq\tcsig\tcbak\tcovl\tssnr");
    assert_eq!(lines.len(), 1 + 6 + 1);
    assert!(lines[7].starts_with("MEAN\t"));
    assert_eq!(lines[7].split('\t').nth(5).unwrap(), format!("{:.4}", r.ssnr));
}

#[test]
fn single_file_means_equal_the_file() {
    let f = corpus(|_, n| n.samples.clone());
    let mut one = f.manifest.clone();
    let first_test = one.entries.iter().position(|e| e.split == Split::Test).unwrap();
    let keep = one.entries[first_test].clone();
    one.entries.retain(|e| e.split != Split::Test);
    one.entries.push(keep);
    let ev = evaluate_corpus(&one, &f.root, &enhanced_dir(&f), None, &FrameConfig::default()).unwrap();
    let m = &ev.report.per_file[0];
    assert_eq!(ev.report.per_file.len(), 1);
    assert_eq!(ev.report.ssnr, m.ssnr);
    assert_eq!(ev.report.llr, m.llr);
    assert_eq!(ev.report.wss, m.wss);
}

#[test]
fn missing_enhanced_file_is_partial() {
    let f = corpus(|_, n| n.samples.clone());
    let victim = f.manifest.split(Split::Test).nth(2).unwrap().id();
    std::fs::remove_file(enhanced_dir(&f).join(format!("{victim}.wav"))).unwrap();
    let ev = evaluate_corpus(&f.manifest, &f.root, &enhanced_dir(&f), None, &FrameConfig::default()).unwrap();
    assert!(ev.is_partial());
    assert_eq!(ev.failures.len(), 1);
    assert_eq!(ev.failures[0].0, victim);
    assert_eq!(ev.report.per_file.len(), 5);
}
