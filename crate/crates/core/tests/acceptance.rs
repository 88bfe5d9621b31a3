//! End-to-end acceptance checks. Each test prints one `PASS` or `FAIL` line.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use common::{check_network, check_op, rng, synthetic_image, OPS, STEP, TOLERANCE};
use epsr_core::imaging::{
    degrade, gaussian_kernel_2d, load_png, noise_field, DegradationSpec, Downsample, ImageRGB, BD_KERNEL_SIZE,
    BD_SIGMA, DN_SIGMA,
};
use epsr_core::metrics::{psnr_y, ssim_y, total_loss};
use epsr_core::model::{
    attention_weight_entries, census, ep_forward_detailed, epsr_forward, param_specs, reeb_forward, Attention,
    EpResidual,
};
use epsr_core::trainer::{BicubicUpsampler, Dataset, EpsrUpsampler, SrModel, TrainConfig, Trainer};
use epsr_core::{Dihedral, Eager, Epsr, EpsrConfig, Graph, ParamStore, Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, what: &str, ok: bool, detail: String) {
    println!("{} criterion {n}: {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} ({what}) failed: {detail}");
}

fn random_tensor(shape: [usize; 4], r: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_, _, _, _| r.random_range(-1.0..1.0))
}

fn set5_dir() -> PathBuf {
    std::env::var_os("EPSR_SET5_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/Set5"))
}

fn load_set5() -> Option<Vec<ImageRGB>> {
    let mut paths: Vec<_> = std::fs::read_dir(set5_dir())
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    let images: Vec<_> = paths.iter().map(|p| load_png(p).unwrap()).collect();
    (images.len() == 5).then_some(images)
}

#[test]
fn criterion_01_bicubic_baselines() {
    let targets = [(2u32, 33.66, 0.9229), (3, 30.40, 0.8686), (4, 28.43, 0.8109)];
    let Some(images) = load_set5() else {
        verdict(
            1,
            "bicubic baselines",
            false,
            format!("five Set5 PNGs not found in {} (set EPSR_SET5_DIR)", set5_dir().display()),
        );
        return;
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for (scale, psnr_ref, ssim_ref) in targets {
        let s = scale as usize;
        let model = BicubicUpsampler { scale: s };
        let (mut psnr, mut ssim) = (0.0, 0.0);
        for hr in &images {
            let hr = hr.modcrop(s).unwrap();
            let lr = degrade(&hr, DegradationSpec::bi(scale).unwrap(), 0).unwrap().to_image();
            let sr = model.super_resolve(&lr).unwrap();
            psnr += psnr_y(&sr, &hr, s).unwrap() / 5.0;
            ssim += ssim_y(&sr, &hr, s).unwrap() / 5.0;
        }
        ok &= (psnr - psnr_ref).abs() <= 0.10 && (ssim - ssim_ref).abs() <= 0.005;
        detail.push(format!("x{scale} {psnr:.2}/{ssim:.4} (target {psnr_ref}/{ssim_ref})"));
    }
    verdict(1, "bicubic baselines", ok, detail.join(", "));
}

#[test]
fn criterion_02_gradient_correctness() {
    let start = Instant::now();
    let mut worst = (0.0, String::new());
    for op in OPS {
        let r = check_op(op);
        if r.max_rel > worst.0 {
            worst = (r.max_rel, format!("{op} {}", r.worst));
        }
    }
    let net = check_network(&EpsrConfig::tiny(1, 8, 2), [1, 3, 8, 8], 1);
    let ok = worst.0 < TOLERANCE && net.max_rel < TOLERANCE;
    verdict(
        2,
        "gradient correctness",
        ok,
        format!(
            "{} ops max rel {:.2e}; tiny network (h={STEP}) max rel {:.2e}, {} of {} entries over {TOLERANCE} (worst {}); {:.0?}",
            OPS.len(),
            worst.0,
            net.max_rel,
            net.over_tolerance,
            net.checked,
            net.worst,
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_03_structural_laws() {
    let counts: Vec<usize> = (0..=7).map(|g| EpsrConfig::tiny(g, 4, 2).block_count()).collect();
    let counts_ok = counts.iter().enumerate().all(|(g, &n)| n == 1 << g) && counts[7] == 128;

    // Zero weights with the fused residual routed through EP: every block
    // returns its input scaled by 1/(1 + eps).
    let cfg = EpsrConfig {
        ep_residual: EpResidual::Recab,
        ..EpsrConfig::tiny(2, 4, 2)
    };
    let mut store = ParamStore::<f64>::constant(&cfg, 0.0).unwrap();
    for d in 0..cfg.block_count() {
        store.get_mut(&format!("reeb.{d}.fuse.w2")).unwrap().data_mut()[0] = 0.0;
    }
    let mut r = rng(3);
    let mut pass_dev: f64 = 0.0;
    for d in 0..cfg.block_count() {
        let x = random_tensor([1, 4, 6, 5], &mut r);
        let mut g = Eager::new();
        let xn = g.constant(x.clone());
        let y = reeb_forward(&mut g, &store, &cfg, &xn, d).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            pass_dev = pass_dev.max((a - b).abs() / b.abs().max(1e-12));
        }
    }
    let pass_ok = pass_dev <= 2e-5;

    let mut shapes_ok = true;
    for scale in 2..=4 {
        let cfg = EpsrConfig::tiny(1, 4, scale);
        let net = Epsr::<f64>::init(cfg.clone(), &mut rng(scale as u64)).unwrap();
        let mut g = Eager::new();
        let x = g.constant(random_tensor([2, 3, 5, 7], &mut r));
        let y = epsr_forward(&mut g, &net.params, &cfg, &x).unwrap();
        let s = scale as usize;
        shapes_ok &= y.shape().dims() == [2, 3, 5 * s, 7 * s];
    }
    verdict(
        3,
        "structural laws",
        counts_ok && pass_ok && shapes_ok,
        format!("blocks {counts:?}; pass-through max rel deviation {pass_dev:.2e}; shape law x2..x4 {shapes_ok}"),
    );
}

#[test]
fn criterion_04_edge_profile_oracle() {
    let (h, w, c) = (10, 12, 4);
    let step_col = w / 2;
    let cfg = EpsrConfig::tiny(0, c, 2);
    let mut store = ParamStore::<f64>::constant(&cfg, 0.0).unwrap();
    // Identity: image channel k copies feature channel k through the centre tap.
    let wt = store.get_mut("reeb.0.ep.image.weight").unwrap();
    for k in 0..3 {
        wt.data_mut()[((k * c + k) * 3 + 1) * 3 + 1] = 1.0;
    }
    let mut r = rng(4);
    let feat = Tensor::from_fn([1, c, h, w], |_, ch, _, x| {
        if ch < 3 {
            if x >= step_col {
                1.0
            } else {
                0.0
            }
        } else {
            r.random_range(-1.0..1.0)
        }
    });
    let mut g = Eager::new();
    let f = g.constant(feat.clone());
    let fe = g.constant(Tensor::zeros([1, c, h, w]));
    let ep = ep_forward_detailed(&mut g, &store, &cfg, &f, &fe, 0).unwrap();

    // Brute force: same tap order and divisor as a zero-padded 3x3 box.
    let ninth = 1.0 / 9.0;
    let mut oracle = vec![0.0; 3 * h * w];
    for k in 0..3 {
        for y in 0..h {
            for x in 0..w {
                let mut blur = 0.0;
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (yy, xx) = (y as isize + dy, x as isize + dx);
                        if (0..h as isize).contains(&yy) && (0..w as isize).contains(&xx) {
                            blur += feat.at(0, k, yy as usize, xx as usize) * ninth;
                        }
                    }
                }
                oracle[(k * h + y) * w + x] = (feat.at(0, k, y, x) - blur).max(0.0);
            }
        }
    }
    let mask = &*ep.mask;
    let exact = mask.data() == oracle.as_slice();
    let non_negative = mask.data().iter().all(|&v| v >= 0.0);
    let mut stray = 0;
    let mut support = 0;
    for k in 0..3 {
        for y in 0..h {
            for x in 0..w {
                let near_step = x + 1 >= step_col && x <= step_col + 1;
                let border = y == 0 || x == 0 || y == h - 1 || x == w - 1;
                let v = mask.at(0, k, y, x);
                if v != 0.0 {
                    support += 1;
                    if !near_step && !border {
                        stray += 1;
                    }
                }
            }
        }
    }
    verdict(
        4,
        "edge-profile oracle",
        exact && non_negative && stray == 0 && support > 0,
        format!("exact match {exact}, non-negative {non_negative}, nonzero {support}, outside step/border {stray}"),
    );
}

fn full_image_loss(net: &Epsr<f32>, lr: &ImageRGB, hr: &ImageRGB) -> f64 {
    let mut g = Eager::new();
    let sr = g.constant(net.forward(&lr.to_tensor::<f32>()).unwrap());
    let hr = g.constant(hr.to_tensor::<f32>());
    total_loss(&mut g, &sr, &hr).unwrap().1.total
}

#[test]
fn criterion_05_tiny_overfit() {
    let start = Instant::now();
    let hr = synthetic_image(96);
    let spec = DegradationSpec::bi(2).unwrap();
    let lr = degrade(&hr, spec, 0).unwrap().to_image();
    let bicubic = psnr_y(&BicubicUpsampler { scale: 2 }.super_resolve(&lr).unwrap(), &hr, 2).unwrap();
    let data = Dataset::new("synthetic", spec, vec![("synthetic".into(), hr.clone(), None)], 0).unwrap();
    let model = Epsr::init(EpsrConfig::tiny(2, 16, 2), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let initial = full_image_loss(&model, &lr, &hr);
    let cfg = TrainConfig {
        lr0: 1e-3,
        lr_patch: 24,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(model, &data, cfg).unwrap();
    trainer.run(500, None).unwrap();
    let net = trainer.into_model();
    let last = full_image_loss(&net, &lr, &hr);
    let psnr = psnr_y(&EpsrUpsampler { net: &net, ensemble: false }.super_resolve(&lr).unwrap(), &hr, 2).unwrap();
    let ratio = last / initial;
    verdict(
        5,
        "tiny overfit",
        ratio < 0.2 && psnr >= bicubic + 0.5,
        format!(
            "loss {initial:.4} -> {last:.4} ({:.1}%), PSNR {psnr:.2} dB vs bicubic {bicubic:.2} dB; {:.0?}",
            100.0 * ratio,
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_06_loss_identity() {
    let mut r = rng(6);
    let mut mismatches = 0;
    let mut worst_l1: f64 = 0.0;
    for _ in 0..100 {
        let (h, w) = (r.random_range(3..12), r.random_range(3..12));
        let sr = Tensor::<f32>::from_fn([1, 3, h, w], |_, _, _, _| r.random_range(0.0..1.0));
        let hr = Tensor::<f32>::from_fn([1, 3, h, w], |_, _, _, _| r.random_range(0.0..1.0));
        let mut t = Tape::new();
        let (a, b) = (t.constant(sr.clone()), t.constant(hr.clone()));
        let (_, report) = total_loss(&mut t, &a, &b).unwrap();
        if report.total != report.l1 + 0.1 * report.gradient {
            mismatches += 1;
        }
        let l1 = sr.data().iter().zip(hr.data()).map(|(x, y)| (x - y).abs() as f64).sum::<f64>() / sr.len() as f64;
        worst_l1 = worst_l1.max((l1 - report.l1).abs());
    }
    verdict(
        6,
        "loss identity",
        mismatches == 0 && worst_l1 < 1e-6,
        format!("100 pairs, {mismatches} mismatches; l1 vs direct sum max diff {worst_l1:.1e}"),
    );
}

fn tiny_trained_model(steps: u64, run_dir: Option<&std::path::Path>) -> (Epsr<f32>, String) {
    let hr = synthetic_image(48);
    let spec = DegradationSpec::bi(2).unwrap();
    let data = Dataset::new("synthetic", spec, vec![("synthetic".into(), hr, None)], 0).unwrap();
    let model = Epsr::init(EpsrConfig::tiny(1, 8, 2), &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let cfg = TrainConfig {
        lr0: 1e-3,
        lr_patch: 12,
        batch_size: 4,
        seed: 11,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(model, &data, cfg).unwrap();
    trainer.run(steps, run_dir).unwrap();
    let history = epsr_core::trainer::format_history(trainer.history());
    (trainer.into_model(), history)
}

#[test]
fn criterion_07_self_ensemble_equivariance() {
    let (net, _) = tiny_trained_model(30, None);
    let mut r = rng(7);
    let x = Tensor::<f32>::from_fn([1, 3, 7, 9], |_, _, _, _| r.random_range(0.0..1.0));
    let base = net.self_ensemble(&x).unwrap();
    let mut worst: f32 = 0.0;
    for d in Dihedral::all() {
        let lhs = net.self_ensemble(&d.apply(&x)).unwrap();
        let rhs = d.apply(&base);
        for (a, b) in lhs.data().iter().zip(rhs.data()) {
            worst = worst.max((a - b).abs());
        }
    }
    verdict(
        7,
        "self-ensemble equivariance",
        worst <= 1e-5,
        format!("max abs difference over 8 transforms {worst:.2e}"),
    );
}

#[test]
fn criterion_08_degradation_conformance() {
    let k = gaussian_kernel_2d(BD_KERNEL_SIZE, BD_SIGMA).unwrap();
    let sum: f64 = k.iter().sum();
    // Least squares of ln w = a - r^2 / (2 sigma^2) over the taps.
    let half = (BD_KERNEL_SIZE / 2) as f64;
    let pts: Vec<(f64, f64)> = k
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let (y, x) = ((i / BD_KERNEL_SIZE) as f64 - half, (i % BD_KERNEL_SIZE) as f64 - half);
            (x * x + y * y, w.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let sigma = (-1.0 / (2.0 * slope)).sqrt();

    let draws = noise_field(1_000_000, DN_SIGMA, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let std = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();

    let img = synthetic_image(48);
    let specs = [
        DegradationSpec::bi(2).unwrap(),
        DegradationSpec::bi(3).unwrap(),
        DegradationSpec::bi(4).unwrap(),
        DegradationSpec::Bd {
            downsample: Downsample::Bicubic,
        },
        DegradationSpec::Bd {
            downsample: Downsample::Decimate,
        },
        DegradationSpec::Dn,
    ];
    let deterministic = specs.iter().all(|&s| {
        let a = degrade(&img, s, 5).unwrap().to_image();
        let b = degrade(&img, s, 5).unwrap().to_image();
        a.pixels() == b.pixels()
    });
    let ok = (sum - 1.0).abs() <= 1e-9 && (sigma - 1.6).abs() <= 0.01 && (std - 30.0).abs() <= 0.15 && deterministic;
    verdict(
        8,
        "degradation conformance",
        ok,
        format!(
            "kernel sum {sum:.12}, fitted sigma {sigma:.4}, noise std {std:.3} over 1e6 draws, byte-deterministic {deterministic}"
        ),
    );
}

#[test]
fn criterion_09_attention_census() {
    let eca = EpsrConfig::default();
    let ca = EpsrConfig {
        attention: Attention::Ca { reduction: 16 },
        ..EpsrConfig::default()
    };
    let (e, c) = (attention_weight_entries(&eca), attention_weight_entries(&ca));
    let (te, tc) = (census(&param_specs(&eca)), census(&param_specs(&ca)));
    let diff = tc as i64 - te as i64;
    let ok = e == 9 && c == 512 && diff > 0 && (10_000..100_000).contains(&diff);
    verdict(
        9,
        "attention census",
        ok,
        format!("per-block weights ECA {e} vs CA {c}; g=7 totals ECA {te}, CA {tc}, difference {diff}"),
    );
}

#[test]
fn criterion_10_determinism() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let runs: Vec<_> = dirs.iter().map(|d| tiny_trained_model(20, Some(d.path()))).collect();
    let read = |i: usize, f: &str| std::fs::read(dirs[i].path().join(f)).unwrap();
    let same_ckpt = read(0, "final.ckpt") == read(1, "final.ckpt");
    let same_history = runs[0].1 == runs[1].1 && read(0, "history.tsv") == read(1, "history.tsv");
    let rows = runs[0].1.lines().count();
    verdict(
        10,
        "determinism",
        same_ckpt && same_history && rows == 20,
        format!("checkpoints identical {same_ckpt}, histories identical {same_history} ({rows} lines)"),
    );
}
