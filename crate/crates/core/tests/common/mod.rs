//! Finite-difference gradient checking shared by the integration suites.
#![allow(dead_code)]

use epsr_core::imaging::sobel_gradients;
use epsr_core::metrics::{gradient_loss, l1_loss};
use epsr_core::model::{epsr_forward, EpsrConfig, ParamStore};
use epsr_core::tensor::{Graph, Tape, Tensor, Var};
use epsr_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-3;
pub const TOLERANCE: f64 = 1e-4;

/// Small enough that no ReLU in the tiny networks changes state within
/// `[x - h, x + h]`, large enough to stay clear of round-off.
pub const FINE_STEP: f64 = 1e-5;

/// Below `ZERO_FLOOR / h` gradients are compared absolutely; the bound sits
/// well above the cancellation noise of a central difference with step `h`.
const ZERO_FLOOR: f64 = 1e-10;

fn relative(a: f64, n: f64, step: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(ZERO_FLOOR / step)
}

#[derive(Debug, Clone)]
pub struct GradReport {
    pub name: String,
    pub checked: usize,
    pub over_tolerance: usize,
    pub max_rel: f64,
    pub worst: String,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.max_rel < TOLERANCE
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform values in `[lo, hi)`, with a random sign when `signed`.
pub fn random(shape: [usize; 4], lo: f64, hi: f64, signed: bool, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_, _, _, _| {
        let v = rng.random_range(lo..hi);
        if signed && rng.random::<bool>() {
            -v
        } else {
            v
        }
    })
}

fn scalar_of(t: &Tape<f64>, v: Var) -> f64 {
    t.get(v).data()[0]
}

/// Checks d(loss)/d(input) for every element of every tensor in `inputs`.
///
/// `f` builds the op under test from the named inputs. Its output is reduced
/// with an L1 distance to a fixed target that sits 0.5 to 1.0 away from the
/// initial output, so the reduction is linear near the evaluation point and
/// weights each output element by a random sign.
pub fn gradcheck<F>(name: &str, inputs: &ParamStore<f64>, seed: u64, f: F) -> GradReport
where
    F: Fn(&mut Tape<f64>, &ParamStore<f64>) -> Result<Var>,
{
    gradcheck_with_step(name, inputs, seed, STEP, f)
}

pub fn gradcheck_with_step<F>(name: &str, inputs: &ParamStore<f64>, seed: u64, step: f64, f: F) -> GradReport
where
    F: Fn(&mut Tape<f64>, &ParamStore<f64>) -> Result<Var>,
{
    let mut r = rng(seed);
    let mut tape = Tape::new();
    let out = f(&mut tape, inputs).expect("forward");
    let target = tape.get(out).map(|v| v);
    let target = Tensor::from_fn(target.shape(), |n, c, y, x| {
        let off = r.random_range(0.5..1.0);
        target.at(n, c, y, x) + if r.random::<bool>() { off } else { -off }
    });

    let loss_of = |store: &ParamStore<f64>| -> f64 {
        let mut t = Tape::new();
        let out = f(&mut t, store).expect("forward");
        let tgt = t.constant(target.clone());
        let l = t.mean_abs_diff(&out, &tgt).expect("loss");
        scalar_of(&t, l)
    };

    let tgt = tape.constant(target.clone());
    let loss = tape.mean_abs_diff(&out, &tgt).expect("loss");
    tape.backward(loss).expect("backward");
    let mut analytic = inputs.clone();
    analytic.clear_grads();
    analytic.accumulate_from(&tape).expect("gradients");

    let mut probe = inputs.clone();
    let names: Vec<String> = inputs.names().map(str::to_owned).collect();
    let mut report = GradReport {
        name: name.to_owned(),
        checked: 0,
        over_tolerance: 0,
        max_rel: 0.0,
        worst: String::new(),
    };
    for pname in names {
        let grad = analytic
            .get(&pname)
            .unwrap()
            .grad()
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; inputs.get(&pname).unwrap().len()]);
        for (i, &a) in grad.iter().enumerate() {
            let orig = inputs.get(&pname).unwrap().data()[i];
            probe.get_mut(&pname).unwrap().data_mut()[i] = orig + step;
            let up = loss_of(&probe);
            probe.get_mut(&pname).unwrap().data_mut()[i] = orig - step;
            let down = loss_of(&probe);
            probe.get_mut(&pname).unwrap().data_mut()[i] = orig;
            let n = (up - down) / (2.0 * step);
            let rel = relative(a, n, step);
            if rel >= TOLERANCE {
                report.over_tolerance += 1;
            }
            if rel > report.max_rel {
                report.max_rel = rel;
                report.worst = format!("{pname}[{i}]: analytic {a:.6e} numeric {n:.6e}");
            }
            report.checked += 1;
        }
    }
    report
}

fn store(items: Vec<(&str, Tensor<f64>)>) -> ParamStore<f64> {
    let mut s = ParamStore::new();
    for (n, t) in items {
        s.insert(n, t).unwrap();
    }
    s
}

fn p(g: &mut Tape<f64>, s: &ParamStore<f64>, name: &str) -> Var {
    g.param(name, s.get(name).unwrap())
}

/// Operators covered by the per-op gradient checks.
pub const OPS: &[&str] = &[
    "conv2d_d1",
    "conv2d_d2",
    "conv2d_d4",
    "conv1d_channel",
    "avg_pool3x3",
    "global_avg_pool",
    "relu",
    "sigmoid",
    "scale_channels",
    "concat_channels",
    "pixel_shuffle",
    "weighted_residual_fuse",
    "weighted_residual_fuse_clipped",
    "sobel_gradients",
    "l1_loss",
    "gradient_loss",
];

pub fn check_op(op: &str) -> GradReport {
    let mut r = rng(op.len() as u64 * 31 + op.as_bytes()[0] as u64);
    let x4 = |r: &mut ChaCha8Rng| random([2, 3, 9, 10], 0.05, 1.0, true, r);
    match op {
        "conv2d_d1" | "conv2d_d2" | "conv2d_d4" => {
            let dil: usize = op[op.len() - 1..].parse().unwrap();
            let s = store(vec![
                ("x", x4(&mut r)),
                ("w", random([4, 3, 3, 3], 0.0, 1.0, true, &mut r)),
                ("b", random([1, 1, 1, 4], 0.0, 1.0, true, &mut r)),
            ]);
            gradcheck(op, &s, 1, move |g, s| {
                let (x, w, b) = (p(g, s, "x"), p(g, s, "w"), p(g, s, "b"));
                g.conv2d(&x, &w, Some(&b), dil, dil)
            })
        }
        "conv1d_channel" => {
            let s = store(vec![
                ("x", random([2, 7, 1, 1], 0.0, 1.0, true, &mut r)),
                ("k", random([1, 1, 1, 5], 0.0, 1.0, true, &mut r)),
            ]);
            gradcheck(op, &s, 2, |g, s| {
                let (x, k) = (p(g, s, "x"), p(g, s, "k"));
                g.conv1d_channel(&x, &k)
            })
        }
        "avg_pool3x3" | "global_avg_pool" | "relu" | "sigmoid" => {
            let s = store(vec![("x", x4(&mut r))]);
            let op = op.to_owned();
            gradcheck(&op.clone(), &s, 3, move |g, s| {
                let x = p(g, s, "x");
                match op.as_str() {
                    "avg_pool3x3" => g.avg_pool3x3(&x),
                    "global_avg_pool" => g.global_avg_pool(&x),
                    "relu" => g.relu(&x),
                    _ => g.sigmoid(&x),
                }
            })
        }
        "scale_channels" => {
            let s = store(vec![("x", x4(&mut r)), ("w", random([2, 3, 1, 1], 0.1, 1.0, false, &mut r))]);
            gradcheck(op, &s, 4, |g, s| {
                let (x, w) = (p(g, s, "x"), p(g, s, "w"));
                g.scale_channels(&x, &w)
            })
        }
        "concat_channels" => {
            let s = store(vec![("a", x4(&mut r)), ("b", random([2, 2, 9, 10], 0.0, 1.0, true, &mut r))]);
            gradcheck(op, &s, 5, |g, s| {
                let (a, b) = (p(g, s, "a"), p(g, s, "b"));
                g.concat_channels(&a, &b)
            })
        }
        "pixel_shuffle" => {
            let s = store(vec![("x", random([2, 8, 3, 4], 0.0, 1.0, true, &mut r))]);
            gradcheck(op, &s, 6, |g, s| {
                let x = p(g, s, "x");
                g.pixel_shuffle(&x, 2)
            })
        }
        "weighted_residual_fuse" | "weighted_residual_fuse_clipped" => {
            let w2 = if op.ends_with("clipped") { -0.4 } else { 1.3 };
            let s = store(vec![
                ("a", x4(&mut r)),
                ("b", x4(&mut r)),
                ("w1", Tensor::scalar(0.7)),
                ("w2", Tensor::scalar(w2)),
            ]);
            gradcheck(op, &s, 7, |g, s| {
                let (a, b, w1, w2) = (p(g, s, "a"), p(g, s, "b"), p(g, s, "w1"), p(g, s, "w2"));
                g.weighted_fuse(&a, &b, &w1, &w2)
            })
        }
        "sobel_gradients" => {
            let s = store(vec![("x", x4(&mut r))]);
            gradcheck(op, &s, 8, |g, s| {
                let x = p(g, s, "x");
                sobel_gradients(g, &x)
            })
        }
        "l1_loss" | "gradient_loss" => {
            // Redraw until every difference and every Sobel difference is
            // well clear of the |.| kink relative to the step.
            let margin = 1e-2;
            let (sr, hr) = (0..100_000)
                .find_map(|_| {
                    let hr = random([1, 3, 4, 5], 0.0, 1.0, false, &mut r);
                    let diff = random([1, 3, 4, 5], margin, 0.5, true, &mut r);
                    let sobel_diff = epsr_core::imaging::sobel(&diff).unwrap();
                    sobel_diff.data().iter().all(|v| v.abs() > margin).then(|| {
                        let sr = Tensor::from_fn(hr.shape(), |n, c, y, x| hr.at(n, c, y, x) + diff.at(n, c, y, x));
                        (sr, hr)
                    })
                })
                .expect("no kink-free loss operands");
            let s = store(vec![("sr", sr), ("hr", hr)]);
            let grad = op == "gradient_loss";
            gradcheck(op, &s, 9, move |g, s| {
                let (sr, hr) = (p(g, s, "sr"), p(g, s, "hr"));
                if grad {
                    gradient_loss(g, &sr, &hr)
                } else {
                    l1_loss(g, &sr, &hr)
                }
            })
        }
        other => panic!("unknown op {other}"),
    }
}

/// Gradient check of the whole network over every parameter and the input.
pub fn check_network(config: &EpsrConfig, input_shape: [usize; 4], seed: u64) -> GradReport {
    check_network_with_step(config, input_shape, seed, STEP)
}

pub fn check_network_with_step(config: &EpsrConfig, input_shape: [usize; 4], seed: u64, step: f64) -> GradReport {
    let mut r = rng(seed);
    let mut inputs = ParamStore::<f64>::init(config, &mut r).unwrap();
    // Zero biases put whole dead channels exactly on a ReLU kink.
    for (name, t) in inputs.iter_mut() {
        if name.ends_with(".bias") {
            for v in t.data_mut() {
*v = r.random_range(-0.1..0.1);
            }
        }
    }
    inputs.insert("input", random(input_shape, 0.0, 1.0, false, &mut r)).unwrap();
    let config = config.clone();
    gradcheck_with_step("epsr", &inputs, seed + 1, step, move |g, s| {
        let x = g.param("input", s.get("input")?);
        epsr_forward(g, s, &config, &x)
    })
}

/// Deterministic test picture: smooth shading, a disk and slanted stripes,
/// so it has both flat regions and sharp edges.
pub fn synthetic_image(side: usize) -> epsr_core::imaging::ImageRGB {
    let c = side as f64 / 96.0;
    epsr_core::imaging::ImageRGB::from_fn(side, side, |x, y| {
        let (fx, fy) = (x as f64 / c, y as f64 / c);
        let r = ((fx - 40.0).powi(2) + (fy - 52.0).powi(2)).sqrt();
        let disk = if r < 22.0 { 90.0 } else { 0.0 };
        let stripes = if ((fx + 0.5 * fy) / 7.0).floor() as i64 % 2 == 0 { 60.0 } else { 0.0 };
        let smooth = 50.0 * (fx / 15.0).sin() * (fy / 21.0).cos();
        let base = 80.0 + smooth;
        let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
        [q(base + disk + stripes), q(base + 0.6 * stripes + 20.0), q(200.0 - disk - 0.5 * smooth)]
    })
    .unwrap()
}
