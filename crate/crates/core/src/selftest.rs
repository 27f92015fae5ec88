//! Embedded invariant suites, run by `stereobench selftest`.
//!
//! Each suite re-derives a property from scratch (no stored fixtures), so a
//! fresh build can check itself anywhere. Timing is left to the caller.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::degrade::{add_gaussian_noise, synthesize_track2_ordered, DegradationConfig, Track2Order};
use crate::filter::{convolve2d, gaussian_kernel};
use crate::image::{Image, StereoPair};
use crate::jpeg::jpeg_roundtrip;
use crate::mech::loss::{max_relative_error, numeric_gradient, GRAD_CHECK_FLOOR};
use crate::mech::{bp_loss, charbonnier_loss, ensemble_params, fft_loss, pam_forward, FeatureMap, ModelParams};
use crate::metrics::{psnr_rgb, ssim};
use crate::resize::bicubic_resize;
use crate::rng::Rng;
use crate::synth::{distorted, natural_image};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Deliberate defects for checking that the suites notice them.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Run Track 2 with noise before blur.
    SwapTrack2Order,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

type Suite = fn(&SelftestOptions) -> Result<String, String>;
type LossFn<'a> = &'a dyn Fn(&Image) -> (f64, Image);

const SUITES: [(&str, Suite); 9] = [
    ("kernel normalization", kernels),
    ("resize invariants", resize),
    ("metric symmetry", metrics),
    ("jpeg gray identity", jpeg),
    ("loss gradients", gradients),
    ("pam disparity recovery", pam),
    ("ensemble identity", ensemble),
    ("pipeline order", pipeline_order),
    ("determinism", determinism),
];

pub fn suite_names() -> impl Iterator<Item = &'static str> {
    SUITES.iter().map(|(n, _)| *n)
}

/// Runs `f` for every suite in order, reporting each result as it lands.
pub fn run_each(opts: &SelftestOptions, mut f: impl FnMut(&SuiteResult)) -> Vec<SuiteResult> {
    SUITES
        .iter()
        .map(|(name, suite)| {
            let (passed, detail) = match suite(opts) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            let r = SuiteResult { name, passed, detail };
            f(&r);
            r
        })
        .collect()
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<SuiteResult> {
    run_each(opts, |_| {})
}

fn msg<E: core::fmt::Display>(e: E) -> String {
    format!("{e}")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn kernels(_: &SelftestOptions) -> Result<String, String> {
    let mut n = 0;
    for size in (3..=31).step_by(2) {
        for sigma in [0.1, 0.5, 1.0, 1.5, 3.0, 8.0] {
            let k = gaussian_kernel(sigma, size).map_err(msg)?;
            ensure((k.sum() - 1.0).abs() <= 1e-12, || {
                format!("sigma {sigma} size {size}: sum {}", k.sum())
            })?;
            let w = k.weights();
            ensure((0..w.len()).all(|i| w[i] == w[w.len() - 1 - i]), || {
                format!("sigma {sigma} size {size}: asymmetric")
            })?;
            n += 1;
        }
    }
    Ok(format!("{n} kernels sum to 1"))
}

fn resize(_: &SelftestOptions) -> Result<String, String> {
    let img = natural_image(24, 36, 3).to_float();
    let same = bicubic_resize(&img, 24, 36, true);
    let err = img
        .data()
        .iter()
        .zip(same.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1e-12, || format!("identity resize error {err:e}"))?;
    let flat = Image::filled(24, 36, 0.37);
    for (h, w) in [(6, 9), (7, 5), (50, 71)] {
        let out = bicubic_resize(&flat, h, w, true);
        ensure(out.data().iter().all(|v| (v - 0.37).abs() <= 1e-12), || {
            format!("constant drifts at {h}x{w}")
        })?;
    }
    Ok(format!("identity error {err:.1e}"))
}

fn metrics(_: &SelftestOptions) -> Result<String, String> {
    for seed in 1..6u32 {
        let a = natural_image(40, 48, seed);
        let b = distorted(&a, seed, 2 * seed);
        let (p1, p2) = (psnr_rgb(&a, &b).map_err(msg)?, psnr_rgb(&b, &a).map_err(msg)?);
        ensure(p1 == p2, || format!("psnr asymmetric {p1} vs {p2}"))?;
        let (s1, s2) = (ssim(&a, &b).map_err(msg)?, ssim(&b, &a).map_err(msg)?);
        ensure((s1 - s2).abs() <= 1e-12, || format!("ssim asymmetric {s1} vs {s2}"))?;
        ensure(psnr_rgb(&a, &a).map_err(msg)? == f64::INFINITY, || {
            "psnr(x, x) is finite".into()
        })?;
        let s = ssim(&a, &a).map_err(msg)?;
        ensure((s - 1.0).abs() <= 1e-12, || format!("ssim(x, x) = {s}"))?;
    }
    Ok("5 pairs symmetric, identity gives inf / 1".into())
}

fn jpeg(_: &SelftestOptions) -> Result<String, String> {
    let gray = crate::image::Image8::filled(40, 56, [128, 128, 128]);
    let out = jpeg_roundtrip(&gray, 100).map_err(msg)?;
    ensure(out == gray, || "mid-gray changed at quality 100".into())?;
    Ok("mid-gray survives quality 100".into())
}

fn gradients(_: &SelftestOptions) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = Rng::new(seed);
        let mut img = |h, w| Image::from_fn(h, w, |_, _, _| rng.uniform());
        let (sr, hr) = (img(8, 8), img(8, 8));
        let checks: [(&str, LossFn); 2] = [
            ("charbonnier", &|s| charbonnier_loss(s, &hr, 1e-3).expect("same dims")),
            ("fft", &|s| fft_loss(s, &hr, 1e-3).expect("same dims")),
        ];
        for (name, f) in checks {
            let (_, g) = f(&sr);
            let e = max_relative_error(g.data(), &numeric_gradient(|x| f(x).0, &sr, 1e-5), GRAD_CHECK_FLOOR);
            ensure(e < 1e-4, || format!("{name} seed {seed}: relative error {e:e}"))?;
            worst = worst.max(e);
        }
        let (left, right) = (img(16, 16), img(16, 16));
        let lr = StereoPair::new(img(4, 4), img(4, 4)).expect("same dims");
        let bp =
            |l: &Image| bp_loss(&StereoPair::new(l.clone(), right.clone()).expect("same dims"), &lr, 4).expect("x4");
        let (_, g) = bp(&left);
        let e = max_relative_error(
            g.left().data(),
            &numeric_gradient(|x| bp(x).0, &left, 1e-5),
            GRAD_CHECK_FLOOR,
        );
        ensure(e < 1e-4, || format!("bp seed {seed}: relative error {e:e}"))?;
        worst = worst.max(e);
    }
    Ok(format!("20 seeds x 3 losses, worst relative error {worst:.1e}"))
}

fn pam(_: &SelftestOptions) -> Result<String, String> {
    let (h, w, c) = (4, 32, 16);
    for d in [0usize, 2, 8] {
        let mut rng = Rng::new(d as u64 + 1);
        let wide = FeatureMap::from_fn(h, w + d, c, |_, _, _| rng.normal()).normalize_pixels();
        let left = FeatureMap::from_fn(h, w, c, |y, x, k| wide.get(y, x, k));
        let right = FeatureMap::from_fn(h, w, c, |y, x, k| wide.get(y, x + d, k));
        let out = pam_forward(&left, &right, 0.1).map_err(msg)?;
        let disp = out.disparity_l();
        let hits = (0..h)
            .flat_map(|y| (d..w).map(move |i| y * w + i))
            .filter(|&i| disp[i] == d as isize)
            .count();
        ensure(hits == h * (w - d), || {
            format!("d={d}: {hits} of {} columns recovered", h * (w - d))
        })?;
    }
    Ok("d = 0, 2, 8 recovered at every non-boundary column".into())
}

fn ensemble(_: &SelftestOptions) -> Result<String, String> {
    let mut rng = Rng::new(5);
    let mut m = ModelParams::new();
    m.insert("w", (0..256).map(|_| rng.normal()).collect()).map_err(msg)?;
    for n in [1usize, 3, 7] {
        let models = alloc::vec![m.clone(); n];
        let avg = ensemble_params(&models, &crate::mech::ensemble::uniform_weights(n)).map_err(msg)?;
        ensure(avg == m, || {
            format!("{n} identical models do not average to themselves")
        })?;
    }
    Ok("identical models average to themselves bit for bit".into())
}

fn track2_fixture() -> StereoPair {
    let l = natural_image(64, 64, 21).to_float();
    let r = natural_image(64, 64, 22).to_float();
    StereoPair::new(l, r).expect("same dims")
}

fn pipeline_order(opts: &SelftestOptions) -> Result<String, String> {
    let hr = track2_fixture();
    let cfg = DegradationConfig::track2();
    let order = match opts.fault {
        Some(Fault::SwapTrack2Order) => Track2Order::NoiseBeforeBlur,
        None => Track2Order::Standard,
    };
    let got = synthesize_track2_ordered(&hr, &cfg, &mut Rng::new(cfg.seed), order).map_err(msg)?;
    // blur, downsample, noise, quantize, compress, spelled out stage by stage
    let k = gaussian_kernel(cfg.blur_sigma, cfg.blur_kernel_size).map_err(msg)?;
    let mut rng = Rng::new(cfg.seed);
    let mut manual = |v: &Image| -> Result<_, String> {
        let small = bicubic_resize(&convolve2d(v, &k).map_err(msg)?, 16, 16, false);
        jpeg_roundtrip(
            &add_gaussian_noise(&small, cfg.noise_sigma, &mut rng).quantize8(),
            cfg.jpeg_quality,
        )
        .map_err(msg)
    };
    let want_l = manual(hr.left())?;
    let want_r = manual(hr.right())?;
    ensure(got.left() == &want_l && got.right() == &want_r, || {
        "track 2 output differs from blur -> downsample -> noise -> quantize -> jpeg".into()
    })?;
    Ok("blur -> downsample -> noise -> quantize -> jpeg".into())
}

fn determinism(_: &SelftestOptions) -> Result<String, String> {
    let hr = track2_fixture();
    let cfg = DegradationConfig::track2();
    let run = || synthesize_track2_ordered(&hr, &cfg, &mut Rng::for_scene(cfg.seed, 7), Track2Order::Standard);
    let (a, b) = (run().map_err(msg)?, run().map_err(msg)?);
    ensure(a == b, || "two runs with one seed differ".into())?;
    let c =
        synthesize_track2_ordered(&hr, &cfg, &mut Rng::for_scene(cfg.seed, 8), Track2Order::Standard).map_err(msg)?;
    ensure(a != c, || "different scene streams gave identical noise".into())?;
    Ok("same seed gives identical output; scene streams differ".into())
}
