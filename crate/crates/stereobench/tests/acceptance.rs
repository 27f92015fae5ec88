//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs with `cargo test --test acceptance`.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use stereobench::commands::{cmd_degrade, DegradeRequest};
use stereobench::manifest::sha256_hex;
use stereobench::score::score_submission;
use stereobench_core::budget::{check_budget, check_totals, parse_graph};
use stereobench_core::degrade::{synthesize_track1, DegradationConfig};
use stereobench_core::mech::ensemble::uniform_weights;
use stereobench_core::mech::loss::{max_relative_error, numeric_gradient, GRAD_CHECK_FLOOR};
use stereobench_core::mech::{
    bp_loss, charbonnier_loss, ensemble_params, fft_loss, pam_forward, FeatureMap, ModelParams,
};
use stereobench_core::metrics::{psnr_rgb, rank_leaderboard, ssim};
use stereobench_core::resize::bicubic_resize;
use stereobench_core::selftest::{run_selftest, SelftestOptions};
use stereobench_core::synth::{distorted, natural_image};
use stereobench_core::{Image, Image8, Rng, StereoPair};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, pass: String, fail: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail())
    }
}

// Dense Matlab-semantics bicubic resize, written from the imresize
// definition: Keys cubic (a = -0.5), kernel widened by 1/scale when
// shrinking, weights normalized per output sample, symmetric boundary.
fn keys(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.5 * a.powi(3) - 2.5 * a * a + 1.0
    } else if a <= 2.0 {
        -0.5 * a.powi(3) + 2.5 * a * a - 4.0 * a + 2.0
    } else {
        0.0
    }
}

fn resize_matrix(n_in: usize, n_out: usize) -> Vec<Vec<f64>> {
    let scale = n_out as f64 / n_in as f64;
    let shrink = scale < 1.0;
    let width = if shrink { 4.0 / scale } else { 4.0 };
    let mut m = vec![vec![0.0; n_in]; n_out];
    for (i, row) in m.iter_mut().enumerate() {
        let u = (i + 1) as f64 / scale + 0.5 * (1.0 - 1.0 / scale);
        let left = (u - width / 2.0).floor() as i64;
        let taps = width.ceil() as i64 + 2;
        let idx: Vec<i64> = (0..taps).map(|t| left + t).collect();
        let w: Vec<f64> = idx
            .iter()
            .map(|&j| {
                let x = u - j as f64;
                if shrink {
                    scale * keys(scale * x)
                } else {
                    keys(x)
                }
            })
            .collect();
        let sum: f64 = w.iter().sum();
        for (&j, wt) in idx.iter().zip(w) {
            let period = 2 * n_in as i64;
            let k = (j - 1).rem_euclid(period);
            let k = if k < n_in as i64 { k } else { period - 1 - k };
            row[k as usize] += wt / sum;
        }
    }
    m
}

fn oracle_downscale(img: &Image8, s: usize) -> Image8 {
    let (h, w) = img.dims();
    let (oh, ow) = (h / s, w / s);
    let (mh, mw) = (resize_matrix(h, oh), resize_matrix(w, ow));
    let mut out = vec![0u8; oh * ow * 3];
    for c in 0..3 {
        let mut tmp = vec![0.0; oh * w];
        for (y, row) in mh.iter().enumerate() {
            for (i, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    for x in 0..w {
                        tmp[y * w + x] += a * f64::from(img.get(i, x, c));
                    }
                }
            }
        }
        for y in 0..oh {
            for (x, row) in mw.iter().enumerate() {
                let v: f64 = row.iter().enumerate().map(|(j, &b)| b * tmp[y * w + j]).sum();
                out[(y * ow + x) * 3 + c] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Image8::new(oh, ow, out).unwrap()
}

fn c1_track1_fidelity() -> Outcome {
    let sizes = [(180, 320); 6]
        .into_iter()
        .chain([(120, 200), (120, 200), (64, 96), (36, 52)]);
    let fixtures: Vec<Image8> = sizes
        .enumerate()
        .map(|(i, (h, w))| natural_image(h, w, 100 + i as u32))
        .collect();
    let (mut total, mut exact, mut worst, mut elapsed) = (0usize, 0usize, 0u8, 0.0);
    for (i, img) in fixtures.iter().enumerate() {
        let hr = StereoPair::new(
            img.to_float(),
            natural_image(img.height(), img.width(), 200 + i as u32).to_float(),
        )
        .unwrap();
        let t = Instant::now();
        let lr = synthesize_track1(&hr, 4).map_err(|e| e.to_string())?;
        elapsed += t.elapsed().as_secs_f64();
        for (ours, hr_view) in [(lr.left(), hr.left()), (lr.right(), hr.right())] {
            let want = oracle_downscale(&hr_view.quantize8(), 4);
            for (a, b) in ours.data().iter().zip(want.data()) {
                let d = a.abs_diff(*b);
                worst = worst.max(d);
                exact += usize::from(d == 0);
                total += 1;
            }
        }
    }
    let frac = exact as f64 / total as f64;
    check(
        worst <= 1 && frac >= 0.99 && elapsed < 5.0,
        format!(
            "max {worst} level, {:.3}% exact, {elapsed:.2}s for 10 pairs",
            100.0 * frac
        ),
        || format!("max {worst} levels, {:.3}% exact, {elapsed:.2}s", 100.0 * frac),
    )
}

fn c2_metric_oracle() -> Outcome {
    let csv = fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/tests/fixtures/metric_pairs.csv"
    ))
    .map_err(|e| e.to_string())?;
    let (mut dp, mut ds, mut n) = (0.0f64, 0.0f64, 0);
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| f[i].parse::<f64>().unwrap();
        let gt = natural_image(num(0) as usize, num(1) as usize, num(2) as u32);
        let sr = distorted(&gt, num(2) as u32, num(3) as u32);
        dp = dp.max((psnr_rgb(&gt, &sr).unwrap() - num(4)).abs());
        ds = ds.max((ssim(&gt, &sr).unwrap() - num(5)).abs());
        n += 1;
    }
    let gt = Image8::from_fn(24, 24, |y, x, c| ((y * 7 + x * 3 + c * 50) % 250) as u8);
    let sr = Image8::from_fn(24, 24, |y, x, c| gt.get(y, x, c) + 1);
    let p1 = psnr_rgb(&gt, &sr).unwrap();
    check(
        n == 20 && dp < 1e-4 && ds < 1e-5 && (p1 - 48.1308).abs() < 1e-4,
        format!("{n} pairs, max |dPSNR| {dp:.1e} dB, max |dSSIM| {ds:.1e}, MSE=1 gives {p1:.4} dB"),
        || format!("{n} pairs, |dPSNR| {dp:e}, |dSSIM| {ds:e}, MSE=1 gives {p1}"),
    )
}

fn c3_budget() -> Outcome {
    let g = parse_graph(
        r#"{"input":{"height":180,"width":320,"views":2,"channels":48},
            "layers":[{"op":"conv2d","in_ch":48,"out_ch":48,"k":3,"stride":1,"padding":"same","groups":1,"bias":true}]}"#,
    )
    .map_err(|e| e.to_string())?;
    let v = check_budget(&g);
    let hissr = check_totals(918_000, 235_280_000_000);
    let buptmm = check_totals(999_540, 0);
    check(
        v.total_macs == 2_388_787_200 && v.total_params == 20_784 && hissr.passed() && buptmm.pass_params,
        format!(
            "conv {} MACs / {} params; 0.918M / 235.28G PASS; 999.54K PASS",
            v.total_macs, v.total_params
        ),
        || {
            format!(
                "conv {} MACs / {} params; hissr {}; buptmm {}",
                v.total_macs,
                v.total_params,
                hissr.passed(),
                buptmm.pass_params
            )
        },
    )
}

fn c4_pam() -> Outcome {
    let (h, w, c) = (6, 40, 16);
    let mut rng = Rng::new(44);
    for d in [0usize, 2, 8] {
        let wide = FeatureMap::from_fn(h, w + d, c, |_, _, _| rng.normal()).normalize_pixels();
        let left = FeatureMap::from_fn(h, w, c, |y, x, k| wide.get(y, x, k));
        let right = FeatureMap::from_fn(h, w, c, |y, x, k| wide.get(y, x + d, k));
        let out = pam_forward(&left, &right, 0.1).map_err(|e| e.to_string())?;
        let disp = out.disparity_l();
        let bad = (0..h)
            .flat_map(|y| (d..w).map(move |x| (y, x)))
            .filter(|&(y, x)| disp[y * w + x] != d as isize)
            .count();
        if bad > 0 {
            return Err(format!("d={d}: {bad} non-boundary columns wrong"));
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (h, w, c) = (
            1 + (rng.uniform() * 4.0) as usize,
            2 + (rng.uniform() * 30.0) as usize,
            1 + (rng.uniform() * 12.0) as usize,
        );
        let amp = 10.0 * rng.uniform();
        let mut feat = || FeatureMap::from_fn(h, w, c, |_, _, _| amp * rng.normal());
        let (l, r) = (feat(), feat());
        let out = pam_forward(&l, &r, 0.1).map_err(|e| e.to_string())?;
        for y in 0..h {
            for m in [out.attn_r2l(y), out.attn_l2r(y)] {
                for row in m.chunks(w) {
                    worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
                }
            }
        }
    }
    check(
        worst <= 1e-6,
        format!("d = 0, 2, 8 exact at all non-boundary columns; 50 random inputs, max |row sum - 1| {worst:.1e}"),
        || format!("row sum error {worst:e}"),
    )
}

fn c5_gradients() -> Outcome {
    let mut worst = [0.0f64; 3];
    let seeds = 20u64;
    for seed in 0..seeds {
        let mut rng = Rng::new(1000 + seed);
        let mut img = |h, w| Image::from_fn(h, w, |_, _, _| rng.uniform());
        let (sr, hr) = (img(8, 12), img(8, 12));
        let ch = |x: &Image| charbonnier_loss(x, &hr, 1e-3).unwrap();
        let ff = |x: &Image| fft_loss(x, &hr, 1e-3).unwrap();
        worst[0] = worst[0].max(max_relative_error(
            ch(&sr).1.data(),
            &numeric_gradient(|x| ch(x).0, &sr, 1e-5),
            GRAD_CHECK_FLOOR,
        ));
        worst[1] = worst[1].max(max_relative_error(
            ff(&sr).1.data(),
            &numeric_gradient(|x| ff(x).0, &sr, 1e-5),
            GRAD_CHECK_FLOOR,
        ));
        let (left, right) = (img(16, 12), img(16, 12));
        let lr = StereoPair::new(img(4, 3), img(4, 3)).unwrap();
        let bp = |l: &Image| bp_loss(&StereoPair::new(l.clone(), right.clone()).unwrap(), &lr, 4).unwrap();
        worst[2] = worst[2].max(max_relative_error(
            bp(&left).1.left().data(),
            &numeric_gradient(|x| bp(x).0, &left, 1e-5),
            GRAD_CHECK_FLOOR,
        ));
    }
    let x = natural_image(16, 16, 3).to_float();
    let at_eq = (
        charbonnier_loss(&x, &x, 1e-3).unwrap().0,
        fft_loss(&x, &x, 1e-3).unwrap().0,
    );
    let sr = StereoPair::new(x.clone(), natural_image(16, 16, 4).to_float()).unwrap();
    let lr = StereoPair::new(
        bicubic_resize(sr.left(), 4, 4, true),
        bicubic_resize(sr.right(), 4, 4, true),
    )
    .unwrap();
    let bp_zero = bp_loss(&sr, &lr, 4).unwrap().0;
    check(
        worst.iter().all(|&e| e < 1e-4) && at_eq == (1e-3, 1e-3) && bp_zero == 0.0,
        format!(
            "{seeds} seeds; max rel err charbonnier {:.1e}, fft {:.1e}, bp {:.1e}; sr == hr gives {} / {}; consistent BP {}",
            worst[0], worst[1], worst[2], at_eq.0, at_eq.1, bp_zero
        ),
        || format!("errors {worst:?}; values at equality {at_eq:?}; bp {bp_zero}"),
    )
}

fn c6_ensemble() -> Outcome {
    let mut rng = Rng::new(6);
    let model = |rng: &mut Rng| {
        let mut m = ModelParams::new();
        m.insert("conv.weight", (0..300).map(|_| rng.normal()).collect())
            .unwrap();
        m.insert("conv.bias", (0..17).map(|_| 1e3 * rng.normal()).collect())
            .unwrap();
        m
    };
    let base = model(&mut rng);
    for n in 1..=8 {
        let avg = ensemble_params(&vec![base.clone(); n], &uniform_weights(n)).map_err(|e| e.to_string())?;
        if avg != base {
            return Err(format!("{n} identical models do not average bit-exactly"));
        }
    }
    let models = [model(&mut rng), model(&mut rng), model(&mut rng)];
    let alpha = [0.5, 0.3, 0.2];
    let avg = ensemble_params(&models, &alpha).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (name, vals) in avg.iter() {
        for (k, v) in vals.iter().enumerate() {
            let want: f64 = models.iter().zip(alpha).map(|(m, a)| a * m.get(name).unwrap()[k]).sum();
            worst = worst.max((v - want).abs() / want.abs().max(1.0));
        }
    }
    check(
        worst <= 1e-12,
        format!("1..8 identical models bit-exact; weighted three-model max error {worst:.1e}"),
        || format!("weighted error {worst:e}"),
    )
}

fn png_checksums(dir: &Path) -> Vec<(String, String)> {
    common::pngs(dir)
        .iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                sha256_hex(&fs::read(p).unwrap()),
            )
        })
        .collect()
}

fn c7_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let hr = tmp.path().join("hr");
    common::hr_fixture(&hr, 3, 96, 128);
    let mut notes = Vec::new();
    for (track, cfg) in [(1, DegradationConfig::default()), (2, DegradationConfig::track2())] {
        let run = |name: &str, threads: usize| {
            let req = DegradeRequest::new(&hr, tmp.path().join(name), cfg.clone());
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let out = pool.install(|| cmd_degrade(&req)).map_err(|e| e.to_string())?;
            Ok::<_, String>((png_checksums(&out.output_dir), out.manifest))
        };
        let (a, ma) = run(&format!("t{track}a"), 1)?;
        let (b, mb) = run(&format!("t{track}b"), 4)?;
        if a != b || ma != mb || a.len() != 6 {
            return Err(format!("track {track}: runs differ ({} vs {} files)", a.len(), b.len()));
        }
        notes.push(format!("track {track}: {} files identical", a.len()));
    }
    Ok(notes.join(", "))
}

fn c8_throughput() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (gt, sr) = (tmp.path().join("gt"), tmp.path().join("sr"));
    // four distinct images per side, copied across the 100 scenes
    let mut sources = Vec::new();
    for k in 0..4u32 {
        let g = natural_image(720, 1280, 300 + k);
        let d = distorted(&g, k, 6);
        let name = |side: &str| tmp.path().join(format!("{side}{k}.png"));
        stereobench::io::save_image(&g, &name("g")).unwrap();
        stereobench::io::save_image(&d, &name("d")).unwrap();
        sources.push((name("g"), name("d")));
    }
    fs::create_dir_all(&gt).unwrap();
    fs::create_dir_all(&sr).unwrap();
    for i in 1..=100u32 {
        for (j, v) in ["L", "R"].iter().enumerate() {
            let (g, d) = &sources[(i as usize * 2 + j) % 4];
            fs::copy(g, gt.join(format!("{i:04}_{v}.png"))).unwrap();
            fs::copy(d, sr.join(format!("{i:04}_{v}.png"))).unwrap();
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t = Instant::now();
    let report = pool.install(|| score_submission(&gt, &sr)).map_err(|e| e.to_string())?;
    let score_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let suites = pool.install(|| run_selftest(&SelftestOptions::default()));
    let selftest_s = t.elapsed().as_secs_f64();
    let all_pass = suites.iter().all(|r| r.passed);
    check(
        report.images().len() == 200 && score_s < 60.0 && selftest_s < 60.0 && all_pass,
        format!("200 images at 1280x720 scored in {score_s:.1}s on one thread; selftest {selftest_s:.1}s"),
        || {
            format!(
                "{} images in {score_s:.1}s; selftest {selftest_s:.1}s, all pass {all_pass}",
                report.images().len()
            )
        },
    )
}

fn c9_ranking() -> Outcome {
    let table = [
        ("entry-01", 23.6503),
        ("entry-02", 23.6105),
        ("entry-03", 23.6070),
        ("entry-04", 23.5941),
        ("entry-05", 23.5896),
        ("entry-06", 23.5725),
        ("entry-07", 23.5271),
        ("entry-08", 23.4851),
        ("entry-09", 23.4598),
        ("entry-10", 23.4510),
        ("entry-11", 23.4270),
        ("entry-12", 23.3888),
        ("entry-13", 23.1895),
        ("entry-14", 23.0977),
    ];
    // scramble the input so the order is the ranking's doing
    let mut shuffled = table.to_vec();
    shuffled.reverse();
    shuffled.swap(2, 9);
    let board = rank_leaderboard(&shuffled);
    let ok = board.len() == 14
        && board
            .iter()
            .enumerate()
            .all(|(i, e)| e.rank == i + 1 && e.team == table[i].0);
    check(ok, "ranks 1-14 reproduced".into(), || format!("{board:?}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("track-1 degradation fidelity", c1_track1_fidelity),
        ("metric oracle agreement", c2_metric_oracle),
        ("budget checker", c3_budget),
        ("pam disparity recovery", c4_pam),
        ("gradient suite", c5_gradients),
        ("ensemble", c6_ensemble),
        ("degrade determinism", c7_determinism),
        ("throughput", c8_throughput),
        ("ranking protocol", c9_ranking),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
