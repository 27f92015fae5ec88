//! PSNR(RGB), SSIM, score aggregation and leaderboard ranking.
//!
//! Both metrics work on 8-bit data over the full image: no border crop and
//! no luma conversion. PSNR uses the mean squared error over all `3·H·W`
//! samples with peak 255. SSIM is the single-scale index with an 11×11
//! Gaussian window (σ = 1.5), `K1 = 0.01`, `K2 = 0.03`, `L = 255`, computed
//! per channel with half-sample symmetric padding, averaged over every pixel
//! and then over the three channels.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::reflect;
use crate::image::{Image8, SceneId, StereoPair, View, CHANNELS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("SSIM needs both dimensions >= {SSIM_WINDOW}, got {0:?}")]
    TooSmall((usize, usize)),
    #[error("cannot aggregate an empty set of scores")]
    Empty,
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const PEAK: f64 = 255.0;

fn same_dims(a: &Image8, b: &Image8) -> Result<(usize, usize), MetricsError> {
    if a.dims() != b.dims() {
        return Err(MetricsError::DimensionMismatch(a.dims(), b.dims()));
    }
    Ok(a.dims())
}

/// Peak signal-to-noise ratio in dB; `+∞` for identical images.
pub fn psnr_rgb(gt: &Image8, sr: &Image8) -> Result<f64, MetricsError> {
    same_dims(gt, sr)?;
    let sse: u64 = gt
        .data()
        .iter()
        .zip(sr.data())
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / gt.data().len() as f64;
    Ok(10.0 * libm::log10(PEAK * PEAK / mse))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let x = i as f64 - r;
        *v = libm::exp(-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Structural similarity index averaged over pixels and channels.
pub fn ssim(gt: &Image8, sr: &Image8) -> Result<f64, MetricsError> {
    let (h, w) = same_dims(gt, sr)?;
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(MetricsError::TooSmall((h, w)));
    }
    let win = gaussian_window();
    let mut a = vec![0.0; h * w];
    let mut b = vec![0.0; h * w];
    let mut total = 0.0;
    for c in 0..CHANNELS {
        for (i, (pa, pb)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
            *pa = f64::from(gt.data()[i * CHANNELS + c]);
            *pb = f64::from(sr.data()[i * CHANNELS + c]);
        }
        total += ssim_plane(&a, &b, h, w, &win);
    }
    Ok(total / CHANNELS as f64)
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> f64 {
    const R: usize = SSIM_WINDOW / 2;
    let c1 = (SSIM_K1 * PEAK) * (SSIM_K1 * PEAK);
    let c2 = (SSIM_K2 * PEAK) * (SSIM_K2 * PEAK);
    let padded = w + 2 * R;
    // vertical sums of a, b, a², b², ab for one output row, padded for the
    // horizontal pass. The window is symmetric, so mirrored taps are added
    // before weighting.
    let mut bufs = vec![0.0; 5 * padded];
    let mut stats = vec![0.0; 5 * w];
    let mut sum = 0.0;
    for y in 0..h {
        let row = |t: usize| {
            let sy = reflect(y as isize + t as isize - R as isize, h);
            (&a[sy * w..(sy + 1) * w], &b[sy * w..(sy + 1) * w])
        };
        {
            let (ma, rest) = bufs.split_at_mut(padded);
            let (mb, rest) = rest.split_at_mut(padded);
            let (maa, rest) = rest.split_at_mut(padded);
            let (mbb, mab) = rest.split_at_mut(padded);
            let (ca, cb) = row(R);
            let wc = win[R];
            for x in 0..w {
                let (p, q) = (ca[x], cb[x]);
                ma[R + x] = wc * p;
                mb[R + x] = wc * q;
                maa[R + x] = wc * (p * p);
                mbb[R + x] = wc * (q * q);
                mab[R + x] = wc * (p * q);
            }
            for (t, &wt) in win.iter().enumerate().take(R) {
                let (ua, ub) = row(t);
                let (da, db) = row(2 * R - t);
                for x in 0..w {
                    let (p1, q1, p2, q2) = (ua[x], ub[x], da[x], db[x]);
                    ma[R + x] += wt * (p1 + p2);
                    mb[R + x] += wt * (q1 + q2);
                    maa[R + x] += wt * (p1 * p1 + p2 * p2);
                    mbb[R + x] += wt * (q1 * q1 + q2 * q2);
                    mab[R + x] += wt * (p1 * q1 + p2 * q2);
                }
            }
        }
        for buf in bufs.chunks_exact_mut(padded) {
            for k in 1..=R {
                buf[R - k] = buf[R + k - 1];
                buf[R + w - 1 + k] = buf[R + w - k];
            }
        }
        // horizontal pass, one statistic at a time so the inner loop runs
        // along x
        let wc = win[R];
        for (src, dst) in bufs.chunks_exact(padded).zip(stats.chunks_exact_mut(w)) {
            for (d, &v) in dst.iter_mut().zip(&src[R..]) {
                *d = wc * v;
            }
            for (t, &wt) in win.iter().enumerate().take(R) {
                let (l, r) = (&src[t..t + w], &src[2 * R - t..2 * R - t + w]);
                for ((d, &p), &q) in dst.iter_mut().zip(l).zip(r) {
                    *d += wt * (p + q);
                }
            }
        }
        let (mu_a, rest) = stats.split_at(w);
        let (mu_b, rest) = rest.split_at(w);
        let (eaa, rest) = rest.split_at(w);
        let (ebb, eab) = rest.split_at(w);
        for x in 0..w {
            let (ua, ub) = (mu_a[x], mu_b[x]);
            let var_a = eaa[x] - ua * ua;
            let var_b = ebb[x] - ub * ub;
            let cov = eab[x] - ua * ub;
            let num = (2.0 * ua * ub + c1) * (2.0 * cov + c2);
            let den = (ua * ua + ub * ub + c1) * (var_a + var_b + c2);
            sum += num / den;
        }
    }
    sum / (h * w) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub psnr_db: f64,
    pub ssim: f64,
}

pub fn evaluate(gt: &Image8, sr: &Image8) -> Result<MetricValue, MetricsError> {
    Ok(MetricValue {
        psnr_db: psnr_rgb(gt, sr)?,
        ssim: ssim(gt, sr)?,
    })
}

/// Scores both views of a scene, left first.
pub fn evaluate_pair(gt: &StereoPair<Image8>, sr: &StereoPair<Image8>) -> Result<[MetricValue; 2], MetricsError> {
    Ok([evaluate(gt.left(), sr.left())?, evaluate(gt.right(), sr.right())?])
}

/// Score of one view of one scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub scene: SceneId,
    pub view: View,
    pub height: usize,
    pub width: usize,
    pub metric: MetricValue,
}

/// Per-image scores plus their unweighted means over all images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    images: Vec<ImageScore>,
    mean_psnr_db: f64,
    mean_ssim: f64,
    scene_count: usize,
}

impl ScoreReport {
    /// Orders the scores by scene then view (L before R) and aggregates.
    /// The result does not depend on the order scores were produced in.
    pub fn from_scores(mut images: Vec<ImageScore>) -> Result<Self, MetricsError> {
        if images.is_empty() {
            return Err(MetricsError::Empty);
        }
        images.sort_by_key(|a| (a.scene.number, a.view));
        let n = images.len() as f64;
        let mean_psnr_db = images.iter().map(|s| s.metric.psnr_db).sum::<f64>() / n;
        let mean_ssim = images.iter().map(|s| s.metric.ssim).sum::<f64>() / n;
        let mut scenes: Vec<u32> = images.iter().map(|s| s.scene.number).collect();
        scenes.dedup();
        Ok(Self {
            images,
            mean_psnr_db,
            mean_ssim,
            scene_count: scenes.len(),
        })
    }

    pub fn images(&self) -> &[ImageScore] {
        &self.images
    }

    pub fn mean_psnr_db(&self) -> f64 {
        self.mean_psnr_db
    }

    pub fn mean_ssim(&self) -> f64 {
        self.mean_ssim
    }

    pub fn scene_count(&self) -> usize {
        self.scene_count
    }

    pub fn aggregate(&self) -> MetricValue {
        MetricValue {
            psnr_db: self.mean_psnr_db,
            ssim: self.mean_ssim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub team: String,
    pub psnr_db: f64,
    pub rank: usize,
}

/// Sorts by PSNR, best first, with standard competition ranking: tied
/// entries share the better rank and the next rank skips accordingly
/// ("1224"). Ties keep their input order.
pub fn rank_leaderboard<S: AsRef<str>>(entries: &[(S, f64)]) -> Vec<LeaderboardEntry> {
    let mut sorted: Vec<(&str, f64)> = entries.iter().map(|(n, p)| (n.as_ref(), *p)).collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut out: Vec<LeaderboardEntry> = Vec::with_capacity(sorted.len());
    for (i, (team, psnr)) in sorted.into_iter().enumerate() {
        let rank = match out.last() {
            Some(prev) if prev.psnr_db == psnr => prev.rank,
            _ => i + 1,
        };
        out.push(LeaderboardEntry {
            team: String::from(team),
            psnr_db: psnr,
            rank,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Split;
    use crate::synth::{distorted, natural_image};

    #[test]
    fn psnr_closed_forms() {
        let gt = natural_image(16, 16, 3)
            .to_float()
            .map(|v| v.min(254.0 / 255.0))
            .quantize8();
        let sr = Image8::from_fn(16, 16, |y, x, c| gt.get(y, x, c) + 1);
        let p = psnr_rgb(&gt, &sr).unwrap();
        assert!((p - 20.0 * libm::log10(255.0)).abs() < 1e-12);
        assert!((p - 48.1308).abs() < 1e-4);
        assert_eq!(psnr_rgb(&gt, &gt).unwrap(), f64::INFINITY);
        let black = Image8::filled(4, 4, [0; 3]);
        let white = Image8::filled(4, 4, [255; 3]);
        assert_eq!(psnr_rgb(&black, &white).unwrap(), 0.0);
    }

    #[test]
    fn ssim_closed_forms() {
        let img = natural_image(20, 24, 1);
        assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-9);
        let black = Image8::filled(16, 16, [0; 3]);
        let white = Image8::filled(16, 16, [255; 3]);
        let s = ssim(&black, &white).unwrap();
        let c1 = (0.01f64 * 255.0).powi(2);
        assert!((s - c1 / (255.0f64.powi(2) + c1)).abs() < 1e-12);
        assert!(s < 1e-3);
    }

    #[test]
    fn errors() {
        let a = Image8::filled(16, 16, [0; 3]);
        let b = Image8::filled(16, 17, [0; 3]);
        assert!(matches!(psnr_rgb(&a, &b), Err(MetricsError::DimensionMismatch(..))));
        let small = Image8::filled(10, 30, [0; 3]);
        assert_eq!(ssim(&small, &small), Err(MetricsError::TooSmall((10, 30))));
    }

    #[test]
    fn metrics_are_symmetric() {
        let a = natural_image(23, 31, 4);
        let b = distorted(&a, 4, 9);
        assert_eq!(psnr_rgb(&a, &b).unwrap(), psnr_rgb(&b, &a).unwrap());
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let a = natural_image(32, 32, 8);
        let mut last = f64::INFINITY;
        for amp in [1, 2, 4, 8, 16, 32] {
            let p = psnr_rgb(&a, &distorted(&a, 1, amp)).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    fn score(n: u32, view: View, psnr: f64) -> ImageScore {
        ImageScore {
            scene: SceneId::new(n, Split::Test),
            view,
            height: 4,
            width: 4,
            metric: MetricValue {
                psnr_db: psnr,
                ssim: 0.5,
            },
        }
    }

    #[test]
    fn report_is_mean_and_ordered() {
        let scores = vec![
            score(2, View::Right, 30.0),
            score(1, View::Left, 28.5),
            score(2, View::Left, 31.0),
            score(1, View::Right, 29.0),
        ];
        let r = ScoreReport::from_scores(scores).unwrap();
        assert_eq!(r.mean_psnr_db(), (28.5 + 29.0 + 31.0 + 30.0) / 4.0);
        assert_eq!(r.mean_psnr_db(), 29.625);
        assert_eq!(r.scene_count(), 2);
        let order: Vec<_> = r.images().iter().map(|s| (s.scene.number, s.view)).collect();
        assert_eq!(
            order,
            [(1, View::Left), (1, View::Right), (2, View::Left), (2, View::Right)]
        );
        assert_eq!(ScoreReport::from_scores(vec![]), Err(MetricsError::Empty));
    }

    #[test]
    fn infinite_psnr_propagates() {
        let r =
            ScoreReport::from_scores(vec![score(1, View::Left, f64::INFINITY), score(1, View::Right, 30.0)]).unwrap();
        assert_eq!(r.mean_psnr_db(), f64::INFINITY);
    }

    #[test]
    fn ranking_ties_and_singletons() {
        let one = rank_leaderboard(&[("solo", 20.0)]);
        assert_eq!(one[0].rank, 1);
        let r = rank_leaderboard(&[("a", 22.0), ("b", 23.0), ("c", 23.0), ("d", 21.0)]);
        let got: Vec<_> = r.iter().map(|e| (e.team.as_str(), e.rank)).collect();
        assert_eq!(got, [("b", 1), ("c", 1), ("a", 3), ("d", 4)]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ranking_is_consistent_permutation(psnrs in proptest::collection::vec(0u32..40, 1..20)) {
                let entries: Vec<(String, f64)> = psnrs
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (alloc::format!("t{i}"), f64::from(p) / 2.0))
                    .collect();
                let ranked = rank_leaderboard(&entries);
                prop_assert_eq!(ranked.len(), entries.len());
                for e in &ranked {
                    let better = entries.iter().filter(|(_, p)| *p > e.psnr_db).count();
                    prop_assert_eq!(e.rank, better + 1);
                }
                for pair in ranked.windows(2) {
                    prop_assert!(pair[0].psnr_db >= pair[1].psnr_db);
                }
            }
        }
    }
}
