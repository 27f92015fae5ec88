//! Parallax attention: soft correspondence search along each image row.
//!
//! For row `y`, the score between left column `i` and right column `j` is
//! `⟨f_L(y,i), f_R(y,j)⟩ · s` with `s = 1/√C` by default. A row softmax over
//! `j` gives the right-to-left attention, which gathers right features into
//! the left frame. The softmax of the transposed scores gives the opposite
//! direction. A position is valid when the round trip left → right → left
//! returns to it with probability at least the mask threshold.
//!
//! Disparity convention: `d ≥ 0` means right column `x` shows the content of
//! left column `x + d`. The left column `i` then matches right column
//! `i − d`.

use alloc::vec;
use alloc::vec::Vec;

use super::{FeatureMap, MechError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PamOptions {
    pub mask_threshold: f64,
    /// Score multiplier; `None` means `1/√C`.
    pub score_scale: Option<f64>,
}

impl Default for PamOptions {
    fn default() -> Self {
        Self {
            mask_threshold: 0.1,
            score_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PamOutput {
    height: usize,
    width: usize,
    attn_r2l: Vec<f64>,
    attn_l2r: Vec<f64>,
    valid_l: Vec<bool>,
    valid_r: Vec<bool>,
    warped_r: FeatureMap,
    warped_l: FeatureMap,
}

impl PamOutput {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Row `y` of the right-to-left attention as a `W×W` row-major matrix:
    /// entry `(i, j)` is the weight left column `i` gives right column `j`.
    pub fn attn_r2l(&self, y: usize) -> &[f64] {
        let n = self.width * self.width;
        &self.attn_r2l[y * n..(y + 1) * n]
    }

    /// Row `y` of the left-to-right attention: entry `(j, i)` is the weight
    /// right column `j` gives left column `i`.
    pub fn attn_l2r(&self, y: usize) -> &[f64] {
        let n = self.width * self.width;
        &self.attn_l2r[y * n..(y + 1) * n]
    }

    pub fn valid_l(&self) -> &[bool] {
        &self.valid_l
    }

    pub fn valid_r(&self) -> &[bool] {
        &self.valid_r
    }

    /// Right features resampled into the left view.
    pub fn warped_r(&self) -> &FeatureMap {
        &self.warped_r
    }

    /// Left features resampled into the right view.
    pub fn warped_l(&self) -> &FeatureMap {
        &self.warped_l
    }

    /// Hard disparity of every left pixel, `i − argmax_j attn_r2l(i, j)`,
    /// row-major. Ties go to the smallest `j`.
    pub fn disparity_l(&self) -> Vec<isize> {
        let w = self.width;
        let mut out = Vec::with_capacity(self.height * w);
        for y in 0..self.height {
            for (i, row) in self.attn_r2l(y).chunks(w).enumerate() {
                out.push(i as isize - argmax(row) as isize);
            }
        }
        out
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// In-place numerically stable softmax.
pub(crate) fn softmax(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = libm::exp(*x - m);
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
}

pub fn pam_forward(f_l: &FeatureMap, f_r: &FeatureMap, mask_threshold: f64) -> Result<PamOutput, MechError> {
    pam_forward_with(
        f_l,
        f_r,
        &PamOptions {
            mask_threshold,
            ..PamOptions::default()
        },
    )
}

pub fn pam_forward_with(f_l: &FeatureMap, f_r: &FeatureMap, opts: &PamOptions) -> Result<PamOutput, MechError> {
    f_l.same_shape(f_r, "pam inputs")?;
    let (h, w, c) = f_l.shape();
    let scale = opts.score_scale.unwrap_or(1.0 / libm::sqrt(c as f64));
    let n = w * w;
    let mut attn_r2l = vec![0.0; h * n];
    let mut attn_l2r = vec![0.0; h * n];
    let mut valid_l = vec![false; h * w];
    let mut valid_r = vec![false; h * w];
    let mut warped_r = vec![0.0; h * w * c];
    let mut warped_l = vec![0.0; h * w * c];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    for y in 0..h {
        let r2l = &mut attn_r2l[y * n..(y + 1) * n];
        let l2r = &mut attn_l2r[y * n..(y + 1) * n];
        for i in 0..w {
            for j in 0..w {
                let s = dot(f_l.pixel(y, i), f_r.pixel(y, j)) * scale;
                r2l[i * w + j] = s;
                l2r[j * w + i] = s;
            }
        }
        r2l.chunks_mut(w).for_each(softmax);
        l2r.chunks_mut(w).for_each(softmax);

        for i in 0..w {
            let back_l: f64 = (0..w).map(|j| r2l[i * w + j] * l2r[j * w + i]).sum();
            valid_l[y * w + i] = back_l >= opts.mask_threshold;
            let back_r: f64 = (0..w).map(|j| l2r[i * w + j] * r2l[j * w + i]).sum();
            valid_r[y * w + i] = back_r >= opts.mask_threshold;

            let o = (y * w + i) * c;
            for j in 0..w {
                let (a, b) = (r2l[i * w + j], l2r[i * w + j]);
                for (k, (fr, fl)) in f_r.pixel(y, j).iter().zip(f_l.pixel(y, j)).enumerate() {
                    warped_r[o + k] += a * fr;
                    warped_l[o + k] += b * fl;
                }
            }
        }
    }
    Ok(PamOutput {
        height: h,
        width: w,
        attn_r2l,
        attn_l2r,
        valid_l,
        valid_r,
        warped_r: FeatureMap::new(h, w, c, warped_r)?,
        warped_l: FeatureMap::new(h, w, c, warped_l)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    /// Unit-length random feature vectors, which are distinct with
    /// probability one.
    pub(crate) fn textured(h: usize, w: usize, c: usize, seed: u64) -> FeatureMap {
        let mut rng = Rng::new(seed);
        FeatureMap::from_fn(h, w, c, |_, _, _| rng.normal()).normalize_pixels()
    }

    /// Right view with `right(x) = left(x + d)`; the last `d` columns get
    /// fresh content.
    pub(crate) fn shifted(left: &FeatureMap, d: usize, seed: u64) -> FeatureMap {
        let (h, w, c) = left.shape();
        let fill = textured(h, w, c, seed);
        FeatureMap::from_fn(h, w, c, |y, x, k| {
            if x + d < w {
                left.get(y, x + d, k)
            } else {
                fill.get(y, x, k)
            }
        })
    }

    #[test]
    fn zero_disparity_is_diagonal() {
        let f = textured(3, 12, 8, 1);
        // sharpen so warping is close to a copy
        let out = pam_forward_with(
            &f,
            &f,
            &PamOptions {
                score_scale: Some(60.0),
                ..PamOptions::default()
            },
        )
        .unwrap();
        assert!(out.disparity_l().iter().all(|&d| d == 0));
        for (a, b) in out.warped_r().data().iter().zip(f.data()) {
            assert!((a - b).abs() < 1e-3);
        }
        assert!(out.valid_l().iter().all(|&v| v));
    }

    #[test]
    fn recovers_shift() {
        for d in [0usize, 2, 4, 8] {
            let l = textured(4, 24, 16, 10 + d as u64);
            let r = shifted(&l, d, 99);
            let out = pam_forward(&l, &r, 0.1).unwrap();
            let disp = out.disparity_l();
            for y in 0..4 {
                for i in d..24 {
                    assert_eq!(disp[y * 24 + i], d as isize, "d={d} y={y} i={i}");
                }
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = FeatureMap::zeros(2, 3, 4);
        let b = FeatureMap::zeros(2, 4, 4);
        assert!(matches!(pam_forward(&a, &b, 0.1), Err(MechError::ShapeMismatch(_))));
    }

    #[test]
    fn masks_follow_round_trip_mass() {
        let l = textured(2, 16, 16, 4);
        let r = shifted(&l, 4, 5);
        let sharp = PamOptions {
            mask_threshold: 0.5,
            score_scale: Some(30.0),
        };
        let out = pam_forward_with(&l, &r, &sharp).unwrap();
        for y in 0..2 {
            for i in 4..16 {
                assert!(out.valid_l()[y * 16 + i]);
                assert!(out.valid_r()[y * 16 + i - 4]);
            }
        }
        // constant scores give uniform attention, whose round trip returns
        // 1/W = 1/16 of the mass
        let flat = FeatureMap::zeros(2, 16, 16);
        let out = pam_forward(&l, &flat, 0.1).unwrap();
        assert!(out.valid_l().iter().chain(out.valid_r()).all(|&v| !v));
        let out = pam_forward(&l, &flat, 1.0 / 16.0).unwrap();
        assert!(out.valid_l().iter().all(|&v| v));
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(seed in any::<u64>(), h in 1usize..4, w in 1usize..10, c in 1usize..6, amp in 0.1f64..20.0) {
            let mut rng = Rng::new(seed);
            let a = FeatureMap::from_fn(h, w, c, |_, _, _| amp * rng.normal());
            let b = FeatureMap::from_fn(h, w, c, |_, _, _| amp * rng.normal());
            let out = pam_forward(&a, &b, 0.1).unwrap();
            for y in 0..h {
                for row in out.attn_r2l(y).chunks(w).chain(out.attn_l2r(y).chunks(w)) {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                    prop_assert!(row.iter().all(|&p| p >= 0.0));
                }
            }
        }
    }
}
