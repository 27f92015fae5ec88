//! Stereo-consistent data augmentation for (HR, LR) training pairs.
//!
//! Every random choice is drawn once and shared by all four images, so the
//! left/right correspondence and the HR/LR registration survive. Geometric
//! ops that would break the horizontal epipolar structure (rotations,
//! transposes) are rejected. A horizontal flip must swap the views to keep
//! disparities non-negative, hence `hflip_swap`.
//!
//! Ops apply in list order; each always applies and only its parameters are
//! random. `mixup` blends with a partner sample using `λ ~ Beta(1.2, 1.2)`;
//! `cutmix` pastes a partner box of side fraction `√u`, `u ~ U(0, 1)`,
//! placed uniformly; `cutmixup` blends with the partner inside such a box.
//! Boxes and shifts are drawn on the LR grid and scaled by `s` for HR.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::ToString;

use rand_distr::{Beta, Distribution};

use super::MechError;
use crate::image::{Image, StereoPair, CHANNELS};
use crate::rng::Rng;

/// Default `hshift` range in LR pixels.
pub const DEFAULT_MAX_SHIFT: usize = 4;
/// Shape parameters of the mixup coefficient distribution.
pub const MIXUP_BETA: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentOp {
    HflipSwap,
    Vflip,
    RgbShuffle,
    /// Crops `max_shift` LR columns in total, at a random common offset.
    Hshift {
        max_shift: usize,
    },
    Mixup,
    CutMix,
    CutMixup,
}

impl AugmentOp {
    /// Accepts `hflip_swap`, `vflip`, `rgb_shuffle`, `hshift` or
    /// `hshift:<n>`, `mixup`, `cutmix` and `cutmixup`.
    pub fn parse(name: &str) -> Result<Self, MechError> {
        let op = match name {
            "hflip_swap" => Self::HflipSwap,
            "vflip" => Self::Vflip,
            "rgb_shuffle" => Self::RgbShuffle,
            "hshift" => Self::Hshift {
                max_shift: DEFAULT_MAX_SHIFT,
            },
            "mixup" => Self::Mixup,
            "cutmix" => Self::CutMix,
            "cutmixup" => Self::CutMixup,
            other => match other.strip_prefix("hshift:").map(str::parse) {
                Some(Ok(max_shift)) => Self::Hshift { max_shift },
                _ => return Err(MechError::UnsupportedOp(other.to_string())),
            },
        };
        Ok(op)
    }

    fn needs_partner(self) -> bool {
        matches!(self, Self::Mixup | Self::CutMix | Self::CutMixup)
    }
}

fn scale_of(hr: &StereoPair, lr: &StereoPair) -> Result<usize, MechError> {
    let ((hh, hw), (lh, lw)) = (hr.dims(), lr.dims());
    if lh == 0 || lw == 0 || hh % lh != 0 || hw % lw != 0 || hh / lh != hw / lw {
        return Err(MechError::ShapeMismatch(format!(
            "HR {:?} is not an integer multiple of LR {:?}",
            hr.dims(),
            lr.dims()
        )));
    }
    Ok(hh / lh)
}

fn both(p: &StereoPair, f: impl Fn(&Image) -> Image) -> StereoPair {
    StereoPair::new(f(p.left()), f(p.right())).expect("same transform on both views")
}

fn flip_h(img: &Image) -> Image {
    let w = img.width();
    Image::from_fn(img.height(), w, |y, x, c| img.get(y, w - 1 - x, c))
}

fn flip_v(img: &Image) -> Image {
    let h = img.height();
    Image::from_fn(h, img.width(), |y, x, c| img.get(h - 1 - y, x, c))
}

/// Mirrors both views and swaps them.
pub fn hflip_swap(p: &StereoPair) -> StereoPair {
    StereoPair::new(flip_h(p.right()), flip_h(p.left())).expect("same dimensions")
}

/// Output channel `c` takes input channel `perm[c]`.
pub fn permute_channels(p: &StereoPair, perm: [usize; CHANNELS]) -> StereoPair {
    both(p, |img| {
        Image::from_fn(img.height(), img.width(), |y, x, c| img.get(y, x, perm[c]))
    })
}

fn random_permutation(rng: &mut Rng) -> [usize; CHANNELS] {
    let mut perm = [0, 1, 2];
    for i in (1..CHANNELS).rev() {
        let j = below(rng, i + 1);
        perm.swap(i, j);
    }
    perm
}

/// Uniform integer in `0..n`.
fn below(rng: &mut Rng, n: usize) -> usize {
    ((rng.uniform() * n as f64) as usize).min(n - 1)
}

/// Box on the LR grid: `(top, left, height, width)`.
type LrBox = (usize, usize, usize, usize);

fn random_box(rng: &mut Rng, (h, w): (usize, usize)) -> LrBox {
    let frac = libm::sqrt(rng.uniform());
    let bh = (libm::round(frac * h as f64) as usize).min(h);
    let bw = (libm::round(frac * w as f64) as usize).min(w);
    let top = below(rng, h - bh + 1);
    let left = below(rng, w - bw + 1);
    (top, left, bh, bw)
}

fn inside(b: LrBox, s: usize, y: usize, x: usize) -> bool {
    let (t, l, h, w) = b;
    y >= t * s && y < (t + h) * s && x >= l * s && x < (l + w) * s
}

/// `λ·a + (1−λ)·b` where `mask` holds, `a` elsewhere.
fn blend(a: &Image, b: &Image, lambda: f64, mask: impl Fn(usize, usize) -> bool) -> Image {
    Image::from_fn(a.height(), a.width(), |y, x, c| {
        if mask(y, x) {
            lambda * a.get(y, x, c) + (1.0 - lambda) * b.get(y, x, c)
        } else {
            a.get(y, x, c)
        }
    })
}

fn blend_pair(a: &StereoPair, b: &StereoPair, lambda: f64, mask: impl Fn(usize, usize) -> bool + Copy) -> StereoPair {
    StereoPair::new(
        blend(a.left(), b.left(), lambda, mask),
        blend(a.right(), b.right(), lambda, mask),
    )
    .expect("same dimensions")
}

/// Applies `ops` in order to an `(hr, lr)` sample. Blending ops need a
/// `partner` sample of identical dimensions.
pub fn augment(
    hr: &StereoPair,
    lr: &StereoPair,
    ops: &[AugmentOp],
    rng: &mut Rng,
    partner: Option<(&StereoPair, &StereoPair)>,
) -> Result<(StereoPair, StereoPair), MechError> {
    let s = scale_of(hr, lr)?;
    if let Some((ph, pl)) = partner {
        if ph.dims() != hr.dims() || pl.dims() != lr.dims() {
            return Err(MechError::ShapeMismatch(
                "partner sample has different dimensions".into(),
            ));
        }
    }
    let (mut hr, mut lr) = (hr.clone(), lr.clone());
    // the partner follows every geometric op so blends stay registered
    let mut partner = partner.map(|(a, b)| (a.clone(), b.clone()));
    for &op in ops {
        if op.needs_partner() && partner.is_none() {
            return Err(MechError::MissingPartner(match op {
                AugmentOp::Mixup => "mixup",
                AugmentOp::CutMix => "cutmix",
                _ => "cutmixup",
            }));
        }
        let transform: Box<dyn Fn(&StereoPair) -> StereoPair> = match op {
            AugmentOp::HflipSwap => Box::new(hflip_swap),
            AugmentOp::Vflip => Box::new(|p| both(p, flip_v)),
            AugmentOp::RgbShuffle => {
                let perm = random_permutation(rng);
                Box::new(move |p| permute_channels(p, perm))
            }
            AugmentOp::Hshift { max_shift } => {
                let (lh, lw) = lr.dims();
                if max_shift >= lw {
                    return Err(MechError::ShapeMismatch(format!(
                        "cannot shift {lw} LR columns by {max_shift}"
                    )));
                }
                let o = below(rng, max_shift + 1);
                let keep = lw - max_shift;
                Box::new(move |p| {
                    let k = p.dims().0 / lh;
                    both(p, |img| img.crop(0, o * k, img.height(), keep * k))
                })
            }
            AugmentOp::Mixup | AugmentOp::CutMix | AugmentOp::CutMixup => {
                let (ph, pl) = partner.as_ref().expect("checked above");
                let (lambda, region) = match op {
                    AugmentOp::Mixup => (sample_beta(rng), None),
                    AugmentOp::CutMix => (0.0, Some(random_box(rng, lr.dims()))),
                    _ => {
                        let lambda = sample_beta(rng);
                        (lambda, Some(random_box(rng, lr.dims())))
                    }
                };
                let mask = |k: usize| move |y: usize, x: usize| region.is_none_or(|b| inside(b, k, y, x));
                hr = blend_pair(&hr, ph, lambda, mask(s));
                lr = blend_pair(&lr, pl, lambda, mask(1));
                continue;
            }
        };
        hr = transform(&hr);
        lr = transform(&lr);
        if let Some((a, b)) = partner.as_mut() {
            *a = transform(a);
            *b = transform(b);
        }
    }
    Ok((hr, lr))
}

fn sample_beta(rng: &mut Rng) -> f64 {
    Beta::new(MIXUP_BETA, MIXUP_BETA).expect("valid shape").sample(rng)
}
