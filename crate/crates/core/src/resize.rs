//! Separable bicubic resampling with Matlab `imresize` semantics.
//!
//! Output sample `x` (1-based) maps to input coordinate
//! `u = x / scale + (1 - 1 / scale) / 2`. The Keys cubic (a = -0.5) is
//! evaluated at the `ceil(width) + 2` integer positions starting at
//! `floor(u - width / 2)`, and the weights are normalized to sum to one.
//! When shrinking with antialiasing the kernel is stretched by `1 / scale`,
//! which widens its support to `4 / scale`. Out-of-range taps are folded
//! back into the image by half-sample symmetric reflection (Matlab's
//! behavior) or clamped to the edge.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::{Image, CHANNELS};

/// Keys cubic convolution kernel with `a = -0.5`.
#[inline]
pub fn cubic(x: f64) -> f64 {
    let ax = x.abs();
    let ax2 = ax * ax;
    let ax3 = ax2 * ax;
    if ax <= 1.0 {
        1.5 * ax3 - 2.5 * ax2 + 1.0
    } else if ax <= 2.0 {
        -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// `c b a | a b c`, as Matlab folds indices.
    #[default]
    Symmetric,
    /// `a a a | a b c`.
    Replicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResizeOptions {
    pub antialias: bool,
    pub boundary: Boundary,
}

impl Default for ResizeOptions {
    fn default() -> Self {
        Self {
            antialias: true,
            boundary: Boundary::Symmetric,
        }
    }
}

/// Contribution table for one axis.
#[derive(Debug, Clone)]
struct AxisTaps {
    in_len: usize,
    out_len: usize,
    taps: usize,
    index: Vec<usize>,
    weight: Vec<f64>,
}

impl AxisTaps {
    fn new(in_len: usize, out_len: usize, opts: ResizeOptions) -> Self {
        assert!(in_len > 0 && out_len > 0, "resize to or from an empty axis");
        let scale = out_len as f64 / in_len as f64;
        let stretch = scale < 1.0 && opts.antialias;
        let width = if stretch { 4.0 / scale } else { 4.0 };
        let taps = libm::ceil(width) as usize + 2;
        let kernel = |v: f64| if stretch { scale * cubic(scale * v) } else { cubic(v) };

        let mut index = Vec::with_capacity(out_len * taps);
        let mut weight = Vec::with_capacity(out_len * taps);
        let period = 2 * in_len as i64;
        for x in 1..=out_len {
            let u = x as f64 / scale + 0.5 * (1.0 - 1.0 / scale);
            let left = libm::floor(u - width / 2.0);
            let row = weight.len();
            for j in 0..taps {
                let pos = left + j as f64;
                weight.push(kernel(u - pos));
                // 1-based position to 0-based index inside the image
                let i = pos as i64 - 1;
                let folded = match opts.boundary {
                    Boundary::Symmetric => {
                        let m = i.rem_euclid(period);
                        if m < in_len as i64 {
                            m
                        } else {
                            period - 1 - m
                        }
                    }
                    Boundary::Replicate => i.clamp(0, in_len as i64 - 1),
                };
                index.push(folded as usize);
            }
            let sum: f64 = weight[row..].iter().sum();
            for w in &mut weight[row..] {
                *w /= sum;
            }
        }
        Self {
            in_len,
            out_len,
            taps,
            index,
            weight,
        }
    }

    fn row(&self, o: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = o * self.taps..(o + 1) * self.taps;
        self.index[r.clone()]
            .iter()
            .copied()
            .zip(self.weight[r].iter().copied())
    }
}

/// Precomputed resampler between two fixed image sizes. Being linear, it
/// also provides its adjoint for back-propagating gradients.
#[derive(Debug, Clone)]
pub struct Resampler {
    rows: AxisTaps,
    cols: AxisTaps,
}

impl Resampler {
    pub fn new(in_dims: (usize, usize), out_dims: (usize, usize), opts: ResizeOptions) -> Self {
        Self {
            rows: AxisTaps::new(in_dims.0, out_dims.0, opts),
            cols: AxisTaps::new(in_dims.1, out_dims.1, opts),
        }
    }

    pub fn in_dims(&self) -> (usize, usize) {
        (self.rows.in_len, self.cols.in_len)
    }

    pub fn out_dims(&self) -> (usize, usize) {
        (self.rows.out_len, self.cols.out_len)
    }

    /// # Panics
    /// If `img` does not have the input dimensions.
    pub fn apply(&self, img: &Image) -> Image {
        assert_eq!(img.dims(), self.in_dims(), "resampler input size");
        let in_w = self.in_dims().1;
        let (out_h, out_w) = self.out_dims();
        let src = img.data();

        let stride = in_w * CHANNELS;
        let mut tmp = vec![0.0; out_h * stride];
        for oy in 0..out_h {
            let dst = &mut tmp[oy * stride..(oy + 1) * stride];
            for (iy, w) in self.rows.row(oy) {
                let line = &src[iy * stride..(iy + 1) * stride];
                for (d, s) in dst.iter_mut().zip(line) {
                    *d += w * s;
                }
            }
        }

        let mut out = vec![0.0; out_h * out_w * CHANNELS];
        for oy in 0..out_h {
            let line = &tmp[oy * stride..(oy + 1) * stride];
            for ox in 0..out_w {
                let o = (oy * out_w + ox) * CHANNELS;
                let mut acc = [0.0; CHANNELS];
                for (ix, w) in self.cols.row(ox) {
                    let s = ix * CHANNELS;
                    for c in 0..CHANNELS {
                        acc[c] += w * line[s + c];
                    }
                }
                out[o..o + CHANNELS].copy_from_slice(&acc);
            }
        }
        Image::new(out_h, out_w, out).expect("finite resample")
    }

    /// Transpose of [`Resampler::apply`]: maps a gradient on the output grid
    /// to the input grid.
    ///
    /// # Panics
    /// If `grad` does not have the output dimensions.
    pub fn adjoint(&self, grad: &Image) -> Image {
        assert_eq!(grad.dims(), self.out_dims(), "adjoint input size");
        let (in_h, in_w) = self.in_dims();
        let (out_h, out_w) = self.out_dims();
        let g = grad.data();

        let stride = in_w * CHANNELS;
        let mut tmp = vec![0.0; out_h * stride];
        for oy in 0..out_h {
            for ox in 0..out_w {
                let o = (oy * out_w + ox) * CHANNELS;
                for (ix, w) in self.cols.row(ox) {
                    let t = oy * stride + ix * CHANNELS;
                    for c in 0..CHANNELS {
                        tmp[t + c] += w * g[o + c];
                    }
                }
            }
        }
        let mut out = vec![0.0; in_h * stride];
        for oy in 0..out_h {
            let line = &tmp[oy * stride..(oy + 1) * stride];
            for (iy, w) in self.rows.row(oy) {
                let dst = &mut out[iy * stride..(iy + 1) * stride];
                for (d, s) in dst.iter_mut().zip(line) {
                    *d += w * s;
                }
            }
        }
        Image::new(in_h, in_w, out).expect("finite adjoint")
    }
}

/// Resizes to `out_h × out_w` with Matlab bicubic semantics and symmetric
/// boundary folding. The result is not quantized.
///
/// # Panics
/// If `out_h` or `out_w` is zero.
pub fn bicubic_resize(img: &Image, out_h: usize, out_w: usize, antialias: bool) -> Image {
    let opts = ResizeOptions {
        antialias,
        ..ResizeOptions::default()
    };
    Resampler::new(img.dims(), (out_h, out_w), opts).apply(img)
}
