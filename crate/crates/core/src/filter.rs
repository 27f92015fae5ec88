//! Blur kernels and 2D filtering with symmetric boundary padding.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::image::{Image, CHANNELS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("kernel size {0} must be odd and at least 1")]
    InvalidKernelSize(usize),
    #[error("kernel weights sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("kernel is not symmetric under 180 degree rotation")]
    NotSymmetric,
    #[error("gaussian sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("{size}x{size} kernel does not fit a {height}x{width} image")]
    KernelTooLarge { size: usize, height: usize, width: usize },
}

/// Square filter whose weights sum to one and are point-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
    // 1D factor when the kernel is an outer product of it with itself
    separable: Option<Vec<f64>>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self, FilterError> {
        if size.is_multiple_of(2) || weights.len() != size * size {
            return Err(FilterError::InvalidKernelSize(size));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(FilterError::NotNormalized(sum));
        }
        let n = weights.len();
        if (0..n).any(|i| weights[i] != weights[n - 1 - i]) {
            return Err(FilterError::NotSymmetric);
        }
        Ok(Self {
            size,
            weights,
            separable: None,
        })
    }

    /// Unit impulse at the center.
    pub fn delta(size: usize) -> Result<Self, FilterError> {
        if size.is_multiple_of(2) {
            return Err(FilterError::InvalidKernelSize(size));
        }
        let mut weights = vec![0.0; size * size];
        weights[size * size / 2] = 1.0;
        Self::new(size, weights)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, dy: usize, dx: usize) -> f64 {
        self.weights[dy * self.size + dx]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Isotropic Gaussian sampled on the centered integer grid and normalized.
pub fn gaussian_kernel(sigma: f64, size: usize) -> Result<Kernel, FilterError> {
    if size.is_multiple_of(2) {
        return Err(FilterError::InvalidKernelSize(size));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(FilterError::InvalidSigma(sigma));
    }
    let r = (size / 2) as isize;
    let mut weights = Vec::with_capacity(size * size);
    for y in -r..=r {
        for x in -r..=r {
            let d2 = (x * x + y * y) as f64;
            weights.push(libm::exp(-d2 / (2.0 * sigma * sigma)));
        }
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);

    // exp(-(x^2+y^2)/2s^2) = g(x) g(y), so the normalized kernel factors
    let mut line: Vec<f64> = (-r..=r)
        .map(|x| libm::exp(-((x * x) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let lsum: f64 = line.iter().sum();
    line.iter_mut().for_each(|w| *w /= lsum);

    let mut k = Kernel::new(size, weights)?;
    k.separable = Some(line);
    Ok(k)
}

/// Half-sample symmetric fold of `i` into `0..n` (`c b a | a b c`).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// 2D correlation of every channel with `k`; output has the input size.
pub fn convolve2d(img: &Image, k: &Kernel) -> Result<Image, FilterError> {
    let (h, w) = img.dims();
    if k.size >= h || k.size >= w {
        return Err(FilterError::KernelTooLarge {
            size: k.size,
            height: h,
            width: w,
        });
    }
    let out = match &k.separable {
        Some(line) => separable(img, line),
        None => direct(img, k),
    };
    Ok(Image::new(h, w, out).expect("finite convolution"))
}

fn direct(img: &Image, k: &Kernel) -> Vec<f64> {
    let (h, w) = img.dims();
    let r = (k.size / 2) as isize;
    let src = img.data();
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; CHANNELS];
            for dy in 0..k.size {
                let sy = reflect(y as isize + dy as isize - r, h);
                for dx in 0..k.size {
                    let sx = reflect(x as isize + dx as isize - r, w);
                    let wt = k.at(dy, dx);
                    let s = (sy * w + sx) * CHANNELS;
                    for c in 0..CHANNELS {
                        acc[c] += wt * src[s + c];
                    }
                }
            }
            let o = (y * w + x) * CHANNELS;
            out[o..o + CHANNELS].copy_from_slice(&acc);
        }
    }
    out
}

fn separable(img: &Image, line: &[f64]) -> Vec<f64> {
    let (h, w) = img.dims();
    let r = (line.len() / 2) as isize;
    let src = img.data();
    let stride = w * CHANNELS;

    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        let dst = &mut tmp[y * stride..(y + 1) * stride];
        for (t, &wt) in line.iter().enumerate() {
            let sy = reflect(y as isize + t as isize - r, h);
            for (d, s) in dst.iter_mut().zip(&src[sy * stride..(sy + 1) * stride]) {
                *d += wt * s;
            }
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        let row = &tmp[y * stride..(y + 1) * stride];
        for x in 0..w {
            let mut acc = [0.0; CHANNELS];
            for (t, &wt) in line.iter().enumerate() {
                let sx = reflect(x as isize + t as isize - r, w);
                for c in 0..CHANNELS {
                    acc[c] += wt * row[sx * CHANNELS + c];
                }
            }
            let o = y * stride + x * CHANNELS;
            out[o..o + CHANNELS].copy_from_slice(&acc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = Rng::new(seed);
        Image::from_fn(h, w, |_, _, _| rng.uniform())
    }

    /// Direct double sum with iterative mirroring of out-of-range taps.
    fn brute_force(img: &Image, k: &Kernel) -> Image {
        let (h, w) = img.dims();
        let r = k.size() / 2;
        let mirror = |i: isize, n: usize| -> usize {
            let mut i = i;
            loop {
                if i < 0 {
                    i = -i - 1;
                } else if i >= n as isize {
                    i = 2 * n as isize - i - 1;
                } else {
                    return i as usize;
                }
            }
        };
        Image::from_fn(h, w, |y, x, c| {
            let mut acc = 0.0;
            for i in 0..k.size() {
                for j in 0..k.size() {
                    let sy = mirror(y as isize + i as isize - r as isize, h);
                    let sx = mirror(x as isize + j as isize - r as isize, w);
                    acc += k.at(i, j) * img.get(sy, sx, c);
                }
            }
            acc
        })
    }

    #[test]
    fn gaussian_is_normalized_and_peaked() {
        let k = gaussian_kernel(1.5, 21).unwrap();
        assert!((k.sum() - 1.0).abs() <= 1e-12);
        let center = k.at(10, 10);
        assert!(k.weights().iter().all(|&v| v <= center));
    }

    #[test]
    fn narrow_gaussian_is_nearly_delta() {
        // neighbors weigh exp(-1/0.02) = 1.9e-22 relative to the center
        let k = gaussian_kernel(0.1, 3).unwrap();
        assert!(k.at(1, 1) > 0.99);
    }

    #[test]
    fn even_size_is_rejected() {
        assert_eq!(gaussian_kernel(1.0, 4), Err(FilterError::InvalidKernelSize(4)));
        assert!(matches!(gaussian_kernel(0.0, 3), Err(FilterError::InvalidSigma(_))));
    }

    #[test]
    fn delta_is_identity() {
        let img = random_image(7, 9, 1);
        let out = convolve2d(&img, &Kernel::delta(5).unwrap()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn constant_is_preserved() {
        let img = Image::filled(12, 12, 0.42);
        let out = convolve2d(&img, &gaussian_kernel(2.0, 7).unwrap()).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.42).abs() < 1e-12));
    }

    #[test]
    fn matches_brute_force() {
        let img = random_image(8, 8, 3);
        for k in [gaussian_kernel(0.8, 3).unwrap(), gaussian_kernel(1.5, 5).unwrap()] {
            let fast = convolve2d(&img, &k).unwrap();
            let slow = brute_force(&img, &k);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let mut weights = vec![0.0; 9];
        weights[..4].copy_from_slice(&[0.1, 0.05, 0.2, 0.05]);
        weights[4] = 0.2;
        for i in 0..4 {
            weights[8 - i] = weights[i];
        }
        let k = Kernel::new(3, weights).unwrap();
        let a = convolve2d(&img, &k).unwrap();
        let b = brute_force(&img, &k);
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn too_large_kernel() {
        let img = Image::filled(5, 30, 0.0);
        assert!(matches!(
            convolve2d(&img, &gaussian_kernel(1.0, 5).unwrap()),
            Err(FilterError::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn kernel_validation() {
        assert_eq!(Kernel::new(3, vec![0.5; 9]), Err(FilterError::NotNormalized(4.5)));
        let mut w = vec![0.0; 9];
        w[0] = 1.0;
        assert_eq!(Kernel::new(3, w), Err(FilterError::NotSymmetric));
    }
}
