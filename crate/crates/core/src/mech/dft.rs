//! Direct separable 2D DFT on small planes, with twiddle tables.
//!
//! `O(HW(H+W))` is fine for loss references on patches, and keeps the
//! crate free of an FFT dependency.

use alloc::vec;
use alloc::vec::Vec;

struct Twiddles {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Twiddles {
    fn new(n: usize) -> Self {
        let step = 2.0 * core::f64::consts::PI / n as f64;
        Self {
            n,
            cos: (0..n).map(|k| libm::cos(step * k as f64)).collect(),
            sin: (0..n).map(|k| libm::sin(step * k as f64)).collect(),
        }
    }

    /// `out[k] = Σ_m x[m] · e^{sign · 2πi km/n}` over a strided line.
    fn line(&self, re: &mut [f64], im: &mut [f64], start: usize, stride: usize, sign: f64, buf: &mut [(f64, f64)]) {
        let n = self.n;
        for (k, slot) in buf.iter_mut().enumerate() {
            let (mut sr, mut si) = (0.0, 0.0);
            for m in 0..n {
                let t = (k * m) % n;
                let (c, s) = (self.cos[t], sign * self.sin[t]);
                let (xr, xi) = (re[start + m * stride], im[start + m * stride]);
                sr += xr * c - xi * s;
                si += xr * s + xi * c;
            }
            *slot = (sr, si);
        }
        for (k, &(r, i)) in buf.iter().enumerate() {
            re[start + k * stride] = r;
            im[start + k * stride] = i;
        }
    }
}

pub(crate) struct Dft2 {
    rows: Twiddles,
    cols: Twiddles,
}

impl Dft2 {
    pub(crate) fn new(height: usize, width: usize) -> Self {
        Self {
            rows: Twiddles::new(height),
            cols: Twiddles::new(width),
        }
    }

    fn transform(&self, re: &mut [f64], im: &mut [f64], sign: f64) {
        let (h, w) = (self.rows.n, self.cols.n);
        let mut buf = vec![(0.0, 0.0); h.max(w)];
        for y in 0..h {
            self.cols.line(re, im, y * w, 1, sign, &mut buf[..w]);
        }
        for x in 0..w {
            self.rows.line(re, im, x, w, sign, &mut buf[..h]);
        }
    }

    /// Unnormalized forward transform of a real plane, `e^{-2πi(...)}`.
    pub(crate) fn forward(&self, plane: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut re = plane.to_vec();
        let mut im = vec![0.0; plane.len()];
        self.transform(&mut re, &mut im, -1.0);
        (re, im)
    }

    /// Real part of the unnormalized inverse transform, `e^{+2πi(...)}`.
    /// This is the adjoint of [`Dft2::forward`] seen as a map into
    /// `ℝ²ⁿ` with the real inner product.
    pub(crate) fn adjoint_real(&self, mut re: Vec<f64>, mut im: Vec<f64>) -> Vec<f64> {
        self.transform(&mut re, &mut im, 1.0);
        re
    }
}
