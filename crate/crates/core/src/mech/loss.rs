//! Training losses with analytic gradients with respect to the SR output.
//!
//! All losses work on continuous images. Every function returns the loss
//! value together with its gradient, which the tests check against central
//! finite differences.
//!
//! The Charbonnier-style losses read the per-term norm literally: a term is
//! one pixel, and its norm runs over the color channels (or, for the
//! frequency loss, over the channels' complex coefficients at one frequency).
//! [`Reduction::PerElement`] makes every scalar its own term instead.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::dft::Dft2;
use super::MechError;
use crate::image::{Image, StereoPair, CHANNELS};
use crate::resize::{Resampler, ResizeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// One term per pixel (or frequency bin), norm over channels.
    #[default]
    PerPixel,
    /// One term per scalar sample.
    PerElement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub lambda_fft: f64,
    pub lambda_bp: f64,
    /// Super-resolution factor for the back-projection loss.
    pub scale: usize,
    pub reduction: Reduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            eps1: 1e-3,
            eps2: 1e-3,
            lambda_fft: 0.1,
            lambda_bp: 0.1,
            scale: 4,
            reduction: Reduction::PerPixel,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), MechError> {
        let positive = [self.eps1, self.eps2, self.lambda_fft, self.lambda_bp];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.scale == 0 {
            return Err(MechError::InvalidConfig(format!(
                "loss settings must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

fn same_dims(a: &Image, b: &Image) -> Result<(), MechError> {
    if a.dims() != b.dims() {
        return Err(MechError::ShapeMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

fn image(dims: (usize, usize), data: Vec<f64>) -> Image {
    Image::new(dims.0, dims.1, data).expect("finite gradient")
}

/// `(1/N) Σ √(r² + ε²)` given the squared norms `r²`, accumulated as
/// `ε + (1/N) Σ r² / (√(r² + ε²) + ε)` so that all-zero residuals give
/// exactly `ε`.
fn charbonnier_mean(r2: &[f64], eps: f64) -> f64 {
    let excess: f64 = r2.iter().map(|&q| q / (libm::sqrt(q + eps * eps) + eps)).sum();
    eps + excess / r2.len() as f64
}

/// Squared norm of each term over `CHANNELS`-strided groups.
fn grouped(values: &[f64], reduction: Reduction) -> Vec<f64> {
    match reduction {
        Reduction::PerPixel => values.chunks(CHANNELS).map(|g| g.iter().sum()).collect(),
        Reduction::PerElement => values.to_vec(),
    }
}

fn term_of(index: usize, reduction: Reduction) -> usize {
    match reduction {
        Reduction::PerPixel => index / CHANNELS,
        Reduction::PerElement => index,
    }
}

pub fn charbonnier_loss(sr: &Image, hr: &Image, eps1: f64) -> Result<(f64, Image), MechError> {
    charbonnier_loss_with(sr, hr, eps1, Reduction::default())
}

pub fn charbonnier_loss_with(
    sr: &Image,
    hr: &Image,
    eps1: f64,
    reduction: Reduction,
) -> Result<(f64, Image), MechError> {
    same_dims(sr, hr)?;
    let diff: Vec<f64> = sr.data().iter().zip(hr.data()).map(|(s, h)| s - h).collect();
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    let r2 = grouped(&sq, reduction);
    let n = r2.len() as f64;
    let value = charbonnier_mean(&r2, eps1);
    let grad = diff
        .iter()
        .enumerate()
        .map(|(i, d)| d / (n * libm::sqrt(r2[term_of(i, reduction)] + eps1 * eps1)))
        .collect();
    Ok((value, image(sr.dims(), grad)))
}

pub fn fft_loss(sr: &Image, hr: &Image, eps2: f64) -> Result<(f64, Image), MechError> {
    fft_loss_with(sr, hr, eps2, Reduction::default())
}

/// Charbonnier distance between the unnormalized 2D DFTs of each channel.
pub fn fft_loss_with(sr: &Image, hr: &Image, eps2: f64, reduction: Reduction) -> Result<(f64, Image), MechError> {
    same_dims(sr, hr)?;
    let (h, w) = sr.dims();
    let px = h * w;
    let dft = Dft2::new(h, w);
    let diff: Vec<f64> = sr.data().iter().zip(hr.data()).map(|(s, t)| s - t).collect();

    // spectra interleaved like the image: bin-major, channel-minor
    let mut re = vec![0.0; px * CHANNELS];
    let mut im = vec![0.0; px * CHANNELS];
    for c in 0..CHANNELS {
        let plane: Vec<f64> = diff.iter().skip(c).step_by(CHANNELS).copied().collect();
        let (r, i) = dft.forward(&plane);
        for k in 0..px {
            re[k * CHANNELS + c] = r[k];
            im[k * CHANNELS + c] = i[k];
        }
    }
    let mag2: Vec<f64> = re.iter().zip(&im).map(|(a, b)| a * a + b * b).collect();
    let r2 = grouped(&mag2, reduction);
    let n = r2.len() as f64;
    let value = charbonnier_mean(&r2, eps2);

    let mut grad = vec![0.0; px * CHANNELS];
    for c in 0..CHANNELS {
        let mut gr = vec![0.0; px];
        let mut gi = vec![0.0; px];
        for k in 0..px {
            let i = k * CHANNELS + c;
            let denom = n * libm::sqrt(r2[term_of(i, reduction)] + eps2 * eps2);
            gr[k] = re[i] / denom;
            gi[k] = im[i] / denom;
        }
        for (k, g) in dft.adjoint_real(gr, gi).into_iter().enumerate() {
            grad[k * CHANNELS + c] = g;
        }
    }
    Ok((value, image(sr.dims(), grad)))
}

/// Mean absolute error; the gradient at a zero residual is 0.
pub fn l1_loss(sr: &Image, hr: &Image) -> Result<(f64, Image), MechError> {
    same_dims(sr, hr)?;
    let n = sr.data().len() as f64;
    let mut value = 0.0;
    let grad = sr
        .data()
        .iter()
        .zip(hr.data())
        .map(|(s, h)| {
            let d = s - h;
            value += d.abs();
            sign(d) / n
        })
        .collect();
    Ok((value / n, image(sr.dims(), grad)))
}

fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Back-projection loss: mean absolute difference between the bicubic
/// (antialiased) ×`s` downscale of each SR view and the observed LR view,
/// summed over both views.
pub fn bp_loss(sr: &StereoPair, lr: &StereoPair, s: usize) -> Result<(f64, StereoPair), MechError> {
    let (lh, lw) = lr.dims();
    if s == 0 || sr.dims() != (lh * s, lw * s) {
        return Err(MechError::ScaleMismatch(format!(
            "SR {:?} is not {s} x LR {:?}",
            sr.dims(),
            lr.dims()
        )));
    }
    let down = Resampler::new(sr.dims(), lr.dims(), ResizeOptions::default());
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(2);
    for (sv, lv) in [(sr.left(), lr.left()), (sr.right(), lr.right())] {
        let (value, g) = l1_loss(&down.apply(sv), lv)?;
        total += value;
        grads.push(down.adjoint(&g));
    }
    let right = grads.pop().expect("two views");
    let left = grads.pop().expect("two views");
    Ok((total, StereoPair::new(left, right).expect("same dimensions")))
}

/// Which composite objective [`total_loss`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `L1 + λ_bp · L_BP`
    L1Bp,
    /// `L_Charbonnier + λ_fft · L_FFT`
    CharbonnierFft,
}

impl LossKind {
    pub fn parse(name: &str) -> Result<Self, MechError> {
        match name {
            "l1_bp" => Ok(Self::L1Bp),
            "charbonnier_fft" => Ok(Self::CharbonnierFft),
            other => Err(MechError::UnknownKind(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::L1Bp => "l1_bp",
            Self::CharbonnierFft => "charbonnier_fft",
        }
    }
}

/// Component values of a composite objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    /// `L1` or `L_Charbonnier`.
    pub base: f64,
    /// `L_BP` or `L_FFT`.
    pub aux: f64,
}

/// Weighted sum of precomputed parts; `kind` is `"l1_bp"` or
/// `"charbonnier_fft"`.
pub fn total_loss(kind: &str, parts: LossParts, cfg: &LossConfig) -> Result<f64, MechError> {
    let lambda = match LossKind::parse(kind)? {
        LossKind::L1Bp => cfg.lambda_bp,
        LossKind::CharbonnierFft => cfg.lambda_fft,
    };
    Ok(parts.base + lambda * parts.aux)
}

/// Central differences of `f` at `x` with step `h`.
pub fn numeric_gradient(f: impl Fn(&Image) -> f64, x: &Image, h: f64) -> Vec<f64> {
    let (rows, cols) = x.dims();
    let mut data = x.data().to_vec();
    let mut out = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let orig = data[i];
        data[i] = orig + h;
        let plus = f(&image((rows, cols), data.clone()));
        data[i] = orig - h;
        let minus = f(&image((rows, cols), data.clone()));
        data[i] = orig;
        out.push((plus - minus) / (2.0 * h));
    }
    out
}

/// `max_i |a_i − n_i| / max(|a_i|, |n_i|, floor)`. The floor keeps entries
/// that are zero in both from dividing by zero.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Relative-error floor used by the gradient checks.
pub const GRAD_CHECK_FLOOR: f64 = 1e-8;
