//! Low-resolution synthesis for both degradation tracks.
//!
//! Track 1 is plain bicubic downsampling with antialiasing. Track 2 applies,
//! per view and in this order: Gaussian blur, bicubic downsampling without
//! antialiasing (the blur already band-limits), additive Gaussian noise in
//! the continuous domain, quantization to 8 bits and a JPEG round trip.
//! Both outputs are 8-bit, as they would be stored on disk.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{convolve2d, gaussian_kernel, FilterError};
use crate::image::{Image, Image8, ImageError, StereoPair};
use crate::jpeg::{jpeg_roundtrip, JpegError};
use crate::resize::bicubic_resize;
use crate::rng::Rng;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DegradeError {
    #[error("{height}x{width} is not divisible by scale {scale}")]
    NotDivisible { height: usize, width: usize, scale: usize },
    #[error("invalid degradation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Jpeg(#[from] JpegError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Parameters of both degradation models. The Track 2 values are
/// configuration, not published ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationConfig {
    pub track: u8,
    pub scale: usize,
    pub blur_sigma: f64,
    pub blur_kernel_size: usize,
    /// Standard deviation on the 0–255 scale.
    pub noise_sigma: f64,
    pub jpeg_quality: u32,
    pub seed: u64,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        Self {
            track: 1,
            scale: 4,
            blur_sigma: 1.5,
            blur_kernel_size: 21,
            noise_sigma: 5.0,
            jpeg_quality: 70,
            seed: DEFAULT_SEED,
        }
    }
}

impl DegradationConfig {
    pub fn track2() -> Self {
        Self {
            track: 2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DegradeError> {
        let bad = |msg: String| Err(DegradeError::InvalidConfig(msg));
        if !matches!(self.track, 1 | 2) {
            return bad(format!("track must be 1 or 2, got {}", self.track));
        }
        if self.scale < 2 {
            return bad(format!("scale must be >= 2, got {}", self.scale));
        }
        if self.blur_kernel_size < 3 || self.blur_kernel_size.is_multiple_of(2) {
            return bad(format!(
                "blur_kernel_size must be odd and >= 3, got {}",
                self.blur_kernel_size
            ));
        }
        if !(1..=100).contains(&self.jpeg_quality) {
            return bad(format!(
                "jpeg_quality must be within 1..=100, got {}",
                self.jpeg_quality
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if self.track == 2 && !(self.blur_sigma > 0.0 && self.blur_sigma.is_finite()) {
            return bad(format!("blur_sigma must be > 0, got {}", self.blur_sigma));
        }
        Ok(())
    }
}

fn check_divisible(dims: (usize, usize), scale: usize) -> Result<(usize, usize), DegradeError> {
    let (h, w) = dims;
    if scale == 0 || h % scale != 0 || w % scale != 0 {
        return Err(DegradeError::NotDivisible {
            height: h,
            width: w,
            scale,
        });
    }
    Ok((h / scale, w / scale))
}

/// Adds i.i.d. `N(0, (noise_sigma / 255)²)` to every sample, unclamped.
pub fn add_gaussian_noise(img: &Image, noise_sigma: f64, rng: &mut Rng) -> Image {
    if noise_sigma == 0.0 {
        return img.clone();
    }
    let sd = noise_sigma / 255.0;
    img.map(|v| v + sd * rng.normal())
}

/// Bicubic ×`scale` downsampling of each view, quantized to 8 bits.
pub fn synthesize_track1(hr: &StereoPair, scale: usize) -> Result<StereoPair<Image8>, DegradeError> {
    let (h, w) = check_divisible(hr.dims(), scale)?;
    hr.try_map(|v| Ok::<_, DegradeError>(bicubic_resize(v, h, w, true).quantize8()))
}

/// Track 1 low-resolution pair, returned in float form.
pub fn degrade_track1(hr: &StereoPair, scale: usize) -> Result<StereoPair, DegradeError> {
    Ok(synthesize_track1(hr, scale)?.to_float())
}

/// Stage order of the Track 2 pipeline. Only the standard order is
/// meaningful; the other exists so self-tests can prove that order is
/// observable.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Track2Order {
    #[default]
    Standard,
    NoiseBeforeBlur,
}

/// Track 2 degradation of each view, left first, both drawing noise from
/// `rng`.
pub fn synthesize_track2(
    hr: &StereoPair,
    cfg: &DegradationConfig,
    rng: &mut Rng,
) -> Result<StereoPair<Image8>, DegradeError> {
    synthesize_track2_ordered(hr, cfg, rng, Track2Order::Standard)
}

#[doc(hidden)]
pub fn synthesize_track2_ordered(
    hr: &StereoPair,
    cfg: &DegradationConfig,
    rng: &mut Rng,
    order: Track2Order,
) -> Result<StereoPair<Image8>, DegradeError> {
    cfg.validate()?;
    if cfg.track != 2 {
        return Err(DegradeError::InvalidConfig(format!(
            "track 2 pipeline called with track {}",
            cfg.track
        )));
    }
    let (h, w) = check_divisible(hr.dims(), cfg.scale)?;
    let kernel = gaussian_kernel(cfg.blur_sigma, cfg.blur_kernel_size)?;
    hr.try_map(|view| {
        let lr = match order {
            Track2Order::Standard => {
                let blurred = convolve2d(view, &kernel)?;
                let small = bicubic_resize(&blurred, h, w, false);
                add_gaussian_noise(&small, cfg.noise_sigma, rng)
            }
            Track2Order::NoiseBeforeBlur => {
                let noisy = add_gaussian_noise(view, cfg.noise_sigma, rng);
                let blurred = convolve2d(&noisy, &kernel)?;
                bicubic_resize(&blurred, h, w, false)
            }
        };
        Ok::<_, DegradeError>(jpeg_roundtrip(&lr.quantize8(), cfg.jpeg_quality)?)
    })
}

/// Track 2 low-resolution pair, returned in float form.
pub fn degrade_track2(hr: &StereoPair, cfg: &DegradationConfig, rng: &mut Rng) -> Result<StereoPair, DegradeError> {
    Ok(synthesize_track2(hr, cfg, rng)?.to_float())
}
