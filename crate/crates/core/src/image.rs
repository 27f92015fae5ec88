//! Image containers, stereo pairs and scene identifiers.
//!
//! Samples are stored interleaved (row-major, RGB per pixel). Float images
//! use the continuous range `[0, 1]`; [`Image8`] is the 8-bit exchange form.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of color channels every image carries.
pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("invalid dimensions {height}x{width} with {len} samples")]
    InvalidDimensions { height: usize, width: usize, len: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("cropping {height}x{width} to a multiple of {scale} leaves nothing")]
    EmptyResult { height: usize, width: usize, scale: usize },
    #[error("invalid scene id {0:?}")]
    InvalidSceneId(String),
}

fn check_dims(height: usize, width: usize, len: usize) -> Result<(), ImageError> {
    if height == 0 || width == 0 || len != height * width * CHANNELS {
        return Err(ImageError::InvalidDimensions { height, width, len });
    }
    Ok(())
}

/// Continuous-valued RGB image, nominal range `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        check_dims(height, width, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite(i));
        }
        Ok(Self { height, width, data })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "empty image");
        Self {
            height,
            width,
            data: vec![value; height * width * CHANNELS],
        }
    }

    /// Builds an image from `f(y, x, c)`.
    ///
    /// # Panics
    /// If either dimension is zero or `f` returns a non-finite value.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "empty image");
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                for c in 0..CHANNELS {
                    let v = f(y, x, c);
                    assert!(v.is_finite(), "non-finite sample at ({y}, {x}, {c})");
                    data.push(v);
                }
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    /// Applies `f` to every sample.
    ///
    /// # Panics
    /// If `f` produces a non-finite value.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        assert!(data.iter().all(|v| v.is_finite()), "non-finite sample");
        Self {
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Clamps to `[0, 1]`, scales by 255 and rounds half away from zero.
    pub fn quantize8(&self) -> Image8 {
        Image8 {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| quantize_sample(v)).collect(),
        }
    }

    /// Top-left crop whose dimensions are the largest multiples of `scale`.
    pub fn crop_to_multiple(&self, scale: usize) -> Result<Self, ImageError> {
        assert!(scale >= 1, "scale must be at least 1");
        let h = self.height / scale * scale;
        let w = self.width / scale * scale;
        if h == 0 || w == 0 {
            return Err(ImageError::EmptyResult {
                height: self.height,
                width: self.width,
                scale,
            });
        }
        Ok(self.crop(0, 0, h, w))
    }

    /// # Panics
    /// If the window leaves the image or is empty.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0);
        assert!(
            top + height <= self.height && left + width <= self.width,
            "crop out of bounds"
        );
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in top..top + height {
            let start = (y * self.width + left) * CHANNELS;
            data.extend_from_slice(&self.data[start..start + width * CHANNELS]);
        }
        Self { height, width, data }
    }
}

#[inline]
pub fn quantize_sample(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    libm::round(v * 255.0) as u8
}

/// 8-bit RGB image, the storage and submission representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image8 {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Image8 {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        check_dims(height, width, data.len())?;
        Ok(Self { height, width, data })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Self {
        assert!(height > 0 && width > 0, "empty image");
        let data = rgb.iter().copied().cycle().take(height * width * CHANNELS).collect();
        Self { height, width, data }
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> u8) -> Self {
        assert!(height > 0 && width > 0, "empty image");
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                for c in 0..CHANNELS {
                    data.push(f(y, x, c));
                }
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    /// Divides every sample by 255.
    pub fn to_float(&self) -> Image {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f64::from(v) / 255.0).collect(),
        }
    }
}

/// Anything with a height and width.
pub trait Dims {
    fn dims(&self) -> (usize, usize);
}

impl Dims for Image {
    fn dims(&self) -> (usize, usize) {
        Image::dims(self)
    }
}

impl Dims for Image8 {
    fn dims(&self) -> (usize, usize) {
        Image8::dims(self)
    }
}

/// Left and right views of one scene. Both views always share dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoPair<I = Image> {
    left: I,
    right: I,
}

impl<I: Dims> StereoPair<I> {
    pub fn new(left: I, right: I) -> Result<Self, ImageError> {
        if left.dims() != right.dims() {
            return Err(ImageError::DimensionMismatch(left.dims(), right.dims()));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> &I {
        &self.left
    }

    pub fn right(&self) -> &I {
        &self.right
    }

    pub fn view(&self, view: View) -> &I {
        match view {
            View::Left => &self.left,
            View::Right => &self.right,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.left.dims()
    }

    pub fn into_views(self) -> (I, I) {
        (self.left, self.right)
    }

    /// Applies `f` to both views; fails if the results disagree in size.
    pub fn try_map<J: Dims, E: From<ImageError>>(
        &self,
        mut f: impl FnMut(&I) -> Result<J, E>,
    ) -> Result<StereoPair<J>, E> {
        let left = f(&self.left)?;
        let right = f(&self.right)?;
        Ok(StereoPair::new(left, right)?)
    }
}

impl StereoPair<Image> {
    pub fn quantize8(&self) -> StereoPair<Image8> {
        StereoPair {
            left: self.left.quantize8(),
            right: self.right.quantize8(),
        }
    }
}

impl StereoPair<Image8> {
    pub fn to_float(&self) -> StereoPair<Image> {
        StereoPair {
            left: self.left.to_float(),
            right: self.right.to_float(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum View {
    Left,
    Right,
}

impl View {
    pub const BOTH: [View; 2] = [View::Left, View::Right];

    pub fn suffix(self) -> &'static str {
        match self {
            View::Left => "L",
            View::Right => "R",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Numeric scene identifier, written zero-padded to four digits (`0042`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SceneId {
    pub number: u32,
    pub split: Split,
}

impl SceneId {
    pub fn new(number: u32, split: Split) -> Self {
        Self { number, split }
    }

    /// Parses the zero-padded form. Only strings that format back to
    /// themselves are accepted, so `"1"` and `"00001"` are both rejected.
    pub fn parse(s: &str, split: Split) -> Result<Self, ImageError> {
        let bad = || ImageError::InvalidSceneId(String::from(s));
        if s.len() < 4 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let number = u32::from_str(s).map_err(|_| bad())?;
        let id = Self { number, split };
        if id.padded() != s {
            return Err(bad());
        }
        Ok(id)
    }

    pub fn padded(&self) -> String {
        alloc::format!("{:04}", self.number)
    }

    /// File stem of one view, e.g. `0042_R`.
    pub fn view_stem(&self, view: View) -> String {
        alloc::format!("{:04}_{}", self.number, view.suffix())
    }
}

impl fmt::Display for SceneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.number)
    }
}
