//! Dense feature maps with an arbitrary channel count.

use alloc::format;
use alloc::vec::Vec;

use super::MechError;
use crate::image::{Image, CHANNELS};

/// `height × width × channels` real tensor, channels fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self, MechError> {
        if height == 0 || width == 0 || channels == 0 || data.len() != height * width * channels {
            return Err(MechError::ShapeMismatch(format!(
                "{height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(MechError::NonFinite(i));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::from_fn(height, width, channels, |_, _, _| 0.0)
    }

    /// # Panics
    /// If `f` produces a non-finite value.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data).expect("finite feature values")
    }

    pub fn from_image(img: &Image) -> Self {
        let (h, w) = img.dims();
        Self::new(h, w, CHANNELS, img.data().to_vec()).expect("images are finite")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Feature vector of one pixel.
    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> &[f64] {
        let o = (y * self.width + x) * self.channels;
        &self.data[o..o + self.channels]
    }

    /// All pixels of row `y`, back to back.
    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        let n = self.width * self.channels;
        &self.data[y * n..(y + 1) * n]
    }

    /// Mirror along the width axis.
    pub fn flip_horizontal(&self) -> Self {
        let w = self.width;
        Self::from_fn(self.height, w, self.channels, |y, x, c| self.get(y, w - 1 - x, c))
    }

    /// Rescales every pixel vector to unit Euclidean length; zero vectors
    /// stay zero.
    pub fn normalize_pixels(&self) -> Self {
        let mut data = self.data.clone();
        for px in data.chunks_mut(self.channels) {
            let n = libm::sqrt(px.iter().map(|v| v * v).sum::<f64>());
            if n > 0.0 {
                px.iter_mut().for_each(|v| *v /= n);
            }
        }
        Self { data, ..*self }
    }

    pub(crate) fn same_shape(&self, other: &Self, what: &str) -> Result<(), MechError> {
        if self.shape() != other.shape() {
            return Err(MechError::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}
