//! Deterministic synthetic fixtures.
//!
//! All generators use integer arithmetic only, so the same images can be
//! rebuilt exactly by external tools (see `tests/oracle/fixtures.py`).

use crate::image::{Image8, StereoPair};

/// 32-bit integer finalizer (lowbias32).
pub fn mix32(mut h: u32) -> u32 {
    h ^= h >> 16;
    h = h.wrapping_mul(0x7feb_352d);
    h ^= h >> 15;
    h = h.wrapping_mul(0x846c_a68b);
    h ^= h >> 16;
    h
}

pub fn hash3(x: u32, y: u32, seed: u32) -> u32 {
    mix32(x ^ mix32(y.wrapping_add(mix32(seed))))
}

/// Smooth per-channel ramps plus a luminance texture shared by all channels.
pub fn natural_image(height: usize, width: usize, seed: u32) -> Image8 {
    Image8::from_fn(height, width, |y, x, c| {
        let (x, y, c) = (x as u32, y as u32, c as u32);
        let tex = (hash3(x, y, seed) % 25) as i32 - 12;
        let a = (x * (3 + seed % 5) + y * (2 + c) + seed * 17 + c * 40) % 512;
        let tri = if a < 256 { a } else { 511 - a };
        ((tri * 5 / 8 + 48) as i32 + tex).clamp(0, 255) as u8
    })
}

/// Adds bounded integer noise in `[-amp, amp]` to every sample.
pub fn distorted(img: &Image8, seed: u32, amp: u32) -> Image8 {
    let span = 2 * amp + 1;
    Image8::from_fn(img.height(), img.width(), |y, x, c| {
        let n = (hash3(x as u32, (y * 3 + c) as u32, seed ^ 0x9e37) % span) as i32 - amp as i32;
        (i32::from(img.get(y, x, c)) + n).clamp(0, 255) as u8
    })
}

/// Stereo pair whose right view is the left view shifted left by
/// `disparity` columns; the uncovered right edge gets fresh texture.
pub fn shifted_pair(height: usize, width: usize, disparity: usize, seed: u32) -> StereoPair<Image8> {
    let left = natural_image(height, width + disparity, seed);
    let fill = natural_image(height, disparity.max(1), seed.wrapping_add(1));
    let l = Image8::from_fn(height, width, |y, x, c| left.get(y, x, c));
    let r = Image8::from_fn(height, width, |y, x, c| {
        if x + disparity < width {
            left.get(y, x + disparity, c)
        } else {
            fill.get(y, x + disparity - width, c)
        }
    });
    StereoPair::new(l, r).expect("views share dimensions")
}
