//! Sub-pixel rearrangement between channels and space.
//!
//! Same index map as the usual deep-learning `PixelShuffle`: output
//! `(y·r + i, x·r + j, c)` takes input channel `c·r² + i·r + j` at `(y, x)`.

use super::{FeatureMap, MechError};

fn check(channels: usize, r: usize) -> Result<usize, MechError> {
    let r2 = r * r;
    if r == 0 || !channels.is_multiple_of(r2) {
        return Err(MechError::ChannelsNotDivisible { channels, r2 });
    }
    Ok(r2)
}

/// `(H, W, C) → (rH, rW, C/r²)`.
pub fn pixel_shuffle(f: &FeatureMap, r: usize) -> Result<FeatureMap, MechError> {
    let (h, w, c) = f.shape();
    let r2 = check(c, r)?;
    Ok(FeatureMap::from_fn(h * r, w * r, c / r2, |y, x, k| {
        f.get(y / r, x / r, k * r2 + (y % r) * r + x % r)
    }))
}

/// Inverse of [`pixel_shuffle`]: `(rH, rW, C) → (H, W, C·r²)`.
pub fn pixel_unshuffle(f: &FeatureMap, r: usize) -> Result<FeatureMap, MechError> {
    let (h, w, c) = f.shape();
    if r == 0 || h % r != 0 || w % r != 0 {
        return Err(MechError::ShapeMismatch(alloc::format!(
            "{h}x{w} is not divisible by r = {r}"
        )));
    }
    let r2 = r * r;
    Ok(FeatureMap::from_fn(h / r, w / r, c * r2, |y, x, k| {
        let (base, sub) = (k / r2, k % r2);
        f.get(y * r + sub / r, x * r + sub % r, base)
    }))
}
