//! Lossy round trip through baseline sequential JPEG.
//!
//! Every lossy stage of a baseline 4:2:0 encoder and decoder is applied:
//! fixed-point RGB→YCbCr conversion, edge replication to whole 16×16 MCUs,
//! 2×2 chroma averaging, libjpeg's integer 8×8 forward DCT, quantization with the Annex K
//! tables scaled by the IJG quality mapping, dequantization, the matching integer inverse DCT,
//! triangular ("fancy") chroma upsampling and fixed-point YCbCr→RGB. Huffman
//! coding is lossless and therefore not part of the simulation; the color
//! conversion, transforms, subsampling and upsampling arithmetic follow
//! libjpeg's defaults bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::image::{Image8, CHANNELS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JpegError {
    #[error("JPEG quality must be within 1..=100, got {0}")]
    InvalidQuality(u32),
}

/// Annex K.1 luminance table, natural (row-major) order.
pub const LUMA_BASE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Annex K.2 chrominance table, natural order.
pub const CHROMA_BASE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// IJG percentage scaling for a quality in `1..=100`.
pub fn quality_scale(quality: u32) -> u32 {
    if quality < 50 {
        5000 / quality
    } else {
        200 - 2 * quality
    }
}

/// Scales a base table: `round(base * scale / 100)`, kept within 1..=255 so
/// the table stays valid for 8-bit baseline streams.
pub fn scaled_table(base: &[u16; 64], quality: u32) -> Result<[u16; 64], JpegError> {
    if !(1..=100).contains(&quality) {
        return Err(JpegError::InvalidQuality(quality));
    }
    let scale = quality_scale(quality);
    let mut out = [0u16; 64];
    for (o, &b) in out.iter_mut().zip(base) {
        *o = ((u32::from(b) * scale + 50) / 100).clamp(1, 255) as u16;
    }
    Ok(out)
}

const SCALEBITS: i32 = 16;
const ONE_HALF: i32 = 1 << (SCALEBITS - 1);

const fn fix(x: f64) -> i32 {
    (x * (1i64 << SCALEBITS) as f64 + 0.5) as i32
}

fn rgb_to_ycc(r: i32, g: i32, b: i32) -> [i32; 3] {
    let off = 128 << SCALEBITS;
    let y = (fix(0.29900) * r + fix(0.58700) * g + fix(0.11400) * b + ONE_HALF) >> SCALEBITS;
    let cb = (-fix(0.16874) * r - fix(0.33126) * g + fix(0.5) * b + off + ONE_HALF - 1) >> SCALEBITS;
    let cr = (fix(0.5) * r - fix(0.41869) * g - fix(0.08131) * b + off + ONE_HALF - 1) >> SCALEBITS;
    [y, cb, cr]
}

fn ycc_to_rgb(y: i32, cb: i32, cr: i32) -> [u8; 3] {
    let cb = cb - 128;
    let cr = cr - 128;
    let r = y + ((fix(1.40200) * cr + ONE_HALF) >> SCALEBITS);
    let g = y + ((-fix(0.34414) * cb - fix(0.71414) * cr + ONE_HALF) >> SCALEBITS);
    let b = y + ((fix(1.77200) * cb + ONE_HALF) >> SCALEBITS);
    [clamp8(r), clamp8(g), clamp8(b)]
}

#[inline]
fn clamp8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

/// One sample plane.
struct Plane {
    w: usize,
    h: usize,
    data: Vec<i32>,
}

impl Plane {
    #[inline]
    fn at(&self, y: usize, x: usize) -> i32 {
        self.data[y * self.w + x]
    }
}

// libjpeg's accurate integer DCT (`jfdctint.c` / `jidctint.c`): 13-bit
// fixed-point constants, two extra bits of precision between passes.
const CONST_BITS: u32 = 13;
const PASS1_BITS: u32 = 2;
const FIX_0_298631336: i64 = 2446;
const FIX_0_390180644: i64 = 3196;
const FIX_0_541196100: i64 = 4433;
const FIX_0_765366865: i64 = 6270;
const FIX_0_899976223: i64 = 7373;
const FIX_1_175875602: i64 = 9633;
const FIX_1_501321110: i64 = 12299;
const FIX_1_847759065: i64 = 15137;
const FIX_1_961570560: i64 = 16069;
const FIX_2_053119869: i64 = 16819;
const FIX_2_562915447: i64 = 20995;
const FIX_3_072711026: i64 = 25172;

#[inline]
fn descale(x: i64, n: u32) -> i64 {
    (x + (1 << (n - 1))) >> n
}

/// Odd part shared by both transforms: returns the four rotated terms for
/// inputs ordered as in the forward transform (`tmp4..tmp7`).
#[inline]
fn odd_part(t4: i64, t5: i64, t6: i64, t7: i64) -> [i64; 4] {
    let z1 = t4 + t7;
    let z2 = t5 + t6;
    let z3 = t4 + t6;
    let z4 = t5 + t7;
    let z5 = (z3 + z4) * FIX_1_175875602;
    let z1 = -z1 * FIX_0_899976223;
    let z2 = -z2 * FIX_2_562915447;
    let z3 = -z3 * FIX_1_961570560 + z5;
    let z4 = -z4 * FIX_0_390180644 + z5;
    [
        t4 * FIX_0_298631336 + z1 + z3,
        t5 * FIX_2_053119869 + z2 + z4,
        t6 * FIX_3_072711026 + z2 + z3,
        t7 * FIX_1_501321110 + z1 + z4,
    ]
}

/// One 8-point forward pass over `d[base + k * step]`. Even outputs are
/// shifted by `even_shift` (negative: descaled), odd ones descaled by
/// `odd_bits`.
fn fdct_pass(d: &mut [i64; 64], base: usize, step: usize, first: bool) {
    let g = |k: usize| d[base + k * step];
    let (t0, t7) = (g(0) + g(7), g(0) - g(7));
    let (t1, t6) = (g(1) + g(6), g(1) - g(6));
    let (t2, t5) = (g(2) + g(5), g(2) - g(5));
    let (t3, t4) = (g(3) + g(4), g(3) - g(4));
    let (t10, t13) = (t0 + t3, t0 - t3);
    let (t11, t12) = (t1 + t2, t1 - t2);
    let bits = if first {
        CONST_BITS - PASS1_BITS
    } else {
        CONST_BITS + PASS1_BITS
    };
    let mut put = |k: usize, v: i64| d[base + k * step] = v;
    if first {
        put(0, (t10 + t11) << PASS1_BITS);
        put(4, (t10 - t11) << PASS1_BITS);
    } else {
        put(0, descale(t10 + t11, PASS1_BITS));
        put(4, descale(t10 - t11, PASS1_BITS));
    }
    let z1 = (t12 + t13) * FIX_0_541196100;
    put(2, descale(z1 + t13 * FIX_0_765366865, bits));
    put(6, descale(z1 - t12 * FIX_1_847759065, bits));
    let [o7, o5, o3, o1] = odd_part(t4, t5, t6, t7);
    put(7, descale(o7, bits));
    put(5, descale(o5, bits));
    put(3, descale(o3, bits));
    put(1, descale(o1, bits));
}

/// `jpeg_fdct_islow`; output is scaled up by 8.
fn fdct_islow(d: &mut [i64; 64]) {
    for row in 0..8 {
        fdct_pass(d, row * 8, 1, true);
    }
    for col in 0..8 {
        fdct_pass(d, col, 8, false);
    }
}

/// One 8-point inverse pass; returns the eight outputs before descaling.
fn idct_pass(g: impl Fn(usize) -> i64) -> [i64; 8] {
    let (z2, z3) = (g(2), g(6));
    let z1 = (z2 + z3) * FIX_0_541196100;
    let t2 = z1 - z3 * FIX_1_847759065;
    let t3 = z1 + z2 * FIX_0_765366865;
    let t0 = (g(0) + g(4)) << CONST_BITS;
    let t1 = (g(0) - g(4)) << CONST_BITS;
    let (t10, t13) = (t0 + t3, t0 - t3);
    let (t11, t12) = (t1 + t2, t1 - t2);
    let [o0, o1, o2, o3] = odd_part(g(7), g(5), g(3), g(1));
    [
        t10 + o3,
        t11 + o2,
        t12 + o1,
        t13 + o0,
        t13 - o0,
        t12 - o1,
        t11 - o2,
        t10 - o3,
    ]
}

/// `jpeg_idct_islow` on dequantized coefficients, writing level-shifted
/// and range-limited samples.
fn idct_islow(coef: &[i64; 64], out: &mut [i32; 64]) {
    let mut ws = [0i64; 64];
    for col in 0..8 {
        if (1..8).all(|r| coef[r * 8 + col] == 0) {
            let dc = coef[col] << PASS1_BITS;
            for r in 0..8 {
                ws[r * 8 + col] = dc;
            }
            continue;
        }
        let v = idct_pass(|k| coef[k * 8 + col]);
        for r in 0..8 {
            ws[r * 8 + col] = descale(v[r], CONST_BITS - PASS1_BITS);
        }
    }
    for row in 0..8 {
        let w = &ws[row * 8..row * 8 + 8];
        let v: [i64; 8] = if w[1..].iter().all(|&x| x == 0) {
            [descale(w[0], PASS1_BITS + 3); 8]
        } else {
            idct_pass(|k| w[k]).map(|x| descale(x, CONST_BITS + PASS1_BITS + 3))
        };
        for (x, &s) in v.iter().enumerate() {
            out[row * 8 + x] = range_limit(s);
        }
    }
}

/// libjpeg's post-IDCT table: the value is taken modulo 1024 as a signed
/// 10-bit number, recentred and clamped.
#[inline]
fn range_limit(x: i64) -> i32 {
    let m = (x & 1023) as i32;
    let signed = if m >= 512 { m - 1024 } else { m };
    i32::from(clamp8(signed + 128))
}

/// Quantizes and reconstructs every 8×8 block of a plane whose dimensions
/// are multiples of 8.
fn code_plane(plane: &mut Plane, table: &[u16; 64]) {
    debug_assert!(plane.w.is_multiple_of(8) && plane.h.is_multiple_of(8));
    let mut block = [0i64; 64];
    let mut out = [0i32; 64];
    for by in (0..plane.h).step_by(8) {
        for bx in (0..plane.w).step_by(8) {
            for y in 0..8 {
                for x in 0..8 {
                    block[y * 8 + x] = i64::from(plane.at(by + y, bx + x) - 128);
                }
            }
            fdct_islow(&mut block);
            for (c, &q) in block.iter_mut().zip(table) {
                // divisor carries the DCT's factor of 8; rounds half away from zero
                let div = i64::from(q) << 3;
                let mag = (c.abs() + (div >> 1)) / div;
                *c = c.signum() * mag * i64::from(q);
            }
            idct_islow(&block, &mut out);
            for y in 0..8 {
                let row = (by + y) * plane.w + bx;
                plane.data[row..row + 8].copy_from_slice(&out[y * 8..y * 8 + 8]);
            }
        }
    }
}

/// libjpeg `h2v2_downsample`: 2×2 box average with alternating 1/2 bias.
fn downsample(full: &Plane) -> Plane {
    let (w, h) = (full.w / 2, full.h / 2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let bias = if x % 2 == 0 { 1 } else { 2 };
            let s = full.at(2 * y, 2 * x)
                + full.at(2 * y, 2 * x + 1)
                + full.at(2 * y + 1, 2 * x)
                + full.at(2 * y + 1, 2 * x + 1);
            data.push((s + bias) >> 2);
        }
    }
    Plane { w, h, data }
}

/// libjpeg `h2v2_fancy_upsample` over the `rows × cols` region of real
/// chroma samples: 3:1 triangular weights in both directions, edges clamped.
fn fancy_upsample(ch: &Plane, rows: usize, cols: usize, out_h: usize, out_w: usize) -> Vec<i32> {
    let mut out = vec![0; out_h * out_w];
    let mut colsum = vec![0i32; cols];
    for oy in 0..out_h {
        let r = oy / 2;
        let near = r;
        let far = if oy % 2 == 0 {
            r.saturating_sub(1)
        } else {
            (r + 1).min(rows - 1)
        };
        for (x, s) in colsum.iter_mut().enumerate() {
            *s = 3 * ch.at(near, x) + ch.at(far, x);
        }
        for ox in 0..out_w {
            let c = ox / 2;
            let this = colsum[c];
            let v = if ox % 2 == 0 {
                let last = colsum[c.saturating_sub(1)];
                (3 * this + last + 8) >> 4
            } else {
                let next = colsum[(c + 1).min(cols - 1)];
                (3 * this + next + 7) >> 4
            };
            out[oy * out_w + ox] = v;
        }
    }
    out
}

/// Encodes and decodes `img` as a baseline 4:2:0 JPEG at `quality`.
pub fn jpeg_roundtrip(img: &Image8, quality: u32) -> Result<Image8, JpegError> {
    let luma_q = scaled_table(&LUMA_BASE, quality)?;
    let chroma_q = scaled_table(&CHROMA_BASE, quality)?;
    let (h, w) = img.dims();
    let (ph, pw) = (h.div_ceil(16) * 16, w.div_ceil(16) * 16);

    // color conversion on the MCU-padded grid (edge replication)
    let mut planes: [Plane; 3] = core::array::from_fn(|_| Plane {
        w: pw,
        h: ph,
        data: vec![0; pw * ph],
    });
    for y in 0..ph {
        for x in 0..pw {
            let (sy, sx) = (y.min(h - 1), x.min(w - 1));
            let px = |c| i32::from(img.get(sy, sx, c));
            let ycc = rgb_to_ycc(px(0), px(1), px(2));
            for c in 0..3 {
                planes[c].data[y * pw + x] = ycc[c];
            }
        }
    }
    let [mut luma, cb_full, cr_full] = planes;
    let mut cb = downsample(&cb_full);
    let mut cr = downsample(&cr_full);

    code_plane(&mut luma, &luma_q);
    code_plane(&mut cb, &chroma_q);
    code_plane(&mut cr, &chroma_q);

    let (crows, ccols) = (h.div_ceil(2), w.div_ceil(2));
    let cb_up = fancy_upsample(&cb, crows, ccols, h, w);
    let cr_up = fancy_upsample(&cr, crows, ccols, h, w);

    let mut data = Vec::with_capacity(h * w * CHANNELS);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            data.extend_from_slice(&ycc_to_rgb(luma.at(y, x), cb_up[i], cr_up[i]));
        }
    }
    Ok(Image8::new(h, w, data).expect("same dimensions"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psnr_rgb;
    use crate::synth::natural_image;

    #[test]
    fn quality_mapping() {
        assert_eq!(quality_scale(10), 500);
        assert_eq!(quality_scale(50), 100);
        assert_eq!(quality_scale(90), 20);
        assert_eq!(scaled_table(&LUMA_BASE, 100).unwrap(), [1; 64]);
        assert_eq!(scaled_table(&LUMA_BASE, 50).unwrap(), LUMA_BASE);
        let q90 = scaled_table(&LUMA_BASE, 90).unwrap();
        // 16 * 20 / 100 = 3.2, 11 * 20 / 100 = 2.2, 99 * 20 / 100 = 19.8
        assert_eq!((q90[0], q90[1], q90[63]), (3, 2, 20));
        assert_eq!(scaled_table(&CHROMA_BASE, 1).unwrap()[0], 255);
        assert_eq!(scaled_table(&LUMA_BASE, 0), Err(JpegError::InvalidQuality(0)));
        assert_eq!(scaled_table(&LUMA_BASE, 101), Err(JpegError::InvalidQuality(101)));
    }

    #[test]
    fn uniform_gray_survives_quality_100() {
        for g in [0u8, 77, 128, 200, 255] {
            let img = Image8::filled(24, 40, [g, g, g]);
            assert_eq!(jpeg_roundtrip(&img, 100).unwrap(), img);
        }
    }

    #[test]
    fn quality_100_is_high_fidelity() {
        let img = natural_image(64, 64, 7);
        let out = jpeg_roundtrip(&img, 100).unwrap();
        assert!(psnr_rgb(&img, &out).unwrap() >= 45.0);
    }

    #[test]
    fn lower_quality_is_worse() {
        let img = natural_image(64, 64, 7);
        let p10 = psnr_rgb(&img, &jpeg_roundtrip(&img, 10).unwrap()).unwrap();
        let p90 = psnr_rgb(&img, &jpeg_roundtrip(&img, 90).unwrap()).unwrap();
        assert!(p10 < p90, "{p10} vs {p90}");
    }

    #[test]
    fn odd_sizes_keep_dimensions() {
        let img = natural_image(13, 29, 2);
        assert_eq!(jpeg_roundtrip(&img, 75).unwrap().dims(), (13, 29));
        let one = natural_image(1, 1, 3);
        assert_eq!(jpeg_roundtrip(&one, 75).unwrap().dims(), (1, 1));
    }

    #[test]
    fn color_conversion_round_trip() {
        for &(r, g, b) in &[(0, 0, 0), (255, 255, 255), (255, 0, 0), (12, 200, 99)] {
            let [y, cb, cr] = rgb_to_ycc(r, g, b);
            let back = ycc_to_rgb(y, cb, cr);
            for (a, e) in back.iter().zip([r, g, b]) {
                assert!((i32::from(*a) - e).abs() <= 2);
            }
        }
    }
}
