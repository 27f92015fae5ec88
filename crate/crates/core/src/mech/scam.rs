//! Stereo cross-attention: bidirectional row attention between layer-normed
//! views, fused back through per-channel gains.
//!
//! For row `y`, with `n_v` the per-pixel layer norm of view `v`:
//!
//! ```text
//! S(i, j)  = ⟨n_L(i)·W_Q, n_R(j)·W_K⟩ / √C
//! out_L(i) = f_L(i) + γ_L ⊙ Σ_j softmax_j S(i, ·)  · (f_R(j)·V_R)
//! out_R(j) = f_R(j) + γ_R ⊙ Σ_i softmax_i S(·, j)  · (f_L(i)·V_L)
//! ```
//!
//! Vectors are rows and `x·W` sums over the rows of `W`. By default `W_K`
//! equals `W_Q` (shared projection), and the gains start at zero so the
//! block is the identity at initialization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::pam::softmax;
use super::{FeatureMap, MechError};
use crate::rng::Rng;

const LN_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ScamParams {
    pub channels: usize,
    pub norm_scale_l: Vec<f64>,
    pub norm_shift_l: Vec<f64>,
    pub norm_scale_r: Vec<f64>,
    pub norm_shift_r: Vec<f64>,
    /// Query projection, applied to the left view (`C×C`, row-major).
    pub w_q: Vec<f64>,
    /// Key projection, applied to the right view.
    pub w_k: Vec<f64>,
    pub v_l: Vec<f64>,
    pub v_r: Vec<f64>,
    pub gamma_l: Vec<f64>,
    pub gamma_r: Vec<f64>,
}

fn eye(c: usize) -> Vec<f64> {
    let mut m = vec![0.0; c * c];
    for i in 0..c {
        m[i * c + i] = 1.0;
    }
    m
}

impl ScamParams {
    /// Unit norms, identity projections, zero gains.
    pub fn identity(channels: usize) -> Self {
        Self {
            channels,
            norm_scale_l: vec![1.0; channels],
            norm_shift_l: vec![0.0; channels],
            norm_scale_r: vec![1.0; channels],
            norm_shift_r: vec![0.0; channels],
            w_q: eye(channels),
            w_k: eye(channels),
            v_l: eye(channels),
            v_r: eye(channels),
            gamma_l: vec![0.0; channels],
            gamma_r: vec![0.0; channels],
        }
    }

    /// Random parameters with shared `W_Q = W_K` and nonzero gains.
    pub fn random(channels: usize, rng: &mut Rng) -> Self {
        let c = channels;
        let s = 1.0 / libm::sqrt(c as f64);
        let mut draw =
            |n: usize, mean: f64, sd: f64| -> Vec<f64> { (0..n).map(|_| mean + sd * rng.normal()).collect() };
        let w_q = draw(c * c, 0.0, s);
        Self {
            channels,
            norm_scale_l: draw(c, 1.0, 0.1),
            norm_shift_l: draw(c, 0.0, 0.1),
            norm_scale_r: draw(c, 1.0, 0.1),
            norm_shift_r: draw(c, 0.0, 0.1),
            w_k: w_q.clone(),
            w_q,
            v_l: draw(c * c, 0.0, s),
            v_r: draw(c * c, 0.0, s),
            gamma_l: draw(c, 0.0, 0.5),
            gamma_r: draw(c, 0.0, 0.5),
        }
    }

    /// Parameters for the mirrored problem in which the two views trade
    /// places: every left-role tensor becomes the right one and vice versa.
    pub fn swapped(&self) -> Self {
        Self {
            channels: self.channels,
            norm_scale_l: self.norm_scale_r.clone(),
            norm_shift_l: self.norm_shift_r.clone(),
            norm_scale_r: self.norm_scale_l.clone(),
            norm_shift_r: self.norm_shift_l.clone(),
            w_q: self.w_k.clone(),
            w_k: self.w_q.clone(),
            v_l: self.v_r.clone(),
            v_r: self.v_l.clone(),
            gamma_l: self.gamma_r.clone(),
            gamma_r: self.gamma_l.clone(),
        }
    }

    fn validate(&self, channels: usize) -> Result<(), MechError> {
        if self.channels != channels {
            return Err(MechError::ParamMismatch(format!(
                "params for {} channels, features have {channels}",
                self.channels
            )));
        }
        let c = channels;
        let tensors: [(&str, &[f64], usize); 10] = [
            ("norm_scale_l", &self.norm_scale_l, c),
            ("norm_shift_l", &self.norm_shift_l, c),
            ("norm_scale_r", &self.norm_scale_r, c),
            ("norm_shift_r", &self.norm_shift_r, c),
            ("w_q", &self.w_q, c * c),
            ("w_k", &self.w_k, c * c),
            ("v_l", &self.v_l, c * c),
            ("v_r", &self.v_r, c * c),
            ("gamma_l", &self.gamma_l, c),
            ("gamma_r", &self.gamma_r, c),
        ];
        for (name, t, len) in tensors {
            if t.len() != len {
                return Err(MechError::ParamMismatch(format!(
                    "{name} has {} values, expected {len}",
                    t.len()
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(MechError::ParamMismatch(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

fn layer_norm(x: &[f64], scale: &[f64], shift: &[f64], out: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / libm::sqrt(var + LN_EPS);
    for (k, o) in out.iter_mut().enumerate() {
        *o = (x[k] - mean) * inv * scale[k] + shift[k];
    }
}

/// `out = x·W` for a row vector `x`.
fn project(x: &[f64], w: &[f64], out: &mut [f64]) {
    let c = out.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, &xi) in x.iter().enumerate() {
        for (o, &wij) in out.iter_mut().zip(&w[i * c..(i + 1) * c]) {
            *o += xi * wij;
        }
    }
}

/// Projects every pixel of row `y`, optionally layer-normalizing first.
fn row_projection(f: &FeatureMap, y: usize, norm: Option<(&[f64], &[f64])>, w: &[f64]) -> Vec<f64> {
    let (_, width, c) = f.shape();
    let mut out = vec![0.0; width * c];
    let mut tmp = vec![0.0; c];
    for x in 0..width {
        let px = f.pixel(y, x);
        let src = match norm {
            Some((scale, shift)) => {
                layer_norm(px, scale, shift, &mut tmp);
                &tmp[..]
            }
            None => px,
        };
        project(src, w, &mut out[x * c..(x + 1) * c]);
    }
    out
}

pub fn scam_forward(f_l: &FeatureMap, f_r: &FeatureMap, p: &ScamParams) -> Result<(FeatureMap, FeatureMap), MechError> {
    f_l.same_shape(f_r, "scam inputs")?;
    let (h, w, c) = f_l.shape();
    p.validate(c)?;
    let scale = 1.0 / libm::sqrt(c as f64);
    let mut out_l = f_l.data().to_vec();
    let mut out_r = f_r.data().to_vec();
    let mut s = vec![0.0; w * w];
    let mut st = vec![0.0; w * w];
    let mut acc = vec![0.0; c];

    for y in 0..h {
        let q = row_projection(f_l, y, Some((&p.norm_scale_l, &p.norm_shift_l)), &p.w_q);
        let k = row_projection(f_r, y, Some((&p.norm_scale_r, &p.norm_shift_r)), &p.w_k);
        let vl = row_projection(f_l, y, None, &p.v_l);
        let vr = row_projection(f_r, y, None, &p.v_r);
        for i in 0..w {
            for j in 0..w {
                let d: f64 = q[i * c..(i + 1) * c]
                    .iter()
                    .zip(&k[j * c..(j + 1) * c])
                    .map(|(a, b)| a * b)
                    .sum();
                s[i * w + j] = d * scale;
                st[j * w + i] = d * scale;
            }
        }
        s.chunks_mut(w).for_each(softmax);
        st.chunks_mut(w).for_each(softmax);

        for (attn, values, gamma, out) in [(&s, &vr, &p.gamma_l, &mut out_l), (&st, &vl, &p.gamma_r, &mut out_r)] {
            for i in 0..w {
                acc.iter_mut().for_each(|a| *a = 0.0);
                for j in 0..w {
                    let a = attn[i * w + j];
                    for (t, v) in acc.iter_mut().zip(&values[j * c..(j + 1) * c]) {
                        *t += a * v;
                    }
                }
                let o = (y * w + i) * c;
                for k in 0..c {
                    // a zero gain leaves the input untouched, bit for bit
                    if gamma[k] != 0.0 {
                        out[o + k] += gamma[k] * acc[k];
                    }
                }
            }
        }
    }
    Ok((FeatureMap::new(h, w, c, out_l)?, FeatureMap::new(h, w, c, out_r)?))
}
