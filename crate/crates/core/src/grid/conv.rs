use serde::{Deserialize, Serialize};

use super::{reflect_index, Grid};
use crate::error::{argument, shape, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    #[default]
    Reflect,
    Zero,
}

/// Convolution weights laid out `[out_ch, in_ch, kh, kw]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    out_ch: usize,
    in_ch: usize,
    kh: usize,
    kw: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(out_ch: usize, in_ch: usize, kh: usize, kw: usize, weights: Vec<f64>) -> Result<Self> {
        if out_ch == 0 || in_ch == 0 {
            return Err(argument("kernel channel counts must be positive"));
        }
        if kh.is_multiple_of(2) || kw.is_multiple_of(2) {
            return Err(argument(format!("kernel size must be odd, got {kh}x{kw}")));
        }
        if weights.len() != out_ch * in_ch * kh * kw {
            return Err(shape(format!(
                "kernel [{out_ch}, {in_ch}, {kh}, {kw}] needs {} weights, got {}",
                out_ch * in_ch * kh * kw,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(argument("kernel weights must be finite"));
        }
        Ok(Self { out_ch, in_ch, kh, kw, weights })
    }

    pub fn zeros(out_ch: usize, in_ch: usize, kh: usize, kw: usize) -> Result<Self> {
        Self::new(out_ch, in_ch, kh, kw, vec![0.0; out_ch * in_ch * kh * kw])
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn size(&self) -> (usize, usize) {
        (self.kh, self.kw)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.in_ch + i) * self.kh + ky) * self.kw + kx]
    }
}

/// Same-padded 2-D convolution (cross-correlation, no kernel flip).
///
/// Output dims are `ceil(dim / stride)`; output `(oy, ox)` is centred on input
/// `(oy * stride, ox * stride)`.
pub fn conv2d(input: &Grid, kernel: &Kernel, stride: usize, padding: Padding) -> Result<Grid> {
    if stride == 0 {
        return Err(argument("stride must be positive"));
    }
    if kernel.in_ch != input.channels() {
        return Err(shape(format!(
            "kernel expects {} input channels, grid has {}",
            kernel.in_ch,
            input.channels()
        )));
    }
    let (h, w, cin) = input.dims();
    let out_h = h.div_ceil(stride);
    let out_w = w.div_ceil(stride);
    let (ry, rx) = ((kernel.kh / 2) as isize, (kernel.kw / 2) as isize);
    let src = input.data();
    let mut out = vec![0.0; out_h * out_w * kernel.out_ch];

    // Per output pixel, gather the tap offsets once and reuse them across channels.
    let mut taps: Vec<(usize, usize, usize)> = Vec::with_capacity(kernel.kh * kernel.kw);
    for oy in 0..out_h {
        for ox in 0..out_w {
            taps.clear();
            let cy = (oy * stride) as isize;
            let cx = (ox * stride) as isize;
            for ky in 0..kernel.kh {
                let sy = cy + ky as isize - ry;
                let sy = match padding {
                    Padding::Reflect => Some(reflect_index(sy, h)),
                    Padding::Zero => (sy >= 0 && sy < h as isize).then_some(sy as usize),
                };
                let Some(sy) = sy else { continue };
                for kx in 0..kernel.kw {
                    let sx = cx + kx as isize - rx;
                    let sx = match padding {
                        Padding::Reflect => Some(reflect_index(sx, w)),
                        Padding::Zero => (sx >= 0 && sx < w as isize).then_some(sx as usize),
                    };
                    if let Some(sx) = sx {
                        taps.push(((sy * w + sx) * cin, ky, kx));
                    }
                }
            }
            let base = (oy * out_w + ox) * kernel.out_ch;
            for o in 0..kernel.out_ch {
                let mut acc = 0.0;
                for i in 0..cin {
                    for &(offset, ky, kx) in &taps {
                        acc += kernel.weight(o, i, ky, kx) * src[offset + i];
                    }
                }
                out[base + o] = acc;
            }
        }
    }
    Grid::new(out_h, out_w, kernel.out_ch, out)
}
