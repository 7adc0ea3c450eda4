//! Forward-only miniature matting network with the memory block at its 1/16
//! bottleneck.
//!
//! Data flow for each frame of a clip:
//!
//! 1. four stride-2 3×3 convolutions (bias + ReLU) give features at 1/2, 1/4,
//!    1/8 and 1/16 of the input;
//! 2. the 1/16 features enter a [`MemoryBank`] holding the current and two
//!    previous frames, are attended, and fused residually;
//! 3. three type-1 up-sampling blocks (bilinear ×2, concatenate the same-scale
//!    skip feature and the average-pooled source image, residual conv pair)
//!    climb back to 1/2, and a type-2 block reaches full resolution using the
//!    source image only;
//! 4. the output block applies conv + affine norm + ReLU, then conv to four
//!    channels + affine norm, then a sigmoid. Channels 0..3 are the
//!    foreground, channel 3 is alpha.
//!
//! The affine norms use fixed statistics (inference-mode batch norm).

mod weights;

pub use weights::{AffineNorm, ConvLayer, ToyNetWeights, UpBlock};

use serde::{Deserialize, Serialize};

use crate::attention::{
    attend, fit_direct_supervision, fuse_readout, lowres_heads, project_qkv, push_frame, samples_from_clip, FitOptions,
    FitResult, MemoryBank,
};
use crate::compositor::{Clip, Role};
use crate::error::{argument, shape, Result};
use crate::grid::{avg_pool, bilinear_resize, Grid};
use crate::metrics::{LayerSpec, NetworkConfig};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyNetConfig {
    /// Channel widths at 1/2, 1/4, 1/8 and 1/16 scale. The last one is the
    /// memory block's `C_f`.
    pub widths: [usize; 4],
    pub d_k: usize,
    pub d_v: usize,
    pub seed: u64,
}

impl Default for ToyNetConfig {
    fn default() -> Self {
        Self { widths: [16, 24, 32, 64], d_k: 16, d_v: 16, seed: 0 }
    }
}

impl ToyNetConfig {
    /// Narrow bottleneck used by the direct-supervision demo (`C_f = d_k = d_v = 8`).
    pub fn demo(seed: u64) -> Self {
        Self { widths: [16, 24, 32, 8], d_k: 8, d_v: 8, seed }
    }

    pub fn c_f(&self) -> usize {
        self.widths[3]
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.contains(&0) || self.d_k == 0 || self.d_v == 0 {
            return Err(argument("network widths and attention dims must be positive"));
        }
        Ok(())
    }

    /// The convolution chain as a MAC-countable layer list.
    ///
    /// The memory block's matrix products are not convolutions and are not
    /// included.
    pub fn network_config(&self) -> NetworkConfig {
        let [w1, w2, w4, _] = self.widths;
        let mut layers = Vec::new();
        let mut prev = 3;
        for (k, &w) in self.widths.iter().enumerate() {
            layers.push(LayerSpec::conv(format!("enc{}", k + 1), prev, w, 3, 2));
            prev = w;
        }
        let ups = [("up1_8", w4), ("up1_4", w2), ("up1_2", w1)];
        for (name, skip) in ups {
            layers.push(LayerSpec { concat_ch: skip + 3, upsample: 2, ..LayerSpec::conv(format!("{name}.in"), prev + skip + 3, skip, 3, 1) });
            layers.push(LayerSpec::conv(format!("{name}.res"), skip, skip, 3, 1));
            prev = skip;
        }
        layers.push(LayerSpec { concat_ch: 3, upsample: 2, ..LayerSpec::conv("up2.in", prev + 3, w1, 3, 1) });
        layers.push(LayerSpec::conv("up2.res", w1, w1, 3, 1));
        layers.push(LayerSpec::conv("out1", w1, w1, 3, 1));
        layers.push(LayerSpec::conv("out2", w1, 4, 3, 1));
        NetworkConfig { layers }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePyramid {
    /// Features at 1/2, 1/4, 1/8, 1/16.
    pub levels: [Grid; 4],
}

impl FeaturePyramid {
    pub fn bottleneck(&self) -> &Grid {
        &self.levels[3]
    }
}

fn check_frame(frame: &Grid) -> Result<()> {
    let (h, w, c) = frame.dims();
    if c != 3 {
        return Err(shape(format!("network input must have 3 channels, got {c}")));
    }
    if h % 16 != 0 || w % 16 != 0 {
        return Err(argument(format!("input dims {h}x{w} must be divisible by 16")));
    }
    Ok(())
}

pub fn encode_pyramid(frame: &Grid, weights: &ToyNetWeights) -> Result<FeaturePyramid> {
    check_frame(frame)?;
    let e1 = weights.encoder[0].apply_relu(frame, 2)?;
    let e2 = weights.encoder[1].apply_relu(&e1, 2)?;
    let e3 = weights.encoder[2].apply_relu(&e2, 2)?;
    let e4 = weights.encoder[3].apply_relu(&e3, 2)?;
    Ok(FeaturePyramid { levels: [e1, e2, e3, e4] })
}

fn up_block(prev: &Grid, extras: &[&Grid], block: &UpBlock) -> Result<Grid> {
    let (h, w, _) = extras[0].dims();
    let up = bilinear_resize(prev, h, w)?;
    let mut parts = vec![&up];
    parts.extend_from_slice(extras);
    let x = Grid::concat_channels(&parts)?;
    let hidden = block.conv_in.apply_relu(&x, 1)?;
    hidden.add(&block.conv_res.apply_relu(&hidden, 1)?)
}

/// Decoder and output block; returns `(fg, alpha)` at the frame's resolution.
pub fn decode_and_output(
    pyramid: &FeaturePyramid,
    fused_bottleneck: &Grid,
    frame: &Grid,
    weights: &ToyNetWeights,
) -> Result<(Grid, Grid)> {
    check_frame(frame)?;
    let (h, w, _) = frame.dims();
    for (k, level) in pyramid.levels.iter().enumerate() {
        let s = 2usize << k;
        if (level.height(), level.width()) != (h / s, w / s) {
            return Err(shape(format!("pyramid level {} is {:?} for a {h}x{w} frame", k + 1, level.dims())));
        }
    }
    if fused_bottleneck.dims() != pyramid.bottleneck().dims() {
        return Err(shape(format!(
            "fused bottleneck {:?} does not match {:?}",
            fused_bottleneck.dims(),
            pyramid.bottleneck().dims()
        )));
    }
    let mut x = fused_bottleneck.clone();
    for (i, level) in [2usize, 1, 0].into_iter().enumerate() {
        let pooled = avg_pool(frame, 2 << level)?;
        x = up_block(&x, &[&pyramid.levels[level], &pooled], &weights.up1[i])?;
    }
    x = up_block(&x, &[frame], &weights.up2)?;

    let z = weights.out_norm1.apply(&weights.out_conv1.apply(&x, 1)?)?.map(|v| v.max(0.0))?;
    let z = weights.out_norm2.apply(&weights.out_conv2.apply(&z, 1)?)?;
    let s = z.map(crate::attention::sigmoid)?;
    let fg = Grid::from_fn(h, w, 3, |y, xx, c| s.get(y, xx, c))?;
    let alpha = s.channel(3)?;
    Ok((fg, alpha))
}

/// Per-clip outputs of [`forward_clip`].
#[derive(Clone, Debug, PartialEq)]
pub struct ClipOutputs {
    pub fg: Clip,
    pub alpha: Clip,
    pub alpha_lr: Vec<Grid>,
    pub fg_lr: Vec<Grid>,
    /// Encoder bottleneck features before the memory block, one per frame.
    pub bottleneck: Vec<Grid>,
}

/// Runs the network causally over `clip`: frame `t` only sees frames `≤ t`.
pub fn forward_clip(clip: &Clip, config: &ToyNetConfig, weights: &ToyNetWeights) -> Result<ClipOutputs> {
    if clip.role() != Role::Image {
        return Err(shape("forward_clip expects an image clip"));
    }
    config.validate()?;
    weights.check_config(config)?;
    let n = clip.len();
    let (mut fg, mut alpha) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut alpha_lr, mut fg_lr, mut bottleneck) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut bank: Option<MemoryBank> = None;
    for frame in clip.frames() {
        let pyramid = encode_pyramid(frame, weights)?;
        let feats = pyramid.bottleneck();
        let next = push_frame(bank.as_ref(), feats)?;
        let qkv = project_qkv(feats, &next, &weights.memory)?;
        let r = attend(&qkv.q, &qkv.k, &qkv.v, config.d_k)?;
        let fused = fuse_readout(feats, &r, &weights.memory)?;
        let (a_lr, f_lr) = lowres_heads(&fused, &weights.memory)?;
        let (f, a) = decode_and_output(&pyramid, &fused, frame, weights)?;
        fg.push(f);
        alpha.push(a);
        alpha_lr.push(a_lr);
        fg_lr.push(f_lr);
        bottleneck.push(feats.clone());
        bank = Some(next);
    }
    Ok(ClipOutputs {
        fg: Clip::new(fg, Role::Foreground)?,
        alpha: Clip::new(alpha, Role::Alpha)?,
        alpha_lr,
        fg_lr,
        bottleneck,
    })
}

/// Ground truth average-pooled to the bottleneck scale (`1/16`).
pub fn lowres_targets(gt_alpha: &Clip, gt_fg: &Clip) -> Result<(Vec<Grid>, Vec<Grid>)> {
    let pool = |c: &Clip| c.frames().iter().map(|g| avg_pool(g, 16)).collect::<Result<Vec<_>>>();
    Ok((pool(gt_alpha)?, pool(gt_fg)?))
}

/// Runs [`forward_clip`] and fits the memory block and its heads on the
/// resulting bottleneck features against the pooled ground truth, starting
/// from `weights.memory`.
pub fn fit_memory_block(
    frames: &Clip,
    gt_alpha: &Clip,
    gt_fg: &Clip,
    config: &ToyNetConfig,
    weights: &ToyNetWeights,
    options: FitOptions,
) -> Result<FitResult> {
    for gt in [gt_alpha, gt_fg] {
        if (gt.len(), gt.height(), gt.width()) != (frames.len(), frames.height(), frames.width()) {
            return Err(shape("fit targets do not match the clip's length or frame size"));
        }
    }
    let outputs = forward_clip(frames, config, weights)?;
    let (ga, gf) = lowres_targets(gt_alpha, gt_fg)?;
    let samples = samples_from_clip(&outputs.bottleneck, &ga, &gf)?;
    fit_direct_supervision(&samples, weights.memory.clone(), options)
}
