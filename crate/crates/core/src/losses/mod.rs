//! Training objective for video matting.
//!
//! Image term: `L_im = L_α + L_lap + L_com`. Temporal term:
//! `L_t = L_tem-agg + L_tem`. Total: `L_vid = L_im + L_t`.
//!
//! Every norm is mean-reduced so values do not depend on resolution. The
//! temporal coherence term is the root mean square of the difference between
//! predicted and true forward differences `x_{t+1} − x_t`.

mod pyramid;

pub use pyramid::{build_pyramid, LaplacianPyramid};

use serde::{Deserialize, Serialize};

use crate::compositor::Clip;
use crate::error::{argument, shape, Error, Result};
use crate::grid::{stable_mean, stable_sum, Grid};

/// Pyramid depth used when the caller has no preference.
pub const DEFAULT_PYRAMID_LEVELS: usize = 5;

fn mean_l1(a: &Grid, b: &Grid) -> f64 {
    let d: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).collect();
    stable_mean(&d)
}

fn check_clips(pred: &Clip, gt: &Clip, what: &str) -> Result<()> {
    if pred.role() != gt.role() {
        return Err(shape(format!("{what}: {:?} clip vs {:?} clip", pred.role(), gt.role())));
    }
    pred.check_compatible(gt, what)
}

fn frame_mean(values: Vec<f64>) -> f64 {
    stable_mean(&values)
}

/// Mean absolute alpha error over pixels and frames.
pub fn l_alpha(pred: &Clip, gt: &Clip) -> Result<f64> {
    check_clips(pred, gt, "l_alpha")?;
    Ok(frame_mean(pred.frames().iter().zip(gt.frames()).map(|(p, g)| mean_l1(p, g)).collect()))
}

/// `Σ_s 2^{s−1} · mean|L_s(pred) − L_s(gt)|` over band levels, averaged over frames.
pub fn l_lap(pred: &Clip, gt: &Clip, levels: usize) -> Result<f64> {
    check_clips(pred, gt, "l_lap")?;
    let per_frame = pred
        .frames()
        .iter()
        .zip(gt.frames())
        .map(|(p, g)| {
            let pp = build_pyramid(p, levels)?;
            let gp = build_pyramid(g, levels)?;
            Ok(stable_sum(
                pp.levels
                    .iter()
                    .zip(&gp.levels)
                    .enumerate()
                    .map(|(s, (a, b))| (1u64 << s) as f64 * mean_l1(a, b)),
            ))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(frame_mean(per_frame))
}

/// Mean absolute difference of premultiplied foregrounds `α·F`.
pub fn l_com(pred_alpha: &Clip, pred_fg: &Clip, gt_alpha: &Clip, gt_fg: &Clip) -> Result<f64> {
    check_clips(pred_alpha, gt_alpha, "l_com alpha")?;
    check_clips(pred_fg, gt_fg, "l_com fg")?;
    if pred_alpha.len() != pred_fg.len()
        || (pred_alpha.height(), pred_alpha.width()) != (pred_fg.height(), pred_fg.width())
    {
        return Err(shape("l_com alpha and fg clips disagree"));
    }
    let per_frame = (0..pred_alpha.len())
        .map(|t| {
            let (pa, pf) = (pred_alpha.frame(t), pred_fg.frame(t));
            let (ga, gf) = (gt_alpha.frame(t), gt_fg.frame(t));
            let d: Vec<f64> = (0..pf.len())
                .map(|i| (pa.data()[i / 3] * pf.data()[i] - ga.data()[i / 3] * gf.data()[i]).abs())
                .collect();
            stable_mean(&d)
        })
        .collect();
    Ok(frame_mean(per_frame))
}

/// RMS over pixels, channels and frame pairs of `Δpred − Δgt`, where `Δ` is
/// the forward difference in time.
pub fn l_tem(pred: &Clip, gt: &Clip) -> Result<f64> {
    check_clips(pred, gt, "l_tem")?;
    if pred.len() < 2 {
        return Err(argument("temporal loss needs at least two frames"));
    }
    let sq: Vec<f64> = (0..pred.len() - 1)
        .flat_map(|t| {
            let (p0, p1) = (pred.frame(t).data(), pred.frame(t + 1).data());
            let (g0, g1) = (gt.frame(t).data(), gt.frame(t + 1).data());
            (0..p0.len()).map(move |i| {
                let r = (p1[i] - p0[i]) - (g1[i] - g0[i]);
                r * r
            })
        })
        .collect();
    Ok(stable_mean(&sq).sqrt())
}

/// `mean|α_lr − α̂_lr| + mean|F_lr − F̂_lr|` over low-resolution frames.
pub fn l_tem_agg(pred_alpha_lr: &Clip, pred_fg_lr: &Clip, gt_alpha_lr: &Clip, gt_fg_lr: &Clip) -> Result<f64> {
    Ok(l_alpha(pred_alpha_lr, gt_alpha_lr)? + l_alpha(pred_fg_lr, gt_fg_lr)?)
}

/// The five primitive terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub l_alpha: f64,
    pub l_lap: f64,
    pub l_com: f64,
    pub l_tem_agg: f64,
    pub l_tem: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossBreakdown {
    pub l_alpha: f64,
    pub l_lap: f64,
    pub l_com: f64,
    pub l_im: f64,
    pub l_tem_agg: f64,
    pub l_tem: f64,
    pub l_t: f64,
    pub l_vid: f64,
}

impl LossBreakdown {
    /// Checks non-negativity and the three sum identities to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let all = [
            self.l_alpha, self.l_lap, self.l_com, self.l_im, self.l_tem_agg, self.l_tem, self.l_t, self.l_vid,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("loss terms must be finite and non-negative".into()));
        }
        let ok = (self.l_im - (self.l_alpha + self.l_lap + self.l_com)).abs() <= tol
            && (self.l_t - (self.l_tem_agg + self.l_tem)).abs() <= tol
            && (self.l_vid - (self.l_im + self.l_t)).abs() <= tol;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("loss breakdown sums are inconsistent".into()))
        }
    }
}

pub fn compose_losses(c: LossComponents) -> Result<LossBreakdown> {
    let parts = [c.l_alpha, c.l_lap, c.l_com, c.l_tem_agg, c.l_tem];
    if let Some(v) = parts.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Domain(format!("loss component {v} is negative or non-finite")));
    }
    let l_im = c.l_alpha + c.l_lap + c.l_com;
    let l_t = c.l_tem_agg + c.l_tem;
    Ok(LossBreakdown {
        l_alpha: c.l_alpha,
        l_lap: c.l_lap,
        l_com: c.l_com,
        l_im,
        l_tem_agg: c.l_tem_agg,
        l_tem: c.l_tem,
        l_t,
        l_vid: l_im + l_t,
    })
}

/// Full-resolution predictions plus the memory block's low-resolution heads.
#[derive(Clone, Debug)]
pub struct MattingOutputs {
    pub alpha: Clip,
    pub fg: Clip,
    pub alpha_lr: Clip,
    pub fg_lr: Clip,
}

/// Evaluates every term of the video objective. `l_tem` sums the alpha and
/// foreground coherence terms; it is zero for single-frame clips.
pub fn video_loss(pred: &MattingOutputs, gt: &MattingOutputs, levels: usize) -> Result<LossBreakdown> {
    let tem = if pred.alpha.len() >= 2 {
        l_tem(&pred.alpha, &gt.alpha)? + l_tem(&pred.fg, &gt.fg)?
    } else {
        0.0
    };
    compose_losses(LossComponents {
        l_alpha: l_alpha(&pred.alpha, &gt.alpha)?,
        l_lap: l_lap(&pred.alpha, &gt.alpha, levels)?,
        l_com: l_com(&pred.alpha, &pred.fg, &gt.alpha, &gt.fg)?,
        l_tem_agg: l_tem_agg(&pred.alpha_lr, &pred.fg_lr, &gt.alpha_lr, &gt.fg_lr)?,
        l_tem: tem,
    })
}
