use super::bank::MemoryBank;
use super::params::AttentionParams;
use crate::error::{shape, Result};
use crate::grid::{softmax_rows, Grid, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct Qkv {
    /// `h·w × d_k`, one row per query pixel.
    pub q: Matrix,
    /// `3·h·w × d_k`, slots stacked in bank order.
    pub k: Matrix,
    /// `3·h·w × d_v`
    pub v: Matrix,
}

fn check_features(features: &Grid, params: &AttentionParams) -> Result<()> {
    if features.channels() != params.c_f() {
        return Err(shape(format!(
            "features have {} channels, params expect C_f = {}",
            features.channels(),
            params.c_f()
        )));
    }
    Ok(())
}

/// Stacked `3·h·w × C_f` view of the bank.
pub(crate) fn bank_matrix(bank: &MemoryBank) -> Result<Matrix> {
    let [a, b, c] = bank.slots();
    Matrix::vstack(&[&a.to_matrix(), &b.to_matrix(), &c.to_matrix()])
}

pub fn project_qkv(features: &Grid, bank: &MemoryBank, params: &AttentionParams) -> Result<Qkv> {
    check_features(features, params)?;
    if features.dims() != bank.slot_dims() {
        return Err(shape(format!(
            "query features {:?} vs memory slots {:?}",
            features.dims(),
            bank.slot_dims()
        )));
    }
    let x = features.to_matrix();
    let m = bank_matrix(bank)?;
    Ok(Qkv { q: x.matmul(&params.w_q)?, k: m.matmul(&params.w_k)?, v: m.matmul(&params.w_v)? })
}

/// `Q·Kᵀ / √scale_dim`. `scale_dim` is normally `d_k`.
pub fn attention_logits(q: &Matrix, k: &Matrix, scale_dim: f64) -> Result<Matrix> {
    Ok(q.matmul_t(k)?.scale(1.0 / scale_dim.sqrt()))
}

pub fn attention_weights(q: &Matrix, k: &Matrix, d_k: usize) -> Result<Matrix> {
    check_attend_dims(q, k, None, d_k)?;
    softmax_rows(&attention_logits(q, k, d_k as f64)?)
}

fn check_attend_dims(q: &Matrix, k: &Matrix, v: Option<&Matrix>, d_k: usize) -> Result<()> {
    if q.cols() != d_k || k.cols() != d_k {
        return Err(shape(format!(
            "d_k = {d_k} but Q has {} columns and K has {}",
            q.cols(),
            k.cols()
        )));
    }
    if let Some(v) = v {
        if v.rows() != k.rows() {
            return Err(shape(format!("{} keys but {} values", k.rows(), v.rows())));
        }
    }
    Ok(())
}

/// `softmax_rows(Q·Kᵀ / √d_k)·V`.
pub fn attend(q: &Matrix, k: &Matrix, v: &Matrix, d_k: usize) -> Result<Matrix> {
    check_attend_dims(q, k, Some(v), d_k)?;
    attention_weights(q, k, d_k)?.matmul(v)
}

/// Residual readout `Y = X + R·W_o`.
pub fn fuse_readout(features: &Grid, r: &Matrix, params: &AttentionParams) -> Result<Grid> {
    check_features(features, params)?;
    if r.rows() != features.height() * features.width() || r.cols() != params.d_v() {
        return Err(shape(format!(
            "readout is {:?}, expected ({}, {})",
            r.shape(),
            features.height() * features.width(),
            params.d_v()
        )));
    }
    let y = features.to_matrix().add(&r.matmul(&params.w_o)?)?;
    Grid::from_matrix(features.height(), features.width(), &y)
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn affine_sigmoid(y: &Matrix, w: &Matrix, b: &Matrix) -> Result<Matrix> {
    let mut z = y.matmul(w)?;
    let cols = z.cols();
    for (i, v) in z.data_mut().iter_mut().enumerate() {
        *v = sigmoid(*v + b.get(0, i % cols));
    }
    Ok(z)
}

/// Low-resolution `(alpha, fg)` predictions from fused features.
pub fn lowres_heads(y: &Grid, params: &AttentionParams) -> Result<(Grid, Grid)> {
    check_features(y, params)?;
    let (a, f) = heads_matrix(&y.to_matrix(), params)?;
    Ok((Grid::from_matrix(y.height(), y.width(), &a)?, Grid::from_matrix(y.height(), y.width(), &f)?))
}

fn heads_matrix(y: &Matrix, params: &AttentionParams) -> Result<(Matrix, Matrix)> {
    Ok((
        affine_sigmoid(y, &params.head_alpha_w, &params.head_alpha_b)?,
        affine_sigmoid(y, &params.head_fg_w, &params.head_fg_b)?,
    ))
}

/// Everything [`super::backward`] needs, plus the forward outputs.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub(crate) params: AttentionParams,
    pub(crate) height: usize,
    pub(crate) width: usize,
    pub(crate) x: Matrix,
    pub(crate) m: Matrix,
    pub(crate) qkv: Qkv,
    pub(crate) weights: Matrix,
    pub(crate) r: Matrix,
    pub(crate) y: Matrix,
    pub(crate) alpha: Matrix,
    pub(crate) fg: Matrix,
    pub(crate) gt_alpha: Matrix,
    pub(crate) gt_fg: Matrix,
}

impl ForwardCache {
    pub fn qkv(&self) -> &Qkv {
        &self.qkv
    }

    /// Row-stochastic attention weights, `h·w × 3·h·w`.
    pub fn attention(&self) -> &Matrix {
        &self.weights
    }

    pub fn readout(&self) -> &Matrix {
        &self.r
    }

    pub fn fused(&self) -> Result<Grid> {
        Grid::from_matrix(self.height, self.width, &self.y)
    }

    pub fn alpha_lr(&self) -> Result<Grid> {
        Grid::from_matrix(self.height, self.width, &self.alpha)
    }

    pub fn fg_lr(&self) -> Result<Grid> {
        Grid::from_matrix(self.height, self.width, &self.fg)
    }
}

pub(crate) fn mean_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.data().len() as f64;
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum::<f64>() / n
}

/// Runs projection → attention → readout → heads and scores the heads with
/// `mean|α_lr − gt_α| + mean|F_lr − gt_F|`.
pub fn forward_supervised(
    features: &Grid,
    bank: &MemoryBank,
    params: &AttentionParams,
    gt_alpha_lr: &Grid,
    gt_fg_lr: &Grid,
) -> Result<(f64, ForwardCache)> {
    params.validate()?;
    let (h, w, _) = features.dims();
    if gt_alpha_lr.dims() != (h, w, 1) || gt_fg_lr.dims() != (h, w, 3) {
        return Err(shape(format!(
            "low-res targets {:?}/{:?} do not match features {h}x{w}",
            gt_alpha_lr.dims(),
            gt_fg_lr.dims()
        )));
    }
    let qkv = project_qkv(features, bank, params)?;
    let weights = attention_weights(&qkv.q, &qkv.k, params.d_k())?;
    let r = weights.matmul(&qkv.v)?;
    let x = features.to_matrix();
    let y = x.add(&r.matmul(&params.w_o)?)?;
    let (alpha, fg) = heads_matrix(&y, params)?;
    let gt_alpha = gt_alpha_lr.to_matrix();
    let gt_fg = gt_fg_lr.to_matrix();
    let loss = mean_abs_diff(&alpha, &gt_alpha) + mean_abs_diff(&fg, &gt_fg);
    let cache = ForwardCache {
        params: params.clone(),
        height: h,
        width: w,
        x,
        m: bank_matrix(bank)?,
        qkv,
        weights,
        r,
        y,
        alpha,
        fg,
        gt_alpha,
        gt_fg,
    };
    Ok((loss, cache))
}
