use super::forward::ForwardCache;
use super::params::{AttentionParams, AttnGradients};
use crate::error::{shape, Error, Result};
use crate::grid::Matrix;

/// L1 subgradient with `sign(0) = 0`.
#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradient of `mean|σ(z) − gt|` with respect to the logits `z`.
fn head_logit_grad(pred: &Matrix, gt: &Matrix) -> Matrix {
    let n = pred.data().len() as f64;
    let data = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(&p, &g)| sign(p - g) / n * p * (1.0 - p))
        .collect();
    Matrix::from_vec(pred.rows(), pred.cols(), data).expect("same shape as pred")
}

fn column_sums(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, m.cols());
    for r in 0..m.rows() {
        for (c, v) in m.row(r).iter().enumerate() {
            out.data_mut()[c] += v;
        }
    }
    out
}

/// Backpropagates `d_r = ∂L/∂R` through `R = softmax(Q·Kᵀ/√d_k)·V`.
///
/// `weights` is the softmax output from the forward pass. Returns
/// `(∂L/∂Q, ∂L/∂K, ∂L/∂V)`.
pub fn attend_backward(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    weights: &Matrix,
    d_r: &Matrix,
    d_k: usize,
) -> Result<(Matrix, Matrix, Matrix)> {
    if weights.shape() != (q.rows(), k.rows()) || d_r.shape() != (q.rows(), v.cols()) {
        return Err(shape("attend_backward operands disagree"));
    }
    let d_v = weights.t_matmul(d_r)?;
    let d_a = d_r.matmul_t(v)?;
    let mut d_s = Matrix::zeros(weights.rows(), weights.cols());
    for i in 0..weights.rows() {
        let a = weights.row(i);
        let da = d_a.row(i);
        let dot: f64 = a.iter().zip(da).map(|(x, y)| x * y).sum();
        for (j, (&aj, &daj)) in a.iter().zip(da).enumerate() {
            d_s.set(i, j, aj * (daj - dot));
        }
    }
    let inv = 1.0 / (d_k as f64).sqrt();
    let d_q = d_s.matmul(k)?.scale(inv);
    let d_kk = d_s.t_matmul(q)?.scale(inv);
    Ok((d_q, d_kk, d_v))
}

/// Exact gradients of the supervision loss recorded in `cache`.
///
/// `params` must be the parameters the cache was produced with.
pub fn backward(cache: &ForwardCache, params: &AttentionParams) -> Result<AttnGradients> {
    if cache.params != *params {
        return Err(Error::State("forward cache was produced with different parameters".into()));
    }
    let d_za = head_logit_grad(&cache.alpha, &cache.gt_alpha);
    let d_zf = head_logit_grad(&cache.fg, &cache.gt_fg);

    let head_alpha_w = cache.y.t_matmul(&d_za)?;
    let head_alpha_b = column_sums(&d_za);
    let head_fg_w = cache.y.t_matmul(&d_zf)?;
    let head_fg_b = column_sums(&d_zf);

    let d_y = d_za.matmul_t(&params.head_alpha_w)?.add(&d_zf.matmul_t(&params.head_fg_w)?)?;
    let w_o = cache.r.t_matmul(&d_y)?;
    let d_r = d_y.matmul_t(&params.w_o)?;

    let qkv = &cache.qkv;
    let (d_q, d_k, d_v) = attend_backward(&qkv.q, &qkv.k, &qkv.v, &cache.weights, &d_r, params.d_k())?;

    Ok(AttnGradients {
        w_q: cache.x.t_matmul(&d_q)?,
        w_k: cache.m.t_matmul(&d_k)?,
        w_v: cache.m.t_matmul(&d_v)?,
        w_o,
        head_alpha_w,
        head_alpha_b,
        head_fg_w,
        head_fg_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{forward_supervised, MemoryBank};
    use crate::grid::Grid;
    use crate::rng::XorShift64;

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let mut rng = XorShift64::new(5);
        let x = Grid::from_fn(3, 3, 4, |_, _, _| rng.uniform(-1.0, 1.0)).unwrap();
        let bank = MemoryBank::warm(&x);
        let p = AttentionParams::seeded(4, 3, 3, 2);
        let (_, c) = forward_supervised(&x, &bank, &p, &Grid::zeros(3, 3, 1), &Grid::zeros(3, 3, 3)).unwrap();
        let (loss, c2) = forward_supervised(&x, &bank, &p, &c.alpha_lr().unwrap(), &c.fg_lr().unwrap()).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(backward(&c2, &p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn stale_cache_rejected() {
        let x = Grid::filled(2, 2, 2, 0.2);
        let p = AttentionParams::seeded(2, 2, 2, 1);
        let (_, c) =
            forward_supervised(&x, &MemoryBank::warm(&x), &p, &Grid::zeros(2, 2, 1), &Grid::zeros(2, 2, 3)).unwrap();
        let other = AttentionParams::seeded(2, 2, 2, 2);
        assert!(matches!(backward(&c, &other), Err(Error::State(_))));
    }

    #[test]
    fn uniform_attention_spreads_value_gradient_evenly() {
        // Identical keys make every softmax row uniform, so ∂L/∂V = Aᵀ·dR has equal rows.
        let q = Matrix::from_fn(4, 2, |r, c| r as f64 * 0.3 - c as f64);
        let k = Matrix::from_fn(12, 2, |_, c| 0.5 + c as f64);
        let v = Matrix::from_fn(12, 3, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0);
        let weights = crate::attention::attention_weights(&q, &k, 2).unwrap();
        let d_r = Matrix::from_fn(4, 3, |r, c| (r as f64 + 1.0) * (c as f64 - 0.7));
        let (_, _, d_v) = attend_backward(&q, &k, &v, &weights, &d_r, 2).unwrap();
        for r in 1..12 {
            for c in 0..3 {
                assert!((d_v.get(r, c) - d_v.get(0, c)).abs() < 1e-12);
            }
        }
    }
}
