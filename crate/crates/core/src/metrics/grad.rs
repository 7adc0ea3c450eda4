use serde::{Deserialize, Serialize};

use super::check_alpha_pair;
use crate::error::{argument, Result};
use crate::grid::{reflect_index, stable_sum, Grid, Kernel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradOptions {
    pub sigma: f64,
}

impl Default for GradOptions {
    fn default() -> Self {
        Self { sigma: 1.4 }
    }
}

/// 1-D Gaussian and its derivative sampled at integer offsets `|u| ≤ 3σ`.
fn gauss_taps(sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let r = (3.0 * sigma).floor() as isize;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let g: Vec<f64> = (-r..=r).map(|u| norm * (-((u * u) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let dg = (-r..=r).zip(&g).map(|(u, gv)| -(u as f64) * gv / (sigma * sigma)).collect();
    (g, dg)
}

/// The 2-D x- and y-derivative-of-Gaussian kernels as `1×1×k×k` [`Kernel`]s.
///
/// `hx[i][j] = g(i − r)·g′(j − r)` scaled to unit L2 norm; `hy` is its transpose.
pub fn gaussian_derivative_kernels(sigma: f64) -> Result<(Kernel, Kernel)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(argument("sigma must be positive"));
    }
    let (g, dg) = gauss_taps(sigma);
    let k = g.len();
    let mut hx = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            hx[i * k + j] = g[i] * dg[j];
        }
    }
    let norm = hx.iter().map(|v| v * v).sum::<f64>().sqrt();
    hx.iter_mut().for_each(|v| *v /= norm);
    let mut hy = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            hy[i * k + j] = hx[j * k + i];
        }
    }
    Ok((Kernel::new(1, 1, k, k, hx)?, Kernel::new(1, 1, k, k, hy)?))
}

/// Separable filtering: `along_x` on columns, `along_y` on rows, reflect padding.
fn separable(g: &Grid, along_y: &[f64], along_x: &[f64]) -> Vec<f64> {
    let (h, w, _) = g.dims();
    let r = (along_x.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = along_x
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * g.get(y, reflect_index(x as isize + k as isize - r, w), 0))
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = along_y
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * tmp[reflect_index(y as isize + k as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

fn gradient_magnitude(g: &Grid, taps: &(Vec<f64>, Vec<f64>), norm: f64) -> Vec<f64> {
    let (gauss, dgauss) = taps;
    let gx = separable(g, gauss, dgauss);
    let gy = separable(g, dgauss, gauss);
    gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt() / norm).collect()
}

/// `1e−3 · Σ (|∇pred| − |∇gt|)²` with derivative-of-Gaussian filters.
pub fn grad_metric(pred: &Grid, gt: &Grid, options: GradOptions) -> Result<f64> {
    check_alpha_pair(pred, gt, "grad")?;
    if !(options.sigma > 0.0 && options.sigma.is_finite()) {
        return Err(argument("sigma must be positive"));
    }
    let taps = gauss_taps(options.sigma);
    let norm = taps.0.iter().map(|v| v * v).sum::<f64>().sqrt() * taps.1.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mp = gradient_magnitude(pred, &taps, norm);
    let mg = gradient_magnitude(gt, &taps, norm);
    Ok(1e-3 * stable_sum(mp.iter().zip(&mg).map(|(a, b)| (a - b) * (a - b))))
}
