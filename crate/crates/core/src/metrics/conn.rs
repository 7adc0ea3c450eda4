use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::check_alpha_pair;
use crate::error::{argument, Error, Result};
use crate::grid::{stable_sum, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnOptions {
    /// Thresholds are `k / levels` for `k = 1 .. levels − 1`.
    pub levels: usize,
    /// Minimum distance below which a pixel counts as fully connected.
    pub tolerance: f64,
}

impl Default for ConnOptions {
    fn default() -> Self {
        Self { levels: 10, tolerance: 0.15 }
    }
}

/// Largest 4-connected component of `mask`. Ties go to the component whose
/// first pixel in raster order comes earliest.
fn largest_component(mask: &[bool], h: usize, w: usize) -> Vec<bool> {
    let mut label = vec![usize::MAX; h * w];
    let mut best: Option<(usize, usize)> = None;
    let mut queue = VecDeque::new();
    let mut next = 0;
    for start in 0..h * w {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = next;
        next += 1;
        let mut size = 0;
        label[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            size += 1;
            let (y, x) = (p / w, p % w);
            let mut visit = |q: usize| {
                if mask[q] && label[q] == usize::MAX {
                    label[q] = id;
                    queue.push_back(q);
                }
            };
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
        }
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((id, size));
        }
    }
    match best {
        Some((id, _)) => label.iter().map(|&l| l == id).collect(),
        None => vec![false; h * w],
    }
}

/// Connectivity error.
///
/// For each threshold `θ_k = k / levels`, `Ω_k` is the largest 4-connected
/// component of `{pred ≥ θ_k} ∩ {gt ≥ θ_k}`. A pixel's level `l` is
/// `θ_{k−1}` for the first `k` at which it falls outside `Ω_k` (`θ_0 = 0`),
/// or the last threshold if it never does. With `d = α − l`, the pixel's
/// connectivity is `φ = 1 − d` when `d ≥ tolerance` and `1` otherwise. The
/// metric is `1e−3 · Σ |φ(pred) − φ(gt)|`.
///
/// Fails with [`Error::Degenerate`] when no ground-truth pixel reaches the
/// first threshold.
pub fn conn_metric(pred: &Grid, gt: &Grid, options: ConnOptions) -> Result<f64> {
    check_alpha_pair(pred, gt, "conn")?;
    if options.levels < 2 {
        return Err(argument("conn needs at least two threshold levels"));
    }
    let (h, w, _) = gt.dims();
    let n = options.levels;
    let theta = |k: usize| k as f64 / n as f64;
    if !gt.data().iter().any(|&v| v >= theta(1)) {
        return Err(Error::Degenerate(format!(
            "ground truth has no pixel at or above {}",
            theta(1)
        )));
    }
    let mut level: Vec<Option<f64>> = vec![None; h * w];
    for k in 1..n {
        let t = theta(k);
        let mask: Vec<bool> = pred.data().iter().zip(gt.data()).map(|(&p, &g)| p >= t && g >= t).collect();
        let omega = largest_component(&mask, h, w);
        for (l, &inside) in level.iter_mut().zip(&omega) {
            if l.is_none() && !inside {
                *l = Some(theta(k - 1));
            }
        }
    }
    let last = theta(n - 1);
    let phi = |a: f64, l: f64| {
        let d = a - l;
        if d >= options.tolerance {
            1.0 - d
        } else {
            1.0
        }
    };
    let total = stable_sum((0..h * w).map(|i| {
        let l = level[i].unwrap_or(last);
        (phi(pred.data()[i], l) - phi(gt.data()[i], l)).abs()
    }));
    Ok(1e-3 * total)
}
