//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use memmatte::attention::{backward, forward_supervised, AttentionParams, MemoryBank};
use memmatte::grid::{conv2d, Grid, Kernel, Padding};
use memmatte::rng::XorShift64;

pub fn random_grid(rng: &mut XorShift64, h: usize, w: usize, c: usize, lo: f64, hi: f64) -> Grid {
    let data = (0..h * w * c).map(|_| rng.uniform(lo, hi)).collect();
    Grid::new(h, w, c, data).unwrap()
}

pub struct GradCase {
    pub features: Grid,
    pub bank: MemoryBank,
    pub gt_alpha: Grid,
    pub gt_fg: Grid,
    pub params: AttentionParams,
}

impl GradCase {
    pub fn random(seed: u64, h: usize, w: usize, c_f: usize, d_k: usize, d_v: usize) -> Self {
        let mut rng = XorShift64::new(seed ^ 0x9e37_79b9_7f4a_7c15);
        let features = random_grid(&mut rng, h, w, c_f, -1.0, 1.0);
        let prev = [random_grid(&mut rng, h, w, c_f, -1.0, 1.0), random_grid(&mut rng, h, w, c_f, -1.0, 1.0)];
        let bank = MemoryBank::from_slots([features.clone(), prev[0].clone(), prev[1].clone()]).unwrap();
        let gt_alpha = random_grid(&mut rng, h, w, 1, 0.0, 1.0);
        let gt_fg = random_grid(&mut rng, h, w, 3, 0.0, 1.0);
        let mut params = AttentionParams::seeded(c_f, d_k, d_v, seed);
        // Non-zero biases so their gradients are exercised off the symmetric point.
        for b in [&mut params.head_alpha_b, &mut params.head_fg_b] {
            for v in b.data_mut() {
                *v = rng.uniform(-0.5, 0.5);
            }
        }
        Self { features, bank, gt_alpha, gt_fg, params }
    }

    pub fn loss(&self, params: &AttentionParams) -> f64 {
        forward_supervised(&self.features, &self.bank, params, &self.gt_alpha, &self.gt_fg).unwrap().0
    }
}

pub struct FdReport {
    pub checked: usize,
    pub worst_rel: f64,
    pub failures: Vec<String>,
}

/// Central finite differences on every parameter entry against the analytic
/// gradient. Entries with `|g| ≤ floor` are skipped.
pub fn finite_difference_check(case: &GradCase, step: f64, floor: f64, tol: f64) -> FdReport {
    let (_, cache) =
        forward_supervised(&case.features, &case.bank, &case.params, &case.gt_alpha, &case.gt_fg).unwrap();
    let grads = backward(&cache, &case.params).unwrap();
    let mut report = FdReport { checked: 0, worst_rel: 0.0, failures: Vec::new() };
    let n_blocks = case.params.blocks().len();
    for b in 0..n_blocks {
        let len = case.params.blocks()[b].data().len();
        for i in 0..len {
            let mut plus = case.params.clone();
            plus.blocks_mut()[b].data_mut()[i] += step;
            let mut minus = case.params.clone();
            minus.blocks_mut()[b].data_mut()[i] -= step;
            let numeric = (case.loss(&plus) - case.loss(&minus)) / (2.0 * step);
            let analytic = grads.blocks()[b].data()[i];
            if analytic.abs() <= floor {
                continue;
            }
            report.checked += 1;
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
            report.worst_rel = report.worst_rel.max(rel);
            if rel >= tol {
                report.failures.push(format!("block {b} entry {i}: analytic {analytic} numeric {numeric} rel {rel}"));
            }
        }
    }
    report
}

/// Neumaier summation, spelled out so oracle sums round like the library's.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Largest 4-connected component by repeated min-label propagation until a
/// fixed point; ties broken by smallest label (= earliest raster pixel).
pub fn largest_component_bruteforce(mask: &[bool], h: usize, w: usize) -> Vec<bool> {
    let mut label: Vec<usize> = (0..h * w).map(|i| if mask[i] { i } else { usize::MAX }).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                if !mask[p] {
                    continue;
                }
                let mut m = label[p];
                let neigh = [
                    (y > 0).then(|| p - w),
                    (y + 1 < h).then(|| p + w),
                    (x > 0).then(|| p - 1),
                    (x + 1 < w).then(|| p + 1),
                ];
                for q in neigh.into_iter().flatten() {
                    if mask[q] {
                        m = m.min(label[q]);
                    }
                }
                if m < label[p] {
                    label[p] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut sizes = std::collections::BTreeMap::new();
    for &l in label.iter().filter(|&&l| l != usize::MAX) {
        *sizes.entry(l).or_insert(0usize) += 1;
    }
    let best = sizes.iter().fold(None, |best: Option<(usize, usize)>, (&l, &s)| match best {
        Some((_, bs)) if bs >= s => best,
        _ => Some((l, s)),
    });
    match best {
        Some((id, _)) => label.iter().map(|&l| l == id).collect(),
        None => vec![false; h * w],
    }
}

/// Connectivity error evaluated directly from its definition.
pub fn conn_oracle(pred: &[f64], gt: &[f64], h: usize, w: usize, levels: usize, tolerance: f64) -> f64 {
    let theta = |k: usize| k as f64 / levels as f64;
    let mut lvl = vec![theta(levels - 1); h * w];
    let mut exited = vec![false; h * w];
    for k in 1..levels {
        let t = theta(k);
        let mask: Vec<bool> = (0..h * w).map(|i| pred[i] >= t && gt[i] >= t).collect();
        let omega = largest_component_bruteforce(&mask, h, w);
        for i in 0..h * w {
            if !exited[i] && !omega[i] {
                exited[i] = true;
                lvl[i] = theta(k - 1);
            }
        }
    }
    let phi = |a: f64, l: f64| if a - l >= tolerance { 1.0 - (a - l) } else { 1.0 };
    1e-3 * compensated_sum((0..h * w).map(|i| (phi(pred[i], lvl[i]) - phi(gt[i], lvl[i])).abs()))
}

/// The 9×9 derivative-of-Gaussian pair for σ = 1.4, tabulated from the
/// closed form and normalised to unit L2 norm.
pub fn dog_kernels(sigma: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let r = (3.0 * sigma).floor() as i64;
    let k = (2 * r + 1) as usize;
    let gauss = |u: f64| (-u * u / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let dgauss = |u: f64| -u / (sigma * sigma) * gauss(u);
    let mut hx = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            hx[i * k + j] = gauss(i as f64 - r as f64) * dgauss(j as f64 - r as f64);
        }
    }
    let n = hx.iter().map(|v| v * v).sum::<f64>().sqrt();
    hx.iter_mut().for_each(|v| *v /= n);
    let hy = (0..k * k).map(|idx| hx[(idx % k) * k + idx / k]).collect();
    (hx, hy, k)
}

/// Grad error by direct 2-D filtering with reflect padding.
pub fn grad_oracle(pred: &Grid, gt: &Grid, sigma: f64) -> f64 {
    let (hx, hy, k) = dog_kernels(sigma);
    let kx = Kernel::new(1, 1, k, k, hx).unwrap();
    let ky = Kernel::new(1, 1, k, k, hy).unwrap();
    let mag = |g: &Grid| -> Vec<f64> {
        let gx = conv2d(g, &kx, 1, Padding::Reflect).unwrap();
        let gy = conv2d(g, &ky, 1, Padding::Reflect).unwrap();
        gx.data().iter().zip(gy.data()).map(|(a, b)| (a * a + b * b).sqrt()).collect()
    };
    let (mp, mg) = (mag(pred), mag(gt));
    1e-3 * mp.iter().zip(&mg).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}
