use super::{reflect_index, Grid};
use crate::error::{argument, Result};

const BINOMIAL5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // a + t·(b − a) is exact when a == b, which keeps constants constant.
    a + t * (b - a)
}

/// Source coordinate and interpolation taps for one output index.
fn half_pixel_taps(out_len: usize, in_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(in_len - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

/// Bilinear resampling with half-pixel centres; channels are preserved.
pub fn bilinear_resize(input: &Grid, out_h: usize, out_w: usize) -> Result<Grid> {
    if out_h == 0 || out_w == 0 {
        return Err(argument(format!("resize target must be positive, got {out_h}x{out_w}")));
    }
    let (h, w, c) = input.dims();
    if (h, w) == (out_h, out_w) {
        return Ok(input.clone());
    }
    let ys = half_pixel_taps(out_h, h);
    let xs = half_pixel_taps(out_w, w);
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for ch in 0..c {
                let top = lerp(input.get(y0, x0, ch), input.get(y0, x1, ch), fx);
                let bottom = lerp(input.get(y1, x0, ch), input.get(y1, x1, ch), fx);
                out.push(lerp(top, bottom, fy));
            }
        }
    }
    Grid::new(out_h, out_w, c, out)
}

/// Blur with the separable `[1, 4, 6, 4, 1] / 16` kernel (reflect padding) and
/// keep every second sample starting at 0. Output dims are `ceil(dim / 2)`.
pub fn gaussian_down2(input: &Grid) -> Result<Grid> {
    let (h, w, c) = input.dims();
    if h < 2 || w < 2 {
        return Err(argument(format!("gaussian_down2 needs dims >= 2, got {h}x{w}")));
    }
    let out_h = h.div_ceil(2);
    let out_w = w.div_ceil(2);

    // Taps are applied relative to the centre sample so that constant
    // neighbourhoods reproduce the centre value exactly.
    let mut rows = vec![0.0; h * out_w * c];
    for y in 0..h {
        for ox in 0..out_w {
            let cx = 2 * ox;
            for ch in 0..c {
                let centre = input.get(y, cx, ch);
                let mut acc = 0.0;
                for (k, wk) in BINOMIAL5.iter().enumerate() {
                    let sx = reflect_index(cx as isize + k as isize - 2, w);
                    acc += wk * (input.get(y, sx, ch) - centre);
                }
                rows[(y * out_w + ox) * c + ch] = centre + acc;
            }
        }
    }
    let mut out = vec![0.0; out_h * out_w * c];
    for oy in 0..out_h {
        let cy = 2 * oy;
        for x in 0..out_w {
            for ch in 0..c {
                let centre = rows[(cy * out_w + x) * c + ch];
                let mut acc = 0.0;
                for (k, wk) in BINOMIAL5.iter().enumerate() {
                    let sy = reflect_index(cy as isize + k as isize - 2, h);
                    acc += wk * (rows[(sy * out_w + x) * c + ch] - centre);
                }
                out[(oy * out_w + x) * c + ch] = centre + acc;
            }
        }
    }
    Grid::new(out_h, out_w, c, out)
}

/// Non-overlapping `k×k` mean pooling per channel.
pub fn avg_pool(input: &Grid, k: usize) -> Result<Grid> {
    let (h, w, c) = input.dims();
    if k == 0 || h % k != 0 || w % k != 0 {
        return Err(argument(format!("pool size {k} must divide {h}x{w}")));
    }
    if k == 1 {
        return Ok(input.clone());
    }
    let (out_h, out_w) = (h / k, w / k);
    let inv = 1.0 / (k * k) as f64;
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for oy in 0..out_h {
        for ox in 0..out_w {
            for ch in 0..c {
                let anchor = input.get(oy * k, ox * k, ch);
                let mut acc = 0.0;
                for dy in 0..k {
                    for dx in 0..k {
                        acc += input.get(oy * k + dy, ox * k + dx, ch) - anchor;
                    }
                }
                out.push(anchor + acc * inv);
            }
        }
    }
    Grid::new(out_h, out_w, c, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::XorShift64;

    fn random(h: usize, w: usize, c: usize, seed: u64) -> Grid {
        let mut rng = XorShift64::new(seed);
        Grid::from_fn(h, w, c, |_, _, _| rng.next_f64()).unwrap()
    }

    #[test]
    fn resize_identity_and_constant() {
        let g = random(5, 7, 2, 1);
        assert_eq!(bilinear_resize(&g, 5, 7).unwrap(), g);
        let c = Grid::filled(6, 4, 3, 0.3);
        for (h, w) in [(1, 1), (3, 2), (12, 9), (6, 4)] {
            let r = bilinear_resize(&c, h, w).unwrap();
            assert!(r.data().iter().all(|&v| v == 0.3));
            assert_eq!(r.channels(), 3);
        }
        assert!(bilinear_resize(&c, 0, 3).is_err());
    }

    #[test]
    fn resize_two_to_four_half_pixel() {
        // src = (i + 0.5)·(2/4) − 0.5 → −0.25, 0.25, 0.75, 1.25; clamped to [0, 1].
        let g = Grid::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        let r = bilinear_resize(&g, 4, 1).unwrap();
        let want = [0.0, 0.25, 0.75, 1.0];
        for (a, b) in r.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn resize_down_then_up_constant_exact() {
        let c = Grid::filled(16, 16, 1, 0.7);
        let down = bilinear_resize(&c, 5, 3).unwrap();
        let up = bilinear_resize(&down, 16, 16).unwrap();
        assert_eq!(up, c);
    }

    #[test]
    fn down2_constant_and_sizes() {
        let c = Grid::filled(7, 6, 2, 0.41);
        let d = gaussian_down2(&c).unwrap();
        assert_eq!(d.dims(), (4, 3, 2));
        assert!(d.data().iter().all(|&v| v == 0.41));
        assert_eq!(gaussian_down2(&Grid::zeros(6, 6, 1)).unwrap().dims(), (3, 3, 1));
        assert_eq!(gaussian_down2(&Grid::zeros(7, 7, 1)).unwrap().dims(), (4, 4, 1));
        assert!(gaussian_down2(&Grid::zeros(1, 6, 1)).is_err());
    }

    #[test]
    fn down2_impulse_matches_convolve_then_subsample() {
        let mut g = vec![0.0; 81];
        g[4 * 9 + 4] = 1.0;
        let g = Grid::new(9, 9, 1, g).unwrap();
        let d = gaussian_down2(&g).unwrap();
        assert_eq!(d.dims(), (5, 5, 1));
        // Output (i, j) samples input (2i, 2j); its weight is w(2i−4)·w(2j−4)
        // with w(−2..=2) = [1, 4, 6, 4, 1]/16 and zero beyond.
        let wt = |d: isize| -> f64 {
            match d.abs() {
                0 => 6.0 / 16.0,
                1 => 4.0 / 16.0,
                2 => 1.0 / 16.0,
                _ => 0.0,
            }
        };
        for i in 0..5 {
            for j in 0..5 {
                let want = wt(2 * i as isize - 4) * wt(2 * j as isize - 4);
                assert!((d.get(i, j, 0) - want).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn avg_pool_cases() {
        let g = Grid::new(2, 2, 1, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        assert_eq!(avg_pool(&g, 2).unwrap().data(), &[4.0]);
        let c = Grid::filled(8, 8, 3, 0.37);
        assert!(avg_pool(&c, 4).unwrap().data().iter().all(|&v| v == 0.37));
        assert!(avg_pool(&Grid::zeros(6, 8, 1), 4).is_err());

        let r = random(8, 8, 2, 5);
        let p = avg_pool(&r, 4).unwrap();
        for oy in 0..2 {
            for ox in 0..2 {
                for ch in 0..2 {
                    let mut s = 0.0;
                    for y in 0..4 {
                        for x in 0..4 {
                            s += r.get(oy * 4 + y, ox * 4 + x, ch);
                        }
                    }
                    assert!((p.get(oy, ox, ch) - s / 16.0).abs() < 1e-12);
                }
            }
        }
    }
}
