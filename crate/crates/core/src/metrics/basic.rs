use super::check_alpha_pair;
use crate::compositor::Clip;
use crate::error::{argument, Result};
use crate::grid::{stable_mean, Grid};

/// `1e3 · mean|pred − gt|`
pub fn mad(pred: &Grid, gt: &Grid) -> Result<f64> {
    check_alpha_pair(pred, gt, "mad")?;
    let d: Vec<f64> = pred.data().iter().zip(gt.data()).map(|(a, b)| (a - b).abs()).collect();
    Ok(stable_mean(&d) * 1e3)
}

/// `1e3 · mean (pred − gt)²`
pub fn mse(pred: &Grid, gt: &Grid) -> Result<f64> {
    check_alpha_pair(pred, gt, "mse")?;
    let d: Vec<f64> = pred.data().iter().zip(gt.data()).map(|(a, b)| (a - b) * (a - b)).collect();
    Ok(stable_mean(&d) * 1e3)
}

/// `1e2 · mean_t sqrt(mean_px ((p_{t+1} − p_t) − (g_{t+1} − g_t))²)`
pub fn dtssd(pred: &Clip, gt: &Clip) -> Result<f64> {
    pred.check_compatible(gt, "dtssd")?;
    if pred.len() < 2 {
        return Err(argument("dtssd needs at least two frames"));
    }
    let per_pair: Vec<f64> = (0..pred.len() - 1)
        .map(|t| {
            let (p0, p1) = (pred.frame(t).data(), pred.frame(t + 1).data());
            let (g0, g1) = (gt.frame(t).data(), gt.frame(t + 1).data());
            let sq: Vec<f64> = (0..p0.len())
                .map(|i| {
                    let r = (p1[i] - p0[i]) - (g1[i] - g0[i]);
                    r * r
                })
                .collect();
            stable_mean(&sq).sqrt()
        })
        .collect();
    Ok(stable_mean(&per_pair) * 1e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositor::Role;
    use crate::rng::XorShift64;

    fn rand_alpha(rng: &mut XorShift64, h: usize, w: usize, hi: f64) -> Grid {
        Grid::from_fn(h, w, 1, |_, _, _| rng.uniform(0.0, hi)).unwrap()
    }

    #[test]
    fn mad_mse_cases() {
        let mut rng = XorShift64::new(1);
        let g = rand_alpha(&mut rng, 8, 8, 1.0);
        assert_eq!(mad(&g, &g).unwrap(), 0.0);
        assert_eq!(mse(&g, &g).unwrap(), 0.0);

        let zero = Grid::zeros(8, 8, 1);
        let tenth = Grid::filled(8, 8, 1, 0.1);
        assert_eq!(mad(&tenth, &zero).unwrap(), 100.0);
        assert!((mse(&tenth, &zero).unwrap() - 10.0).abs() < 1e-10);

        let p = rand_alpha(&mut rng, 8, 8, 1.0);
        let (mut sa, mut ss) = (0.0, 0.0);
        for (a, b) in p.data().iter().zip(g.data()) {
            sa += (a - b).abs();
            ss += (a - b) * (a - b);
        }
        assert!((mad(&p, &g).unwrap() - 1e3 * sa / 64.0).abs() < 1e-10);
        assert!((mse(&p, &g).unwrap() - 1e3 * ss / 64.0).abs() < 1e-10);
        assert!(mad(&p, &Grid::zeros(8, 7, 1)).is_err());
    }

    #[test]
    fn dtssd_cases() {
        let mut rng = XorShift64::new(2);
        let frames: Vec<Grid> = (0..5).map(|_| rand_alpha(&mut rng, 6, 6, 0.8)).collect();
        let gt = Clip::new(frames.clone(), Role::Alpha).unwrap();
        assert_eq!(dtssd(&gt, &gt).unwrap(), 0.0);

        let bias = rand_alpha(&mut rng, 6, 6, 0.2);
        let biased = Clip::new(frames.iter().map(|f| f.add(&bias).unwrap()).collect(), Role::Alpha).unwrap();
        assert!(dtssd(&biased, &gt).unwrap() < 1e-10);

        // Alternating flicker: every pair differs by ±0.1 at every pixel.
        let flicker: Vec<Grid> = frames
            .iter()
            .enumerate()
            .map(|(t, f)| if t % 2 == 1 { f.map(|v| v + 0.1).unwrap() } else { f.clone() })
            .collect();
        let flicker = Clip::new(flicker, Role::Alpha).unwrap();
        assert!((dtssd(&flicker, &gt).unwrap() - 10.0).abs() < 1e-10);

        let one = Clip::new(vec![frames[0].clone()], Role::Alpha).unwrap();
        assert!(dtssd(&one, &one).is_err());
    }
}
