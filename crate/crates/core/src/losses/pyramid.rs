use crate::error::{argument, Result};
use crate::grid::{bilinear_resize, gaussian_down2, Grid};

/// Band-pass levels `L_1 … L_S` (finest first) plus the low-pass residual `G_{S+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianPyramid {
    pub levels: Vec<Grid>,
    pub residual: Grid,
}

impl LaplacianPyramid {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Upsample-and-add from the residual back to the finest level.
    pub fn reconstruct(&self) -> Result<Grid> {
        let mut acc = self.residual.clone();
        for band in self.levels.iter().rev() {
            acc = bilinear_resize(&acc, band.height(), band.width())?.add(band)?;
        }
        Ok(acc)
    }
}

/// `G_1 = g`, `G_{s+1} = down2(G_s)`, `L_s = G_s − up(G_{s+1})`.
///
/// Every `G_s` for `s ≤ levels` must be at least 2 pixels on each side.
pub fn build_pyramid(g: &Grid, levels: usize) -> Result<LaplacianPyramid> {
    if levels == 0 {
        return Err(argument("pyramid needs at least one level"));
    }
    let coarsest = |d: usize| d.div_ceil(1 << (levels - 1));
    if coarsest(g.height()) < 2 || coarsest(g.width()) < 2 {
        return Err(argument(format!(
            "{}x{} is too small for a {levels}-level pyramid",
            g.height(),
            g.width()
        )));
    }
    let mut bands = Vec::with_capacity(levels);
    let mut current = g.clone();
    for _ in 0..levels {
        let down = gaussian_down2(&current)?;
        let up = bilinear_resize(&down, current.height(), current.width())?;
        bands.push(current.sub(&up)?);
        current = down;
    }
    Ok(LaplacianPyramid { levels: bands, residual: current })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::XorShift64;

    #[test]
    fn constant_has_empty_bands() {
        let p = build_pyramid(&Grid::filled(16, 16, 1, 0.62), 3).unwrap();
        assert!(p.levels.iter().all(|l| l.data().iter().all(|&v| v == 0.0)));
        assert!(p.residual.data().iter().all(|&v| v == 0.62));
        assert_eq!(p.residual.dims(), (2, 2, 1));
    }

    #[test]
    fn level_dims_follow_ceil_rule() {
        let p = build_pyramid(&Grid::zeros(13, 20, 1), 3).unwrap();
        let dims: Vec<_> = p.levels.iter().map(|l| (l.height(), l.width())).collect();
        assert_eq!(dims, vec![(13, 20), (7, 10), (4, 5)]);
        assert_eq!((p.residual.height(), p.residual.width()), (2, 3));
    }

    #[test]
    fn reconstructs_random_input() {
        let mut rng = XorShift64::new(17);
        let g = Grid::from_fn(19, 23, 1, |_, _, _| rng.next_f64()).unwrap();
        let r = build_pyramid(&g, 4).unwrap().reconstruct().unwrap();
        for (a, b) in r.data().iter().zip(g.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn impulse_two_levels_matches_primitive_chain() {
        let mut d = vec![0.0; 64];
        d[3 * 8 + 4] = 1.0;
        let g = Grid::new(8, 8, 1, d).unwrap();
        let p = build_pyramid(&g, 2).unwrap();
        let g2 = gaussian_down2(&g).unwrap();
        let g3 = gaussian_down2(&g2).unwrap();
        let l1 = g.sub(&bilinear_resize(&g2, 8, 8).unwrap()).unwrap();
        let l2 = g2.sub(&bilinear_resize(&g3, 4, 4).unwrap()).unwrap();
        assert_eq!(p.levels, vec![l1, l2]);
        assert_eq!(p.residual, g3);
    }

    #[test]
    fn too_small() {
        assert!(build_pyramid(&Grid::zeros(8, 8, 1), 4).is_err());
        assert!(build_pyramid(&Grid::zeros(9, 9, 1), 4).is_ok());
        assert!(build_pyramid(&Grid::zeros(8, 8, 1), 0).is_err());
    }
}
