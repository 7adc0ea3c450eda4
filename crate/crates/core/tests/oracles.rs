mod common;

use common::{conn_oracle, dog_kernels, grad_oracle, random_grid};
use memmatte::grid::Grid;
use memmatte::metrics::{conn_metric, gaussian_derivative_kernels, grad_metric, ConnOptions, GradOptions};
use memmatte::rng::XorShift64;
use proptest::prelude::*;

/// Soft blobs produce the multi-component, nested masks that stress Conn.
fn blobs(rng: &mut XorShift64, h: usize, w: usize, n: usize) -> Grid {
    let centres: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|_| (rng.uniform(0.0, h as f64), rng.uniform(0.0, w as f64), rng.uniform(1.0, 6.0), rng.uniform(0.3, 1.0)))
        .collect();
    Grid::from_fn(h, w, 1, |y, x, _| {
        centres
            .iter()
            .map(|&(cy, cx, r, peak)| {
                let d = ((y as f64 - cy).powi(2) + (x as f64 - cx).powi(2)).sqrt();
                peak * (1.0 - d / r).clamp(0.0, 1.0)
            })
            .fold(0.0, f64::max)
    })
    .unwrap()
}

#[test]
fn conn_matches_bruteforce_on_blob_scenes() {
    let mut rng = XorShift64::new(1234);
    for i in 0..60 {
        let h = 2 + (rng.next_u64() % 31) as usize;
        let w = 2 + (rng.next_u64() % 31) as usize;
        let gt = blobs(&mut rng, h, w, 1 + i % 4);
        let pred = blobs(&mut rng, h, w, 1 + i % 5);
        if gt.max_value() < 0.1 {
            continue;
        }
        let lib = conn_metric(&pred, &gt, ConnOptions::default()).unwrap();
        let oracle = conn_oracle(pred.data(), gt.data(), h, w, 10, 0.15);
        assert_eq!(lib.to_bits(), oracle.to_bits(), "instance {i}: {lib} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn conn_matches_bruteforce_on_arbitrary_levels(
        h in 1usize..12, w in 1usize..12, levels in 2usize..12,
        pv in proptest::collection::vec(0u8..=10, 144), gv in proptest::collection::vec(0u8..=10, 144),
    ) {
        let p: Vec<f64> = pv[..h * w].iter().map(|&v| v as f64 / 10.0).collect();
        let mut g: Vec<f64> = gv[..h * w].iter().map(|&v| v as f64 / 10.0).collect();
        g[0] = 1.0;
        let opts = ConnOptions { levels, ..ConnOptions::default() };
        let lib = conn_metric(&Grid::new(h, w, 1, p.clone()).unwrap(), &Grid::new(h, w, 1, g.clone()).unwrap(), opts).unwrap();
        prop_assert_eq!(lib.to_bits(), conn_oracle(&p, &g, h, w, levels, 0.15).to_bits());
    }
}

#[test]
fn library_kernels_equal_the_tabulated_pair() {
    let (hx, hy) = gaussian_derivative_kernels(1.4).unwrap();
    let (tx, ty, k) = dog_kernels(1.4);
    assert_eq!(k, 9);
    for (a, b) in hx.weights().iter().zip(&tx).chain(hy.weights().iter().zip(&ty)) {
        assert!((a - b).abs() < 1e-15, "{a} vs {b}");
    }
}

#[test]
fn grad_matches_direct_filtering_across_sizes() {
    let mut rng = XorShift64::new(77);
    for (h, w) in [(3, 3), (5, 11), (9, 9), (16, 40), (33, 17)] {
        let p = random_grid(&mut rng, h, w, 1, 0.0, 1.0);
        let g = random_grid(&mut rng, h, w, 1, 0.0, 1.0);
        let lib = grad_metric(&p, &g, GradOptions::default()).unwrap();
        let oracle = grad_oracle(&p, &g, 1.4);
        assert!((lib - oracle).abs() <= 1e-10 * oracle.max(1.0), "{h}x{w}: {lib} vs {oracle}");
    }
}

#[test]
fn grad_of_a_step_edge_is_positive_and_symmetric() {
    let step = Grid::from_fn(20, 20, 1, |_, x, _| if x < 10 { 0.0 } else { 1.0 }).unwrap();
    let flat = Grid::zeros(20, 20, 1);
    let a = grad_metric(&step, &flat, GradOptions::default()).unwrap();
    let b = grad_metric(&flat, &step, GradOptions::default()).unwrap();
    assert!(a > 0.0);
    assert_eq!(a, b);
}
