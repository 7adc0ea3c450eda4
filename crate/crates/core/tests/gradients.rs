mod common;

use common::{finite_difference_check, random_grid, GradCase};
use memmatte::attention::{clip_objective, samples_from_clip, AttentionParams};
use memmatte::rng::XorShift64;

#[test]
fn analytic_gradients_match_finite_differences_on_square_maps() {
    for seed in 0..10 {
        let r = finite_difference_check(&GradCase::random(seed, 4, 4, 6, 4, 4), 1e-4, 1e-6, 1e-4);
        assert!(r.failures.is_empty(), "seed {seed}: {:?}", r.failures);
        assert!(r.checked > 50, "seed {seed} only checked {} entries", r.checked);
    }
}

#[test]
fn rectangular_maps_and_unequal_key_value_dims() {
    for (seed, (h, w, c_f, d_k, d_v)) in [(3, 5, 5, 2, 3), (1, 7, 3, 1, 4), (6, 2, 4, 5, 1)].into_iter().enumerate() {
        let r = finite_difference_check(&GradCase::random(100 + seed as u64, h, w, c_f, d_k, d_v), 1e-4, 1e-6, 1e-4);
        assert!(r.failures.is_empty(), "{h}x{w} c_f={c_f} d_k={d_k} d_v={d_v}: {:?}", r.failures);
    }
}

#[test]
fn clip_objective_gradient_matches_finite_differences() {
    let mut rng = XorShift64::new(42);
    let features: Vec<_> = (0..4).map(|_| random_grid(&mut rng, 3, 3, 4, -1.0, 1.0)).collect();
    let ga: Vec<_> = (0..4).map(|_| random_grid(&mut rng, 3, 3, 1, 0.0, 1.0)).collect();
    let gf: Vec<_> = (0..4).map(|_| random_grid(&mut rng, 3, 3, 3, 0.0, 1.0)).collect();
    let samples = samples_from_clip(&features, &ga, &gf).unwrap();
    let params = AttentionParams::seeded(4, 3, 2, 5);
    let (_, grads) = clip_objective(&samples, &params).unwrap();
    let loss = |p: &AttentionParams| clip_objective(&samples, p).unwrap().0;
    let h = 1e-4;
    for b in 0..params.blocks().len() {
        for i in 0..params.blocks()[b].data().len() {
            let (mut plus, mut minus) = (params.clone(), params.clone());
            plus.blocks_mut()[b].data_mut()[i] += h;
            minus.blocks_mut()[b].data_mut()[i] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let analytic = grads.blocks()[b].data()[i];
            if analytic.abs() > 1e-6 {
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
                assert!(rel < 1e-4, "block {b} entry {i}: {analytic} vs {numeric}");
            }
        }
    }
}
