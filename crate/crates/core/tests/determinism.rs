use memmatte::compositor::{synth_clip, Clip, Role, SynthSpec};
use memmatte::metrics::{evaluate, EvalOptions};
use memmatte::net::{forward_clip, ToyNetConfig, ToyNetWeights};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn perturbed(c: &Clip) -> Clip {
    let frames = c.frames().iter().enumerate().map(|(t, g)| g.map(|v| (v * 0.8 + 0.03 * t as f64).min(1.0)).unwrap());
    Clip::new(frames.collect(), Role::Alpha).unwrap()
}

#[test]
fn evaluation_is_independent_of_thread_count() {
    let clip = synth_clip(&SynthSpec::default()).unwrap();
    let pred = perturbed(&clip.gt_alpha);
    let run = |n| in_pool(n, || evaluate(&pred, &clip.gt_alpha, &EvalOptions::default()).unwrap().to_json().unwrap());
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
}

#[test]
fn synthesis_is_independent_of_thread_count() {
    let spec = SynthSpec { frames: 5, seed: 99, ..SynthSpec::default() };
    let a = in_pool(1, || synth_clip(&spec).unwrap());
    let b = in_pool(4, || synth_clip(&spec).unwrap());
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.gt_alpha, b.gt_alpha);
}

#[test]
fn network_outputs_are_a_function_of_clip_config_and_seed() {
    let clip = synth_clip(&SynthSpec { frames: 3, height: 32, width: 32, radius: 8.0, ..SynthSpec::default() }).unwrap();
    let cfg = ToyNetConfig { seed: 21, ..ToyNetConfig::default() };
    let run = |cfg: &ToyNetConfig| forward_clip(&clip.frames, cfg, &ToyNetWeights::seeded(cfg).unwrap()).unwrap();
    let (a, b) = (run(&cfg), run(&cfg));
    assert_eq!(a, b);
    assert_ne!(a.alpha, run(&ToyNetConfig { seed: 22, ..cfg }).alpha);
}
