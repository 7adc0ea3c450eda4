use super::backward::backward;
use super::bank::{push_frame, MemoryBank};
use super::forward::forward_supervised;
use super::params::{AttentionParams, AttnGradients};
use crate::error::{argument, shape, Error, Result};
use crate::grid::Grid;

/// One frame's supervision problem.
#[derive(Clone, Debug, PartialEq)]
pub struct FitSample {
    pub features: Grid,
    pub bank: MemoryBank,
    pub gt_alpha_lr: Grid,
    pub gt_fg_lr: Grid,
}

/// Builds one sample per frame, rolling the memory bank with the warm-up rule.
pub fn samples_from_clip(features: &[Grid], gt_alpha_lr: &[Grid], gt_fg_lr: &[Grid]) -> Result<Vec<FitSample>> {
    if features.len() != gt_alpha_lr.len() || features.len() != gt_fg_lr.len() {
        return Err(shape(format!(
            "{} feature frames, {} alpha targets, {} fg targets",
            features.len(),
            gt_alpha_lr.len(),
            gt_fg_lr.len()
        )));
    }
    let mut bank: Option<MemoryBank> = None;
    let mut out = Vec::with_capacity(features.len());
    for ((x, a), f) in features.iter().zip(gt_alpha_lr).zip(gt_fg_lr) {
        let b = push_frame(bank.as_ref(), x)?;
        out.push(FitSample { features: x.clone(), bank: b.clone(), gt_alpha_lr: a.clone(), gt_fg_lr: f.clone() });
        bank = Some(b);
    }
    Ok(out)
}

/// Frame-averaged supervision loss and its gradient.
pub fn clip_objective(samples: &[FitSample], params: &AttentionParams) -> Result<(f64, AttnGradients)> {
    if samples.is_empty() {
        return Err(argument("objective over zero frames"));
    }
    let inv = 1.0 / samples.len() as f64;
    let mut total = 0.0;
    let mut grads = AttnGradients::zeros_like(params);
    for s in samples {
        let (loss, cache) = forward_supervised(&s.features, &s.bank, params, &s.gt_alpha_lr, &s.gt_fg_lr)?;
        total += loss;
        grads.accumulate(&backward(&cache, params)?, inv);
    }
    Ok((total * inv, grads))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub steps: usize,
    pub step_size: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { steps: 300, step_size: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub params: AttentionParams,
    /// `trace[i]` is the loss evaluated before update `i`.
    pub trace: Vec<f64>,
    /// Loss after the last update.
    pub final_loss: f64,
}

/// After the first step, domain failures inside the forward pass can only come
/// from parameters that have run off to infinity.
fn overflowed(e: Error, step: usize) -> Error {
    match e {
        Error::Argument(_) | Error::Domain(_) if step > 0 => Error::NonFiniteLoss { step },
        other => other,
    }
}

/// Full-batch gradient descent on the supervision loss.
///
/// Single-threaded and free of hidden randomness: identical inputs give an
/// identical trace.
pub fn fit_direct_supervision(
    samples: &[FitSample],
    params: AttentionParams,
    options: FitOptions,
) -> Result<FitResult> {
    if options.steps == 0 {
        return Err(argument("fit needs at least one step"));
    }
    if !(options.step_size > 0.0 && options.step_size.is_finite()) {
        return Err(argument(format!("step size must be positive, got {}", options.step_size)));
    }
    let mut params = params;
    let mut trace = Vec::with_capacity(options.steps);
    for step in 0..options.steps {
        let (loss, grads) = clip_objective(samples, &params).map_err(|e| overflowed(e, step))?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        trace.push(loss);
        params.apply_step(&grads, options.step_size);
        if params.blocks().iter().any(|b| b.data().iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteLoss { step });
        }
    }
    let (final_loss, _) = clip_objective(samples, &params).map_err(|e| overflowed(e, options.steps))?;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { step: options.steps });
    }
    Ok(FitResult { params, trace, final_loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::XorShift64;

    fn toy_samples(seed: u64) -> Vec<FitSample> {
        let mut rng = XorShift64::new(seed);
        let feats: Vec<Grid> =
            (0..3).map(|_| Grid::from_fn(2, 2, 3, |_, _, _| rng.uniform(-1.0, 1.0)).unwrap()).collect();
        let a: Vec<Grid> = (0..3).map(|_| Grid::from_fn(2, 2, 1, |_, _, _| rng.next_f64()).unwrap()).collect();
        let f: Vec<Grid> = (0..3).map(|_| Grid::from_fn(2, 2, 3, |_, _, _| rng.next_f64()).unwrap()).collect();
        samples_from_clip(&feats, &a, &f).unwrap()
    }

    #[test]
    fn deterministic_and_decreasing() {
        let s = toy_samples(1);
        let p = AttentionParams::seeded(3, 2, 2, 4);
        let opts = FitOptions { steps: 50, step_size: 0.1 };
        let a = fit_direct_supervision(&s, p.clone(), opts).unwrap();
        let b = fit_direct_supervision(&s, p, opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace.len(), 50);
        assert!(a.final_loss < a.trace[0]);
    }

    #[test]
    fn banks_follow_window_rule() {
        let s = toy_samples(2);
        assert_eq!(s[0].bank, MemoryBank::warm(&s[0].features));
        assert_eq!(s[2].bank.slots()[2], s[0].features);
    }

    #[test]
    fn rejects_bad_options_and_blowups() {
        let s = toy_samples(3);
        let p = AttentionParams::seeded(3, 2, 2, 4);
        assert!(fit_direct_supervision(&s, p.clone(), FitOptions { steps: 0, step_size: 0.1 }).is_err());
        assert!(fit_direct_supervision(&s, p.clone(), FitOptions { steps: 1, step_size: 0.0 }).is_err());
        let err = fit_direct_supervision(&s, p, FitOptions { steps: 3, step_size: 1e308 }).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { .. }), "{err}");
    }
}
