//! Seeded synthetic clips: a soft-edged sprite moving over a smooth gradient.
//!
//! Random draws happen in a fixed order from [`XorShift64`] seeded with
//! `spec.seed`: sprite centre x, centre y, foreground RGB, background base
//! RGB, background x-slope RGB, background y-slope RGB.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{composite, Clip, Role};
use crate::error::{argument, Result};
use crate::grid::Grid;
use crate::rng::XorShift64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpriteKind {
    Disk,
    Square,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub sprite: SpriteKind,
    /// Pixels of fully opaque core.
    pub radius: f64,
    /// Width in pixels of the linear alpha ramp outside the core.
    pub softness: f64,
    /// Pixels per frame, `[vx, vy]`.
    pub velocity: [f64; 2],
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            frames: 8,
            height: 64,
            width: 64,
            sprite: SpriteKind::Disk,
            radius: 14.0,
            softness: 4.0,
            velocity: [3.0, 2.0],
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(argument("synth needs at least one frame"));
        }
        if self.height == 0 || self.width == 0 || !self.height.is_multiple_of(16) || !self.width.is_multiple_of(16) {
            return Err(argument(format!(
                "synth dims must be positive multiples of 16, got {}x{}",
                self.height, self.width
            )));
        }
        let finite = [self.radius, self.softness, self.velocity[0], self.velocity[1]];
        if finite.iter().any(|v| !v.is_finite()) || self.radius < 0.0 || self.softness < 0.0 {
            return Err(argument("radius/softness must be finite and non-negative"));
        }
        let half = self.height.min(self.width) as f64 / 2.0;
        if self.radius + self.softness >= half {
            return Err(argument(format!(
                "radius + softness = {} must be below {half}",
                self.radius + self.softness
            )));
        }
        Ok(())
    }

    fn margin(&self) -> f64 {
        self.radius + self.softness
    }
}

/// Output of [`synth_clip`].
#[derive(Clone, Debug, PartialEq)]
pub struct SynthClip {
    pub frames: Clip,
    pub gt_alpha: Clip,
    pub gt_fg: Clip,
    pub bg: Grid,
}

struct Scene {
    centre0: [f64; 2],
    fg: [f64; 3],
    bg_base: [f64; 3],
    bg_dx: [f64; 3],
    bg_dy: [f64; 3],
}

impl Scene {
    fn draw(spec: &SynthSpec) -> Self {
        let mut rng = XorShift64::new(spec.seed);
        let m = spec.margin();
        let cx = rng.uniform(m, spec.width as f64 - m);
        let cy = rng.uniform(m, spec.height as f64 - m);
        let mut triple = |lo: f64, hi: f64| [rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)];
        let fg = triple(0.2, 0.95);
        let bg_base = triple(0.05, 0.35);
        let bg_dx = triple(0.0, 0.3);
        let bg_dy = triple(0.0, 0.3);
        Self { centre0: [cx, cy], fg, bg_base, bg_dx, bg_dy }
    }
}

/// Position after reflective bouncing inside `[lo, hi]`.
fn bounce(p: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    let u = (p - lo).rem_euclid(2.0 * span);
    lo + if u > span { 2.0 * span - u } else { u }
}

fn sprite_alpha(spec: &SynthSpec, centre: [f64; 2]) -> Result<Grid> {
    Grid::from_fn(spec.height, spec.width, 1, |y, x, _| {
        let dx = x as f64 + 0.5 - centre[0];
        let dy = y as f64 + 0.5 - centre[1];
        let d = match spec.sprite {
            SpriteKind::Disk => dx.hypot(dy),
            SpriteKind::Square => dx.abs().max(dy.abs()),
        };
        if d <= spec.radius {
            1.0
        } else if spec.softness == 0.0 {
            0.0
        } else {
            (1.0 - (d - spec.radius) / spec.softness).clamp(0.0, 1.0)
        }
    })
}

/// Sprite centre at frame `t`.
#[cfg(test)]
fn sprite_centre(spec: &SynthSpec, t: usize) -> [f64; 2] {
    let scene = Scene::draw(spec);
    centre_at(spec, &scene, t)
}

fn centre_at(spec: &SynthSpec, scene: &Scene, t: usize) -> [f64; 2] {
    let m = spec.margin();
    let t = t as f64;
    [
        bounce(scene.centre0[0] + spec.velocity[0] * t, m, spec.width as f64 - m),
        bounce(scene.centre0[1] + spec.velocity[1] * t, m, spec.height as f64 - m),
    ]
}

pub fn synth_clip(spec: &SynthSpec) -> Result<SynthClip> {
    spec.validate()?;
    let scene = Scene::draw(spec);
    let (h, w) = (spec.height, spec.width);
    let bg = Grid::from_fn(h, w, 3, |y, x, c| {
        let fx = x as f64 / (w - 1) as f64;
        let fy = y as f64 / (h - 1) as f64;
        scene.bg_base[c] + scene.bg_dx[c] * fx + scene.bg_dy[c] * fy
    })?;
    let fg = Grid::from_fn(h, w, 3, |_, _, c| scene.fg[c])?;

    let alphas = (0..spec.frames)
        .into_par_iter()
        .map(|t| sprite_alpha(spec, centre_at(spec, &scene, t)))
        .collect::<Result<Vec<_>>>()?;
    let images = alphas
        .par_iter()
        .map(|a| composite(a, &fg, &bg))
        .collect::<Result<Vec<_>>>()?;

    Ok(SynthClip {
        frames: Clip::new(images, Role::Image)?,
        gt_alpha: Clip::new(alphas, Role::Alpha)?,
        gt_fg: Clip::new(vec![fg; spec.frames], Role::Foreground)?,
        bg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec::default();
        let a = synth_clip(&spec).unwrap();
        let b = synth_clip(&spec).unwrap();
        assert_eq!(a, b);
        let c = synth_clip(&SynthSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.bg, c.bg);
    }

    #[test]
    fn frames_are_exact_composites() {
        let s = synth_clip(&SynthSpec::default()).unwrap();
        for t in 0..s.frames.len() {
            let c = composite(s.gt_alpha.frame(t), s.gt_fg.frame(t), &s.bg).unwrap();
            assert_eq!(&c, s.frames.frame(t));
        }
    }

    #[test]
    fn static_sprite_gives_constant_alpha() {
        let s = synth_clip(&SynthSpec { velocity: [0.0, 0.0], ..SynthSpec::default() }).unwrap();
        for t in 1..s.gt_alpha.len() {
            assert_eq!(s.gt_alpha.frame(t), s.gt_alpha.frame(0));
        }
    }

    #[test]
    fn flat_outside_the_ramp_band() {
        for sprite in [SpriteKind::Disk, SpriteKind::Square] {
            let spec = SynthSpec { sprite, ..SynthSpec::default() };
            let s = synth_clip(&spec).unwrap();
            for t in 0..spec.frames {
                let c = sprite_centre(&spec, t);
                let a = s.gt_alpha.frame(t);
                let dist = |y: usize, x: usize| {
                    let dx = x as f64 + 0.5 - c[0];
                    let dy = y as f64 + 0.5 - c[1];
                    match sprite {
                        SpriteKind::Disk => dx.hypot(dy),
                        SpriteKind::Square => dx.abs().max(dy.abs()),
                    }
                };
                let mut inside = 0;
                let mut outside = 0;
                for y in 0..spec.height - 1 {
                    for x in 0..spec.width - 1 {
                        let ds = [dist(y, x), dist(y + 1, x), dist(y, x + 1)];
                        let gx = a.get(y, x + 1, 0) - a.get(y, x, 0);
                        let gy = a.get(y + 1, x, 0) - a.get(y, x, 0);
                        if ds.iter().all(|&d| d < spec.radius) {
                            inside += 1;
                            assert_eq!((gx, gy), (0.0, 0.0));
                        } else if ds.iter().all(|&d| d > spec.radius + spec.softness) {
                            outside += 1;
                            assert_eq!((gx, gy), (0.0, 0.0));
                        }
                    }
                }
                assert!(inside > 0 && outside > 0);
                assert_eq!(a.max_value(), 1.0);
                assert_eq!(a.min_value(), 0.0);
            }
        }
    }

    #[test]
    fn bounce_stays_in_range() {
        for i in -50..50 {
            let p = bounce(i as f64 * 3.7, 10.0, 20.0);
            assert!((10.0..=20.0).contains(&p));
        }
        assert_eq!(bounce(22.0, 10.0, 20.0), 18.0);
        assert_eq!(bounce(8.0, 10.0, 20.0), 12.0);
    }

    #[test]
    fn invalid_specs() {
        let base = SynthSpec::default();
        for bad in [
            SynthSpec { height: 60, ..base.clone() },
            SynthSpec { frames: 0, ..base.clone() },
            SynthSpec { radius: 30.0, softness: 2.0, ..base.clone() },
            SynthSpec { softness: -1.0, ..base.clone() },
        ] {
            assert!(matches!(synth_clip(&bad), Err(crate::Error::Argument(_))));
        }
    }
}
