//! Compositing model `I = αF + (1 − α)B′` and clip containers.

mod synth;

pub use synth::{synth_clip, SpriteKind, SynthClip, SynthSpec};

use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Image,
    Alpha,
    Foreground,
}

impl Role {
    pub fn channels(self) -> usize {
        match self {
            Role::Alpha => 1,
            Role::Image | Role::Foreground => 3,
        }
    }
}

/// An ordered, non-empty run of same-shaped frames with a role tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip {
    frames: Vec<Grid>,
    role: Role,
    frame_rate: f64,
}

impl Clip {
    pub fn new(frames: Vec<Grid>, role: Role) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::Argument("clip needs at least one frame".into()))?;
        let dims = first.dims();
        if dims.2 != role.channels() {
            return Err(shape(format!(
                "{role:?} clip needs {} channels, got {}",
                role.channels(),
                dims.2
            )));
        }
        for (t, f) in frames.iter().enumerate() {
            if f.dims() != dims {
                return Err(shape(format!("frame {t} is {:?}, frame 0 is {dims:?}", f.dims())));
            }
            if f.min_value() < 0.0 || f.max_value() > 1.0 {
                return Err(Error::Domain(format!("frame {t} of {role:?} clip leaves [0, 1]")));
            }
        }
        Ok(Self { frames, role, frame_rate: 30.0 })
    }

    pub fn with_frame_rate(mut self, fps: f64) -> Self {
        self.frame_rate = fps;
        self
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Grid] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &Grid {
        &self.frames[t]
    }

    pub fn into_frames(self) -> Vec<Grid> {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub(crate) fn check_compatible(&self, other: &Clip, what: &str) -> Result<()> {
        if self.len() != other.len() {
            return Err(shape(format!("{what}: {} frames vs {}", self.len(), other.len())));
        }
        self.frames[0].check_same_shape(&other.frames[0], what)
    }
}

/// Per pixel and channel, `α·F + (1 − α)·B′`.
pub fn composite(alpha: &Grid, fg: &Grid, bg: &Grid) -> Result<Grid> {
    if alpha.channels() != 1 || fg.channels() != 3 || bg.channels() != 3 {
        return Err(shape(format!(
            "composite wants 1/3/3 channels, got {}/{}/{}",
            alpha.channels(),
            fg.channels(),
            bg.channels()
        )));
    }
    fg.check_same_shape(bg, "composite fg vs bg")?;
    if (alpha.height(), alpha.width()) != (fg.height(), fg.width()) {
        return Err(shape(format!(
            "composite alpha {}x{} vs fg {}x{}",
            alpha.height(),
            alpha.width(),
            fg.height(),
            fg.width()
        )));
    }
    if alpha.min_value() < 0.0 || alpha.max_value() > 1.0 {
        return Err(Error::Domain("composite alpha must lie in [0, 1]".into()));
    }
    let mut out = Vec::with_capacity(fg.len());
    for (p, &a) in alpha.data().iter().enumerate() {
        for c in 0..3 {
            let f = fg.data()[p * 3 + c];
            let b = bg.data()[p * 3 + c];
            out.push(a * f + (1.0 - a) * b);
        }
    }
    Grid::new(fg.height(), fg.width(), 3, out)
}

/// Composites every frame of `gt_alpha`/`gt_fg` over `new_bg`.
pub fn replace_background(gt_alpha: &Clip, gt_fg: &Clip, new_bg: &Grid) -> Result<Clip> {
    if gt_alpha.len() != gt_fg.len() {
        return Err(shape(format!("{} alpha frames vs {} fg frames", gt_alpha.len(), gt_fg.len())));
    }
    let frames = gt_alpha
        .frames()
        .iter()
        .zip(gt_fg.frames())
        .map(|(a, f)| composite(a, f, new_bg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Clip::new(frames, Role::Image)?.with_frame_rate(gt_alpha.frame_rate()))
}
