use crate::error::{shape, Result};
use crate::grid::Grid;

/// Features of frames `t`, `t−1`, `t−2`, in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryBank {
    slots: [Grid; 3],
}

impl MemoryBank {
    /// Bank whose three slots all hold `features`; the state before any history exists.
    pub fn warm(features: &Grid) -> Self {
        Self { slots: [features.clone(), features.clone(), features.clone()] }
    }

    pub fn from_slots(slots: [Grid; 3]) -> Result<Self> {
        if !slots[0].same_shape(&slots[1]) || !slots[0].same_shape(&slots[2]) {
            return Err(shape("memory slots must share a shape"));
        }
        Ok(Self { slots })
    }

    pub fn slots(&self) -> &[Grid; 3] {
        &self.slots
    }

    pub fn slot_dims(&self) -> (usize, usize, usize) {
        self.slots[0].dims()
    }

    /// Slides the window: `[X, t, t−1]`, evicting the oldest slot.
    pub fn push(&self, features: &Grid) -> Result<Self> {
        self.slots[0].check_same_shape(features, "memory push")?;
        Ok(Self { slots: [features.clone(), self.slots[0].clone(), self.slots[1].clone()] })
    }
}

/// Empty bank → `[X, X, X]`; otherwise a sliding push.
pub fn push_frame(bank: Option<&MemoryBank>, features: &Grid) -> Result<MemoryBank> {
    match bank {
        None => Ok(MemoryBank::warm(features)),
        Some(b) => b.push(features),
    }
}
