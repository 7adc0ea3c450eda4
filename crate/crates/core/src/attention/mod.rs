//! Temporal memory block: scaled dot-product attention from the current
//! frame's query over keys and values of frames `t`, `t−1`, `t−2`.
//!
//! Data flow for one frame with features `X` (`h×w×C_f`) and bank `M`:
//!
//! ```text
//! Q = X·W_q        K = M·W_k        V = M·W_v          (per-pixel projections)
//! R = softmax(Q·Kᵀ / √d_k)·V                            (dense over 3·h·w slots)
//! Y = X + R·W_o                                         (residual readout)
//! α_lr = σ(Y·h_α + b_α)     F_lr = σ(Y·H_F + b_F)       (supervision heads)
//! ```
//!
//! The supervision objective is `mean|α_lr − α̂_lr| + mean|F_lr − F̂_lr|`;
//! [`backward`] returns its exact gradient with respect to every parameter.

mod backward;
mod bank;
mod fit;
mod forward;
mod params;

pub use backward::{attend_backward, backward};
pub use bank::{push_frame, MemoryBank};
pub use fit::{clip_objective, fit_direct_supervision, samples_from_clip, FitOptions, FitResult, FitSample};
pub use forward::{
    attend, attention_logits, attention_weights, forward_supervised, fuse_readout, lowres_heads,
    project_qkv, ForwardCache, Qkv,
};
pub use params::{AttentionParams, AttnGradients, PARAM_NAMES};
pub(crate) use forward::sigmoid;
